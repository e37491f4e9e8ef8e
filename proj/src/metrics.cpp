#include "vesselreg/metrics.hpp"

#include <cmath>

namespace vesselreg {

namespace {

double point_to_segment_sq(const Eigen::VectorXd& p, const Eigen::VectorXd& a,
                           const Eigen::VectorXd& b) {
  const Eigen::VectorXd ab = b - a;
  const double len2 = ab.squaredNorm();
  if (len2 <= 0) return (p - a).squaredNorm();
  const double t = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
  return (p - a - t * ab).squaredNorm();
}

}  // namespace

std::vector<double> point_to_curve(const Eigen::MatrixXd& points,
                                   const std::vector<Eigen::MatrixXd>& polylines) {
  bool has_segment = false;
  for (const auto& poly : polylines) has_segment = has_segment || poly.cols() >= 2;
  if (!has_segment) throw Error(errc::empty_curve, "curve has no polyline with >= 2 points");

  std::vector<double> out(points.cols());
  for (Eigen::Index i = 0; i < points.cols(); ++i) {
    double best = std::numeric_limits<double>::max();
    for (const auto& poly : polylines) {
      for (Eigen::Index s = 0; s + 1 < poly.cols(); ++s) {
        best = std::min(best, point_to_segment_sq(points.col(i), poly.col(s), poly.col(s + 1)));
      }
    }
    out[static_cast<size_t>(i)] = std::sqrt(best);
  }
  return out;
}

DistanceStats summarize(const std::vector<double>& distances) {
  DistanceStats stats;
  if (distances.empty()) return stats;
  double sum = 0;
  for (double d : distances) {
    sum += d;
    stats.max = std::max(stats.max, d);
  }
  stats.mean = sum / static_cast<double>(distances.size());
  double var = 0;
  for (double d : distances) var += (d - stats.mean) * (d - stats.mean);
  stats.stddev = std::sqrt(var / static_cast<double>(distances.size()));
  return stats;
}

std::vector<Eigen::MatrixXd> edge_polylines(const SkeletonGraph& graph) {
  std::vector<Eigen::MatrixXd> out;
  out.reserve(graph.edges.size());
  for (const auto& [i, j] : graph.edges) {
    Eigen::MatrixXd seg(graph.points.dim, 2);
    seg.col(0) = graph.points.points.col(i);
    seg.col(1) = graph.points.points.col(j);
    out.push_back(std::move(seg));
  }
  return out;
}

ShapeVariation shape_variation(const std::vector<Eigen::MatrixXd>& curve2d,
                               const Eigen::Matrix3Xd& Y, const ProjectionMatrix& P,
                               const RigidTransform3D& rigid,
                               const std::vector<Eigen::MatrixXd>* truth3d) {
  ShapeVariation sv;
  const Eigen::Matrix3Xd aligned = rigid.apply(Y);
  sv.sv_2d = summarize(point_to_curve(project(P, aligned), curve2d)).mean;
  if (truth3d) {
    sv.sv_3d = summarize(point_to_curve(aligned, *truth3d)).mean;
  }
  return sv;
}

}  // namespace vesselreg
