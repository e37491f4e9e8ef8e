#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "vesselreg/projection.hpp"
#include "vesselreg/skeleton.hpp"

namespace vesselreg {

struct DistanceStats {
  double mean = 0;
  double stddev = 0;
  double max = 0;
};

// Minimum Euclidean distance from each query point to a set of polylines,
// with exact point-to-segment projection. Works for 2D and 3D (rows = dim).
std::vector<double> point_to_curve(const Eigen::MatrixXd& points,
                                   const std::vector<Eigen::MatrixXd>& polylines);

DistanceStats summarize(const std::vector<double>& distances);

// Skeleton graph as a set of 2-point polylines (one per edge), the curve
// representation used by the distance metrics.
std::vector<Eigen::MatrixXd> edge_polylines(const SkeletonGraph& graph);

// Pre-deformation baseline: mean 2D point-to-curve distance of the projected
// pre-aligned skeleton against the intra-operative curve, and (with ground
// truth) the mean 3D distance of the pre-aligned skeleton to it.
struct ShapeVariation {
  double sv_2d = 0;
  std::optional<double> sv_3d;
};

ShapeVariation shape_variation(const std::vector<Eigen::MatrixXd>& curve2d,
                               const Eigen::Matrix3Xd& Y, const ProjectionMatrix& P,
                               const RigidTransform3D& rigid,
                               const std::vector<Eigen::MatrixXd>* truth3d);

}  // namespace vesselreg
