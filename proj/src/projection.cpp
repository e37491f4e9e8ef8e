#include "vesselreg/projection.hpp"

#include <Eigen/Geometry>
#include <cmath>

namespace vesselreg {

namespace {

Eigen::Matrix4Xd homogeneous(const Eigen::Matrix3Xd& Y) {
  Eigen::Matrix4Xd Yh(4, Y.cols());
  Yh.topRows<3>() = Y;
  Yh.row(3).setOnes();
  return Yh;
}

Eigen::Matrix3d rodrigues(const Eigen::Vector3d& w) {
  const double angle = w.norm();
  if (angle < 1e-14) return Eigen::Matrix3d::Identity();
  return Eigen::AngleAxisd(angle, w / angle).toRotationMatrix();
}

}  // namespace

Eigen::RowVectorXd projection_denominators(const ProjectionMatrix& P, const Eigen::Matrix3Xd& Y) {
  const Eigen::RowVectorXd den = P.row(2) * homogeneous(Y);
  for (Eigen::Index j = 0; j < den.cols(); ++j) {
    if (std::abs(den(j)) <= 1e-12) {
      throw Error(errc::degenerate_depth,
                  "projection denominator vanishes at point " + std::to_string(j));
    }
  }
  return den;
}

Eigen::Matrix2Xd project(const ProjectionMatrix& P, const Eigen::Matrix3Xd& Y) {
  const Eigen::Matrix4Xd Yh = homogeneous(Y);
  const Eigen::RowVectorXd den = projection_denominators(P, Y);
  Eigen::Matrix2Xd out(2, Y.cols());
  out.row(0) = (P.row(0) * Yh).cwiseQuotient(den);
  out.row(1) = (P.row(1) * Yh).cwiseQuotient(den);
  return out;
}

Eigen::Matrix<double, 6, 4> projection_jacobian_core(const ProjectionMatrix& P) {
  Eigen::Matrix<double, 6, 1> lead;
  lead << P.P(0, 0), P.P(1, 0), P.P(0, 1), P.P(1, 1), P.P(0, 2), P.P(1, 2);
  Eigen::Matrix<double, 6, 4> J = lead * P.P.row(2);
  for (int k = 0; k < 3; ++k) {
    J.row(2 * k) -= P.P(2, k) * P.P.row(0);
    J.row(2 * k + 1) -= P.P(2, k) * P.P.row(1);
  }
  return J;
}

Eigen::Matrix<double, 2, 3> projection_point_jacobian(const ProjectionMatrix& P,
                                                      const Eigen::Vector3d& y) {
  const Eigen::Matrix<double, 6, 4> J = projection_jacobian_core(P);
  Eigen::Vector4d yh;
  yh << y, 1.0;
  const double den = P.row(2).dot(yh);
  if (std::abs(den) <= 1e-12) throw Error(errc::degenerate_depth, "point at projection plane");
  Eigen::Matrix<double, 2, 3> A;
  for (int k = 0; k < 3; ++k) {
    A(0, k) = J.row(2 * k).dot(yh) / (den * den);
    A(1, k) = J.row(2 * k + 1).dot(yh) / (den * den);
  }
  return A;
}

double mean_nearest_point_cost(const Eigen::Matrix2Xd& X, const Eigen::Matrix2Xd& projected) {
  double total = 0;
  for (Eigen::Index j = 0; j < projected.cols(); ++j) {
    double best = std::numeric_limits<double>::max();
    for (Eigen::Index i = 0; i < X.cols(); ++i) {
      best = std::min(best, (projected.col(j) - X.col(i)).squaredNorm());
    }
    total += best;
  }
  return total / static_cast<double>(projected.cols());
}

RigidTransform3D rigid_prealign(const Eigen::Matrix2Xd& X, const Eigen::Matrix3Xd& Y,
                                const ProjectionMatrix& P) {
  if (X.cols() == 0 || Y.cols() == 0) throw Error(errc::empty_input, "empty point set");

  const bool translation_only = X.cols() == 1 || Y.cols() == 1;

  RigidTransform3D best;
  double best_cost;
  try {
    best_cost = mean_nearest_point_cost(X, project(P, Y));
  } catch (const Error&) {
    return best;  // identity is the fallback when the start is degenerate
  }

  RigidTransform3D cur = best;
  double cur_cost = best_cost;
  const int max_iters = 50;
  for (int iter = 0; iter < max_iters; ++iter) {
    const Eigen::Matrix3Xd Z = cur.apply(Y);
    Eigen::Matrix2Xd proj;
    try {
      proj = project(P, Z);
    } catch (const Error&) {
      break;
    }

    // Nearest 2D correspondences, then one damped Gauss-Newton step on the
    // twist (w, t) with z' = z + w x z + t.
    const int dof = translation_only ? 3 : 6;
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(dof, dof);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(dof);
    for (Eigen::Index j = 0; j < Z.cols(); ++j) {
      Eigen::Index nn = 0;
      double bestd = std::numeric_limits<double>::max();
      for (Eigen::Index i = 0; i < X.cols(); ++i) {
        const double d2 = (proj.col(j) - X.col(i)).squaredNorm();
        if (d2 < bestd) {
          bestd = d2;
          nn = i;
        }
      }
      const Eigen::Vector2d r = proj.col(j) - X.col(nn);
      const Eigen::Matrix<double, 2, 3> A = projection_point_jacobian(P, Z.col(j));
      Eigen::MatrixXd B(2, dof);
      if (translation_only) {
        B = A;
      } else {
        Eigen::Matrix3d skew;
        skew << 0, Z(2, j), -Z(1, j), -Z(2, j), 0, Z(0, j), Z(1, j), -Z(0, j), 0;
        B.leftCols<3>() = A * skew;  // d(w x z)/dw = -[z]x, folded sign into skew
        B.rightCols<3>() = A;
      }
      H += B.transpose() * B;
      rhs -= B.transpose() * r;
    }
    // Tikhonov damping keeps the step out of the projection's near-null
    // directions (translation along the viewing axis is almost unobservable).
    H.diagonal().array() += 1e-3 * (H.trace() / dof + 1.0);
    const Eigen::VectorXd delta = H.ldlt().solve(rhs);

    RigidTransform3D next = cur;
    if (translation_only) {
      next.translation += delta;
    } else {
      const Eigen::Matrix3d dR = rodrigues(delta.head<3>());
      next.rotation = dR * cur.rotation;
      next.translation = dR * cur.translation + delta.tail<3>();
      // Re-orthonormalize against drift.
      Eigen::JacobiSVD<Eigen::Matrix3d> svd(next.rotation,
                                            Eigen::ComputeFullU | Eigen::ComputeFullV);
      next.rotation = svd.matrixU() * svd.matrixV().transpose();
      if (next.rotation.determinant() < 0) {
        Eigen::Matrix3d flip = Eigen::Matrix3d::Identity();
        flip(2, 2) = -1;
        next.rotation = svd.matrixU() * flip * svd.matrixV().transpose();
      }
    }

    double next_cost;
    try {
      next_cost = mean_nearest_point_cost(X, project(P, next.apply(Y)));
    } catch (const Error&) {
      break;
    }
    if (next_cost < best_cost) {
      best = next;
      best_cost = next_cost;
    }
    const double improvement = cur_cost - next_cost;
    cur = next;
    cur_cost = next_cost;
    if (improvement >= 0 && improvement < 1e-8) break;
  }
  return best;
}

}  // namespace vesselreg
