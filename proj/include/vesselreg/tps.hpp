#pragma once

#include <Eigen/Dense>

#include "vesselreg/errors.hpp"

namespace vesselreg {

// 3D thin-plate spline interpolant with kernel U(r) = r plus an affine part;
// exact at control points. Degenerate control sets (fewer than 4 points or a
// coplanar configuration) fall back to a least-squares affine fit.
class ThinPlateSpline3D {
public:
  static ThinPlateSpline3D fit(const Eigen::Matrix3Xd& control_src,
                               const Eigen::Matrix3Xd& control_dst);

  Eigen::Vector3d apply(const Eigen::Vector3d& query) const;
  Eigen::Matrix3Xd warp(const Eigen::Matrix3Xd& queries) const;
  bool affine_fallback() const { return affine_only_; }

private:
  Eigen::Matrix3Xd centers_;
  Eigen::MatrixXd weights_;          // m x 3 kernel weights
  Eigen::Matrix<double, 4, 3> affine_ = Eigen::Matrix<double, 4, 3>::Zero();
  bool affine_only_ = false;
};

Eigen::Matrix3Xd tps_warp_3d(const Eigen::Matrix3Xd& control_src,
                             const Eigen::Matrix3Xd& control_dst,
                             const Eigen::Matrix3Xd& queries);

}  // namespace vesselreg
