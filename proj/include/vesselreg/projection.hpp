#pragma once

#include <Eigen/Dense>

#include "vesselreg/errors.hpp"

namespace vesselreg {

// 3x4 perspective projection, rows p1, p2, p3; image coordinates are
// (p1.yh / p3.yh, p2.yh / p3.yh) with yh the homogeneous lift of y.
struct ProjectionMatrix {
  Eigen::Matrix<double, 3, 4> P = Eigen::Matrix<double, 3, 4>::Zero();

  Eigen::RowVector4d row(int i) const { return P.row(i); }
};

struct RigidTransform3D {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  Eigen::Matrix3Xd apply(const Eigen::Matrix3Xd& pts) const {
    return (rotation * pts).colwise() + translation;
  }
};

// Denominators p3^T yh of every point; throws DegenerateDepth when any falls
// within 1e-12 of zero.
Eigen::RowVectorXd projection_denominators(const ProjectionMatrix& P, const Eigen::Matrix3Xd& Y);

Eigen::Matrix2Xd project(const ProjectionMatrix& P, const Eigen::Matrix3Xd& Y);

// The 6x4 matrix pairing image-coordinate derivatives with spatial axes:
// row 2k+e is p_{e+1,k+1} * p3^T - p_{3,k+1} * p_{e+1}^T. Multiplied by a
// homogeneous point and divided by the squared denominator it yields
// d f_e / d y_k.
Eigen::Matrix<double, 6, 4> projection_jacobian_core(const ProjectionMatrix& P);

// 2x3 Jacobian of the projection at a single point.
Eigen::Matrix<double, 2, 3> projection_point_jacobian(const ProjectionMatrix& P,
                                                      const Eigen::Vector3d& y);

// Projected ICP pre-alignment: iterates nearest-neighbour 2D correspondences
// and Gauss-Newton updates of (R, T) through the projection. Never returns a
// transform worse than identity under the mean squared nearest-point cost.
RigidTransform3D rigid_prealign(const Eigen::Matrix2Xd& X, const Eigen::Matrix3Xd& Y,
                                const ProjectionMatrix& P);

double mean_nearest_point_cost(const Eigen::Matrix2Xd& X, const Eigen::Matrix2Xd& projected);

}  // namespace vesselreg
