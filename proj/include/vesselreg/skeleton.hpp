#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "vesselreg/errors.hpp"

namespace vesselreg {

// Ordered skeleton point coordinates, 2D (pixels) or 3D (mm / voxel units),
// living on a regular grid with per-axis spacing.
struct SkeletonPointSet {
  int dim = 0;
  Eigen::MatrixXd points;   // dim x n, one column per point
  Eigen::VectorXd spacing;  // per-axis grid spacing, defaults to 1

  int size() const { return static_cast<int>(points.cols()); }
  bool empty() const { return points.cols() == 0; }
  Eigen::VectorXd point(int i) const { return points.col(i); }
};

SkeletonPointSet make_point_set(const Eigen::MatrixXd& points);
SkeletonPointSet make_point_set(const Eigen::MatrixXd& points, const Eigen::VectorXd& spacing);

// Skeleton graph over a point set: nodes are points, edges connect grid
// neighbours (Chebyshev distance 1 in grid coordinates). Only the largest
// connected component of the input is retained; `original_indices` maps a
// graph node back to the column of the point set build_graph was given.
struct SkeletonGraph {
  SkeletonPointSet points;
  std::vector<std::vector<int>> neighbors;  // sorted per node
  std::vector<std::pair<int, int>> edges;   // i < j
  std::vector<int> degrees;
  std::vector<int> original_indices;

  int size() const { return static_cast<int>(neighbors.size()); }
  bool adjacent(int i, int j) const;
};

SkeletonGraph build_graph(const SkeletonPointSet& points);

// Integer grid coordinates of every point (coordinate / spacing must be an
// integer within 1e-6 of rounding, otherwise NonGridInput).
Eigen::Matrix<long long, Eigen::Dynamic, Eigen::Dynamic> grid_coordinates(
    const SkeletonPointSet& points);

}  // namespace vesselreg
