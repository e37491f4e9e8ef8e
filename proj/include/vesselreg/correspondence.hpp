#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "vesselreg/decomposition.hpp"
#include "vesselreg/errors.hpp"

namespace vesselreg {

struct TangentConfig {
  int start_index = 1;  // eta_s, 1-based position within the branch
  int end_index = 10;   // eta_t, clamped to the branch length
};

// Matched trunk / branch node-index paths. Paths are stored already oriented:
// path2[0] corresponds to path3[0] (junction side for branches).
struct PathPair {
  std::vector<int> path2;
  std::vector<int> path3;
};

struct BranchTrunkMatching {
  std::vector<PathPair> trunk_pairs;
  std::vector<PathPair> branch_pairs;
  std::vector<std::pair<int, int>> junction_pairs;  // (2D node, 3D node)
  std::vector<int> unmatched_branches_2d;           // indices into decomposition branches
  std::vector<int> unmatched_branches_3d;
};

// Sparse non-negative soft assignment from 3D nodes (columns) to 2D nodes
// (rows). Each assigned column holds at most two entries at consecutive
// positions along one 2D path, summing to one.
class AssignmentMatrix {
public:
  AssignmentMatrix() = default;
  AssignmentMatrix(int rows, int cols) : rows_(rows), cols_(cols), columns_(cols) {}

  int rows() const { return rows_; }
  int cols() const { return cols_; }

  void set_column(int col, std::vector<std::pair<int, double>> entries);
  const std::vector<std::pair<int, double>>& column(int col) const { return columns_[col]; }
  bool assigned(int col) const { return !columns_[col].empty(); }
  double column_sum(int col) const;
  std::vector<int> assigned_columns() const;

  // X * m_col: the virtual 2D target of a 3D node.
  Eigen::Vector2d target(const Eigen::Matrix2Xd& X, int col) const;

private:
  int rows_ = 0, cols_ = 0;
  std::vector<std::vector<std::pair<int, double>>> columns_;
};

// Rank trunks by geodesic length and pair them, orienting pairs so the
// induced junction identifications agree; ties are broken by projected
// junction proximity. With no trunks on either side the result is empty and
// junction pairs are left to branch matching.
BranchTrunkMatching match_trunks(const NodeDecomposition& decomp2,
                                 const NodeDecomposition& decomp3, const Eigen::Matrix2Xd& X,
                                 const Eigen::Matrix2Xd& projected3d);

// Unit chord direction between the eta_s-th and eta_t-th node of a branch.
Eigen::VectorXd branch_tangent(const std::vector<int>& branch, const Eigen::MatrixXd& points,
                               const TangentConfig& cfg);

// Match branches via tangent similarity, grouped by matched junction nodes;
// appends pairs (and, when no junction pairs existed, induced junction
// pairs) to `matching`.
void match_branches(const NodeDecomposition& decomp2, const NodeDecomposition& decomp3,
                    const Eigen::Matrix2Xd& X, const Eigen::Matrix2Xd& projected3d,
                    const TangentConfig& cfg, BranchTrunkMatching& matching);

// Soft-assign 3D branch nodes onto a matched 2D branch by equal cumulative
// projected arc length. Nodes beyond the 2D branch length stay unassigned.
void assign_branch_nodes(const std::vector<int>& branch2, const std::vector<int>& branch3,
                         const Eigen::Matrix2Xd& X, const Eigen::Matrix2Xd& projected3d,
                         AssignmentMatrix& M);

// Soft-assign trunk nodes by proportional 3D arc length (scaled by the ratio
// of total 2D to total 3D trunk length), so every trunk node is assigned and
// endpoints map exactly.
void assign_trunk_nodes(const std::vector<int>& trunk2, const std::vector<int>& trunk3,
                        const Eigen::Matrix2Xd& X, const Eigen::Matrix3Xd& Y,
                        AssignmentMatrix& M);

}  // namespace vesselreg
