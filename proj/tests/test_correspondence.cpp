#include <doctest.h>

#include <algorithm>
#include <numeric>

#include "helpers.hpp"
#include "vesselreg/correspondence.hpp"

using namespace vesselreg;
using testutil::TestRng;

namespace {

NodeDecomposition decomp_with_trunks(std::vector<std::vector<int>> trunks) {
  NodeDecomposition d;
  d.trunks = std::move(trunks);
  return d;
}

std::vector<int> iota_vec(int from, int count) {
  std::vector<int> v(count);
  std::iota(v.begin(), v.end(), from);
  return v;
}

}  // namespace

TEST_CASE("single trunk pair induces two junction pairs") {
  // 2D nodes 0..4 along a line, 3D nodes 0..4 projecting onto the same line.
  Eigen::Matrix2Xd X(2, 5), fY(2, 5);
  for (int i = 0; i < 5; ++i) {
    X.col(i) = Eigen::Vector2d(i, 0);
    fY.col(i) = Eigen::Vector2d(i, 0.1);
  }
  const auto d2 = decomp_with_trunks({{0, 1, 2, 3, 4}});
  const auto d3 = decomp_with_trunks({{0, 1, 2, 3, 4}});
  const auto m = match_trunks(d2, d3, X, fY);
  REQUIRE(m.trunk_pairs.size() == 1);
  REQUIRE(m.junction_pairs.size() == 2);
  CHECK(m.junction_pairs[0] == std::pair<int, int>(0, 0));
  CHECK(m.junction_pairs[1] == std::pair<int, int>(4, 4));
}

TEST_CASE("trunks pair rank-by-rank by geodesic length") {
  Eigen::Matrix2Xd X = Eigen::Matrix2Xd::Zero(2, 60);
  Eigen::Matrix2Xd fY = Eigen::Matrix2Xd::Zero(2, 60);
  for (int i = 0; i < 60; ++i) {
    X.col(i) = Eigen::Vector2d(i % 40, i / 40);
    fY.col(i) = Eigen::Vector2d(i % 40, i / 40);
  }
  // 2D lengths (30, 10); 3D lengths (28, 11): longest<->longest
  const auto d2 = decomp_with_trunks({iota_vec(0, 31), iota_vec(40, 11)});
  const auto d3 = decomp_with_trunks({iota_vec(0, 29), iota_vec(40, 12)});
  const auto m = match_trunks(d2, d3, X, fY);
  REQUIRE(m.trunk_pairs.size() == 2);
  CHECK(m.trunk_pairs[0].path2.size() == 31);
  CHECK(m.trunk_pairs[0].path3.size() == 29);
  CHECK(m.trunk_pairs[1].path2.size() == 11);
  CHECK(m.trunk_pairs[1].path3.size() == 12);
}

TEST_CASE("mismatched trunk counts truncate to the shorter list") {
  Eigen::Matrix2Xd X = Eigen::Matrix2Xd::Zero(2, 40);
  Eigen::Matrix2Xd fY = Eigen::Matrix2Xd::Zero(2, 40);
  for (int i = 0; i < 40; ++i) {
    X.col(i) = Eigen::Vector2d(i, 0);
    fY.col(i) = Eigen::Vector2d(i, 0);
  }
  const auto d2 = decomp_with_trunks({iota_vec(0, 20), iota_vec(25, 8)});
  const auto d3 = decomp_with_trunks({iota_vec(0, 18)});
  const auto m = match_trunks(d2, d3, X, fY);
  REQUIRE(m.trunk_pairs.size() == 1);
  CHECK(m.trunk_pairs[0].path2.size() == 20);  // 2D's longest
}

TEST_CASE("no trunks leaves the matching empty for branch induction") {
  Eigen::Matrix2Xd X = Eigen::Matrix2Xd::Zero(2, 1);
  const auto m = match_trunks(decomp_with_trunks({}), decomp_with_trunks({}), X, X);
  CHECK(m.trunk_pairs.empty());
  CHECK(m.junction_pairs.empty());
}

TEST_CASE("branch tangent basics: direction, clamping, chord") {
  TangentConfig cfg;  // eta_s = 1, eta_t = 10
  Eigen::MatrixXd pts(2, 12);
  for (int i = 0; i < 12; ++i) pts.col(i) = Eigen::Vector2d(i, 0);
  std::vector<int> branch = iota_vec(0, 12);
  CHECK(branch_tangent(branch, pts, cfg).isApprox(Eigen::Vector2d(1, 0)));

  // 6-node branch: terminator clamps to the last node
  std::vector<int> short_branch = iota_vec(0, 6);
  CHECK(branch_tangent(short_branch, pts, cfg).isApprox(Eigen::Vector2d(1, 0)));

  // quarter circle: tangent is the normalized chord between samples 1 and 10
  Eigen::MatrixXd arc(2, 10);
  for (int i = 0; i < 10; ++i) {
    const double t = 0.5 * M_PI * i / 9.0;
    arc.col(i) = Eigen::Vector2d(std::cos(t), std::sin(t));
  }
  const Eigen::Vector2d chord = (arc.col(9) - arc.col(0)).normalized();
  CHECK(branch_tangent(iota_vec(0, 10), arc, cfg).isApprox(chord, 1e-12));

  // coincident samples degenerate
  Eigen::MatrixXd same = Eigen::MatrixXd::Zero(2, 4);
  CHECK_THROWS_WITH_AS(branch_tangent(iota_vec(0, 4), same, cfg),
                       doctest::Contains("DegenerateBranch"), Error);
}

namespace {

// Branch-matching fixture: one shared junction (2D node 0 / 3D node 0),
// branches laid out with prescribed tangent directions.
struct BranchFixture {
  Eigen::Matrix2Xd X;
  Eigen::Matrix2Xd fY;
  NodeDecomposition d2, d3;
  BranchTrunkMatching matching;

  BranchFixture(const std::vector<Eigen::Vector2d>& dirs2,
                const std::vector<Eigen::Vector2d>& dirs3, int len = 12) {
    const int n2 = static_cast<int>(dirs2.size());
    const int n3 = static_cast<int>(dirs3.size());
    X.resize(2, 1 + n2 * len);
    fY.resize(2, 1 + n3 * len);
    X.col(0) = Eigen::Vector2d::Zero();
    fY.col(0) = Eigen::Vector2d::Zero();
    for (int b = 0; b < n2; ++b) {
      std::vector<int> branch{0};
      for (int t = 1; t <= len; ++t) {
        const int idx = 1 + b * len + (t - 1);
        X.col(idx) = dirs2[b] * static_cast<double>(t);
        branch.push_back(idx);
      }
      d2.branches.push_back(branch);
    }
    for (int b = 0; b < n3; ++b) {
      std::vector<int> branch{0};
      for (int t = 1; t <= len; ++t) {
        const int idx = 1 + b * len + (t - 1);
        fY.col(idx) = dirs3[b] * static_cast<double>(t);
        branch.push_back(idx);
      }
      d3.branches.push_back(branch);
    }
    matching.junction_pairs = {{0, 0}};
  }
};

}  // namespace

TEST_CASE("2x2 branch matching picks the higher-similarity pairing") {
  BranchFixture fix({{1, 0}, {0, 1}}, {{0.95, 0.31}, {-0.31, 0.95}});
  TangentConfig cfg;
  match_branches(fix.d2, fix.d3, fix.X, fix.fY, cfg, fix.matching);
  REQUIRE(fix.matching.branch_pairs.size() == 2);
  CHECK(fix.matching.branch_pairs[0].path2 == fix.d2.branches[0]);
  CHECK(fix.matching.branch_pairs[0].path3 == fix.d3.branches[0]);
  CHECK(fix.matching.branch_pairs[1].path2 == fix.d2.branches[1]);
  CHECK(fix.matching.branch_pairs[1].path3 == fix.d3.branches[1]);
}

TEST_CASE("permuted branches are recovered by maximizing total similarity") {
  TestRng rng(21);
  const std::vector<Eigen::Vector2d> dirs2 = {{1, 0}, {0, 1}, {-0.707, 0.707}};
  const std::vector<int> perm = {2, 0, 1};
  std::vector<Eigen::Vector2d> dirs3(3);
  for (int i = 0; i < 3; ++i) dirs3[perm[i]] = dirs2[i];
  BranchFixture fix(dirs2, dirs3);
  TangentConfig cfg;
  match_branches(fix.d2, fix.d3, fix.X, fix.fY, cfg, fix.matching);

  // brute-force oracle over all 3! assignments of the same similarity matrix
  Eigen::Matrix3d S;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) S(i, j) = dirs2[i].normalized().dot(dirs3[j].normalized());
  }
  std::vector<int> best = {0, 1, 2}, order = {0, 1, 2};
  double best_score = -1e9;
  do {
    double score = 0;
    for (int i = 0; i < 3; ++i) score += S(i, order[i]);
    if (score > best_score) {
      best_score = score;
      best = order;
    }
  } while (std::next_permutation(order.begin(), order.end()));

  REQUIRE(fix.matching.branch_pairs.size() == 3);
  for (int i = 0; i < 3; ++i) {
    CHECK(fix.matching.branch_pairs[i].path2 == fix.d2.branches[i]);
    CHECK(fix.matching.branch_pairs[i].path3 == fix.d3.branches[best[i]]);
  }
}

TEST_CASE("self-matching yields unit similarities") {
  BranchFixture fix({{1, 0}, {0, 1}, {-1, 0}}, {{1, 0}, {0, 1}, {-1, 0}});
  TangentConfig cfg;
  match_branches(fix.d2, fix.d3, fix.X, fix.fY, cfg, fix.matching);
  REQUIRE(fix.matching.branch_pairs.size() == 3);
  for (int i = 0; i < 3; ++i) {
    CHECK(fix.matching.branch_pairs[i].path2 == fix.d2.branches[i]);
    CHECK(fix.matching.branch_pairs[i].path3 == fix.d3.branches[i]);
  }
  CHECK(fix.matching.unmatched_branches_2d.empty());
  CHECK(fix.matching.unmatched_branches_3d.empty());
}

TEST_CASE("count mismatch pairs up to the minimum and reports the leftover") {
  BranchFixture fix({{1, 0}, {0, 1}, {-1, 0}}, {{1, 0}, {0, 1}});
  TangentConfig cfg;
  match_branches(fix.d2, fix.d3, fix.X, fix.fY, cfg, fix.matching);
  CHECK(fix.matching.branch_pairs.size() == 2);
  CHECK(fix.matching.unmatched_branches_2d == std::vector<int>{2});
  CHECK(fix.matching.unmatched_branches_3d.empty());
}

TEST_CASE("branch assignment: hand-evaluated bracketing weights") {
  // 2D branch nodes at arc lengths 0, 1, 2; projected 3D nodes at 0, 0.5, 1.0
  Eigen::Matrix2Xd X(2, 3), fY(2, 3);
  X.col(0) = Eigen::Vector2d(0, 0);
  X.col(1) = Eigen::Vector2d(1, 0);
  X.col(2) = Eigen::Vector2d(2, 0);
  fY.col(0) = Eigen::Vector2d(5, 5);  // only differences matter
  fY.col(1) = Eigen::Vector2d(5.5, 5);
  fY.col(2) = Eigen::Vector2d(6, 5);
  AssignmentMatrix M(3, 3);
  assign_branch_nodes({0, 1, 2}, {0, 1, 2}, X, fY, M);

  // first 3D node: weight 1 on the 2D junction node
  REQUIRE(M.column(0).size() == 1);
  CHECK(M.column(0)[0] == std::pair<int, double>(0, 1.0));
  // arc 0.5: split evenly between the first two 2D nodes
  REQUIRE(M.column(1).size() == 2);
  CHECK(M.column(1)[0].first == 0);
  CHECK(M.column(1)[0].second == doctest::Approx(0.5));
  CHECK(M.column(1)[1].first == 1);
  CHECK(M.column(1)[1].second == doctest::Approx(0.5));
  // arc exactly 1.0: weight 1 on the second 2D node
  REQUIRE(M.column(2).size() == 1);
  CHECK(M.column(2)[0] == std::pair<int, double>(1, 1.0));
}

TEST_CASE("3D branch nodes beyond the 2D length stay unassigned") {
  Eigen::Matrix2Xd X(2, 2), fY(2, 4);
  X.col(0) = Eigen::Vector2d(0, 0);
  X.col(1) = Eigen::Vector2d(1, 0);
  for (int i = 0; i < 4; ++i) fY.col(i) = Eigen::Vector2d(0.6 * i, 2);
  AssignmentMatrix M(2, 4);
  assign_branch_nodes({0, 1}, {0, 1, 2, 3}, X, fY, M);
  CHECK(M.assigned(0));
  CHECK(M.assigned(1));  // arc 0.6 within [0, 1]
  CHECK_FALSE(M.assigned(2));
  CHECK_FALSE(M.assigned(3));
}

TEST_CASE("trunk assignment scales 3D arc length by lambda2/lambda3") {
  // lambda2 = 10, lambda3 = 20; 3D node at arc 10 -> scaled 5
  Eigen::Matrix2Xd X(2, 11);
  for (int i = 0; i <= 10; ++i) X.col(i) = Eigen::Vector2d(i, 0);
  Eigen::Matrix3Xd Y(3, 3);
  Y.col(0) = Eigen::Vector3d(0, 0, 0);
  Y.col(1) = Eigen::Vector3d(10, 0, 0);
  Y.col(2) = Eigen::Vector3d(20, 0, 0);
  AssignmentMatrix M(11, 3);
  std::vector<int> trunk2(11);
  std::iota(trunk2.begin(), trunk2.end(), 0);
  assign_trunk_nodes(trunk2, {0, 1, 2}, X, Y, M);
  REQUIRE(M.column(1).size() == 1);
  CHECK(M.column(1)[0] == std::pair<int, double>(5, 1.0));
  // endpoints exact
  CHECK(M.column(0)[0] == std::pair<int, double>(0, 1.0));
  CHECK(M.column(2)[0] == std::pair<int, double>(10, 1.0));
}

TEST_CASE("uniform trunks map node k to node k") {
  Eigen::Matrix2Xd X(2, 6);
  Eigen::Matrix3Xd Y(3, 6);
  for (int i = 0; i < 6; ++i) {
    X.col(i) = Eigen::Vector2d(2 * i, 1);
    Y.col(i) = Eigen::Vector3d(0, 3.0 * i, 0);
  }
  AssignmentMatrix M(6, 6);
  assign_trunk_nodes({0, 1, 2, 3, 4, 5}, {0, 1, 2, 3, 4, 5}, X, Y, M);
  for (int k = 0; k < 6; ++k) {
    REQUIRE(M.column(k).size() == 1);
    CHECK(M.column(k)[0] == std::pair<int, double>(k, 1.0));
  }
}

TEST_CASE("zero-length trunk raises") {
  Eigen::Matrix2Xd X = Eigen::Matrix2Xd::Zero(2, 2);
  Eigen::Matrix3Xd Y(3, 2);
  Y.col(0) = Eigen::Vector3d(0, 0, 0);
  Y.col(1) = Eigen::Vector3d(1, 0, 0);
  AssignmentMatrix M(2, 2);
  CHECK_THROWS_WITH_AS(assign_trunk_nodes({0, 1}, {0, 1}, X, Y, M),
                       doctest::Contains("ZeroLengthTrunk"), Error);
}

TEST_CASE("assignment columns are convex weights on consecutive 2D nodes") {
  TestRng rng(33);
  for (int trial = 0; trial < 20; ++trial) {
    const int n2 = 8, n3 = 14;
    Eigen::Matrix2Xd X(2, n2), fY(2, n3);
    double x = 0;
    for (int i = 0; i < n2; ++i) {
      x += rng.uniform(0.5, 2.0);
      X.col(i) = Eigen::Vector2d(x, rng.uniform(-0.2, 0.2));
    }
    double z = 0;
    for (int i = 0; i < n3; ++i) {
      z += rng.uniform(0.2, 1.2);
      fY.col(i) = Eigen::Vector2d(z, rng.uniform(-0.2, 0.2));
    }
    AssignmentMatrix M(n2, n3);
    std::vector<int> b2(n2), b3(n3);
    std::iota(b2.begin(), b2.end(), 0);
    std::iota(b3.begin(), b3.end(), 0);
    assign_branch_nodes(b2, b3, X, fY, M);
    for (int c = 0; c < n3; ++c) {
      if (!M.assigned(c)) continue;
      double sum = 0;
      const auto& entries = M.column(c);
      REQUIRE(entries.size() <= 2);
      for (const auto& [r, w] : entries) {
        CHECK(w >= 0.0);
        CHECK(w <= 1.0);
        sum += w;
      }
      if (entries.size() == 2) CHECK(entries[1].first == entries[0].first + 1);
      CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("branch assignment is invariant to 3D resampling density") {
  // doubling the 3D sampling leaves each original node's 2D target unchanged
  Eigen::Matrix2Xd X(2, 5);
  for (int i = 0; i < 5; ++i) X.col(i) = Eigen::Vector2d(1.5 * i, 0.3 * i);
  auto make_fy = [](int factor) {
    Eigen::Matrix2Xd fY(2, 4 * factor + 1);
    for (int i = 0; i <= 4 * factor; ++i) {
      const double t = static_cast<double>(i) / factor;
      fY.col(i) = Eigen::Vector2d(1.2 * t, 0.0);
    }
    return fY;
  };
  const auto coarse = make_fy(1);
  const auto fine = make_fy(2);
  AssignmentMatrix Mc(5, 5), Mf(5, 9);
  std::vector<int> b2 = {0, 1, 2, 3, 4};
  assign_branch_nodes(b2, {0, 1, 2, 3, 4}, X, coarse, Mc);
  assign_branch_nodes(b2, {0, 1, 2, 3, 4, 5, 6, 7, 8}, X, fine, Mf);
  for (int k = 0; k <= 4; ++k) {
    REQUIRE(Mc.assigned(k));
    REQUIRE(Mf.assigned(2 * k));
    CHECK((Mc.target(X, k) - Mf.target(X, 2 * k)).norm() < 1e-9);
  }
}

TEST_CASE("self-matching branch assigns each 2D node to itself") {
  Eigen::Matrix2Xd X(2, 6);
  for (int i = 0; i < 6; ++i) X.col(i) = Eigen::Vector2d(i * 1.3, std::sin(i * 0.5));
  AssignmentMatrix M(6, 6);
  std::vector<int> b = {0, 1, 2, 3, 4, 5};
  assign_branch_nodes(b, b, X, X, M);
  for (int k = 0; k < 6; ++k) {
    REQUIRE(M.assigned(k));
    CHECK((M.target(X, k) - X.col(k)).norm() < 1e-12);
  }
}
