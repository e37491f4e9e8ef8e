#include <doctest.h>

#include "helpers.hpp"
#include "vesselreg/tps.hpp"

using namespace vesselreg;
using testutil::TestRng;

namespace {

Eigen::Matrix3Xd random_pts(TestRng& rng, int n, double lo = -10, double hi = 10) {
  Eigen::Matrix3Xd m(3, n);
  for (int i = 0; i < n; ++i) {
    m.col(i) = Eigen::Vector3d(rng.uniform(lo, hi), rng.uniform(lo, hi), rng.uniform(lo, hi));
  }
  return m;
}

// Independent dense solve of the same interpolation conditions, evaluated
// directly from the linear system (no reuse of the ThinPlateSpline3D class).
Eigen::Vector3d oracle_tps_eval(const Eigen::Matrix3Xd& src, const Eigen::Matrix3Xd& dst,
                                const Eigen::Vector3d& q) {
  const int m = static_cast<int>(src.cols());
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(m + 4, m + 4);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) A(i, j) = (src.col(i) - src.col(j)).norm();
    A(i, m) = 1;
    A.block<1, 3>(i, m + 1) = src.col(i).transpose();
    A(m, i) = 1;
    A.block<3, 1>(m + 1, i) = src.col(i);
  }
  Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(m + 4, 3);
  rhs.topRows(m) = dst.transpose();
  const Eigen::MatrixXd sol = A.partialPivLu().solve(rhs);
  Eigen::Vector3d out = sol.row(m).transpose();
  out += sol.bottomRows(3).transpose() * q;
  for (int i = 0; i < m; ++i) out += (q - src.col(i)).norm() * sol.row(i).transpose();
  return out;
}

}  // namespace

TEST_CASE("identity controls give the identity map") {
  TestRng rng(41);
  const auto src = random_pts(rng, 8);
  const auto queries = random_pts(rng, 30);
  const auto warped = tps_warp_3d(src, src, queries);
  CHECK((warped - queries).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("pure translation of the controls translates every query") {
  TestRng rng(42);
  const auto src = random_pts(rng, 6);
  const Eigen::Vector3d t(3, -5, 2);
  const auto queries = random_pts(rng, 25);
  const auto warped = tps_warp_3d(src, src.colwise() + t, queries);
  CHECK((warped - (queries.colwise() + t)).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("exact interpolation at controls and oracle agreement at queries") {
  TestRng rng(43);
  const auto src = random_pts(rng, 5);
  const auto dst = random_pts(rng, 5);
  const auto warped_controls = tps_warp_3d(src, dst, src);
  CHECK((warped_controls - dst).cwiseAbs().maxCoeff() < 1e-8);

  const auto queries = random_pts(rng, 20);
  const auto warped = tps_warp_3d(src, dst, queries);
  for (int i = 0; i < 20; ++i) {
    const Eigen::Vector3d expect = oracle_tps_eval(src, dst, queries.col(i));
    CHECK((warped.col(i) - expect).norm() < 1e-8);
  }
}

TEST_CASE("larger control sets stay exact") {
  TestRng rng(44);
  const auto src = random_pts(rng, 40);
  Eigen::Matrix3Xd dst = src;
  for (int i = 0; i < 40; ++i) {
    dst.col(i) += Eigen::Vector3d(rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2));
  }
  const auto warped = tps_warp_3d(src, dst, src);
  CHECK((warped - dst).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("coplanar controls fall back to an affine fit") {
  TestRng rng(45);
  Eigen::Matrix3Xd src(3, 6), dst(3, 6);
  for (int i = 0; i < 6; ++i) {
    src.col(i) = Eigen::Vector3d(rng.uniform(-5, 5), rng.uniform(-5, 5), 2.0);  // z fixed
  }
  Eigen::Matrix3d L;
  L << 1.1, 0.2, 0, -0.1, 0.9, 0, 0, 0, 1;
  const Eigen::Vector3d t(1, 2, 3);
  for (int i = 0; i < 6; ++i) dst.col(i) = L * src.col(i) + t;
  const auto spline = ThinPlateSpline3D::fit(src, dst);
  CHECK(spline.affine_fallback());
  // the fitted affine map agrees with the data wherever it is determined:
  // exactly at the controls and at new queries inside the control plane
  const auto at_controls = spline.warp(src);
  CHECK((at_controls - dst).cwiseAbs().maxCoeff() < 1e-8);
  for (int i = 0; i < 10; ++i) {
    const Eigen::Vector3d q(rng.uniform(-5, 5), rng.uniform(-5, 5), 2.0);
    CHECK((spline.apply(q) - (L * q + t)).norm() < 1e-6);
  }
}

TEST_CASE("fewer than four controls still map sensibly") {
  Eigen::Matrix3Xd src(3, 1), dst(3, 1);
  src.col(0) = Eigen::Vector3d(1, 1, 1);
  dst.col(0) = Eigen::Vector3d(2, 0, 1);
  Eigen::Matrix3Xd q(3, 1);
  q.col(0) = Eigen::Vector3d(5, 5, 5);
  const auto warped = tps_warp_3d(src, dst, q);
  CHECK((warped.col(0) - Eigen::Vector3d(6, 4, 5)).norm() < 1e-9);  // translation
}

TEST_CASE("contradictory duplicate controls raise SingularSystem") {
  Eigen::Matrix3Xd src(3, 2), dst(3, 2);
  src.col(0) = Eigen::Vector3d(0, 0, 0);
  src.col(1) = Eigen::Vector3d(0, 0, 0);
  dst.col(0) = Eigen::Vector3d(1, 0, 0);
  dst.col(1) = Eigen::Vector3d(0, 1, 0);
  CHECK_THROWS_WITH_AS(tps_warp_3d(src, dst, src), doctest::Contains("SingularSystem"), Error);
}
