#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "vesselreg/metrics.hpp"

using namespace vesselreg;
using testutil::TestRng;

TEST_CASE("point on the curve has distance zero") {
  Eigen::MatrixXd curve(2, 3);
  curve << 0, 1, 2, 0, 0, 1;
  Eigen::MatrixXd pts(2, 2);
  pts << 0.5, 2, 0, 1;
  const auto d = point_to_curve(pts, {curve});
  CHECK(d[0] == doctest::Approx(0.0));
  CHECK(d[1] == doctest::Approx(0.0));
}

TEST_CASE("interior projection beats vertex distance") {
  Eigen::MatrixXd seg(2, 2);
  seg << -1, 1, 0, 0;
  Eigen::MatrixXd pts(2, 1);
  pts << 0, 1;
  CHECK(point_to_curve(pts, {seg})[0] == doctest::Approx(1.0));
}

TEST_CASE("matches a dense-sampling oracle on random polylines") {
  TestRng rng(71);
  Eigen::MatrixXd poly(2, 12);
  double x = 0, y = 0;
  for (int i = 0; i < 12; ++i) {
    x += rng.uniform(0.2, 1.5);
    y += rng.uniform(-1, 1);
    poly.col(i) = Eigen::Vector2d(x, y);
  }
  Eigen::MatrixXd pts(2, 200);
  for (int i = 0; i < 200; ++i) {
    pts.col(i) = Eigen::Vector2d(rng.uniform(-1, 12), rng.uniform(-3, 3));
  }
  const auto dist = point_to_curve(pts, {poly});

  // oracle: sample every segment at 1e-4 arc-length resolution
  for (int i = 0; i < 200; ++i) {
    double best = 1e30;
    for (int s = 0; s + 1 < 12; ++s) {
      const Eigen::Vector2d a = poly.col(s), b = poly.col(s + 1);
      const int steps = std::max(2, static_cast<int>((b - a).norm() / 1e-4));
      for (int k = 0; k <= steps; ++k) {
        const Eigen::Vector2d p = a + (b - a) * (static_cast<double>(k) / steps);
        best = std::min(best, (pts.col(i) - p).norm());
      }
    }
    CHECK(std::abs(dist[i] - best) < 1e-3);
  }
}

TEST_CASE("3D point-to-curve works the same way") {
  Eigen::MatrixXd seg(3, 2);
  seg << 0, 2, 0, 0, 0, 0;
  Eigen::MatrixXd pts(3, 1);
  pts << 1, 1, 0;
  CHECK(point_to_curve(pts, {seg})[0] == doctest::Approx(1.0));
}

TEST_CASE("empty curve raises EmptyCurve") {
  Eigen::MatrixXd pts(2, 1);
  pts << 0, 0;
  CHECK_THROWS_WITH_AS(point_to_curve(pts, {}), doctest::Contains("EmptyCurve"), Error);
  Eigen::MatrixXd single(2, 1);
  single << 1, 1;
  CHECK_THROWS_WITH_AS(point_to_curve(pts, {single}), doctest::Contains("EmptyCurve"), Error);
}

TEST_CASE("shape variation: aligned projection scores zero") {
  Eigen::Matrix3Xd Y(3, 10);
  for (int i = 0; i < 10; ++i) Y.col(i) = Eigen::Vector3d(i, 2 * i, 1);
  ProjectionMatrix P;
  P.P << 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 0, 1;
  const Eigen::Matrix2Xd X = project(P, Y);
  std::vector<Eigen::MatrixXd> curve;
  for (int i = 0; i + 1 < 10; ++i) {
    Eigen::MatrixXd seg(2, 2);
    seg.col(0) = X.col(i);
    seg.col(1) = X.col(i + 1);
    curve.push_back(seg);
  }
  const auto sv = shape_variation(curve, Y, P, RigidTransform3D{}, nullptr);
  CHECK(sv.sv_2d == doctest::Approx(0.0));
  CHECK_FALSE(sv.sv_3d.has_value());
}

TEST_CASE("shape variation: a 5 px offset from a straight line scores 5") {
  Eigen::Matrix3Xd Y(3, 20);
  for (int i = 0; i < 20; ++i) Y.col(i) = Eigen::Vector3d(i, 0, 1);
  ProjectionMatrix P;
  P.P << 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 0, 1;
  // the 2D curve sits 5 px away, perpendicular to the line
  Eigen::MatrixXd seg(2, 2);
  seg << -5, 30, 5, 5;
  const auto sv = shape_variation({seg}, Y, P, RigidTransform3D{}, nullptr);
  CHECK(sv.sv_2d == doctest::Approx(5.0));
}

TEST_CASE("summarize computes mean, population std and max") {
  const auto s = summarize({1, 2, 3, 4});
  CHECK(s.mean == doctest::Approx(2.5));
  CHECK(s.stddev == doctest::Approx(std::sqrt(1.25)));
  CHECK(s.max == doctest::Approx(4.0));
}
