#pragma once

#include <Eigen/Dense>
#include <initializer_list>
#include <utility>
#include <vector>

#include "vesselreg/skeleton.hpp"

namespace testutil {

inline vesselreg::SkeletonPointSet ps2(const std::vector<std::pair<double, double>>& pts) {
  Eigen::MatrixXd m(2, pts.size());
  for (size_t i = 0; i < pts.size(); ++i) {
    m(0, i) = pts[i].first;
    m(1, i) = pts[i].second;
  }
  return vesselreg::make_point_set(m);
}

inline vesselreg::SkeletonPointSet ps3(const std::vector<std::array<double, 3>>& pts) {
  Eigen::MatrixXd m(3, pts.size());
  for (size_t i = 0; i < pts.size(); ++i) {
    m(0, i) = pts[i][0];
    m(1, i) = pts[i][1];
    m(2, i) = pts[i][2];
  }
  return vesselreg::make_point_set(m);
}

// Coordinates of a node path, for index-free comparisons.
inline std::vector<std::pair<double, double>> path_coords(const vesselreg::SkeletonGraph& g,
                                                          const std::vector<int>& path) {
  std::vector<std::pair<double, double>> out;
  for (int i : path) out.emplace_back(g.points.points(0, i), g.points.points(1, i));
  return out;
}

// Deterministic uniform doubles for test data.
class TestRng {
public:
  explicit TestRng(std::uint64_t seed) : state_(seed ? seed : 1) {}
  double uniform(double a, double b) {
    state_ ^= state_ << 13;
    state_ ^= state_ >> 7;
    state_ ^= state_ << 17;
    return a + (b - a) * (static_cast<double>(state_ >> 11) * 0x1.0p-53);
  }
  int uniform_int(int a, int b) {
    return a + static_cast<int>(uniform(0, 1) * (b - a + 1)) % (b - a + 1);
  }

private:
  std::uint64_t state_;
};

}  // namespace testutil
