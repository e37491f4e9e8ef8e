#include "vesselreg/skeleton.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <unordered_map>

namespace vesselreg {

namespace {

struct CellKey {
  long long x = 0, y = 0, z = 0;
  bool operator==(const CellKey&) const = default;
};

struct CellHash {
  size_t operator()(const CellKey& k) const {
    size_t h = std::hash<long long>()(k.x);
    h ^= std::hash<long long>()(k.y) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    h ^= std::hash<long long>()(k.z) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    return h;
  }
};

}  // namespace

SkeletonPointSet make_point_set(const Eigen::MatrixXd& points) {
  SkeletonPointSet ps;
  ps.dim = static_cast<int>(points.rows());
  ps.points = points;
  ps.spacing = Eigen::VectorXd::Ones(ps.dim);
  return ps;
}

SkeletonPointSet make_point_set(const Eigen::MatrixXd& points, const Eigen::VectorXd& spacing) {
  SkeletonPointSet ps = make_point_set(points);
  ps.spacing = spacing;
  return ps;
}

Eigen::Matrix<long long, Eigen::Dynamic, Eigen::Dynamic> grid_coordinates(
    const SkeletonPointSet& points) {
  const int d = points.dim;
  const int n = points.size();
  Eigen::Matrix<long long, Eigen::Dynamic, Eigen::Dynamic> grid(d, n);
  for (int i = 0; i < n; ++i) {
    for (int a = 0; a < d; ++a) {
      const double scaled = points.points(a, i) / points.spacing(a);
      const double rounded = std::round(scaled);
      if (std::abs(scaled - rounded) > 1e-6) {
        throw Error(errc::non_grid_input,
                    "point " + std::to_string(i) + " is not grid-aligned on axis " +
                        std::to_string(a));
      }
      grid(a, i) = static_cast<long long>(rounded);
    }
  }
  return grid;
}

bool SkeletonGraph::adjacent(int i, int j) const {
  const auto& ni = neighbors[i];
  return std::binary_search(ni.begin(), ni.end(), j);
}

SkeletonGraph build_graph(const SkeletonPointSet& points) {
  if (points.empty()) throw Error(errc::empty_input, "point set has no points");
  const int n = points.size();
  const int d = points.dim;
  const auto grid = grid_coordinates(points);

  std::unordered_map<CellKey, int, CellHash> cell_to_index;
  cell_to_index.reserve(static_cast<size_t>(n) * 2);
  for (int i = 0; i < n; ++i) {
    CellKey k{grid(0, i), grid(1, i), d == 3 ? grid(2, i) : 0};
    auto [it, inserted] = cell_to_index.emplace(k, i);
    if (!inserted) {
      throw Error(errc::non_grid_input,
                  "duplicate grid point at columns " + std::to_string(it->second) + " and " +
                      std::to_string(i));
    }
  }

  // Adjacency by probing the 8 / 26 neighbouring cells: two nodes are
  // adjacent iff 0 < Chebyshev distance <= 1 in grid coordinates.
  std::vector<std::vector<int>> nbrs(n);
  const int zlo = d == 3 ? -1 : 0;
  const int zhi = d == 3 ? 1 : 0;
  for (int i = 0; i < n; ++i) {
    for (int dz = zlo; dz <= zhi; ++dz) {
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          if (dx == 0 && dy == 0 && dz == 0) continue;
          CellKey k{grid(0, i) + dx, grid(1, i) + dy, (d == 3 ? grid(2, i) : 0) + dz};
          auto it = cell_to_index.find(k);
          if (it != cell_to_index.end()) nbrs[i].push_back(it->second);
        }
      }
    }
    std::sort(nbrs[i].begin(), nbrs[i].end());
  }

  // Largest connected component; ties go to the component holding the
  // smallest node index (components are discovered in index order).
  std::vector<int> component(n, -1);
  std::vector<int> component_size;
  for (int i = 0; i < n; ++i) {
    if (component[i] >= 0) continue;
    const int c = static_cast<int>(component_size.size());
    int count = 0;
    std::deque<int> queue{i};
    component[i] = c;
    while (!queue.empty()) {
      const int u = queue.front();
      queue.pop_front();
      ++count;
      for (int v : nbrs[u]) {
        if (component[v] < 0) {
          component[v] = c;
          queue.push_back(v);
        }
      }
    }
    component_size.push_back(count);
  }
  int best = 0;
  for (int c = 1; c < static_cast<int>(component_size.size()); ++c) {
    if (component_size[c] > component_size[best]) best = c;
  }

  std::vector<int> keep;
  std::vector<int> remap(n, -1);
  for (int i = 0; i < n; ++i) {
    if (component[i] == best) {
      remap[i] = static_cast<int>(keep.size());
      keep.push_back(i);
    }
  }

  SkeletonGraph g;
  g.points.dim = d;
  g.points.spacing = points.spacing;
  g.points.points.resize(d, static_cast<int>(keep.size()));
  g.neighbors.resize(keep.size());
  g.degrees.resize(keep.size());
  g.original_indices = keep;
  for (size_t i = 0; i < keep.size(); ++i) {
    g.points.points.col(static_cast<int>(i)) = points.points.col(keep[i]);
    for (int v : nbrs[keep[i]]) g.neighbors[i].push_back(remap[v]);
    g.degrees[i] = static_cast<int>(g.neighbors[i].size());
    for (int v : g.neighbors[i]) {
      if (static_cast<int>(i) < v) g.edges.emplace_back(static_cast<int>(i), v);
    }
  }
  return g;
}

}  // namespace vesselreg
