#include "vesselreg/thinning.hpp"

#include <algorithm>
#include <array>
#include <limits>

namespace vesselreg {

namespace {

inline int fg(const Mask2D& m, int x, int y) { return m.inside(x, y) && m.at(x, y) ? 1 : 0; }

// Neighbour ring p2..p9 starting north, clockwise.
std::array<int, 8> ring(const Mask2D& m, int x, int y) {
  return {fg(m, x, y - 1), fg(m, x + 1, y - 1), fg(m, x + 1, y), fg(m, x + 1, y + 1),
          fg(m, x, y + 1), fg(m, x - 1, y + 1), fg(m, x - 1, y), fg(m, x - 1, y - 1)};
}

SkeletonPointSet points_from_mask(const Mask2D& m, double ox, double oy) {
  int count = 0;
  for (std::uint8_t v : m.data) count += v ? 1 : 0;
  Eigen::MatrixXd pts(2, count);
  int k = 0;
  for (int y = 0; y < m.height; ++y) {
    for (int x = 0; x < m.width; ++x) {
      if (m.at(x, y)) pts.col(k++) = Eigen::Vector2d(x + ox, y + oy);
    }
  }
  return make_point_set(pts);
}

}  // namespace

namespace {

// Ring offsets in circular order N, NE, E, SE, S, SW, W, NW.
constexpr int kRing[8][2] = {{0, -1}, {1, -1}, {1, 0},  {1, 1},
                             {0, 1},  {-1, 1}, {-1, 0}, {-1, -1}};

// Simple-pixel test for (8, 4) connectivity: the foreground neighbours form
// one 8-connected component and the background 4-neighbourhood one
// 4-connected component, so deleting the pixel changes neither foreground
// components nor holes.
bool is_simple_pixel(const Mask2D& m, int x, int y) {
  int fgc[8];
  for (int i = 0; i < 8; ++i) fgc[i] = fg(m, x + kRing[i][0], y + kRing[i][1]);

  int fg_comp = 0;
  int label[8] = {0};
  for (int i = 0; i < 8; ++i) {
    if (!fgc[i] || label[i]) continue;
    ++fg_comp;
    int stack[8], top = 0;
    stack[top++] = i;
    label[i] = 1;
    while (top) {
      const int u = stack[--top];
      for (int v = 0; v < 8; ++v) {
        if (!fgc[v] || label[v]) continue;
        const int dx = std::abs(kRing[u][0] - kRing[v][0]);
        const int dy = std::abs(kRing[u][1] - kRing[v][1]);
        if (std::max(dx, dy) == 1) {
          label[v] = 1;
          stack[top++] = v;
        }
      }
    }
  }
  if (fg_comp != 1) return false;

  // Background components among the 4-neighbours (indices 0, 2, 4, 6),
  // joined through a background corner between them.
  int bg_comp = 0;
  bool bg_seen[4] = {false, false, false, false};
  for (int k = 0; k < 4; ++k) {
    if (fgc[2 * k] || bg_seen[k]) continue;
    ++bg_comp;
    int stack[4], top = 0;
    stack[top++] = k;
    bg_seen[k] = true;
    while (top) {
      const int u = stack[--top];
      for (int step = -1; step <= 1; step += 2) {
        const int v = (u + (step + 4)) % 4;
        const int corner = (2 * u + step + 8) % 8;
        if (!fgc[2 * v] && !fgc[corner] && !bg_seen[v]) {
          bg_seen[v] = true;
          stack[top++] = v;
        }
      }
    }
  }
  return bg_comp == 1;
}

}  // namespace

SkeletonPointSet thin_mask_2d(const Mask2D& mask) {
  bool any = std::any_of(mask.data.begin(), mask.data.end(), [](std::uint8_t v) { return v != 0; });
  if (mask.width <= 0 || mask.height <= 0 || !any) {
    throw Error(errc::empty_mask, "mask has no foreground pixels");
  }

  // Zhang-Suen: delete border pixels with 2..6 neighbours and exactly one
  // 0->1 transition in the ring; the two subiterations use mirrored
  // east/south vs west/north conditions so opposite borders erode in step.
  Mask2D m = mask;
  std::vector<std::pair<int, int>> to_delete;
  bool changed = true;
  while (changed) {
    changed = false;
    for (int pass = 0; pass < 2; ++pass) {
      to_delete.clear();
      for (int y = 0; y < m.height; ++y) {
        for (int x = 0; x < m.width; ++x) {
          if (!m.at(x, y)) continue;
          const auto p = ring(m, x, y);
          const int b = p[0] + p[1] + p[2] + p[3] + p[4] + p[5] + p[6] + p[7];
          if (b < 2 || b > 6) continue;
          int transitions = 0;
          for (int i = 0; i < 8; ++i) transitions += (p[i] == 0 && p[(i + 1) % 8] == 1) ? 1 : 0;
          if (transitions != 1) continue;
          // p2=N p4=E p6=S p8=W
          const int n = p[0], e = p[2], s = p[4], w = p[6];
          if (pass == 0) {
            if (n * e * s != 0 || e * s * w != 0) continue;
          } else {
            if (n * e * w != 0 || n * s * w != 0) continue;
          }
          to_delete.emplace_back(x, y);
        }
      }
      for (auto [x, y] : to_delete) m.at(x, y) = 0;
      changed = changed || !to_delete.empty();
    }
  }

  // Staircase cleanup: Zhang-Suen leaves zigzag corner pixels whose deletion
  // is topology-safe; removing them sequentially yields a minimal skeleton
  // whose interior pixels all have exactly two neighbours.
  bool pruned = true;
  while (pruned) {
    pruned = false;
    for (int y = 0; y < m.height; ++y) {
      for (int x = 0; x < m.width; ++x) {
        if (!m.at(x, y)) continue;
        int neighbors = 0;
        for (const auto& d : kRing) neighbors += fg(m, x + d[0], y + d[1]);
        if (neighbors < 2) continue;  // keep curve ends
        if (!is_simple_pixel(m, x, y)) continue;
        m.at(x, y) = 0;
        pruned = true;
      }
    }
  }
  return points_from_mask(m, 0.0, 0.0);
}

namespace {

// 3x3x3 neighbourhood handling for the 3D simple-point test. Offsets are
// indexed 0..26 with idx = (dz+1)*9 + (dy+1)*3 + (dx+1); 13 is the centre.
struct NeighborhoodTables {
  // 26-adjacency between the 26 non-centre cells.
  std::array<std::vector<int>, 27> adj26;
  // 6-adjacency restricted to the 18 non-corner, non-centre cells.
  std::array<std::vector<int>, 27> adj6_in18;
  std::array<bool, 27> in_n18{};
  std::array<bool, 27> is_face{};  // 6-neighbours of the centre

  NeighborhoodTables() {
    auto coord = [](int idx) {
      return std::array<int, 3>{idx % 3 - 1, (idx / 3) % 3 - 1, idx / 9 - 1};
    };
    for (int i = 0; i < 27; ++i) {
      if (i == 13) continue;
      const auto a = coord(i);
      const int manhattan = std::abs(a[0]) + std::abs(a[1]) + std::abs(a[2]);
      in_n18[i] = manhattan <= 2;
      is_face[i] = manhattan == 1;
      for (int j = 0; j < 27; ++j) {
        if (j == 13 || j == i) continue;
        const auto b = coord(j);
        const int dx = std::abs(a[0] - b[0]);
        const int dy = std::abs(a[1] - b[1]);
        const int dz = std::abs(a[2] - b[2]);
        if (std::max({dx, dy, dz}) == 1) adj26[i].push_back(j);
        if (dx + dy + dz == 1 && in_n18[i]) {
          if (std::abs(b[0]) + std::abs(b[1]) + std::abs(b[2]) <= 2) adj6_in18[i].push_back(j);
        }
      }
    }
  }
};

const NeighborhoodTables& tables() {
  static const NeighborhoodTables t;
  return t;
}

inline int vfg(const Volume3D& v, int x, int y, int z) {
  return v.inside(x, y, z) && v.at(x, y, z) ? 1 : 0;
}

void load_neighborhood(const Volume3D& v, int x, int y, int z, std::array<int, 27>& nb) {
  int i = 0;
  for (int dz = -1; dz <= 1; ++dz)
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx) nb[i++] = vfg(v, x + dx, y + dy, z + dz);
}

int count_neighbors26(const std::array<int, 27>& nb) {
  int c = 0;
  for (int i = 0; i < 27; ++i) c += (i != 13) ? nb[i] : 0;
  return c;
}

// A voxel is simple iff its deletion keeps both the foreground (26) and the
// background (6) topology: exactly one 26-component of foreground in N26 and
// exactly one 6-component of background in N18 touching a face neighbour.
bool is_simple(const std::array<int, 27>& nb) {
  const auto& t = tables();

  int fg_components = 0;
  std::array<int, 27> label{};
  for (int i = 0; i < 27; ++i) {
    if (i == 13 || !nb[i] || label[i]) continue;
    ++fg_components;
    if (fg_components > 1) return false;
    std::array<int, 32> stack;
    int top = 0;
    stack[top++] = i;
    label[i] = 1;
    while (top) {
      const int u = stack[--top];
      for (int w : t.adj26[u]) {
        if (nb[w] && !label[w]) {
          label[w] = 1;
          stack[top++] = w;
        }
      }
    }
  }
  if (fg_components != 1) return false;

  int bg_components = 0;
  label.fill(0);
  for (int i = 0; i < 27; ++i) {
    if (i == 13 || !t.is_face[i] || nb[i] || label[i]) continue;
    ++bg_components;
    if (bg_components > 1) return false;
    std::array<int, 32> stack;
    int top = 0;
    stack[top++] = i;
    label[i] = 1;
    while (top) {
      const int u = stack[--top];
      for (int w : t.adj6_in18[u]) {
        if (!nb[w] && !label[w]) {
          label[w] = 1;
          stack[top++] = w;
        }
      }
    }
  }
  return bg_components == 1;
}

}  // namespace

SkeletonPointSet thin_volume_3d(const Volume3D& volume) {
  bool any =
      std::any_of(volume.data.begin(), volume.data.end(), [](std::uint8_t v) { return v != 0; });
  if (volume.nx <= 0 || volume.ny <= 0 || volume.nz <= 0 || !any) {
    throw Error(errc::empty_volume, "volume has no foreground voxels");
  }

  Volume3D v = volume;
  // Direction order: U D N S E W as (dz,dy,dx) offsets of the face that must
  // be background for a voxel to be a candidate in that subiteration.
  static constexpr int dirs[6][3] = {{0, 0, 1},  {0, 0, -1}, {0, -1, 0},
                                     {0, 1, 0},  {1, 0, 0},  {-1, 0, 0}};
  std::array<int, 27> nb{};
  std::vector<std::array<int, 3>> candidates;
  bool changed = true;
  while (changed) {
    changed = false;
    for (const auto& d : dirs) {
      candidates.clear();
      for (int z = 0; z < v.nz; ++z) {
        for (int y = 0; y < v.ny; ++y) {
          for (int x = 0; x < v.nx; ++x) {
            if (!v.at(x, y, z)) continue;
            if (vfg(v, x + d[0], y + d[1], z + d[2])) continue;  // not a border in d
            load_neighborhood(v, x, y, z, nb);
            if (count_neighbors26(nb) <= 1) continue;  // curve end or isolated
            if (!is_simple(nb)) continue;
            candidates.push_back({x, y, z});
          }
        }
      }
      // Sequential recheck: parallel candidates can stop being simple once an
      // earlier one is removed, so each deletion re-validates.
      for (const auto& c : candidates) {
        load_neighborhood(v, c[0], c[1], c[2], nb);
        if (count_neighbors26(nb) <= 1) continue;
        if (!is_simple(nb)) continue;
        v.at(c[0], c[1], c[2]) = 0;
        changed = true;
      }
    }
  }

  int count = 0;
  for (std::uint8_t b : v.data) count += b ? 1 : 0;
  Eigen::MatrixXd pts(3, count);
  int k = 0;
  for (int z = 0; z < v.nz; ++z)
    for (int y = 0; y < v.ny; ++y)
      for (int x = 0; x < v.nx; ++x)
        if (v.at(x, y, z)) pts.col(k++) = Eigen::Vector3d(x, y, z);
  return make_point_set(pts);
}

Mask2D mask_from_points(const SkeletonPointSet& points, long long origin[2], int pad) {
  if (points.empty()) throw Error(errc::empty_input, "no points to rasterize");
  const auto grid = grid_coordinates(points);
  long long xmin = std::numeric_limits<long long>::max(), xmax = std::numeric_limits<long long>::min();
  long long ymin = xmin, ymax = xmax;
  for (int i = 0; i < points.size(); ++i) {
    xmin = std::min(xmin, grid(0, i));
    xmax = std::max(xmax, grid(0, i));
    ymin = std::min(ymin, grid(1, i));
    ymax = std::max(ymax, grid(1, i));
  }
  origin[0] = xmin - pad;
  origin[1] = ymin - pad;
  Mask2D m;
  m.width = static_cast<int>(xmax - xmin) + 1 + 2 * pad;
  m.height = static_cast<int>(ymax - ymin) + 1 + 2 * pad;
  m.data.assign(static_cast<size_t>(m.width) * m.height, 0);
  for (int i = 0; i < points.size(); ++i) {
    m.at(static_cast<int>(grid(0, i) - origin[0]), static_cast<int>(grid(1, i) - origin[1])) = 1;
  }
  return m;
}

Volume3D volume_from_points(const SkeletonPointSet& points, long long origin[3], int pad) {
  if (points.empty()) throw Error(errc::empty_input, "no points to rasterize");
  const auto grid = grid_coordinates(points);
  long long lo[3], hi[3];
  for (int a = 0; a < 3; ++a) {
    lo[a] = std::numeric_limits<long long>::max();
    hi[a] = std::numeric_limits<long long>::min();
  }
  for (int i = 0; i < points.size(); ++i) {
    for (int a = 0; a < 3; ++a) {
      lo[a] = std::min(lo[a], grid(a, i));
      hi[a] = std::max(hi[a], grid(a, i));
    }
  }
  Volume3D v;
  v.nx = static_cast<int>(hi[0] - lo[0]) + 1 + 2 * pad;
  v.ny = static_cast<int>(hi[1] - lo[1]) + 1 + 2 * pad;
  v.nz = static_cast<int>(hi[2] - lo[2]) + 1 + 2 * pad;
  for (int a = 0; a < 3; ++a) origin[a] = lo[a] - pad;
  v.data.assign(static_cast<size_t>(v.nx) * v.ny * v.nz, 0);
  for (int i = 0; i < points.size(); ++i) {
    v.at(static_cast<int>(grid(0, i) - origin[0]), static_cast<int>(grid(1, i) - origin[1]),
         static_cast<int>(grid(2, i) - origin[2])) = 1;
  }
  return v;
}

}  // namespace vesselreg
