#pragma once

#include <cstdint>
#include <vector>

#include "vesselreg/skeleton.hpp"

namespace vesselreg {

struct Mask2D {
  int width = 0, height = 0;
  std::vector<std::uint8_t> data;  // row-major, x fastest

  std::uint8_t& at(int x, int y) { return data[static_cast<size_t>(y) * width + x]; }
  std::uint8_t at(int x, int y) const { return data[static_cast<size_t>(y) * width + x]; }
  bool inside(int x, int y) const { return x >= 0 && x < width && y >= 0 && y < height; }
};

struct Volume3D {
  int nx = 0, ny = 0, nz = 0;
  std::vector<std::uint8_t> data;  // x fastest, then y, then z

  size_t index(int x, int y, int z) const {
    return (static_cast<size_t>(z) * ny + y) * nx + x;
  }
  std::uint8_t& at(int x, int y, int z) { return data[index(x, y, z)]; }
  std::uint8_t at(int x, int y, int z) const { return data[index(x, y, z)]; }
  bool inside(int x, int y, int z) const {
    return x >= 0 && x < nx && y >= 0 && y < ny && z >= 0 && z < nz;
  }
};

// Two-subiteration parallel thinning of a binary 2D mask down to a 1-pixel
// wide, 8-connected skeleton. Points come out in scan order (y, then x).
SkeletonPointSet thin_mask_2d(const Mask2D& mask);

// Six-subiteration directional thinning of a binary volume down to a curve
// skeleton; removes only simple points, so foreground connectivity (26) and
// background connectivity (6) are preserved. Curve end voxels are kept.
SkeletonPointSet thin_volume_3d(const Volume3D& volume);

// Rasterize integer-grid points into a mask/volume. origin receives the
// minimum grid coordinate so callers can map back to absolute coordinates.
Mask2D mask_from_points(const SkeletonPointSet& points, long long origin[2], int pad = 1);
Volume3D volume_from_points(const SkeletonPointSet& points, long long origin[3], int pad = 1);

}  // namespace vesselreg
