#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "vesselreg/projection.hpp"
#include "vesselreg/skeleton.hpp"

namespace vesselreg {

// Smooth low-frequency displacement field: a sum of sinusoidal waves scaled
// so the largest displacement over the reference nodes hits the requested
// magnitude.
struct TrigField {
  struct Wave {
    Eigen::Vector3d amplitude;
    Eigen::Vector3d direction;
    double wavelength = 100;
    double phase = 0;
  };
  std::vector<Wave> waves;

  Eigen::Vector3d eval(const Eigen::Vector3d& p) const;
  Eigen::Matrix3Xd eval_all(const Eigen::MatrixXd& pts) const;
};

struct SyntheticParams {
  int trunk_len = 110;   // nodes from the upper junction to the iliac bifurcation
  int upper_len = 55;    // upper aorta nodes above the renal junction
  int renal_len = 40;
  int iliac_len = 60;
  double trunk_drift = 6.0;   // lateral S-curve amplitude (grid units)
  double depth_drift = 8.0;   // anterior-posterior bowing amplitude
  double deform_mm = 5.0;     // ground-truth deformation magnitude
  double state_mm = 0.0;      // pre-operative shape-state deformation magnitude
  int spur_count = 2;         // short noise spurs on the trunk (deleted by tau)
  int spur_len = 4;
  double detector_scale = 0.85;   // approx pixels per grid unit
  double source_distance = 1200;  // cone-beam source-to-object distance
  double tx = 0, ty = 0, theta_deg = 0;  // in-plane transform of the 2D skeleton
};

// One registration problem: a pre-operative 3D grid skeleton, a smooth
// ground-truth deformation, a cone-beam-like projection, and the derived 2D
// skeleton re-gridded to integer pixels.
struct SyntheticCase {
  std::string id;
  SyntheticParams params;
  SkeletonPointSet skeleton_3d;
  std::vector<std::vector<int>> paths_3d;  // branch/trunk node chains incl. junctions
  TrigField deformation;                   // field seeding the ground-truth warp
  Eigen::Matrix3Xd deformed;               // ground-truth intra-operative positions
  ProjectionMatrix projection;
  SkeletonPointSet skeleton_2d;
  Eigen::Matrix2Xd projected_deformed;  // continuous projection before transform/regrid
  double tx = 0, ty = 0, theta_deg = 0;

  const Eigen::Matrix3Xd& deformed_nodes() const { return deformed; }
  std::vector<Eigen::MatrixXd> truth_polylines_3d() const;
};

SyntheticCase generate_synthetic_aaa(std::uint64_t seed, const SyntheticParams& params);

// Cases sharing one anatomy and differing by smooth shape states, mirroring
// repeated deformations of a single phantom; cross-pairing them yields the
// simulation protocol.
std::vector<SyntheticCase> generate_case_family(std::uint64_t seed, int count,
                                                const SyntheticParams& params);

// Round to integer pixels, drop duplicates, re-thin to 1-pixel width.
SkeletonPointSet regrid_2d(const Eigen::Matrix2Xd& pts);

// Rotate about the projected centroid and translate, then re-grid.
SyntheticCase with_inplane_transform(const SyntheticCase& base, double tx, double ty,
                                     double theta_deg);

Eigen::Matrix2Xd apply_inplane(const Eigen::Matrix2Xd& pts, double tx, double ty,
                               double theta_deg, const Eigen::Vector2d& pivot);

}  // namespace vesselreg
