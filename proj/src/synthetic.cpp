#include "vesselreg/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include "vesselreg/thinning.hpp"

namespace vesselreg {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Deterministic uniform doubles; mt19937_64 output is fully specified so
// cases reproduce bit-identically across platforms.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}
  double uniform(double a, double b) {
    const double u = static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    return a + (b - a) * u;
  }
  int uniform_int(int a, int b) {  // inclusive
    return a + static_cast<int>(gen_() % static_cast<std::uint64_t>(b - a + 1));
  }

private:
  std::mt19937_64 gen_;
};

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t h = seed ^ (salt + 0x9e3779b97f4a7c15ULL + (seed << 6) + (seed >> 2));
  h ^= h >> 33;
  h *= 0xff51afd7ed558ccdULL;
  h ^= h >> 33;
  return h;
}

using Chain = std::vector<Eigen::Vector3d>;

// Integer anatomy chains. Every chain advances one grid unit along its
// dominant axis per step, which rules out Chebyshev shortcuts within a chain.
std::vector<Chain> build_anatomy(const SyntheticParams& p, Rng& rng) {
  const int T = p.trunk_len;
  auto bounded_amp = [](double amp, double cycles, int len) {
    // Keep per-step lateral slopes below ~0.45 so rounded steps stay within
    // one grid unit.
    const double limit = 0.45 * len / (2.0 * kPi * cycles);
    return std::min(amp, limit);
  };

  std::vector<Chain> chains;

  // Main trunk: J1 at the origin, descending +y to the iliac junction J2.
  const double ph_x = rng.uniform(0, 2 * kPi);
  const double ph_z = rng.uniform(0, 2 * kPi);
  const double ax = bounded_amp(p.trunk_drift, 1.0, T);
  const double az = bounded_amp(p.depth_drift, 1.0, T);
  Chain trunk;
  for (int t = 0; t < T; ++t) {
    const double cx = ax * (std::sin(2 * kPi * t / T + ph_x) - std::sin(ph_x));
    const double cz = az * (std::sin(2 * kPi * t / T + ph_z) - std::sin(ph_z));
    trunk.emplace_back(std::round(cx), t, std::round(cz));
  }
  chains.push_back(trunk);

  // Upper aorta above J1, ascending -y.
  {
    const double ph = rng.uniform(0, 2 * kPi);
    const double a = bounded_amp(3.0, 1.0, p.upper_len);
    const double phz = rng.uniform(0, 2 * kPi);
    const double azu = bounded_amp(3.0, 1.0, p.upper_len);
    Chain c{trunk.front()};
    for (int t = 1; t <= p.upper_len; ++t) {
      const double cx = a * (std::sin(2 * kPi * t / p.upper_len + ph) - std::sin(ph));
      const double cz = azu * (std::sin(2 * kPi * t / p.upper_len + phz) - std::sin(phz));
      c.emplace_back(std::round(cx), -t, std::round(cz));
    }
    chains.push_back(c);
  }

  // Renal-like branches, dominant +/-x; the gentle upward drift starts away
  // from the junction so they stay clear of the upper aorta.
  for (int side = 0; side < 2; ++side) {
    const double sign = side == 0 ? 1.0 : -1.0;
    const double phz = rng.uniform(0, 2 * kPi);
    const double azr = bounded_amp(3.0, 0.5, p.renal_len);
    Chain c{trunk.front()};
    for (int t = 1; t <= p.renal_len; ++t) {
      double cy = 0;
      if (t > 8) {
        cy = -2.0 * 0.5 * (1 - std::cos(kPi * (t - 8) / std::max(1, p.renal_len - 8)));
      }
      const double cz = azr * (std::sin(kPi * t / p.renal_len + phz) - std::sin(phz));
      c.emplace_back(sign * t, std::round(cy), std::round(cz));
    }
    chains.push_back(c);
  }

  // Iliac-like branches from J2, descending +y and spreading +/-x.
  for (int side = 0; side < 2; ++side) {
    const double sign = side == 0 ? 1.0 : -1.0;
    const double spread = rng.uniform(0.45, 0.6);
    const double phz = rng.uniform(0, 2 * kPi);
    const double azi = bounded_amp(4.0, 0.5, p.iliac_len);
    Chain c{trunk.back()};
    for (int t = 1; t <= p.iliac_len; ++t) {
      const double cx = trunk.back().x() + sign * (spread * t + 0.2);
      const double cz =
          trunk.back().z() + azi * (std::sin(kPi * t / p.iliac_len + phz) - std::sin(phz));
      c.emplace_back(std::round(cx), trunk.back().y() + t, std::round(cz));
    }
    chains.push_back(c);
  }

  return chains;
}

// Short depth-directed spurs off the (already rasterized) trunk; shorter than
// every real branch so classification deletes them. Anchors sit where the
// trunk depth bends away from the spur direction, which keeps the spur's
// contact with the trunk down to its base triangle and lets deletion erase
// it without leaving a stray quasi-junction.
std::vector<Chain> make_spurs(const Chain& trunk, const SyntheticParams& p, Rng& rng) {
  std::vector<Chain> spurs;
  const int T = static_cast<int>(trunk.size());
  std::vector<int> anchors;
  for (int t = T / 4; t <= 3 * T / 4; ++t) {
    const double dz_prev = trunk[t].z() - trunk[t - 1].z();
    const double dz_next = trunk[t + 1].z() - trunk[t].z();
    if (dz_prev == 0 && dz_next != 0) anchors.push_back(t);
  }
  std::vector<int> used;
  for (int s = 0; s < p.spur_count && !anchors.empty(); ++s) {
    const int pick = anchors[rng.uniform_int(0, static_cast<int>(anchors.size()) - 1)];
    bool clash = false;
    for (int u : used) clash = clash || std::abs(u - pick) < p.spur_len + 4;
    if (clash) continue;
    used.push_back(pick);
    const double dir = -(trunk[pick + 1].z() - trunk[pick].z());  // away from the bend
    Chain c{trunk[pick]};
    for (int t = 1; t <= p.spur_len; ++t) {
      c.emplace_back(trunk[pick].x(), trunk[pick].y(), trunk[pick].z() + dir * t);
    }
    spurs.push_back(std::move(c));
  }
  return spurs;
}

// Bend a chain by the field while keeping its node spacing proportional to
// the original arc positions (vessels bend rather than stretch).
Chain bend_chain(const Chain& chain, const TrigField& field) {
  const size_t n = chain.size();
  Chain moved(n);
  for (size_t k = 0; k < n; ++k) moved[k] = chain[k] + field.eval(chain[k]);
  if (n < 3) return moved;
  std::vector<double> rest(n, 0.0), bent(n, 0.0);
  for (size_t k = 1; k < n; ++k) {
    rest[k] = rest[k - 1] + (chain[k] - chain[k - 1]).norm();
    bent[k] = bent[k - 1] + (moved[k] - moved[k - 1]).norm();
  }
  if (rest.back() <= 0 || bent.back() <= 0) return moved;
  const double scale = bent.back() / rest.back();
  Chain out = moved;
  size_t seg = 0;
  for (size_t k = 1; k + 1 < n; ++k) {
    const double target = rest[k] * scale;
    while (seg + 2 < n && bent[seg + 1] < target) ++seg;
    const double span = bent[seg + 1] - bent[seg];
    const double t = span > 0 ? (target - bent[seg]) / span : 0.0;
    out[k] = moved[seg] + t * (moved[seg + 1] - moved[seg]);
  }
  return out;
}

// Rasterize a continuous chain into a 26-connected voxel chain: subdivide so
// rounded steps stay within one grid unit, drop consecutive duplicates, then
// collapse staircase shortcuts (keeping chain endpoints).
std::vector<Eigen::Vector3d> rasterize_chain(const Chain& chain) {
  std::vector<Eigen::Vector3d> voxels;
  auto push = [&](const Eigen::Vector3d& p) {
    Eigen::Vector3d v(std::round(p.x()), std::round(p.y()), std::round(p.z()));
    if (voxels.empty() || (voxels.back() - v).lpNorm<Eigen::Infinity>() > 0.5) {
      voxels.push_back(v);
    }
  };
  push(chain.front());
  for (size_t k = 1; k < chain.size(); ++k) {
    const Eigen::Vector3d a = chain[k - 1];
    const Eigen::Vector3d b = chain[k];
    const double span = (b - a).lpNorm<Eigen::Infinity>();
    const int steps = std::max(1, static_cast<int>(std::ceil(span / 0.9)));
    for (int s = 1; s <= steps; ++s) {
      push(a + (b - a) * (static_cast<double>(s) / steps));
    }
  }
  bool removed = true;
  while (removed && voxels.size() > 2) {
    removed = false;
    for (size_t k = 1; k + 1 < voxels.size(); ++k) {
      if ((voxels[k - 1] - voxels[k + 1]).lpNorm<Eigen::Infinity>() <= 1.0) {
        voxels.erase(voxels.begin() + static_cast<long>(k));
        removed = true;
        break;
      }
    }
  }
  return voxels;
}

struct VoxelKey {
  long long x, y, z;
  auto operator<=>(const VoxelKey&) const = default;
};

ProjectionMatrix cone_beam_projection(const SyntheticParams& p) {
  // Source on the -z axis looking toward +z; u = s*D*x/(z+D), v = s*D*y/(z+D).
  ProjectionMatrix P;
  const double sd = p.detector_scale * p.source_distance;
  P.P << sd, 0, 0, 0, 0, sd, 0, 0, 0, 0, 1, p.source_distance;
  return P;
}

TrigField make_field(Rng& rng, double magnitude, const Eigen::Matrix3Xd& reference) {
  TrigField field;
  if (magnitude <= 0 || reference.cols() == 0) return field;
  for (int k = 0; k < 3; ++k) {
    TrigField::Wave w;
    w.amplitude = Eigen::Vector3d(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
    Eigen::Vector3d dir(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
    if (dir.norm() < 1e-6) dir = Eigen::Vector3d::UnitY();
    w.direction = dir.normalized();
    w.wavelength = rng.uniform(70, 140);
    w.phase = rng.uniform(0, 2 * kPi);
    field.waves.push_back(w);
  }
  double max_norm = 0;
  for (Eigen::Index i = 0; i < reference.cols(); ++i) {
    max_norm = std::max(max_norm, field.eval(Eigen::Vector3d(reference.col(i))).norm());
  }
  if (max_norm > 1e-12) {
    for (auto& w : field.waves) w.amplitude *= magnitude / max_norm;
  }
  return field;
}

}  // namespace

Eigen::Vector3d TrigField::eval(const Eigen::Vector3d& p) const {
  Eigen::Vector3d d = Eigen::Vector3d::Zero();
  for (const auto& w : waves) {
    d += w.amplitude * std::sin(2 * kPi * p.dot(w.direction) / w.wavelength + w.phase);
  }
  return d;
}

Eigen::Matrix3Xd TrigField::eval_all(const Eigen::MatrixXd& pts) const {
  Eigen::Matrix3Xd out(3, pts.cols());
  for (Eigen::Index i = 0; i < pts.cols(); ++i) out.col(i) = eval(Eigen::Vector3d(pts.col(i)));
  return out;
}

std::vector<Eigen::MatrixXd> SyntheticCase::truth_polylines_3d() const {
  std::vector<Eigen::MatrixXd> polys;
  for (const auto& path : paths_3d) {
    Eigen::MatrixXd poly(3, path.size());
    for (size_t k = 0; k < path.size(); ++k) poly.col(static_cast<long>(k)) = deformed.col(path[k]);
    polys.push_back(std::move(poly));
  }
  return polys;
}

namespace {

// Ground-truth warp: displace each path by the smooth field, then slide the
// nodes back along the displaced polyline to their original relative arc
// positions. Vessels bend rather than stretch, so node spacing along each
// path is preserved up to the path's (small) net length change, and depth
// bending stays recoverable through the length term.
Eigen::Matrix3Xd quasi_isometric_deform(const Eigen::MatrixXd& nodes,
                                        const std::vector<std::vector<int>>& paths,
                                        const TrigField& field) {
  Eigen::Matrix3Xd out = nodes + field.eval_all(nodes);
  for (const auto& path : paths) {
    const size_t n = path.size();
    if (n < 3) continue;
    std::vector<Eigen::Vector3d> moved(n);
    for (size_t k = 0; k < n; ++k) moved[k] = nodes.col(path[k]) + field.eval(nodes.col(path[k]));
    std::vector<double> rest(n, 0.0), bent(n, 0.0);
    for (size_t k = 1; k < n; ++k) {
      rest[k] = rest[k - 1] + (nodes.col(path[k]) - nodes.col(path[k - 1])).norm();
      bent[k] = bent[k - 1] + (moved[k] - moved[k - 1]).norm();
    }
    if (rest.back() <= 0 || bent.back() <= 0) continue;
    const double scale = bent.back() / rest.back();
    size_t seg = 0;
    for (size_t k = 1; k + 1 < n; ++k) {
      const double target = rest[k] * scale;
      while (seg + 2 < n && bent[seg + 1] < target) ++seg;
      const double span = bent[seg + 1] - bent[seg];
      const double t = span > 0 ? (target - bent[seg]) / span : 0.0;
      out.col(path[k]) = moved[seg] + t * (moved[seg + 1] - moved[seg]);
    }
    out.col(path.front()) = moved.front();
    out.col(path.back()) = moved.back();
  }
  return out;
}

}  // namespace

SkeletonPointSet regrid_2d(const Eigen::Matrix2Xd& pts) {
  if (pts.cols() == 0) throw Error(errc::empty_input, "no points to re-grid");
  std::map<std::pair<long long, long long>, bool> seen;
  std::vector<Eigen::Vector2d> unique_px;
  for (Eigen::Index i = 0; i < pts.cols(); ++i) {
    const long long x = std::llround(pts(0, i));
    const long long y = std::llround(pts(1, i));
    if (seen.emplace(std::make_pair(x, y), true).second) {
      unique_px.emplace_back(static_cast<double>(x), static_cast<double>(y));
    }
  }
  Eigen::MatrixXd mat(2, unique_px.size());
  for (size_t i = 0; i < unique_px.size(); ++i) mat.col(static_cast<long>(i)) = unique_px[i];
  const SkeletonPointSet rounded = make_point_set(mat);
  long long origin[2];
  const Mask2D mask = mask_from_points(rounded, origin);
  SkeletonPointSet thinned = thin_mask_2d(mask);
  thinned.points.row(0).array() += static_cast<double>(origin[0]);
  thinned.points.row(1).array() += static_cast<double>(origin[1]);
  return thinned;
}

Eigen::Matrix2Xd apply_inplane(const Eigen::Matrix2Xd& pts, double tx, double ty,
                               double theta_deg, const Eigen::Vector2d& pivot) {
  const double theta = theta_deg * kPi / 180.0;
  Eigen::Matrix2d R;
  R << std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta);
  Eigen::Matrix2Xd out = R * (pts.colwise() - pivot);
  out.colwise() += pivot + Eigen::Vector2d(tx, ty);
  return out;
}

namespace {

SyntheticCase generate_case(std::uint64_t anatomy_seed, std::uint64_t state_seed,
                            std::uint64_t deform_seed, const SyntheticParams& params) {
  if (params.trunk_len < 20 || params.upper_len < 12 || params.renal_len < 12 ||
      params.iliac_len < 12) {
    throw Error(errc::invalid_params, "anatomy segments too short");
  }
  if (params.spur_count < 0 || params.deform_mm < 0 || params.state_mm < 0 ||
      params.detector_scale <= 0 || params.source_distance <= 0) {
    throw Error(errc::invalid_params, "negative magnitude or scale");
  }

  Rng rng(anatomy_seed);
  auto chains = build_anatomy(params, rng);

  // Optional pre-operative shape state: displace the anatomy smoothly and
  // re-rasterize each chain.
  if (params.state_mm > 0) {
    Eigen::Matrix3Xd all(3, 0);
    for (const auto& c : chains) {
      const Eigen::Index base = all.cols();
      all.conservativeResize(3, base + static_cast<Eigen::Index>(c.size()));
      for (size_t k = 0; k < c.size(); ++k) all.col(base + static_cast<long>(k)) = c[k];
    }
    Rng state_rng(state_seed);
    const TrigField state = make_field(state_rng, params.state_mm, all);
    for (auto& c : chains) c = rasterize_chain(bend_chain(c, state));
  } else {
    for (auto& c : chains) c = rasterize_chain(c);
  }

  // Noise spurs attach to the final trunk voxels so their base geometry is
  // exact regardless of the shape state.
  {
    const auto spurs = make_spurs(chains.front(), params, rng);
    chains.insert(chains.end(), spurs.begin(), spurs.end());
  }

  // Deduplicate voxels across chains (junctions are shared by construction).
  SyntheticCase out;
  out.params = params;
  std::map<VoxelKey, int> voxel_index;
  std::vector<Eigen::Vector3d> nodes;
  for (const auto& c : chains) {
    std::vector<int> path;
    for (const auto& v : c) {
      VoxelKey key{static_cast<long long>(v.x()), static_cast<long long>(v.y()),
                   static_cast<long long>(v.z())};
      auto [it, inserted] = voxel_index.emplace(key, static_cast<int>(nodes.size()));
      if (inserted) nodes.push_back(v);
      if (path.empty() || path.back() != it->second) path.push_back(it->second);
    }
    out.paths_3d.push_back(std::move(path));
  }
  Eigen::MatrixXd mat(3, nodes.size());
  for (size_t i = 0; i < nodes.size(); ++i) mat.col(static_cast<long>(i)) = nodes[i];
  out.skeleton_3d = make_point_set(mat);

  Rng deform_rng(deform_seed);
  out.deformation = make_field(deform_rng, params.deform_mm, out.skeleton_3d.points);
  out.deformed = quasi_isometric_deform(out.skeleton_3d.points, out.paths_3d, out.deformation);
  out.projection = cone_beam_projection(params);
  out.tx = params.tx;
  out.ty = params.ty;
  out.theta_deg = params.theta_deg;

  out.projected_deformed = project(out.projection, out.deformed_nodes());
  Eigen::Matrix2Xd transformed = out.projected_deformed;
  if (out.tx != 0 || out.ty != 0 || out.theta_deg != 0) {
    const Eigen::Vector2d pivot = out.projected_deformed.rowwise().mean();
    transformed = apply_inplane(out.projected_deformed, out.tx, out.ty, out.theta_deg, pivot);
  }
  out.skeleton_2d = regrid_2d(transformed);
  return out;
}

}  // namespace

SyntheticCase generate_synthetic_aaa(std::uint64_t seed, const SyntheticParams& params) {
  SyntheticCase c = generate_case(mix_seed(seed, 0xA1), mix_seed(seed, 0xB2),
                                  mix_seed(seed, 0xC3), params);
  c.id = "case0";
  return c;
}

std::vector<SyntheticCase> generate_case_family(std::uint64_t seed, int count,
                                                const SyntheticParams& params) {
  if (count < 1) throw Error(errc::invalid_params, "case count must be >= 1");
  std::vector<SyntheticCase> cases;
  Rng rng(mix_seed(seed, 0xD4));
  const std::uint64_t anatomy_seed = mix_seed(seed, 0xA1);
  const double state_max = params.state_mm > 0 ? params.state_mm : 4.5;
  for (int i = 0; i < count; ++i) {
    SyntheticParams p = params;
    // One anatomy, distinct smooth shape states and intra-operative fields.
    p.state_mm = (i == 0) ? 0.0 : rng.uniform(1.5, state_max);
    p.deform_mm = params.deform_mm * rng.uniform(0.7, 1.2);
    SyntheticCase c = generate_case(anatomy_seed, mix_seed(seed, 0x100 + i),
                                    mix_seed(seed, 0x200 + i), p);
    c.id = "case" + std::to_string(i);
    cases.push_back(std::move(c));
  }
  return cases;
}

SyntheticCase with_inplane_transform(const SyntheticCase& base, double tx, double ty,
                                     double theta_deg) {
  SyntheticCase out = base;
  out.tx = tx;
  out.ty = ty;
  out.theta_deg = theta_deg;
  const Eigen::Vector2d pivot = base.projected_deformed.rowwise().mean();
  out.skeleton_2d = regrid_2d(apply_inplane(base.projected_deformed, tx, ty, theta_deg, pivot));
  return out;
}

}  // namespace vesselreg
