#include "vesselreg/correspondence.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

namespace vesselreg {

void AssignmentMatrix::set_column(int col, std::vector<std::pair<int, double>> entries) {
  std::erase_if(entries, [](const auto& e) { return e.second <= 1e-15; });
  columns_[col] = std::move(entries);
}

double AssignmentMatrix::column_sum(int col) const {
  double s = 0;
  for (const auto& [row, w] : columns_[col]) s += w;
  return s;
}

std::vector<int> AssignmentMatrix::assigned_columns() const {
  std::vector<int> out;
  for (int c = 0; c < cols_; ++c) {
    if (!columns_[c].empty()) out.push_back(c);
  }
  return out;
}

Eigen::Vector2d AssignmentMatrix::target(const Eigen::Matrix2Xd& X, int col) const {
  Eigen::Vector2d t = Eigen::Vector2d::Zero();
  for (const auto& [row, w] : columns_[col]) t += w * X.col(row);
  return t;
}

namespace {

double path_hops(const std::vector<int>& path) { return static_cast<double>(path.size()) - 1.0; }

std::vector<int> ranked_by_length(const std::vector<std::vector<int>>& paths) {
  std::vector<int> order(paths.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    if (paths[a].size() != paths[b].size()) return paths[a].size() > paths[b].size();
    return paths[a].front() < paths[b].front();
  });
  return order;
}

std::vector<double> cumulative_arclength(const std::vector<int>& path, const Eigen::MatrixXd& pts) {
  std::vector<double> s(path.size(), 0.0);
  for (size_t k = 1; k < path.size(); ++k) {
    s[k] = s[k - 1] + (pts.col(path[k]) - pts.col(path[k - 1])).norm();
  }
  return s;
}

// Interpolation weights of Eq.-(4) style bracketing: locate `arc` within the
// cumulative 2D arc lengths and split weight between the bracketing nodes.
// Returns false when `arc` exceeds the path (node stays unassigned).
bool bracket_weights(const std::vector<int>& path2, const std::vector<double>& s2, double arc,
                     std::vector<std::pair<int, double>>& entries) {
  const double total = s2.back();
  if (arc > total) return false;
  // Last i with s2[i] <= arc.
  size_t i = std::upper_bound(s2.begin(), s2.end(), arc) - s2.begin();
  i = (i == 0) ? 0 : i - 1;
  entries.clear();
  if (i + 1 >= path2.size()) {
    entries.emplace_back(path2.back(), 1.0);
    return true;
  }
  const double seg = s2[i + 1] - s2[i];
  double w_next = (arc - s2[i]) / seg;
  w_next = std::clamp(w_next, 0.0, 1.0);
  entries.emplace_back(path2[i], 1.0 - w_next);
  entries.emplace_back(path2[i + 1], w_next);
  return true;
}

struct GroupAssignment {
  std::vector<std::pair<int, int>> pairs;  // (2D branch idx, 3D branch idx)
  double score = 0;
};

// Optimal one-to-one assignment maximizing total similarity, brute force over
// orderings of the larger side (branch groups hold at most a handful).
GroupAssignment best_assignment(const std::vector<int>& side2, const std::vector<int>& side3,
                                const Eigen::MatrixXd& S) {
  GroupAssignment best;
  best.score = -std::numeric_limits<double>::max();
  const size_t m = std::min(side2.size(), side3.size());
  if (m == 0) {
    best.score = 0;
    return best;
  }
  const bool fewer2 = side2.size() <= side3.size();
  std::vector<int> order(fewer2 ? side3 : side2);
  std::sort(order.begin(), order.end());
  do {
    double score = 0;
    std::vector<std::pair<int, int>> pairs;
    pairs.reserve(m);
    for (size_t k = 0; k < m; ++k) {
      const int b2 = fewer2 ? side2[k] : order[k];
      const int b3 = fewer2 ? order[k] : side3[k];
      score += S(b2, b3);
      pairs.emplace_back(b2, b3);
    }
    if (score > best.score + 1e-15) {
      best.score = score;
      best.pairs = std::move(pairs);
    }
  } while (std::next_permutation(order.begin(), order.end()));
  std::sort(best.pairs.begin(), best.pairs.end());
  return best;
}

}  // namespace

BranchTrunkMatching match_trunks(const NodeDecomposition& decomp2,
                                 const NodeDecomposition& decomp3, const Eigen::Matrix2Xd& X,
                                 const Eigen::Matrix2Xd& projected3d) {
  BranchTrunkMatching matching;
  const auto& T2 = decomp2.trunks;
  const auto& T3 = decomp3.trunks;
  const size_t count = std::min(T2.size(), T3.size());
  if (count == 0) return matching;  // NoTrunks: junction pairs come from branches

  const auto order2 = ranked_by_length(T2);
  const auto order3 = ranked_by_length(T3);

  // Each rank pair may be oriented two ways; choose orientations maximizing
  // the number of mutually consistent junction identifications, breaking
  // ties by total projected junction distance.
  const size_t enumerable = std::min<size_t>(count, 16);
  long best_agree = -1;
  double best_dist = 0;
  unsigned best_mask = 0;
  std::vector<std::pair<int, int>> best_pairs;
  for (unsigned mask = 0; mask < (1u << enumerable); ++mask) {
    std::map<int, int> fwd;
    std::map<int, int> rev;
    long agree = 0;
    double dist = 0;
    for (size_t r = 0; r < enumerable; ++r) {
      const auto& t2 = T2[order2[r]];
      const auto& t3 = T3[order3[r]];
      int a3 = t3.front(), b3 = t3.back();
      if (mask & (1u << r)) std::swap(a3, b3);
      const std::pair<int, int> votes[2] = {{t2.front(), a3}, {t2.back(), b3}};
      for (const auto& [j2, j3] : votes) {
        auto itf = fwd.find(j2);
        auto itr = rev.find(j3);
        const bool ok_f = itf == fwd.end() || itf->second == j3;
        const bool ok_r = itr == rev.end() || itr->second == j2;
        if (ok_f && ok_r) {
          fwd[j2] = j3;
          rev[j3] = j2;
          ++agree;
          dist += (X.col(j2) - projected3d.col(j3)).norm();
        }
      }
    }
    if (agree > best_agree || (agree == best_agree && dist < best_dist - 1e-12)) {
      best_agree = agree;
      best_dist = dist;
      best_mask = mask;
      best_pairs.assign(fwd.begin(), fwd.end());
    }
  }

  for (size_t r = 0; r < count; ++r) {
    PathPair pair;
    pair.path2 = T2[order2[r]];
    pair.path3 = T3[order3[r]];
    if (r < enumerable && (best_mask & (1u << r))) {
      std::reverse(pair.path3.begin(), pair.path3.end());
    }
    matching.trunk_pairs.push_back(std::move(pair));
  }
  matching.junction_pairs = std::move(best_pairs);
  return matching;
}

Eigen::VectorXd branch_tangent(const std::vector<int>& branch, const Eigen::MatrixXd& points,
                               const TangentConfig& cfg) {
  if (branch.size() < 2) throw Error(errc::degenerate_branch, "branch has fewer than 2 nodes");
  const int n = static_cast<int>(branch.size());
  const int a = std::min(cfg.start_index, n) - 1;
  const int b = std::min(cfg.end_index, n) - 1;
  const Eigen::VectorXd v = points.col(branch[b]) - points.col(branch[a]);
  const double norm = v.norm();
  if (norm <= 1e-12) {
    throw Error(errc::degenerate_branch, "tangent sample points coincide");
  }
  return v / norm;
}

void match_branches(const NodeDecomposition& decomp2, const NodeDecomposition& decomp3,
                    const Eigen::Matrix2Xd& X, const Eigen::Matrix2Xd& projected3d,
                    const TangentConfig& cfg, BranchTrunkMatching& matching) {
  const auto& B2 = decomp2.branches;
  const auto& B3 = decomp3.branches;
  const int n2 = static_cast<int>(B2.size());
  const int n3 = static_cast<int>(B3.size());

  Eigen::MatrixXd S(n2, n3);
  std::vector<Eigen::Vector2d> t2(n2), t3(n3);
  for (int i = 0; i < n2; ++i) t2[i] = branch_tangent(B2[i], X, cfg);
  for (int j = 0; j < n3; ++j) t3[j] = branch_tangent(B3[j], projected3d, cfg);
  for (int i = 0; i < n2; ++i)
    for (int j = 0; j < n3; ++j) S(i, j) = t2[i].dot(t3[j]);

  std::vector<std::pair<int, int>> chosen;
  const bool induce_junctions = matching.junction_pairs.empty();
  if (induce_junctions) {
    // No trunk-derived junction pairs: one global group.
    std::vector<int> side2(n2), side3(n3);
    std::iota(side2.begin(), side2.end(), 0);
    std::iota(side3.begin(), side3.end(), 0);
    chosen = best_assignment(side2, side3, S).pairs;
  } else {
    std::map<int, int> j2to3;
    for (const auto& [a, b] : matching.junction_pairs) j2to3[a] = b;
    // Group branches by their (matched) junction endpoint.
    std::map<int, std::vector<int>> group2, group3;
    for (int i = 0; i < n2; ++i) {
      auto it = j2to3.find(B2[i].front());
      if (it != j2to3.end()) group2[it->second].push_back(i);
    }
    for (int j = 0; j < n3; ++j) group3[B3[j].front()].push_back(j);
    for (const auto& [j3, side2] : group2) {
      auto it = group3.find(j3);
      if (it == group3.end()) continue;
      const auto ga = best_assignment(side2, it->second, S);
      chosen.insert(chosen.end(), ga.pairs.begin(), ga.pairs.end());
    }
  }

  std::set<int> used2, used3;
  std::map<int, int> fwd, rev;
  for (const auto& [a, b] : matching.junction_pairs) {
    fwd[a] = b;
    rev[b] = a;
  }
  if (induce_junctions) {
    // Keep pairs whose induced junction identifications stay consistent,
    // admitting them in descending similarity.
    std::stable_sort(chosen.begin(), chosen.end(), [&](const auto& a, const auto& b) {
      return S(a.first, a.second) > S(b.first, b.second) + 1e-15;
    });
  }
  auto admit = [&](int i, int j) {
    const int j2 = B2[i].front();
    const int j3 = B3[j].front();
    auto itf = fwd.find(j2);
    auto itr = rev.find(j3);
    const bool ok =
        (itf == fwd.end() || itf->second == j3) && (itr == rev.end() || itr->second == j2);
    if (!ok) return false;
    fwd[j2] = j3;
    rev[j3] = j2;
    used2.insert(i);
    used3.insert(j);
    matching.branch_pairs.push_back({B2[i], B3[j]});
    return true;
  };
  for (const auto& [i, j] : chosen) admit(i, j);

  // Leftover pass: branches whose junctions went unmatched still pair up
  // globally by similarity, as long as they extend the junction map
  // consistently.
  {
    std::vector<std::pair<int, int>> leftovers;
    for (int i = 0; i < n2; ++i) {
      if (used2.count(i)) continue;
      for (int j = 0; j < n3; ++j) {
        if (!used3.count(j)) leftovers.emplace_back(i, j);
      }
    }
    std::stable_sort(leftovers.begin(), leftovers.end(), [&](const auto& a, const auto& b) {
      return S(a.first, a.second) > S(b.first, b.second) + 1e-15;
    });
    for (const auto& [i, j] : leftovers) {
      if (used2.count(i) || used3.count(j)) continue;
      if (S(i, j) <= 0) break;  // never pair opposing tangents
      admit(i, j);
    }
  }

  matching.junction_pairs.assign(fwd.begin(), fwd.end());
  std::stable_sort(matching.branch_pairs.begin(), matching.branch_pairs.end(),
                   [](const PathPair& a, const PathPair& b) {
                     return a.path2.front() < b.path2.front() ||
                            (a.path2.front() == b.path2.front() && a.path2.back() < b.path2.back());
                   });
  for (int i = 0; i < n2; ++i) {
    if (!used2.count(i)) matching.unmatched_branches_2d.push_back(i);
  }
  for (int j = 0; j < n3; ++j) {
    if (!used3.count(j)) matching.unmatched_branches_3d.push_back(j);
  }
}

void assign_branch_nodes(const std::vector<int>& branch2, const std::vector<int>& branch3,
                         const Eigen::Matrix2Xd& X, const Eigen::Matrix2Xd& projected3d,
                         AssignmentMatrix& M) {
  const auto s2 = cumulative_arclength(branch2, X);
  const auto s3 = cumulative_arclength(branch3, projected3d);
  std::vector<std::pair<int, double>> entries;
  for (size_t j = 0; j < branch3.size(); ++j) {
    if (!bracket_weights(branch2, s2, s3[j], entries)) continue;
    M.set_column(branch3[j], entries);
  }
}

void assign_trunk_nodes(const std::vector<int>& trunk2, const std::vector<int>& trunk3,
                        const Eigen::Matrix2Xd& X, const Eigen::Matrix3Xd& Y,
                        AssignmentMatrix& M) {
  const auto s2 = cumulative_arclength(trunk2, X);
  const auto s3 = cumulative_arclength(trunk3, Y);
  const double lambda2 = s2.back();
  const double lambda3 = s3.back();
  if (lambda2 <= 0 || lambda3 <= 0) {
    throw Error(errc::zero_length_trunk, "trunk has zero Euclidean length");
  }
  const double scale = lambda2 / lambda3;
  std::vector<std::pair<int, double>> entries;
  for (size_t j = 0; j < trunk3.size(); ++j) {
    const double arc = std::min(scale * s3[j], lambda2);
    bracket_weights(trunk2, s2, arc, entries);
    M.set_column(trunk3[j], entries);
  }
}

}  // namespace vesselreg
