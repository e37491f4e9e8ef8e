#include "vesselreg/deformation.hpp"

#include <algorithm>
#include <chrono>
#include <deque>
#include <set>

#include "vesselreg/tps.hpp"

namespace vesselreg {

namespace {

Eigen::Matrix4Xd homogeneous(const Eigen::Matrix3Xd& Y) {
  Eigen::Matrix4Xd Yh(4, Y.cols());
  Yh.topRows<3>() = Y;
  Yh.row(3).setOnes();
  return Yh;
}

class StageTimer {
public:
  explicit StageTimer(std::map<std::string, double>& sink) : sink_(sink) {}
  void start() { t0_ = std::chrono::steady_clock::now(); }
  void stop(const std::string& stage) {
    const auto t1 = std::chrono::steady_clock::now();
    sink_[stage] = std::chrono::duration<double, std::milli>(t1 - t0_).count();
    t0_ = t1;
  }

private:
  std::map<std::string, double>& sink_;
  std::chrono::steady_clock::time_point t0_;
};

}  // namespace

double data_term(const Eigen::Matrix3Xd& phi, const Eigen::Matrix2Xd& X,
                 const AssignmentMatrix& M, const Eigen::Matrix3Xd& Y,
                 const ProjectionMatrix& P) {
  const Eigen::Matrix3Xd deformed = Y + phi;
  const Eigen::Matrix2Xd proj = project(P, deformed);
  double sum = 0;
  for (int j = 0; j < M.cols(); ++j) {
    if (!M.assigned(j)) continue;
    sum += (M.target(X, j) - proj.col(j)).squaredNorm();
  }
  return sum / static_cast<double>(M.cols());
}

double length_term(const Eigen::Matrix3Xd& phi, const Eigen::Matrix3Xd& Y,
                   const std::vector<std::pair<int, int>>& edges) {
  if (edges.empty()) return 0;
  double sum = 0;
  for (const auto& [i, j] : edges) {
    const double rest = (Y.col(i) - Y.col(j)).norm();
    const double now = (Y.col(i) + phi.col(i) - Y.col(j) - phi.col(j)).norm();
    sum += (now - rest) * (now - rest);
  }
  return sum / static_cast<double>(edges.size());
}

double smoothness_term(const Eigen::Matrix3Xd& phi,
                       const std::vector<std::pair<int, int>>& edges) {
  if (edges.empty()) return 0;
  double sum = 0;
  for (const auto& [i, j] : edges) sum += (phi.col(i) - phi.col(j)).squaredNorm();
  return sum / static_cast<double>(edges.size());
}

EnergyModel::EnergyModel(Eigen::Matrix2Xd X, AssignmentMatrix M, Eigen::Matrix3Xd Y,
                         ProjectionMatrix P, std::vector<std::pair<int, int>> edges, double alpha,
                         double beta)
    : X_(std::move(X)),
      M_(std::move(M)),
      Y_(std::move(Y)),
      P_(P),
      edges_(std::move(edges)),
      alpha_(alpha),
      beta_(beta) {
  assigned_ = M_.assigned_columns();
  targets_.resize(2, static_cast<int>(assigned_.size()));
  for (size_t k = 0; k < assigned_.size(); ++k) {
    targets_.col(static_cast<int>(k)) = M_.target(X_, assigned_[k]);
  }
  jac_core_ = projection_jacobian_core(P_);
}

Eigen::Matrix3Xd EnergyModel::displacement_field(const Eigen::VectorXd& vars) const {
  Eigen::Matrix3Xd phi = Eigen::Matrix3Xd::Zero(3, Y_.cols());
  for (size_t k = 0; k < assigned_.size(); ++k) {
    phi.col(assigned_[k]) = vars.segment<3>(3 * static_cast<Eigen::Index>(k));
  }
  return phi;
}

Eigen::VectorXd EnergyModel::pack(const Eigen::Matrix3Xd& phi) const {
  Eigen::VectorXd vars(num_vars());
  for (size_t k = 0; k < assigned_.size(); ++k) {
    vars.segment<3>(3 * static_cast<Eigen::Index>(k)) = phi.col(assigned_[k]);
  }
  return vars;
}

EnergyTerms EnergyModel::evaluate(const Eigen::VectorXd& vars, Eigen::VectorXd* gradient) const {
  const Eigen::Index n3 = Y_.cols();
  const Eigen::Matrix3Xd phi = displacement_field(vars);
  const Eigen::Matrix3Xd deformed = Y_ + phi;
  const Eigen::Matrix4Xd Yh = homogeneous(deformed);
  const Eigen::RowVectorXd den = projection_denominators(P_, deformed);

  Eigen::Matrix2Xd proj(2, n3);
  proj.row(0) = (P_.row(0) * Yh).cwiseQuotient(den);
  proj.row(1) = (P_.row(1) * Yh).cwiseQuotient(den);

  // Residuals X*M - f(Y~); columns of unassigned nodes do not enter S_D.
  Eigen::Matrix2Xd resid = Eigen::Matrix2Xd::Zero(2, n3);
  double data = 0;
  for (size_t k = 0; k < assigned_.size(); ++k) {
    const int j = assigned_[k];
    resid.col(j) = targets_.col(static_cast<int>(k)) - proj.col(j);
    data += resid.col(j).squaredNorm();
  }
  data /= static_cast<double>(n3);

  EnergyTerms terms;
  terms.data = data;
  terms.length = length_term(phi, Y_, edges_);
  terms.smooth = smoothness_term(phi, edges_);
  terms.total = terms.data + alpha_ * terms.length + beta_ * terms.smooth;
  if (!gradient) return terms;

  // Gradient of the data term via the 6-row pairing: D stacks the residual
  // against the six derivative rows of the projection; row sums per spatial
  // axis divided by the squared denominators give dS_D/dphi.
  const Eigen::Matrix<double, 6, Eigen::Dynamic> JY = jac_core_ * Yh;
  Eigen::Matrix<double, 6, Eigen::Dynamic> D(6, n3);
  const double scale = -2.0 / static_cast<double>(n3);
  for (int k = 0; k < 3; ++k) {
    D.row(2 * k) = scale * resid.row(0).cwiseProduct(JY.row(2 * k));
    D.row(2 * k + 1) = scale * resid.row(1).cwiseProduct(JY.row(2 * k + 1));
  }
  const Eigen::RowVectorXd den2 = den.cwiseProduct(den);
  Eigen::Matrix3Xd grad = Eigen::Matrix3Xd::Zero(3, n3);
  grad.row(0) = (D.row(0) + D.row(1)).cwiseQuotient(den2);
  grad.row(1) = (D.row(2) + D.row(3)).cwiseQuotient(den2);
  grad.row(2) = (D.row(4) + D.row(5)).cwiseQuotient(den2);

  if (!edges_.empty() && (alpha_ != 0 || beta_ != 0)) {
    const double edge_scale = 1.0 / static_cast<double>(edges_.size());
    for (const auto& [i, j] : edges_) {
      const Eigen::Vector3d diff = deformed.col(i) - deformed.col(j);
      const double now = diff.norm();
      const double rest = (Y_.col(i) - Y_.col(j)).norm();
      if (alpha_ != 0 && now > 1e-12) {
        const Eigen::Vector3d g = (2.0 * edge_scale * alpha_ * (now - rest) / now) * diff;
        grad.col(i) += g;
        grad.col(j) -= g;
      }
      if (beta_ != 0) {
        const Eigen::Vector3d g =
            (2.0 * edge_scale * beta_) * (phi.col(i) - phi.col(j));
        grad.col(i) += g;
        grad.col(j) -= g;
      }
    }
  }

  gradient->resize(num_vars());
  for (size_t k = 0; k < assigned_.size(); ++k) {
    gradient->segment<3>(3 * static_cast<Eigen::Index>(k)) = grad.col(assigned_[k]);
  }
  return terms;
}

MinimizeResult minimize(const EnergyModel& model, const EnergyConfig& config) {
  MinimizeResult result;
  const int n = model.num_vars();
  result.vars = Eigen::VectorXd::Zero(n);
  if (n == 0) {
    result.converged = true;
    return result;
  }

  Eigen::VectorXd x = result.vars;
  Eigen::VectorXd g(n);
  EnergyTerms terms = model.evaluate(x, &g);
  result.trace.push_back(terms);
  const double tol = config.grad_tol * (g.norm() + 1.0);

  Eigen::MatrixXd H = Eigen::MatrixXd::Identity(n, n);
  bool first_update = true;

  for (int iter = 0; iter < config.max_iters; ++iter) {
    if (g.norm() < tol) {
      result.converged = true;
      break;
    }
    Eigen::VectorXd direction = -(H * g);
    double slope = direction.dot(g);
    if (slope >= 0) {  // reset on a non-descent direction
      H.setIdentity();
      direction = -g;
      slope = -g.squaredNorm();
      first_update = true;
    }

    // Backtracking Armijo line search; a long backtrack means the curvature
    // model went stale, so the next iteration restarts from identity.
    double step = 1.0;
    bool accepted = false;
    int halvings = 0;
    EnergyTerms next_terms;
    Eigen::VectorXd x_next, g_next(n);
    for (; halvings < 30; ++halvings) {
      x_next = x + step * direction;
      try {
        next_terms = model.evaluate(x_next, &g_next);
      } catch (const Error&) {
        step *= 0.5;  // stepped through a depth singularity
        continue;
      }
      if (next_terms.total <= terms.total + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      result.line_search_failed = true;
      break;
    }
    if (halvings > 15) {
      H.setIdentity();
      first_update = true;
    }

    const Eigen::VectorXd s = x_next - x;
    const Eigen::VectorXd y = g_next - g;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      if (first_update) {
        H *= sy / y.squaredNorm();
        first_update = false;
      }
      const Eigen::VectorXd Hy = H * y;
      const double yHy = y.dot(Hy);
      const double rho = 1.0 / sy;
      // BFGS inverse update expanded into rank-one pieces.
      H.noalias() += (rho * rho * yHy + rho) * (s * s.transpose());
      H.noalias() -= rho * (Hy * s.transpose() + s * Hy.transpose());
    }

    x = x_next;
    g = g_next;
    terms = next_terms;
    result.trace.push_back(terms);
    result.iterations = iter + 1;
  }

  result.vars = x;
  if (!result.converged && g.norm() < tol) result.converged = true;
  return result;
}

namespace {

// TPS controls for a component of unassigned nodes: assigned nodes of every
// branch/trunk adjoining the component, topped up with the nearest trunk and
// then nearest assigned nodes when fewer than 4.
std::vector<int> controls_for_component(
    const std::vector<int>& component, const SkeletonGraph& graph,
    const std::vector<char>& assigned_mask, const std::vector<std::vector<int>>& paths,
    const std::vector<char>& path_is_trunk, const std::vector<int>& node_to_path,
    const Eigen::Matrix3Xd& positions, const std::vector<int>& all_assigned) {
  std::set<int> path_ids;
  for (int u : component) {
    if (node_to_path[u] >= 0) path_ids.insert(node_to_path[u]);
    for (int v : graph.neighbors[u]) {
      if (assigned_mask[v] && node_to_path[v] >= 0) path_ids.insert(node_to_path[v]);
    }
  }
  std::set<int> controls;
  for (int pid : path_ids) {
    for (int u : paths[pid]) {
      if (assigned_mask[u]) controls.insert(u);
    }
  }

  Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
  for (int u : component) centroid += positions.col(u);
  centroid /= static_cast<double>(component.size());

  if (controls.size() < 4) {
    // Nearest trunk by assigned-node distance to the component centroid.
    int best_trunk = -1;
    double best_d = std::numeric_limits<double>::max();
    for (size_t pid = 0; pid < paths.size(); ++pid) {
      if (!path_is_trunk[pid]) continue;
      for (int u : paths[pid]) {
        if (!assigned_mask[u]) continue;
        const double d = (positions.col(u) - centroid).squaredNorm();
        if (d < best_d) {
          best_d = d;
          best_trunk = static_cast<int>(pid);
        }
      }
    }
    if (best_trunk >= 0) {
      for (int u : paths[best_trunk]) {
        if (assigned_mask[u]) controls.insert(u);
      }
    }
  }
  if (controls.size() < 4) {
    std::vector<int> by_distance(all_assigned);
    std::stable_sort(by_distance.begin(), by_distance.end(), [&](int a, int b) {
      return (positions.col(a) - centroid).squaredNorm() <
             (positions.col(b) - centroid).squaredNorm();
    });
    for (int u : by_distance) {
      controls.insert(u);
      if (controls.size() >= 4) break;
    }
  }
  return {controls.begin(), controls.end()};
}

}  // namespace

RegistrationResult register_skeletons(const SkeletonPointSet& skeleton2d,
                                      const SkeletonPointSet& skeleton3d,
                                      const ProjectionMatrix& P, const RigidTransform3D& rigid,
                                      const RunParams& params) {
  RegistrationResult result;
  StageTimer timer(result.timing_ms);
  auto run_stage = [&](const char* stage, auto&& fn) {
    timer.start();
    try {
      fn();
    } catch (const Error& e) {
      throw Error(e.code(), stage, e.what());
    }
    timer.stop(stage);
  };

  result.rigid = rigid;

  run_stage("graph3d", [&] { result.graph3 = build_graph(skeleton3d); });
  run_stage("graph2d", [&] { result.graph2 = build_graph(skeleton2d); });

  const SkeletonGraph& g3 = result.graph3;
  const SkeletonGraph& g2 = result.graph2;
  const Eigen::Matrix2Xd X = g2.points.points;
  const Eigen::Matrix3Xd Y = rigid.apply(g3.points.points);

  run_stage("decompose3d",
            [&] { result.decomp3 = classify_nodes(g3, params.decomposition); });
  run_stage("decompose2d",
            [&] { result.decomp2 = classify_nodes(g2, params.decomposition); });

  Eigen::Matrix2Xd projected;
  run_stage("matching", [&] {
    projected = project(P, Y);
    result.matching = match_trunks(result.decomp2, result.decomp3, X, projected);
    match_branches(result.decomp2, result.decomp3, X, projected, params.tangent, result.matching);
  });

  run_stage("assignment", [&] {
    AssignmentMatrix M(g2.size(), g3.size());
    for (const auto& pair : result.matching.branch_pairs) {
      assign_branch_nodes(pair.path2, pair.path3, X, projected, M);
    }
    for (const auto& pair : result.matching.trunk_pairs) {
      assign_trunk_nodes(pair.path2, pair.path3, X, Y, M);
    }
    result.assignment = std::move(M);
  });

  MinimizeResult opt;
  run_stage("optimize", [&] {
    if (result.assignment.assigned_columns().empty()) {
      throw Error(errc::count_mismatch, "no 3D node received an assignment");
    }
    EnergyModel model(X, result.assignment, Y, P, g3.edges, params.energy.alpha,
                      params.energy.beta);
    opt = minimize(model, params.energy);
    result.iterations = opt.iterations;
    result.converged = opt.converged;
    result.line_search_failed = opt.line_search_failed;
    result.energy_trace = std::move(opt.trace);
  });

  Eigen::Matrix3Xd phi;
  run_stage("tps", [&] {
    EnergyModel model(X, result.assignment, Y, P, g3.edges, params.energy.alpha,
                      params.energy.beta);
    phi = model.displacement_field(opt.vars);
    std::vector<char> assigned_mask(g3.size(), 0);
    for (int j : result.assignment.assigned_columns()) assigned_mask[j] = 1;

    // Branch/trunk membership per node (branches first, trunks after, in
    // decomposition order; endpoints belong to the first path listing them).
    std::vector<std::vector<int>> paths;
    std::vector<char> path_is_trunk;
    for (const auto& b : result.decomp3.branches) {
      paths.push_back(b);
      path_is_trunk.push_back(0);
    }
    for (const auto& t : result.decomp3.trunks) {
      paths.push_back(t);
      path_is_trunk.push_back(1);
    }
    std::vector<int> node_to_path(g3.size(), -1);
    for (size_t pid = 0; pid < paths.size(); ++pid) {
      for (int u : paths[pid]) {
        if (node_to_path[u] < 0) node_to_path[u] = static_cast<int>(pid);
      }
    }

    const std::vector<int> all_assigned = result.assignment.assigned_columns();
    // Connected components of the unassigned subgraph get a shared warp.
    std::vector<char> visited(g3.size(), 0);
    for (int start = 0; start < g3.size(); ++start) {
      if (assigned_mask[start] || visited[start]) continue;
      std::vector<int> component;
      std::deque<int> queue{start};
      visited[start] = 1;
      while (!queue.empty()) {
        const int u = queue.front();
        queue.pop_front();
        component.push_back(u);
        for (int v : g3.neighbors[u]) {
          if (!assigned_mask[v] && !visited[v]) {
            visited[v] = 1;
            queue.push_back(v);
          }
        }
      }
      const auto controls = controls_for_component(component, g3, assigned_mask, paths,
                                                   path_is_trunk, node_to_path, Y, all_assigned);
      Eigen::Matrix3Xd src(3, controls.size()), dst(3, controls.size());
      for (size_t k = 0; k < controls.size(); ++k) {
        src.col(k) = Y.col(controls[k]);
        dst.col(k) = Y.col(controls[k]) + phi.col(controls[k]);
      }
      Eigen::Matrix3Xd queries(3, component.size());
      for (size_t k = 0; k < component.size(); ++k) queries.col(k) = Y.col(component[k]);
      const Eigen::Matrix3Xd warped = tps_warp_3d(src, dst, queries);
      for (size_t k = 0; k < component.size(); ++k) {
        phi.col(component[k]) = warped.col(k) - Y.col(component[k]);
      }
    }

    // Spread back to the original input indexing. Points outside the largest
    // component take the warp of the full control set.
    const int n_input = skeleton3d.size();
    result.displacements = Eigen::Matrix3Xd::Zero(3, n_input);
    result.prealigned = rigid.apply(skeleton3d.points);
    std::vector<char> covered(n_input, 0);
    for (int i = 0; i < g3.size(); ++i) {
      result.displacements.col(g3.original_indices[i]) = phi.col(i);
      covered[g3.original_indices[i]] = 1;
    }
    std::vector<int> missing;
    for (int i = 0; i < n_input; ++i) {
      if (!covered[i]) missing.push_back(i);
    }
    if (!missing.empty()) {
      Eigen::Matrix3Xd src(3, all_assigned.size()), dst(3, all_assigned.size());
      for (size_t k = 0; k < all_assigned.size(); ++k) {
        src.col(k) = Y.col(all_assigned[k]);
        dst.col(k) = Y.col(all_assigned[k]) + phi.col(all_assigned[k]);
      }
      Eigen::Matrix3Xd queries(3, missing.size());
      for (size_t k = 0; k < missing.size(); ++k) {
        queries.col(k) = result.prealigned.col(missing[k]);
      }
      const Eigen::Matrix3Xd warped = tps_warp_3d(src, dst, queries);
      for (size_t k = 0; k < missing.size(); ++k) {
        result.displacements.col(missing[k]) = warped.col(k) - queries.col(k);
        result.off_component_nodes.push_back(missing[k]);
      }
    }
    for (int u : result.decomp3.deleted_nodes) {
      result.deleted_nodes.push_back(g3.original_indices[u]);
    }
    for (int j = 0; j < g3.size(); ++j) {
      if (!assigned_mask[j]) result.unassigned_nodes.push_back(g3.original_indices[j]);
    }
  });

  return result;
}

}  // namespace vesselreg
