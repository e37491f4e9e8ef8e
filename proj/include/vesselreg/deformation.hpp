#pragma once

#include <Eigen/Dense>
#include <map>
#include <string>
#include <vector>

#include "vesselreg/correspondence.hpp"
#include "vesselreg/decomposition.hpp"
#include "vesselreg/projection.hpp"
#include "vesselreg/skeleton.hpp"

namespace vesselreg {

struct EnergyConfig {
  double alpha = 500;     // length preservation weight
  double beta = 10;       // smoothness weight
  double grad_tol = 1e-6; // relative: threshold = grad_tol * (initial gradient norm + 1)
  int max_iters = 500;
};

struct EnergyTerms {
  double total = 0, data = 0, length = 0, smooth = 0;
};

// Per-node displacements; unassigned entries are only ever written by the
// TPS post-deformation step.
struct DisplacementField {
  Eigen::Matrix3Xd phi;
  std::vector<char> assigned;
};

double data_term(const Eigen::Matrix3Xd& phi, const Eigen::Matrix2Xd& X,
                 const AssignmentMatrix& M, const Eigen::Matrix3Xd& Y,
                 const ProjectionMatrix& P);
double length_term(const Eigen::Matrix3Xd& phi, const Eigen::Matrix3Xd& Y,
                   const std::vector<std::pair<int, int>>& edges);
double smoothness_term(const Eigen::Matrix3Xd& phi,
                       const std::vector<std::pair<int, int>>& edges);

// Energy over the displacements of assigned nodes; unassigned nodes stay at
// rest during optimization. Variables are packed (x, y, z) per assigned node.
class EnergyModel {
public:
  EnergyModel(Eigen::Matrix2Xd X, AssignmentMatrix M, Eigen::Matrix3Xd Y, ProjectionMatrix P,
              std::vector<std::pair<int, int>> edges, double alpha, double beta);

  int num_vars() const { return 3 * static_cast<int>(assigned_.size()); }
  const std::vector<int>& assigned_nodes() const { return assigned_; }

  EnergyTerms evaluate(const Eigen::VectorXd& vars, Eigen::VectorXd* gradient) const;

  Eigen::Matrix3Xd displacement_field(const Eigen::VectorXd& vars) const;
  Eigen::VectorXd pack(const Eigen::Matrix3Xd& phi) const;

  const Eigen::Matrix3Xd& rest_points() const { return Y_; }
  const AssignmentMatrix& assignment() const { return M_; }

private:
  Eigen::Matrix2Xd X_;
  AssignmentMatrix M_;
  Eigen::Matrix3Xd Y_;
  ProjectionMatrix P_;
  std::vector<std::pair<int, int>> edges_;
  double alpha_, beta_;
  std::vector<int> assigned_;
  Eigen::Matrix2Xd targets_;  // X * m_j per assigned column
  Eigen::Matrix<double, 6, 4> jac_core_;
};

struct MinimizeResult {
  Eigen::VectorXd vars;
  int iterations = 0;
  bool converged = false;
  bool line_search_failed = false;
  std::vector<EnergyTerms> trace;  // accepted iterates, starting at the initial point
};

// BFGS with backtracking line search (sufficient decrease); accepted iterates
// are monotonically non-increasing in energy.
MinimizeResult minimize(const EnergyModel& model, const EnergyConfig& config);

struct RunParams {
  DecompositionConfig decomposition;
  TangentConfig tangent;
  EnergyConfig energy;
};

struct RegistrationResult {
  Eigen::Matrix3Xd displacements;  // one column per input 3D point
  Eigen::Matrix3Xd prealigned;     // R * Y + T, per input point
  std::vector<int> deleted_nodes;  // input-point indices of deleted short branches
  std::vector<int> unassigned_nodes;
  std::vector<int> off_component_nodes;
  int iterations = 0;
  bool converged = false;
  bool line_search_failed = false;
  std::vector<EnergyTerms> energy_trace;
  std::map<std::string, double> timing_ms;
  RigidTransform3D rigid;
  // Diagnostics retained for reporting and tests.
  SkeletonGraph graph2, graph3;
  NodeDecomposition decomp2, decomp3;
  BranchTrunkMatching matching;
  AssignmentMatrix assignment;

  Eigen::Matrix3Xd deformed() const { return prealigned + displacements; }
};

// Full deformable 2D/3D registration: graph construction, classification,
// matching, soft assignment, quasi-Newton deformation of assigned nodes and
// branch-wise TPS for the rest. R, T are applied to Y up front.
RegistrationResult register_skeletons(const SkeletonPointSet& skeleton2d,
                                      const SkeletonPointSet& skeleton3d,
                                      const ProjectionMatrix& P, const RigidTransform3D& rigid,
                                      const RunParams& params);

}  // namespace vesselreg
