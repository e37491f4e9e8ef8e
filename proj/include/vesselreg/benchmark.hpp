#pragma once

#include <optional>
#include <string>
#include <vector>

#include "vesselreg/deformation.hpp"
#include "vesselreg/metrics.hpp"
#include "vesselreg/synthetic.hpp"

namespace vesselreg {

struct OverlayData {
  std::vector<Eigen::MatrixXd> preop;       // projected pre-aligned skeleton
  std::vector<Eigen::MatrixXd> intraop;     // 2D skeleton
  std::vector<Eigen::MatrixXd> prediction;  // projected deformed skeleton
};

struct MetricsReport {
  std::string case_id;
  std::string method = "proposed";
  int n2 = 0, n3 = 0;
  double mean_2d = 0, std_2d = 0;
  std::optional<double> mean_3d, std_3d;
  double sv_2d = 0;
  std::optional<double> sv_3d;
  double runtime_ms = 0;
  std::map<std::string, double> stage_ms;
  int iterations = 0;
  double final_energy = 0;
  double length_change = 0;  // relative change of total 3D skeleton length
  bool failed = false;
  std::string error;
  std::optional<OverlayData> overlay;
};

struct BenchmarkConfig {
  int num_cases = 5;
  std::uint64_t seed = 7;
  SyntheticParams params;
  std::vector<double> sweep_translations_px;  // per-case self problems
  std::vector<double> sweep_rotations_deg;
  RunParams reg;
  bool prealign = true;
  int threads = 0;  // 0: VESSELREG_THREADS, then hardware concurrency
  bool keep_overlays = false;
};

// Register one pre-operative skeleton against one intra-operative case and
// collect the distance metrics against its ground truth.
MetricsReport evaluate_pair(const std::string& id, const SkeletonPointSet& preop3d,
                            const SyntheticCase& intraop, const RunParams& params, bool prealign,
                            bool keep_overlay);

// Cross-pair the family cases (each pre-op skeleton against every other 2D
// skeleton) plus optional per-case in-plane transform sweeps. Per-case
// failures are recorded and the run continues. Reports come back sorted by
// case id.
std::vector<MetricsReport> run_benchmark(const BenchmarkConfig& config);

int resolve_thread_count(int requested, int jobs);

}  // namespace vesselreg
