#include "vesselreg/benchmark.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <thread>

namespace vesselreg {

namespace {

std::vector<Eigen::MatrixXd> projected_edge_polylines(const SkeletonGraph& g3,
                                                      const Eigen::Matrix2Xd& projected) {
  std::vector<Eigen::MatrixXd> polys;
  polys.reserve(g3.edges.size());
  for (const auto& [i, j] : g3.edges) {
    Eigen::MatrixXd seg(2, 2);
    seg.col(0) = projected.col(i);
    seg.col(1) = projected.col(j);
    polys.push_back(std::move(seg));
  }
  return polys;
}

double total_edge_length(const SkeletonGraph& g, const Eigen::Matrix3Xd& positions_by_input) {
  double total = 0;
  for (const auto& [i, j] : g.edges) {
    total += (positions_by_input.col(g.original_indices[i]) -
              positions_by_input.col(g.original_indices[j]))
                 .norm();
  }
  return total;
}

}  // namespace

MetricsReport evaluate_pair(const std::string& id, const SkeletonPointSet& preop3d,
                            const SyntheticCase& intraop, const RunParams& params, bool prealign,
                            bool keep_overlay) {
  MetricsReport report;
  report.case_id = id;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    const ProjectionMatrix& P = intraop.projection;
    RigidTransform3D rigid;
    if (prealign) {
      rigid = rigid_prealign(intraop.skeleton_2d.points, preop3d.points, P);
    }
    const RegistrationResult result = register_skeletons(intraop.skeleton_2d, preop3d, P, rigid,
                                                         params);
    report.n2 = result.graph2.size();
    report.n3 = result.graph3.size();
    report.iterations = result.iterations;
    report.final_energy = result.energy_trace.empty() ? 0 : result.energy_trace.back().total;
    report.stage_ms = result.timing_ms;

    const Eigen::Matrix3Xd deformed = result.deformed();
    const auto curve2d = edge_polylines(result.graph2);
    const Eigen::Matrix2Xd projected = project(P, deformed);
    const auto stats2d = summarize(point_to_curve(projected, curve2d));
    report.mean_2d = stats2d.mean;
    report.std_2d = stats2d.stddev;

    const auto truth3d = intraop.truth_polylines_3d();
    const auto stats3d = summarize(point_to_curve(deformed, truth3d));
    report.mean_3d = stats3d.mean;
    report.std_3d = stats3d.stddev;

    const ShapeVariation sv = shape_variation(curve2d, preop3d.points, P, rigid, &truth3d);
    report.sv_2d = sv.sv_2d;
    report.sv_3d = sv.sv_3d;

    const double before = total_edge_length(result.graph3, result.prealigned);
    const double after = total_edge_length(result.graph3, deformed);
    report.length_change = before > 0 ? std::abs(after - before) / before : 0;

    if (keep_overlay) {
      OverlayData overlay;
      overlay.preop = projected_edge_polylines(result.graph3, project(P, result.prealigned));
      overlay.intraop = curve2d;
      overlay.prediction = projected_edge_polylines(result.graph3, projected);
      report.overlay = std::move(overlay);
    }
  } catch (const Error& e) {
    report.failed = true;
    report.error = e.what();
  } catch (const std::exception& e) {
    report.failed = true;
    report.error = e.what();
  }
  const auto t1 = std::chrono::steady_clock::now();
  report.runtime_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
  return report;
}

int resolve_thread_count(int requested, int jobs) {
  int threads = requested;
  if (threads <= 0) {
    if (const char* env = std::getenv("VESSELREG_THREADS")) {
      threads = std::atoi(env);
    }
  }
  if (threads <= 0) threads = static_cast<int>(std::thread::hardware_concurrency());
  if (threads <= 0) threads = 1;
  return std::max(1, std::min(threads, std::max(1, jobs)));
}

std::vector<MetricsReport> run_benchmark(const BenchmarkConfig& config) {
  if (config.num_cases < 1) throw Error(errc::invalid_params, "need at least one case");
  const auto family = generate_case_family(config.seed, config.num_cases, config.params);

  struct Job {
    std::string id;
    int preop;    // index of the pre-operative skeleton
    int intraop;  // index of the intra-operative case
    double tx = 0, ty = 0, theta = 0;
    bool sweep = false;
  };
  std::vector<Job> jobs;
  if (config.num_cases == 1) {
    jobs.push_back({family[0].id + "_self", 0, 0});
  } else {
    for (int a = 0; a < config.num_cases; ++a) {
      for (int b = 0; b < config.num_cases; ++b) {
        if (a == b) continue;
        jobs.push_back({"pair_" + std::to_string(a) + "_to_" + std::to_string(b), a, b});
      }
    }
  }
  auto format_value = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%+07.2f", v);
    return std::string(buf);
  };
  for (int c = 0; c < config.num_cases; ++c) {
    for (double t : config.sweep_translations_px) {
      jobs.push_back({"sweep_" + std::to_string(c) + "_t" + format_value(t), c, c, t, 0, 0, true});
    }
    for (double r : config.sweep_rotations_deg) {
      jobs.push_back({"sweep_" + std::to_string(c) + "_r" + format_value(r), c, c, 0, 0, r, true});
    }
  }

  // Sweep inputs must be materialized up front so worker threads never touch
  // shared state.
  std::vector<SyntheticCase> sweep_cases(jobs.size());
  for (size_t k = 0; k < jobs.size(); ++k) {
    if (jobs[k].sweep) {
      sweep_cases[k] =
          with_inplane_transform(family[jobs[k].intraop], jobs[k].tx, jobs[k].ty, jobs[k].theta);
    }
  }

  std::vector<MetricsReport> reports(jobs.size());
  const int threads = resolve_thread_count(config.threads, static_cast<int>(jobs.size()));
  std::atomic<size_t> next{0};
  auto worker = [&] {
    while (true) {
      const size_t k = next.fetch_add(1);
      if (k >= jobs.size()) break;
      const Job& job = jobs[k];
      const SyntheticCase& intraop = job.sweep ? sweep_cases[k] : family[job.intraop];
      reports[k] = evaluate_pair(job.id, family[job.preop].skeleton_3d, intraop, config.reg,
                                 config.prealign, config.keep_overlays);
    }
  };
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  std::stable_sort(reports.begin(), reports.end(),
                   [](const MetricsReport& a, const MetricsReport& b) { return a.case_id < b.case_id; });
  return reports;
}

}  // namespace vesselreg
