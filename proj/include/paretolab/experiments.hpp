#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "paretolab/config.hpp"
#include "paretolab/inference.hpp"
#include "paretolab/network.hpp"

namespace paretolab {

/// One sampled stride of a run. alpha_* are top-decile Hill estimates, NaN
/// when too few samples; *_s columns are NaN (gini, alpha) or 0 (e_s) when
/// no subsystem exists.
struct TrajectoryPoint {
  std::uint64_t step = 0;
  double omega = 0.0;
  double lambda = 0.0;
  double alpha_global = 0.0;
  double alpha_s = 0.0;
  double e_total = 0.0;
  double e_s = 0.0;
  double gini_global = 0.0;
  double gini_s = 0.0;
};

enum class VerdictStatus { Pass, Fail, NotRun, NotApplicable };

/// A named outcome. `passed` of `replicas` replicas met the per-replica test
/// at `tolerance`; the verdict passes when passed >= required.
struct Verdict {
  std::string name;
  VerdictStatus status = VerdictStatus::NotRun;
  double value = 0.0;
  double tolerance = 0.0;
  std::size_t replicas = 0;
  std::size_t passed = 0;
  std::size_t required = 0;
  std::string note;
};

struct ReplicaResult {
  std::uint64_t seed = 0;
  std::map<std::string, double> metrics;
};

struct ExperimentReport {
  std::string experiment;
  std::string config_digest;
  std::vector<std::uint64_t> seeds;
  std::uint64_t burn_in = 0;              // resolved burn-in of replica 0
  std::vector<TrajectoryPoint> trajectory;  // replica 0 (treatment run)
  std::vector<Verdict> verdicts;
  std::optional<ParetoFit> final_fit;  // replica 0, selected x_min
  std::optional<BootstrapInterval> bootstrap;
  std::vector<ReplicaResult> replicas;
  std::map<std::string, double> metrics;  // "<name>.mean", "<name>.se"
  std::vector<std::string> warnings;
  std::vector<double> final_wealths;  // replica 0
  std::optional<WeightedNetwork> final_network;  // replica 0, exchange runs
};

std::string_view to_string(VerdictStatus status);

/// Seed of replica `index`; replica 0 uses the configured seed itself.
std::uint64_t replica_seed(std::uint64_t seed, std::size_t index);

ExperimentReport run_baseline(const RunConfig& config);
ExperimentReport run_conservation(const RunConfig& config);
/// Paired design: each replica burns in once, then runs a treatment copy with
/// the configured channel and a same-seed control copy without it.
ExperimentReport run_intervention(const RunConfig& config);
ExperimentReport run_thermalization(const RunConfig& config);

/// Dispatches on config.experiment.
ExperimentReport run_experiment(const RunConfig& config);

/// Runs fn(0..n-1) on worker threads and returns results in index order.
template <class Fn>
auto run_indexed(std::size_t n, Fn fn) -> std::vector<decltype(fn(std::size_t{}))>;

}  // namespace paretolab

#include "paretolab/detail/parallel.hpp"
