#include "paretolab/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <string>
#include <tuple>

#include "paretolab/dynamics.hpp"
#include "paretolab/errors.hpp"
#include "paretolab/model.hpp"
#include "paretolab/network.hpp"
#include "paretolab/rng.hpp"

namespace paretolab {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Sub-seed slots of a replica.
constexpr std::uint64_t kNetworkSlot = 1;
constexpr std::uint64_t kEngineSlot = 2;
constexpr std::uint64_t kCarveSlot = 3;
constexpr std::uint64_t kSecondNetworkSlot = 4;
constexpr std::uint64_t kSecondEngineSlot = 5;
constexpr std::uint64_t kJoinSlot = 6;
constexpr std::uint64_t kBootstrapSlot = 7;

// Per-replica directional tests pass at these shares of replicas.
constexpr double kMajority = 0.8;
constexpr double kEqualityMajority = 0.7;
constexpr double kConservationMajority = 0.95;

constexpr double kAlphaTolerance = 0.05;
constexpr double kFlowTolerance = 0.1;
constexpr double kGiniTolerance = 0.035;
constexpr double kConservationSigmas = 3.0;
constexpr double kDirectionalSigmas = 2.0;

constexpr std::uint64_t kMinBurnIn = 1000;

std::size_t required_of(std::size_t replicas, double share) {
  return static_cast<std::size_t>(std::ceil(share * static_cast<double>(replicas) - 1e-9));
}

double mean_log(std::span<const AgentState> agents) {
  double s = 0.0;
  for (const auto& a : agents) s += std::log(a.wealth);
  return s / static_cast<double>(agents.size());
}

double mean_log_relative(std::span<const AgentState> agents) {
  return mean_log(agents) - std::log(total_wealth(agents) / static_cast<double>(agents.size()));
}

std::vector<double> wealths_in(std::span<const AgentState> agents, Subsystem which) {
  std::vector<double> out;
  for (const auto& a : agents) {
    if (a.subsystem == which) out.push_back(a.wealth);
  }
  return out;
}

double mean_log_in(std::span<const AgentState> agents, Subsystem which) {
  double s = 0.0;
  std::size_t n = 0;
  for (const auto& a : agents) {
    if (a.subsystem == which) {
      s += std::log(a.wealth);
      ++n;
    }
  }
  return n == 0 ? kNaN : s / static_cast<double>(n);
}

double denominator_of(const SystemAccounts& acc, EDenominator which) {
  return which == EDenominator::Omega ? acc.omega : acc.lambda;
}

// E over all agents and over S without building the per-agent vector.
std::pair<double, double> e_sums(std::span<const AgentState> agents, double alpha,
                                 double denominator) {
  const double log_d = std::log(denominator);
  double total = 0.0, s = 0.0;
  for (const auto& a : agents) {
    const double e = alpha * std::log(a.wealth) - log_d;
    total += e;
    if (a.subsystem == Subsystem::S) s += e;
  }
  return {total, s};
}

TrajectoryPoint sample_point(std::uint64_t step, std::span<const AgentState> agents,
                             const SystemAccounts& acc, double alpha_e, EDenominator which) {
  TrajectoryPoint p;
  p.step = step;
  p.omega = acc.omega;
  p.lambda = acc.lambda;
  const auto all = wealths_of(agents);
  const auto s = wealths_in(agents, Subsystem::S);
  p.alpha_global = top_decile_alpha(all);
  p.alpha_s = s.empty() ? kNaN : top_decile_alpha(s);
  std::tie(p.e_total, p.e_s) = e_sums(agents, alpha_e, denominator_of(acc, which));
  p.gini_global = gini(all);
  p.gini_s = s.empty() ? kNaN : gini(s);
  return p;
}

std::optional<ParetoFit> try_fit(std::span<const double> xs, std::vector<std::string>& warnings,
                                 const std::string& what) {
  try {
    return fit_pareto(xs);
  } catch (const InsufficientDataError& e) {
    warnings.push_back(what + ": " + e.what());
    return std::nullopt;
  }
}

std::optional<FlowFit> try_flow(std::span<const FlowPoint> flow, std::vector<std::string>& warnings,
                                const std::string& what) {
  try {
    return alpha_from_flows(flow);
  } catch (const DataError& e) {
    warnings.push_back(what + ": " + e.what());
    return std::nullopt;
  }
}

// --- engines ---------------------------------------------------------------

KestenEngine make_kesten(const RunConfig& c, std::uint64_t seed) {
  const KestenParams p{target_alpha_to_drift(c.kesten.alpha_target, c.kesten.sigma),
                       c.kesten.sigma, c.kesten.x_min};
  return KestenEngine(make_agents(c.n_agents, c.kesten.x_min), p,
                      derive_seed(seed, kEngineSlot));
}

ExchangeParams exchange_params(const ExchangeConfig& e, double gamma) {
  ExchangeParams p;
  p.gamma = gamma;
  p.money_leg_rule = e.money_leg_rule;
  p.f = e.f;
  p.link_sampling = e.link_sampling;
  return p;
}

ExchangeEngine make_exchange(const RunConfig& c, std::size_t n, double gamma,
                             std::uint64_t network_seed, std::uint64_t engine_seed) {
  return ExchangeEngine(generate_scale_free(n, c.network.m, network_seed),
                        make_agents(n, c.exchange.initial_wealth),
                        exchange_params(c.exchange, gamma), engine_seed);
}

// Runs the configured burn-in, or an automatic one: at least kMinBurnIn
// steps and ten integrated autocorrelation times of the mean log relative
// wealth, measured on the second half of the series sampled every `spacing`
// steps.
template <class Engine>
std::uint64_t burn_in(Engine& engine, const RunConfig& c, std::uint64_t spacing,
                      std::vector<std::string>& warnings) {
  if (c.burn_in) {
    engine.run(*c.burn_in);
    return *c.burn_in;
  }
  const std::uint64_t cap = c.inference.max_burn_in;
  std::vector<double> series;
  std::uint64_t done = 0;
  while (true) {
    const std::uint64_t chunk = std::min(spacing, cap - done);
    engine.run(chunk);
    done += chunk;
    series.push_back(mean_log_relative(engine.agents()));
    if (done >= cap) {
      warnings.push_back("automatic burn-in hit max_burn_in=" + std::to_string(cap));
      return done;
    }
    if (series.size() >= 32 && series.size() % 8 == 0) {
      std::span<const double> half(series.data() + series.size() / 2,
                                   series.size() - series.size() / 2);
      const double tau = integrated_autocorrelation_time(half) * static_cast<double>(spacing);
      if (static_cast<double>(done) >= std::max(static_cast<double>(kMinBurnIn), 10.0 * tau)) {
        return done;
      }
    }
  }
}

// --- aggregation -----------------------------------------------------------

void aggregate(ExperimentReport& report) {
  if (report.replicas.empty()) return;
  for (const auto& [name, _] : report.replicas.front().metrics) {
    std::vector<double> values;
    for (const auto& r : report.replicas) {
      const auto it = r.metrics.find(name);
      if (it == r.metrics.end()) break;
      values.push_back(it->second);
    }
    if (values.size() != report.replicas.size()) continue;
    const double n = static_cast<double>(values.size());
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= n;
    report.metrics[name + ".mean"] = mean;
    if (values.size() > 1) {
      double ss = 0.0;
      for (double v : values) ss += (v - mean) * (v - mean);
      report.metrics[name + ".se"] = std::sqrt(ss / (n - 1.0) / n);
    }
  }
}

// Counts replicas whose `test` holds. NaN metrics count as failures.
template <class Test>
Verdict count_verdict(std::string name, const std::vector<ReplicaResult>& replicas, double share,
                      double tolerance, const std::string& value_metric, Test test,
                      std::string note) {
  Verdict v;
  v.name = std::move(name);
  v.replicas = replicas.size();
  v.required = required_of(replicas.size(), share);
  v.tolerance = tolerance;
  double sum = 0.0;
  for (const auto& r : replicas) {
    if (test(r.metrics)) ++v.passed;
    const auto it = r.metrics.find(value_metric);
    sum += it == r.metrics.end() ? kNaN : it->second;
  }
  v.value = replicas.empty() ? kNaN : sum / static_cast<double>(replicas.size());
  v.status = v.passed >= v.required ? VerdictStatus::Pass : VerdictStatus::Fail;
  v.note = std::move(note);
  return v;
}

Verdict skipped(std::string name, VerdictStatus status, std::size_t replicas, double tolerance,
                std::string note) {
  Verdict v;
  v.name = std::move(name);
  v.status = status;
  v.value = kNaN;
  v.tolerance = tolerance;
  v.replicas = replicas;
  v.note = std::move(note);
  return v;
}

double metric(const std::map<std::string, double>& m, const std::string& key) {
  const auto it = m.find(key);
  return it == m.end() ? kNaN : it->second;
}

std::string format_number(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4g", x);
  return buf;
}

// Replica bodies report their warnings and, for replica 0, the artifacts
// kept in the report.
struct ReplicaOutput {
  ReplicaResult result;
  std::vector<std::string> warnings;
  std::vector<TrajectoryPoint> trajectory;
  std::optional<ParetoFit> fit;
  std::vector<double> final_wealths;
  std::optional<WeightedNetwork> network;
  std::uint64_t burn_in = 0;
};

template <class Body>
ExperimentReport run_replicas(const RunConfig& c, const std::string& experiment, Body body) {
  ExperimentReport report;
  report.experiment = experiment;
  report.config_digest = config_digest(c);
  for (std::size_t r = 0; r < c.replicas; ++r) report.seeds.push_back(replica_seed(c.seed, r));
  auto outputs = run_indexed(c.replicas, [&](std::size_t r) {
    const std::uint64_t seed = report.seeds[r];
    try {
      ReplicaOutput out = body(seed, r == 0);
      out.result.seed = seed;
      return out;
    } catch (const ValidationError&) {
      throw;
    } catch (const Error& e) {
      throw RunError(experiment + " replica " + std::to_string(r) + " (seed " +
                     std::to_string(seed) + "): " + e.what());
    }
  });
  for (std::size_t r = 0; r < outputs.size(); ++r) {
    for (auto& w : outputs[r].warnings) {
      report.warnings.push_back("replica " + std::to_string(r) + ": " + w);
    }
    report.replicas.push_back(std::move(outputs[r].result));
  }
  if (!outputs.empty()) {
    report.trajectory = std::move(outputs[0].trajectory);
    report.final_fit = outputs[0].fit;
    report.final_wealths = std::move(outputs[0].final_wealths);
    report.burn_in = outputs[0].burn_in;
    report.final_network = std::move(outputs[0].network);
  }
  aggregate(report);
  return report;
}

void add_bootstrap(ExperimentReport& report, const RunConfig& c) {
  if (c.inference.bootstrap == 0 || !report.final_fit) return;
  report.bootstrap = bootstrap_alpha(report.final_wealths, report.final_fit->x_min,
                                     c.inference.bootstrap,
                                     derive_seed(c.seed, kBootstrapSlot));
}

void put_fit(std::map<std::string, double>& m, const std::string& prefix,
             const std::optional<ParetoFit>& fit) {
  m[prefix + "alpha_hat"] = fit ? fit->alpha_hat : kNaN;
  m[prefix + "alpha_std_error"] = fit ? fit->std_error : kNaN;
  m[prefix + "x_min"] = fit ? fit->x_min : kNaN;
  m[prefix + "ks_distance"] = fit ? fit->ks_distance : kNaN;
  m[prefix + "ks_critical"] = fit ? ks_critical_value_1pct(fit->n_tail) : kNaN;
  m[prefix + "n_tail"] = fit ? static_cast<double>(fit->n_tail) : kNaN;
}

// --- stationary runs (baseline and conservation) ---------------------------

struct StationaryRun {
  std::vector<TrajectoryPoint> trajectory;  // full points when `full`, else E only
  std::vector<FlowPoint> flow;
  double e_start = 0.0;
  std::vector<double> wealths;
};

template <class Engine>
StationaryRun measure(Engine& engine, const RunConfig& c, double alpha_e, bool full) {
  StationaryRun run;
  const auto which = c.inference.e_denominator;
  run.e_start = e_sums(engine.agents(), alpha_e, denominator_of(engine.accounts(), which)).first;
  if (c.steps > 0) {
    run.flow.push_back({mean_log(engine.agents()), std::log(engine.accounts().omega)});
  }
  for (std::uint64_t t = 1; t <= c.steps; ++t) {
    engine.step();
    if (t % c.inference.flow_stride == 0) {
      run.flow.push_back({mean_log(engine.agents()), std::log(engine.accounts().omega)});
    }
    if (t % c.stride == 0) {
      if (full) {
        run.trajectory.push_back(sample_point(t, engine.agents(), engine.accounts(), alpha_e, which));
      } else {
        TrajectoryPoint p;
        p.step = t;
        std::tie(p.e_total, p.e_s) =
            e_sums(engine.agents(), alpha_e, denominator_of(engine.accounts(), which));
        run.trajectory.push_back(p);
      }
    }
  }
  run.wealths = wealths_of(engine.agents());
  return run;
}

double alpha_of_engine(const RunConfig& c) {
  return c.engine == EngineKind::Kesten ? c.kesten.alpha_target : 1.0 + c.exchange.gamma;
}

ReplicaOutput stationary_replica(const RunConfig& c, std::uint64_t seed, bool keep,
                                 bool need_all_points) {
  ReplicaOutput out;
  const double alpha_e = alpha_of_engine(c);
  StationaryRun run;
  if (c.engine == EngineKind::Kesten) {
    auto engine = make_kesten(c, seed);
    out.burn_in = burn_in(engine, c, c.stride, out.warnings);
    run = measure(engine, c, alpha_e, keep || need_all_points);
  } else {
    auto engine = make_exchange(c, c.n_agents, c.exchange.gamma,
                                derive_seed(seed, kNetworkSlot), derive_seed(seed, kEngineSlot));
    out.burn_in = burn_in(engine, c, c.stride, out.warnings);
    run = measure(engine, c, alpha_e, keep || need_all_points);
    out.result.metrics["noop_steps"] = static_cast<double>(engine.noop_steps());
    if (keep) out.network = engine.network();
  }
  auto& m = out.result.metrics;
  m["burn_in"] = static_cast<double>(out.burn_in);
  out.fit = try_fit(run.wealths, out.warnings, "final fit");
  put_fit(m, "", out.fit);
  m["gini"] = gini(run.wealths);
  // Kesten flows are informational only; stay quiet when there are too few.
  const bool want_flow = c.steps > 0 && (c.engine == EngineKind::Exchange || run.flow.size() >= 30);
  const auto flow = want_flow ? try_flow(run.flow, out.warnings, "flow regression")
                              : std::optional<FlowFit>{};
  m["alpha_flow"] = flow ? flow->alpha_hat : kNaN;
  m["alpha_flow_std_error"] = flow ? flow->alpha_std_error : kNaN;

  // Conservation statistics over per-stride increments of E_total.
  std::vector<double> deltas;
  double prev = run.e_start;
  for (const auto& p : run.trajectory) {
    deltas.push_back(p.e_total - prev);
    prev = p.e_total;
  }
  m["strides"] = static_cast<double>(deltas.size());
  if (deltas.size() >= 2) {
    double mean = 0.0;
    for (double d : deltas) mean += d;
    mean /= static_cast<double>(deltas.size());
    double var = 0.0;
    for (double d : deltas) var += (d - mean) * (d - mean);
    var /= static_cast<double>(deltas.size() - 1);
    const double se = std::sqrt(var / static_cast<double>(deltas.size()));
    m["delta_e_mean"] = mean;
    m["delta_e_se"] = se;
    m["delta_e_z"] = se > 0.0 ? mean / se : (mean == 0.0 ? 0.0 : kNaN);
  }
  if (keep) {
    out.trajectory = std::move(run.trajectory);
    out.final_wealths = std::move(run.wealths);
  }
  return out;
}

}  // namespace

std::string_view to_string(VerdictStatus status) {
  switch (status) {
    case VerdictStatus::Pass: return "PASS";
    case VerdictStatus::Fail: return "FAIL";
    case VerdictStatus::NotRun: return "NOT-RUN";
    case VerdictStatus::NotApplicable: return "NOT-APPLICABLE";
  }
  return "?";
}

std::uint64_t replica_seed(std::uint64_t seed, std::size_t index) {
  return index == 0 ? seed : derive_seed(seed, 1000 + index);
}

ExperimentReport run_baseline(const RunConfig& c) {
  auto report = run_replicas(c, "baseline", [&](std::uint64_t seed, bool keep) {
    return stationary_replica(c, seed, keep, false);
  });
  add_bootstrap(report, c);
  const std::size_t n = report.replicas.size();
  const double target = alpha_of_engine(c);
  const bool exchange = c.engine == EngineKind::Exchange;
  const std::string target_note = exchange ? "target 1+gamma" : "target alpha_target";
  if (c.steps == 0) {
    const std::string note = "no measurement steps";
    report.verdicts.push_back(skipped("alpha_target_recovery", VerdictStatus::NotRun, n,
                                      kAlphaTolerance, note));
    report.verdicts.push_back(skipped("flow_alpha", VerdictStatus::NotRun, n, kFlowTolerance, note));
    report.verdicts.push_back(
        skipped("gini_pareto_band", VerdictStatus::NotRun, n, kGiniTolerance, note));
    return report;
  }
  report.verdicts.push_back(count_verdict(
      "alpha_target_recovery", report.replicas, kMajority, kAlphaTolerance, "alpha_hat",
      [&](const auto& m) {
        return std::abs(metric(m, "alpha_hat") - target) <= kAlphaTolerance &&
               metric(m, "ks_distance") < metric(m, "ks_critical");
      },
      target_note + " = " + format_number(target) +
          "; per replica |alpha_hat - target| <= tolerance and KS below the 1% critical value"));
  if (exchange) {
    report.verdicts.push_back(count_verdict(
        "flow_alpha", report.replicas, kMajority, kFlowTolerance, "alpha_flow",
        [&](const auto& m) { return std::abs(metric(m, "alpha_flow") - target) <= kFlowTolerance; },
        "flow regression against 1+gamma = " + format_number(target)));
    const double g = 1.0 / (2.0 * target - 1.0);
    report.verdicts.push_back(count_verdict(
        "gini_pareto_band", report.replicas, kMajority, kGiniTolerance, "gini",
        [&](const auto& m) { return std::abs(metric(m, "gini") - g) <= kGiniTolerance; },
        "Pareto Gini 1/(2 alpha - 1) = " + format_number(g)));
  } else {
    report.verdicts.push_back(skipped("flow_alpha", VerdictStatus::NotApplicable, n,
                                      kFlowTolerance, "omega has no exchange meaning in Kesten"));
    report.verdicts.push_back(skipped("gini_pareto_band", VerdictStatus::NotApplicable, n,
                                      kGiniTolerance, "barrier atom distorts the Gini"));
  }
  return report;
}

ExperimentReport run_conservation(const RunConfig& c) {
  auto report = run_replicas(c, "conservation", [&](std::uint64_t seed, bool keep) {
    return stationary_replica(c, seed, keep, true);
  });
  add_bootstrap(report, c);
  const std::size_t n = report.replicas.size();
  if (c.steps / c.stride < 2) {
    report.verdicts.push_back(skipped("e_conservation", VerdictStatus::NotRun, n,
                                      kConservationSigmas, "fewer than two strides"));
    return report;
  }
  const double drift = metric(report.metrics, "delta_e_mean.mean");
  const double z = metric(report.metrics, "delta_e_z.mean");
  report.verdicts.push_back(count_verdict(
      "e_conservation", report.replicas, kConservationMajority, kConservationSigmas, "delta_e_z",
      [](const auto& m) {
        return std::abs(metric(m, "delta_e_mean")) <=
               kConservationSigmas * metric(m, "delta_e_se");
      },
      "per replica |mean dE_total per stride| <= 3 standard errors; drift " +
          std::string(drift > 0 ? "+" : drift < 0 ? "-" : "") + format_number(std::abs(drift)) +
          " per stride, mean z " + format_number(z)));
  return report;
}

namespace {

struct ArmResult {
  double e_s_delta_global = 0.0;
  double e_s_delta_subsystem = 0.0;
  double alpha_flow_s = kNaN;
  double alpha_flow_core = kNaN;
  double gini_s = 0.0;
  std::optional<ParetoFit> fit_s;
  std::vector<TrajectoryPoint> trajectory;
};

ArmResult run_arm(ExchangeEngine& engine, const RunConfig& c, double alpha_global,
                  double alpha_subsystem, bool keep, std::vector<std::string>& warnings,
                  const std::string& label) {
  ArmResult arm;
  const auto which = c.inference.e_denominator;
  const double alpha_e = c.inference.e_alpha == EAlpha::Global ? alpha_global : alpha_subsystem;
  const auto e_s = [&](double alpha) {
    return e_sums(engine.agents(), alpha, denominator_of(engine.accounts(), which)).second;
  };
  const double start_g = e_s(alpha_global), start_s = e_s(alpha_subsystem);
  std::vector<FlowPoint> flow_s, flow_core;
  const auto record_flow = [&] {
    const double lo = std::log(engine.accounts().omega);
    flow_s.push_back({mean_log_in(engine.agents(), Subsystem::S), lo});
    flow_core.push_back({mean_log_in(engine.agents(), Subsystem::Core), lo});
  };
  record_flow();
  for (std::uint64_t t = 1; t <= c.steps; ++t) {
    engine.step();
    if (t % c.inference.flow_stride == 0) record_flow();
    if (keep && t % c.stride == 0) {
      arm.trajectory.push_back(
          sample_point(t, engine.agents(), engine.accounts(), alpha_e, which));
    }
  }
  arm.e_s_delta_global = e_s(alpha_global) - start_g;
  arm.e_s_delta_subsystem = e_s(alpha_subsystem) - start_s;
  if (const auto f = try_flow(flow_s, warnings, label + " flow regression on S")) {
    arm.alpha_flow_s = f->alpha_hat;
  }
  if (const auto f = try_flow(flow_core, warnings, label + " flow regression on the complement")) {
    arm.alpha_flow_core = f->alpha_hat;
  }
  const auto s = wealths_in(engine.agents(), Subsystem::S);
  arm.gini_s = gini(s);
  arm.fit_s = try_fit(s, warnings, label + " fit on S");
  return arm;
}

}  // namespace

ExperimentReport run_intervention(const RunConfig& c) {
  if (c.engine != EngineKind::Exchange) {
    throw ValidationError("/engine", "intervention needs the exchange engine");
  }
  auto report = run_replicas(c, "intervention", [&](std::uint64_t seed, bool keep) {
    ReplicaOutput out;
    auto engine = make_exchange(c, c.n_agents, c.exchange.gamma, derive_seed(seed, kNetworkSlot),
                                derive_seed(seed, kEngineSlot));
    const auto members = carve_subsystem(engine.network(),
                                         {c.channel.selection, c.channel.fraction},
                                         derive_seed(seed, kCarveSlot));
    engine.set_subsystem(members);
    out.burn_in = burn_in(engine, c, c.stride, out.warnings);

    const auto all = wealths_of(engine.agents());
    const auto pre_global = try_fit(all, out.warnings, "pre-intervention fit");
    const auto pre_s =
        try_fit(wealths_in(engine.agents(), Subsystem::S), out.warnings, "pre-intervention fit on S");
    const double alpha_global = pre_global ? pre_global->alpha_hat : 1.0 + c.exchange.gamma;
    const double alpha_subsystem = pre_s ? pre_s->alpha_hat : alpha_global;

    ExchangeEngine control = engine;
    GovernmentChannel channel{members, c.channel.tax_rate, c.channel.gamma_gov,
                              c.channel.redistribution};
    engine.set_channel(channel);
    auto treat = run_arm(engine, c, alpha_global, alpha_subsystem, keep, out.warnings, "treatment");
    auto ctrl = run_arm(control, c, alpha_global, alpha_subsystem, false, out.warnings, "control");

    auto& m = out.result.metrics;
    const bool global = c.inference.e_alpha == EAlpha::Global;
    m["burn_in"] = static_cast<double>(out.burn_in);
    m["subsystem_size"] = static_cast<double>(members.size());
    m["alpha_pre_global"] = alpha_global;
    m["alpha_pre_s"] = alpha_subsystem;
    m["delta_e_s_global_alpha"] = treat.e_s_delta_global - ctrl.e_s_delta_global;
    m["delta_e_s_subsystem_alpha"] = treat.e_s_delta_subsystem - ctrl.e_s_delta_subsystem;
    m["delta_e_s"] = global ? m["delta_e_s_global_alpha"] : m["delta_e_s_subsystem_alpha"];
    m["alpha_flow_s_treatment"] = treat.alpha_flow_s;
    m["alpha_flow_s_control"] = ctrl.alpha_flow_s;
    m["alpha_flow_complement_treatment"] = treat.alpha_flow_core;
    m["delta_alpha_s"] = treat.alpha_flow_s - ctrl.alpha_flow_s;
    m["alpha_tail_s_treatment"] = treat.fit_s ? treat.fit_s->alpha_hat : kNaN;
    m["alpha_tail_s_control"] = ctrl.fit_s ? ctrl.fit_s->alpha_hat : kNaN;
    m["delta_alpha_tail_s"] = m["alpha_tail_s_treatment"] - m["alpha_tail_s_control"];
    m["gini_s_treatment"] = treat.gini_s;
    m["gini_s_control"] = ctrl.gini_s;
    m["delta_gini_s"] = treat.gini_s - ctrl.gini_s;
    m["noop_steps"] = static_cast<double>(engine.noop_steps());
    if (keep) {
      out.trajectory = std::move(treat.trajectory);
      out.final_wealths = wealths_of(engine.agents());
      out.fit = try_fit(out.final_wealths, out.warnings, "final fit");
      out.network = engine.network();
    }
    return out;
  });
  add_bootstrap(report, c);

  const std::size_t n = report.replicas.size();
  const std::string alpha_note = c.inference.e_alpha == EAlpha::Global
                                     ? "E_S uses the global pre-intervention alpha"
                                     : "E_S uses the subsystem pre-intervention alpha";
  const bool null_tax = c.channel.tax_rate == 0.0;
  const bool equal_gamma = c.channel.gamma_gov == c.exchange.gamma;
  if (c.steps == 0) {
    for (const char* name : {"e_s_direction", "alpha_degradation", "equality_degradation",
                             "null_control"}) {
      report.verdicts.push_back(skipped(name, VerdictStatus::NotRun, n, kDirectionalSigmas,
                                        "no measurement steps"));
    }
    return report;
  }
  if (null_tax) {
    for (const char* name : {"e_s_direction", "alpha_degradation", "equality_degradation"}) {
      report.verdicts.push_back(skipped(name, VerdictStatus::NotApplicable, n, 0.0,
                                        "tax_rate = 0 is the null intervention"));
    }
  } else {
    report.verdicts.push_back(count_verdict(
        "e_s_direction", report.replicas, kMajority, 0.0, "delta_e_s",
        [](const auto& m) { return metric(m, "delta_e_s") <= 0.0; },
        "per replica dE_S(treatment) - dE_S(control) <= 0; " + alpha_note));
    report.verdicts.push_back(count_verdict(
        "alpha_degradation", report.replicas, kMajority, 0.0, "delta_alpha_s",
        [](const auto& m) {
          return metric(m, "alpha_flow_s_treatment") < metric(m, "alpha_flow_s_control");
        },
        "per replica flow alpha_S(treatment) < alpha_S(control)"));
    report.verdicts.push_back(count_verdict(
        "equality_degradation", report.replicas, kEqualityMajority, 0.0, "delta_gini_s",
        [](const auto& m) {
          return metric(m, "gini_s_treatment") >= metric(m, "gini_s_control");
        },
        "per replica Gini_S(treatment) >= Gini_S(control)"));
  }
  if (null_tax || equal_gamma) {
    // Every paired delta must sit within 2 standard errors of zero.
    double worst = 0.0;
    bool ok = true;
    for (const char* name : {"delta_e_s", "delta_alpha_s", "delta_gini_s"}) {
      const double mean = metric(report.metrics, std::string(name) + ".mean");
      const double se = metric(report.metrics, std::string(name) + ".se");
      if (mean == 0.0) continue;
      if (!(se > 0.0)) {
        ok = false;
        worst = kNaN;
        continue;
      }
      worst = std::max(worst, std::abs(mean) / se);
      ok = ok && std::abs(mean) <= kDirectionalSigmas * se;
    }
    Verdict v;
    v.name = "null_control";
    v.status = ok ? VerdictStatus::Pass : VerdictStatus::Fail;
    v.value = worst;
    v.tolerance = kDirectionalSigmas;
    v.replicas = n;
    v.passed = ok ? n : 0;
    v.required = n;
    v.note = "mean paired deltas of E_S, flow alpha_S and Gini_S within 2 standard errors of 0";
    report.verdicts.push_back(v);
  } else {
    report.verdicts.push_back(skipped("null_control", VerdictStatus::NotApplicable, n,
                                      kDirectionalSigmas,
                                      "only for tax_rate = 0 or gamma_gov = gamma"));
  }
  return report;
}

ExperimentReport run_thermalization(const RunConfig& c) {
  if (c.engine != EngineKind::Exchange) {
    throw ValidationError("/engine", "thermalization needs the exchange engine");
  }
  const auto& th = c.thermalization;
  const double alpha_e = 0.5 * (th.alpha_a + th.alpha_b);
  auto report = run_replicas(c, "thermalization", [&](std::uint64_t seed, bool keep) {
    ReplicaOutput out;
    auto a = make_exchange(c, th.n_a, th.alpha_a - 1.0, derive_seed(seed, kNetworkSlot),
                           derive_seed(seed, kEngineSlot));
    auto b = make_exchange(c, th.n_b, th.alpha_b - 1.0, derive_seed(seed, kSecondNetworkSlot),
                           derive_seed(seed, kSecondEngineSlot));
    // Burn-in spacing of one sweep per system.
    const auto burn_a = burn_in(a, c, th.n_a, out.warnings);
    const auto burn_b = burn_in(b, c, th.n_b, out.warnings);
    out.burn_in = std::max(burn_a, burn_b);
    const auto fit_a = try_fit(wealths_of(a.agents()), out.warnings, "system A fit");
    const auto fit_b = try_fit(wealths_of(b.agents()), out.warnings, "system B fit");

    ThermalizeParams tp;
    tp.coupling = th.coupling;
    tp.steps = c.steps;
    tp.stride = c.stride;
    tp.exchange = exchange_params(c.exchange, 1.0);
    // Separate economies keep separate currency scales; both are restated at
    // the initial mean wealth before joining. Relative distributions and
    // alpha estimates are unchanged.
    auto sys_a = to_system(a);
    auto sys_b = to_system(b);
    for (auto* sys : {&sys_a, &sys_b}) {
      const double scale = c.exchange.initial_wealth * static_cast<double>(sys->agents.size()) /
                           total_wealth(sys->agents);
      for (auto& ag : sys->agents) ag.wealth *= scale;
      sys->omega *= scale;
    }
    auto joined = thermalize(sys_a, sys_b, tp, derive_seed(seed, kJoinSlot));
    const auto all = wealths_of(joined.agents);
    out.fit = try_fit(all, out.warnings, "union fit");

    auto& m = out.result.metrics;
    m["burn_in_a"] = static_cast<double>(burn_a);
    m["burn_in_b"] = static_cast<double>(burn_b);
    put_fit(m, "a.", fit_a);
    put_fit(m, "b.", fit_b);
    put_fit(m, "union.", out.fit);
    const auto& last = joined.trajectory.back();
    m["cross_links"] = static_cast<double>(last.cross_links);
    // Distance between the two parts after joining; convergence shrinks it.
    m["final_alpha_gap"] = std::abs(last.alpha_a - last.alpha_b);
    m["final_log_gap"] =
        std::abs((last.sum_log_union - last.sum_log_b) / static_cast<double>(th.n_a) -
                 last.sum_log_b / static_cast<double>(th.n_b));
    m["gini_union"] = gini(all);
    if (keep) {
      const double n = static_cast<double>(joined.agents.size());
      const double nb = static_cast<double>(th.n_b);
      for (const auto& tpnt : joined.trajectory) {
        if (tpnt.step == 0 || tpnt.step % c.stride != 0) continue;
        const double ld = std::log(c.inference.e_denominator == EDenominator::Omega ? tpnt.omega
                                                                                     : tpnt.lambda);
        TrajectoryPoint p;
        p.step = tpnt.step;
        p.omega = tpnt.omega;
        p.lambda = tpnt.lambda;
        p.alpha_global = tpnt.alpha_union;
        p.alpha_s = tpnt.alpha_b;
        p.e_total = alpha_e * tpnt.sum_log_union - n * ld;
        p.e_s = alpha_e * tpnt.sum_log_b - nb * ld;
        p.gini_global = tpnt.gini_union;
        p.gini_s = tpnt.gini_b;
        out.trajectory.push_back(p);
      }
      out.final_wealths = all;
    }
    return out;
  });
  add_bootstrap(report, c);

  const std::size_t n = report.replicas.size();
  if (th.alpha_a == th.alpha_b) {
    report.verdicts.push_back(skipped("intermediacy", VerdictStatus::NotApplicable, n,
                                      kDirectionalSigmas, "identical alpha targets"));
    return report;
  }
  if (c.steps == 0) {
    report.verdicts.push_back(skipped("intermediacy", VerdictStatus::NotRun, n,
                                      kDirectionalSigmas, "no joint sweeps"));
    return report;
  }
  report.verdicts.push_back(count_verdict(
      "intermediacy", report.replicas, kMajority, kDirectionalSigmas, "union.alpha_hat",
      [](const auto& m) {
        const double u = metric(m, "union.alpha_hat"), su = metric(m, "union.alpha_std_error");
        double lo = metric(m, "a.alpha_hat"), slo = metric(m, "a.alpha_std_error");
        double hi = metric(m, "b.alpha_hat"), shi = metric(m, "b.alpha_std_error");
        if (lo > hi) {
          std::swap(lo, hi);
          std::swap(slo, shi);
        }
        const double d_lo = kDirectionalSigmas * std::sqrt(su * su + slo * slo);
        const double d_hi = kDirectionalSigmas * std::sqrt(su * su + shi * shi);
        return lo + d_lo < u && u < hi - d_hi;
      },
      "union alpha strictly between the measured pre-join alphas of A and B by 2 joint "
      "standard errors"));
  return report;
}

ExperimentReport run_experiment(const RunConfig& c) {
  switch (c.experiment) {
    case ExperimentKind::Baseline: return run_baseline(c);
    case ExperimentKind::Conservation: return run_conservation(c);
    case ExperimentKind::Intervention: return run_intervention(c);
    case ExperimentKind::Thermalization: return run_thermalization(c);
  }
  throw ValidationError("/experiment", "unknown experiment");
}

}  // namespace paretolab
