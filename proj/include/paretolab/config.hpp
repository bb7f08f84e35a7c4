#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "paretolab/dynamics.hpp"
#include "paretolab/model.hpp"
#include "paretolab/network.hpp"

namespace paretolab {

enum class ExperimentKind { Baseline, Conservation, Intervention, Thermalization };
enum class EngineKind { Kesten, Exchange };
enum class EAlpha { Global, Subsystem };

struct KestenConfig {
  double alpha_target = 2.0;
  double sigma = 0.3;
  double x_min = 1.0;
};

struct ExchangeConfig {
  double gamma = 1.0;
  MoneyLegRule money_leg_rule = MoneyLegRule::FixedFraction;
  double f = 0.1;
  LinkSampling link_sampling = LinkSampling::Uniform;
  double initial_wealth = 1.0;
};

struct NetworkConfig {
  std::size_t m = 2;
};

struct ChannelConfig {
  double tax_rate = 0.4;
  double gamma_gov = 0.2;
  Redistribution redistribution = Redistribution::UniformPerCapita;
  Selection selection = Selection::BreadthFirstBall;
  double fraction = 0.2;
};

/// Two exchange economies prepared at alpha_a and alpha_b (gamma = alpha - 1)
/// and joined. Steps and stride of the joint phase count sweeps of
/// n_a + n_b exchanges.
struct ThermalizationConfig {
  double alpha_a = 2.0;
  double alpha_b = 1.2;
  std::size_t n_a = 0;  // 0 resolves to n_agents / 2
  std::size_t n_b = 0;
  std::size_t coupling = 10;
};

struct InferenceConfig {
  /// Engine steps between flow-regression samples.
  std::uint64_t flow_stride = 100;
  EAlpha e_alpha = EAlpha::Global;
  EDenominator e_denominator = EDenominator::Omega;
  /// Bootstrap resamples of the final fit; 0 disables.
  std::size_t bootstrap = 0;
  /// Upper bound on an automatic burn-in; 0 resolves per engine.
  std::uint64_t max_burn_in = 0;
};

/// Fully resolved run configuration. Steps count engine steps: one update of
/// every agent for Kesten, one exchange for the exchange engine.
struct RunConfig {
  ExperimentKind experiment = ExperimentKind::Baseline;
  EngineKind engine = EngineKind::Kesten;
  std::size_t n_agents = 1000;
  std::uint64_t steps = 1000;
  std::optional<std::uint64_t> burn_in;  // nullopt: automatic
  std::uint64_t stride = 0;              // 0 resolves per engine
  std::uint64_t seed = 0;
  std::size_t replicas = 10;
  std::string output_dir = "out";

  KestenConfig kesten;
  ExchangeConfig exchange;
  NetworkConfig network;
  ChannelConfig channel;
  ThermalizationConfig thermalization;
  InferenceConfig inference;
};

/// Parses a JSON document strictly: duplicate and unknown keys, wrong types
/// and out-of-range values throw ValidationError naming the JSON path.
/// Omitted fields take their defaults, which are then resolved.
RunConfig parse_config(std::string_view text);

/// Fills engine-dependent defaults and checks ranges. parse_config calls it.
void resolve(RunConfig& config);

/// Canonical JSON of a resolved config, every field present, keys sorted.
std::string to_json(const RunConfig& config, int indent = -1);

/// SHA-256 hex digest of the canonical JSON without output_dir.
std::string config_digest(const RunConfig& config);

std::string_view to_string(ExperimentKind kind);
std::string_view to_string(EngineKind kind);

}  // namespace paretolab
