#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "paretolab/model.hpp"
#include "paretolab/network.hpp"
#include "paretolab/rng.hpp"

namespace paretolab {

// ---------------------------------------------------------------------------
// Kesten engine: reflected multiplicative process.
// ---------------------------------------------------------------------------

/// Per-step multiplicative factor exp(mu - sigma^2/2 + sigma xi), xi ~ N(0,1),
/// with a reflecting barrier at x_min. `mu` is the arithmetic drift, i.e.
/// E[factor] = exp(mu), which puts the stationary Pareto exponent at
/// 1 - 2 mu / sigma^2.
struct KestenParams {
  double mu = -0.125;
  double sigma = 0.5;
  double x_min = 1.0;

  double stationary_exponent() const noexcept { return 1.0 - 2.0 * mu / (sigma * sigma); }
  /// Throws ParameterError unless sigma > 0 and x_min > 0.
  void validate() const;
};

/// Change of the ledgers produced by one engine step.
struct StepDelta {
  double omega = 0.0;
  double lambda = 0.0;
};

/// Multiplies every wealth by an independent log-normal factor and reflects
/// results below x_min onto x_min. The omega delta is half the total absolute
/// wealth change: every unit of flow touches two agents.
/// Throws DomainError if an agent starts below the barrier.
StepDelta kesten_step(std::span<AgentState> agents, const KestenParams& params, Rng& rng);

/// mu such that the stationary exponent of kesten_step equals `alpha`:
/// mu = sigma^2 (1 - alpha) / 2. Throws ParameterError unless 1 < alpha <= 2
/// and sigma > 0.
double target_alpha_to_drift(double alpha, double sigma);

class KestenEngine {
 public:
  KestenEngine(std::vector<AgentState> agents, KestenParams params, std::uint64_t seed);

  void step();
  void run(std::uint64_t steps);

  std::span<const AgentState> agents() const noexcept { return agents_; }
  const SystemAccounts& accounts() const noexcept { return accounts_; }
  const KestenParams& params() const noexcept { return params_; }
  double sum_log_wealth() const noexcept;

 private:
  std::vector<AgentState> agents_;
  KestenParams params_;
  SystemAccounts accounts_;
  Rng rng_;
};

// ---------------------------------------------------------------------------
// Networked pairwise exchange.
// ---------------------------------------------------------------------------

enum class MoneyLegRule { FixedFraction, UniformFraction };
enum class LinkSampling { Uniform, WeightPlusOne };

/// gamma: product value returned per unit of money leg (1 perfect exchange,
/// 0 pure transfer). The money leg is f * payer wealth (FixedFraction) or
/// U(0, f) * payer wealth (UniformFraction).
struct ExchangeParams {
  double gamma = 1.0;
  MoneyLegRule money_leg_rule = MoneyLegRule::FixedFraction;
  double f = 0.1;
  LinkSampling link_sampling = LinkSampling::Uniform;
  /// Payers at or below payer_floor * (1 + 1e-12) are resampled.
  double payer_floor = 0.0;
  int max_resamples = 16;

  void validate() const;
};

enum class Redistribution { UniformPerCapita, ProportionalToWealth };

/// A government over subsystem S. On every exchange internal to S a share
/// tax_rate of the money leg is pooled and handed back to S members; the
/// payer gets product worth gamma_gov per pooled unit.
struct GovernmentChannel {
  std::vector<std::size_t> members;
  double tax_rate = 0.0;
  double gamma_gov = 0.0;
  Redistribution redistribution = Redistribution::UniformPerCapita;

  /// Throws ParameterError for an empty or out-of-range member set,
  /// tax_rate outside [0, 1), gamma_gov outside [0, 1) or above market_gamma.
  void validate(double market_gamma, std::size_t n_agents) const;
};

/// Draws link indices uniformly or with probability proportional to
/// weight + 1, optionally restricted to a subset of edges.
class LinkSampler {
 public:
  LinkSampler() = default;
  LinkSampler(const WeightedNetwork& network, LinkSampling mode,
              std::vector<std::size_t> edge_subset = {});

  std::size_t sample(Rng& rng) const;
  void on_weight_added(std::size_t edge, double amount);
  std::size_t size() const noexcept { return edges_.size(); }
  LinkSampling mode() const noexcept { return mode_; }

 private:
  LinkSampling mode_ = LinkSampling::Uniform;
  std::vector<std::size_t> edges_;  // candidate edge ids
  std::vector<std::size_t> slot_;   // edge id -> position in edges_, or npos
  std::vector<double> tree_;        // Fenwick tree over weight + 1
  std::size_t top_bit_ = 0;
};

/// Outcome of one exchange.
struct ExchangeEvent {
  std::size_t edge = 0;
  std::size_t payer = 0;
  std::size_t receiver = 0;
  double money_leg = 0.0;
  double pooled = 0.0;      // part of the money leg diverted to the government
  double wealth_delta = 0.0;
  double omega_delta = 0.0;
  bool taxed = false;
  bool noop = false;
};

/// One exchange over a sampled link. The payer sends money leg m, receives
/// product worth gamma * m; the receiver gains m. Total wealth changes by
/// gamma * m while omega logs m. Throws StateError on an empty network.
ExchangeEvent exchange_step(WeightedNetwork& network, std::span<AgentState> agents,
                            const ExchangeParams& params, Rng& rng);

/// Exchange restricted to links with both endpoints in the channel's members,
/// with the tax split applied. With tax_rate == 0 this is bit-identical to
/// exchange_step on the S-induced links. Throws ParameterError for an empty
/// member set and StateError when S has no internal links.
ExchangeEvent government_step(WeightedNetwork& network, std::span<AgentState> agents,
                              const GovernmentChannel& channel, const ExchangeParams& params,
                              Rng& rng);

/// Whole-economy exchange dynamics with an optional government channel that
/// taxes exchanges internal to S. Copying an engine snapshots the complete
/// state, RNG included, which is how paired controls are made.
class ExchangeEngine {
 public:
  ExchangeEngine(WeightedNetwork network, std::vector<AgentState> agents, ExchangeParams params,
                 std::uint64_t seed);

  /// Tags members as Subsystem::S. Without a channel, tags S without taxing.
  void set_subsystem(std::span<const std::size_t> members);
  void set_channel(GovernmentChannel channel);
  void clear_channel();

  ExchangeEvent step();
  void run(std::uint64_t steps);

  std::span<const AgentState> agents() const noexcept { return agents_; }
  const SystemAccounts& accounts() const noexcept { return accounts_; }
  const WeightedNetwork& network() const noexcept { return network_; }
  const ExchangeParams& params() const noexcept { return params_; }
  bool has_channel() const noexcept { return channel_active_; }
  std::span<const std::size_t> subsystem_members() const noexcept { return members_; }
  std::uint64_t noop_steps() const noexcept { return noops_; }
  /// Money legs (plus redistributed legs) and wealth created by exchanges
  /// internal to S since the subsystem was set.
  double subsystem_omega() const noexcept { return omega_s_; }
  double subsystem_created() const noexcept { return created_s_; }

 private:
  WeightedNetwork network_;
  std::vector<AgentState> agents_;
  ExchangeParams params_;
  SystemAccounts accounts_;
  Rng rng_;
  LinkSampler sampler_;
  std::vector<char> in_s_;
  std::vector<std::size_t> members_;
  GovernmentChannel channel_;
  bool channel_active_ = false;
  std::uint64_t noops_ = 0;
  double omega_s_ = 0.0;
  double created_s_ = 0.0;
};

// ---------------------------------------------------------------------------
// Thermalization of two joined economies.
// ---------------------------------------------------------------------------

struct ExchangeSystem {
  WeightedNetwork network;
  std::vector<AgentState> agents;
  double gamma = 1.0;
  double omega = 0.0;  // gross product carried into the union
};

/// Snapshot of an engine as a system that can be joined to another.
ExchangeSystem to_system(const ExchangeEngine& engine);

struct ThermalizeParams {
  /// New random cross-links added per sweep; must be >= 1.
  std::size_t coupling = 1;
  /// Sweeps of (n_A + n_B) exchanges each.
  std::uint64_t steps = 100;
  /// Sweeps between trajectory samples.
  std::uint64_t stride = 10;
  ExchangeParams exchange;  // gamma is ignored; each link carries its own
};

struct ThermalPoint {
  std::uint64_t step = 0;
  double alpha_a = 0.0;
  double alpha_b = 0.0;
  double alpha_union = 0.0;
  double gini_union = 0.0;
  double gini_b = 0.0;
  double sum_log_union = 0.0;
  double sum_log_b = 0.0;
  double omega = 0.0;
  double lambda = 0.0;
  std::size_t cross_links = 0;
};

struct ThermalizationResult {
  std::vector<ThermalPoint> trajectory;
  std::vector<AgentState> agents;  // A's agents first, then B's (ids offset)
  std::size_t n_a = 0;
  SystemAccounts accounts;
};

/// Joins A and B, adds `coupling` random cross-links per sweep and runs joint
/// exchange dynamics: internal links keep their system's gamma, cross-links
/// use the arithmetic mean. Trajectory alphas are top-decile Hill estimates
/// (see top_decile_alpha). Throws ParameterError when coupling == 0.
ThermalizationResult thermalize(const ExchangeSystem& a, const ExchangeSystem& b,
                                const ThermalizeParams& params, std::uint64_t seed);

}  // namespace paretolab
