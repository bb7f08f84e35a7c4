#include "paretolab/dynamics.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <string>

#include "paretolab/errors.hpp"
#include "paretolab/inference.hpp"

namespace paretolab {

// ---------------------------------------------------------------------------
// Kesten
// ---------------------------------------------------------------------------

void KestenParams::validate() const {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw ParameterError("sigma must be > 0, got " + std::to_string(sigma));
  }
  if (!(x_min > 0.0) || !std::isfinite(x_min)) {
    throw ParameterError("x_min must be > 0, got " + std::to_string(x_min));
  }
  if (!std::isfinite(mu)) throw ParameterError("mu must be finite");
}

StepDelta kesten_step(std::span<AgentState> agents, const KestenParams& params, Rng& rng) {
  params.validate();
  std::normal_distribution<double> normal;
  const double drift = params.mu - 0.5 * params.sigma * params.sigma;
  StepDelta delta;
  double abs_change = 0.0;
  for (auto& a : agents) {
    if (a.wealth < params.x_min) {
      throw DomainError("agent " + std::to_string(a.id) + " is below the reflecting barrier");
    }
    const double before = a.wealth;
    const double after = std::max(before * std::exp(drift + params.sigma * normal(rng)),
                                  params.x_min);
    a.wealth = after;
    delta.lambda += after - before;
    abs_change += std::abs(after - before);
  }
  delta.omega = 0.5 * abs_change;
  return delta;
}

double target_alpha_to_drift(double alpha, double sigma) {
  if (!(alpha > 1.0 && alpha <= 2.0)) {
    throw ParameterError("target alpha must be in (1, 2], got " + std::to_string(alpha));
  }
  if (!(sigma > 0.0)) throw ParameterError("sigma must be > 0");
  return sigma * sigma * (1.0 - alpha) / 2.0;
}

KestenEngine::KestenEngine(std::vector<AgentState> agents, KestenParams params,
                           std::uint64_t seed)
    : agents_(std::move(agents)), params_(params), rng_(seed) {
  params_.validate();
  for (const auto& a : agents_) {
    if (a.wealth < params_.x_min) {
      throw DomainError("agent " + std::to_string(a.id) + " starts below the barrier");
    }
  }
  accounts_ = make_accounts(agents_);
}

void KestenEngine::step() {
  const auto d = kesten_step(agents_, params_, rng_);
  accounts_.omega += d.omega;
  // Recomputed rather than accumulated: the step already touches every agent.
  accounts_.lambda = total_wealth(agents_);
  ++accounts_.step;
}

double KestenEngine::sum_log_wealth() const noexcept {
  double s = 0.0;
  for (const auto& a : agents_) s += std::log(a.wealth);
  return s;
}

void KestenEngine::run(std::uint64_t steps) {
  for (std::uint64_t i = 0; i < steps; ++i) step();
}

// ---------------------------------------------------------------------------
// Exchange
// ---------------------------------------------------------------------------

void ExchangeParams::validate() const {
  if (!(gamma >= 0.0 && gamma <= 1.0)) {
    throw ParameterError("gamma must be in [0, 1], got " + std::to_string(gamma));
  }
  if (!(f > 0.0 && f < 1.0)) throw ParameterError("f must be in (0, 1), got " + std::to_string(f));
  if (!(payer_floor >= 0.0)) throw ParameterError("payer_floor must be >= 0");
  if (max_resamples < 0) throw ParameterError("max_resamples must be >= 0");
}

void GovernmentChannel::validate(double market_gamma, std::size_t n_agents) const {
  if (members.empty()) throw ParameterError("government channel has no members");
  for (auto m : members) {
    if (m >= n_agents) throw ParameterError("channel member " + std::to_string(m) + " out of range");
  }
  if (!(tax_rate >= 0.0 && tax_rate < 1.0)) {
    throw ParameterError("tax_rate must be in [0, 1), got " + std::to_string(tax_rate));
  }
  if (!(gamma_gov >= 0.0 && gamma_gov < 1.0)) {
    throw ParameterError("gamma_gov must be in [0, 1), got " + std::to_string(gamma_gov));
  }
  if (gamma_gov > market_gamma) {
    throw ParameterError("gamma_gov may not exceed the market gamma");
  }
}

LinkSampler::LinkSampler(const WeightedNetwork& network, LinkSampling mode,
                         std::vector<std::size_t> edge_subset)
    : mode_(mode), edges_(std::move(edge_subset)) {
  if (edges_.empty()) {
    edges_.resize(network.n_edges());
    for (std::size_t e = 0; e < edges_.size(); ++e) edges_[e] = e;
  }
  if (mode_ == LinkSampling::WeightPlusOne) {
    slot_.assign(network.n_edges(), std::numeric_limits<std::size_t>::max());
    tree_.assign(edges_.size() + 1, 0.0);
    for (std::size_t i = 0; i < edges_.size(); ++i) {
      slot_.at(edges_[i]) = i;
      // O(n) Fenwick build.
      tree_[i + 1] += network.edge(edges_[i]).weight + 1.0;
      const std::size_t parent = (i + 1) + ((i + 1) & (~(i + 1) + 1));
      if (parent < tree_.size()) tree_[parent] += tree_[i + 1];
    }
    top_bit_ = edges_.empty() ? 0 : std::bit_floor(edges_.size());
  }
}

std::size_t LinkSampler::sample(Rng& rng) const {
  if (edges_.empty()) throw StateError("cannot sample a link from an empty network");
  if (mode_ == LinkSampling::Uniform) return edges_[uniform_index(rng, edges_.size())];
  double total = 0.0;
  for (std::size_t i = edges_.size(); i > 0; i -= i & (~i + 1)) total += tree_[i];
  double target = uniform01(rng) * total;
  std::size_t pos = 0;
  for (std::size_t bit = top_bit_; bit > 0; bit >>= 1) {
    const std::size_t next = pos + bit;
    if (next < tree_.size() && tree_[next] <= target) {
      pos = next;
      target -= tree_[next];
    }
  }
  return edges_[std::min(pos, edges_.size() - 1)];
}

void LinkSampler::on_weight_added(std::size_t edge, double amount) {
  if (mode_ != LinkSampling::WeightPlusOne) return;
  const std::size_t s = slot_.at(edge);
  if (s == std::numeric_limits<std::size_t>::max()) return;
  for (std::size_t i = s + 1; i < tree_.size(); i += i & (~i + 1)) tree_[i] += amount;
}

namespace {

struct ChannelView {
  const GovernmentChannel* channel = nullptr;
  const std::vector<char>* in_s = nullptr;
};

// Samples a link and a payer orientation, resampling payers at the floor.
// Returns false when every retry hit the floor.
bool pick_pair(const WeightedNetwork& network, std::span<const AgentState> agents,
               const LinkSampler& sampler, const ExchangeParams& params, Rng& rng,
               ExchangeEvent& ev) {
  const double floor = params.payer_floor * (1.0 + 1e-12);
  for (int attempt = 0; attempt <= params.max_resamples; ++attempt) {
    ev.edge = sampler.sample(rng);
    const auto& e = network.edge(ev.edge);
    const bool flip = uniform01(rng) < 0.5;
    ev.payer = flip ? e.v : e.u;
    ev.receiver = flip ? e.u : e.v;
    if (agents[ev.payer].wealth > floor) return true;
  }
  return false;
}

ExchangeEvent transact(WeightedNetwork& network, std::span<AgentState> agents,
                       LinkSampler& sampler, const ExchangeParams& params, ChannelView gov,
                       Rng& rng) {
  ExchangeEvent ev;
  if (!pick_pair(network, agents, sampler, params, rng, ev)) {
    ev.noop = true;
    return ev;
  }
  auto& payer = agents[ev.payer];
  auto& receiver = agents[ev.receiver];
  const double share = params.money_leg_rule == MoneyLegRule::FixedFraction
                           ? params.f
                           : params.f * uniform01(rng);
  const double m = share * payer.wealth;

  ev.taxed = gov.channel != nullptr && (*gov.in_s)[ev.payer] && (*gov.in_s)[ev.receiver];
  const double pool = ev.taxed ? gov.channel->tax_rate * m : 0.0;
  const double gamma_gov = ev.taxed ? gov.channel->gamma_gov : 0.0;
  const double market = m - pool;

  payer.wealth += params.gamma * market + gamma_gov * pool - m;
  receiver.wealth += market;
  if (pool > 0.0) {
    const auto& members = gov.channel->members;
    if (gov.channel->redistribution == Redistribution::UniformPerCapita) {
      const double share_each = pool / static_cast<double>(members.size());
      for (auto id : members) agents[id].wealth += share_each;
    } else {
      double base = 0.0;
      for (auto id : members) base += agents[id].wealth;
      const double rate = pool / base;
      for (auto id : members) agents[id].wealth += agents[id].wealth * rate;
    }
  }
  if (!(payer.wealth > 0.0)) {
    throw StateError("payer " + std::to_string(ev.payer) + " reached non-positive wealth");
  }

  network.add_weight(ev.edge, market);
  sampler.on_weight_added(ev.edge, market);
  ev.money_leg = m;
  ev.pooled = pool;
  ev.wealth_delta = params.gamma * market + gamma_gov * pool;
  ev.omega_delta = m + pool;
  return ev;
}

std::vector<std::size_t> internal_edges(const WeightedNetwork& network,
                                        const std::vector<char>& in_s) {
  std::vector<std::size_t> out;
  for (std::size_t e = 0; e < network.n_edges(); ++e) {
    const auto& edge = network.edge(e);
    if (in_s[edge.u] && in_s[edge.v]) out.push_back(e);
  }
  return out;
}

std::vector<char> membership(std::span<const std::size_t> members, std::size_t n) {
  std::vector<char> in_s(n, 0);
  for (auto m : members) in_s.at(m) = 1;
  return in_s;
}

}  // namespace

ExchangeEvent exchange_step(WeightedNetwork& network, std::span<AgentState> agents,
                            const ExchangeParams& params, Rng& rng) {
  params.validate();
  if (network.n_edges() == 0) throw StateError("exchange on an empty network");
  if (agents.size() != network.n_nodes()) throw StateError("agents and network disagree");
  LinkSampler sampler(network, params.link_sampling);
  return transact(network, agents, sampler, params, {}, rng);
}

ExchangeEvent government_step(WeightedNetwork& network, std::span<AgentState> agents,
                              const GovernmentChannel& channel, const ExchangeParams& params,
                              Rng& rng) {
  params.validate();
  channel.validate(params.gamma, agents.size());
  if (agents.size() != network.n_nodes()) throw StateError("agents and network disagree");
  const auto in_s = membership(channel.members, agents.size());
  auto edges = internal_edges(network, in_s);
  if (edges.empty()) throw StateError("subsystem has no internal links");
  LinkSampler sampler(network, params.link_sampling, std::move(edges));
  return transact(network, agents, sampler, params, {&channel, &in_s}, rng);
}

ExchangeEngine::ExchangeEngine(WeightedNetwork network, std::vector<AgentState> agents,
                               ExchangeParams params, std::uint64_t seed)
    : network_(std::move(network)), agents_(std::move(agents)), params_(params), rng_(seed) {
  params_.validate();
  if (network_.n_edges() == 0) throw StateError("exchange engine needs a non-empty network");
  if (agents_.size() != network_.n_nodes()) throw StateError("agents and network disagree");
  for (const auto& a : agents_) {
    if (!(a.wealth > 0.0)) throw DomainError("agent " + std::to_string(a.id) + " has no wealth");
  }
  accounts_ = make_accounts(agents_);
  sampler_ = LinkSampler(network_, params_.link_sampling);
  in_s_.assign(agents_.size(), 0);
}

void ExchangeEngine::set_subsystem(std::span<const std::size_t> members) {
  in_s_ = membership(members, agents_.size());
  members_.assign(members.begin(), members.end());
  for (auto& a : agents_) a.subsystem = in_s_[a.id] ? Subsystem::S : Subsystem::Core;
  omega_s_ = 0.0;
  created_s_ = 0.0;
}

void ExchangeEngine::set_channel(GovernmentChannel channel) {
  channel.validate(params_.gamma, agents_.size());
  std::sort(channel.members.begin(), channel.members.end());
  if (channel.members != members_) set_subsystem(channel.members);
  channel_ = std::move(channel);
  channel_active_ = true;
}

void ExchangeEngine::clear_channel() { channel_active_ = false; }

ExchangeEvent ExchangeEngine::step() {
  ChannelView gov;
  if (channel_active_) gov = {&channel_, &in_s_};
  ExchangeEvent ev = transact(network_, agents_, sampler_, params_, gov, rng_);
  ++accounts_.step;
  if (ev.noop) {
    ++noops_;
    return ev;
  }
  accounts_.omega += ev.omega_delta;
  accounts_.lambda += ev.wealth_delta;
  if (!std::isfinite(accounts_.omega)) {
    throw StateError("gross product overflowed after " + std::to_string(accounts_.step) +
                     " exchanges; shorten the run or lower f");
  }
  if (in_s_[ev.payer] && in_s_[ev.receiver]) {
    omega_s_ += ev.omega_delta;
    created_s_ += ev.wealth_delta;
  }
  return ev;
}

void ExchangeEngine::run(std::uint64_t steps) {
  for (std::uint64_t i = 0; i < steps; ++i) step();
}

// ---------------------------------------------------------------------------
// Thermalization
// ---------------------------------------------------------------------------

ExchangeSystem to_system(const ExchangeEngine& engine) {
  return ExchangeSystem{engine.network(),
                        std::vector<AgentState>(engine.agents().begin(), engine.agents().end()),
                        engine.params().gamma, engine.accounts().omega};
}

namespace {

ThermalPoint sample_union(std::uint64_t step, std::span<const AgentState> agents,
                          std::size_t n_a, const SystemAccounts& acc, std::size_t cross) {
  std::vector<double> all = wealths_of(agents);
  std::span<const double> part_a(all.data(), n_a);
  std::span<const double> part_b(all.data() + n_a, all.size() - n_a);
  ThermalPoint p;
  p.step = step;
  p.alpha_a = top_decile_alpha(part_a);
  p.alpha_b = top_decile_alpha(part_b);
  p.alpha_union = top_decile_alpha(all);
  p.gini_union = gini(all);
  p.gini_b = gini(part_b);
  for (std::size_t i = 0; i < all.size(); ++i) {
    const double l = std::log(all[i]);
    p.sum_log_union += l;
    if (i >= n_a) p.sum_log_b += l;
  }
  p.omega = acc.omega;
  p.lambda = acc.lambda;
  p.cross_links = cross;
  return p;
}

}  // namespace

ThermalizationResult thermalize(const ExchangeSystem& a, const ExchangeSystem& b,
                                const ThermalizeParams& params, std::uint64_t seed) {
  if (params.coupling == 0) throw ParameterError("thermalization needs coupling >= 1");
  if (params.stride == 0) throw ParameterError("thermalization stride must be >= 1");
  for (double g : {a.gamma, b.gamma}) {
    if (!(g >= 0.0 && g <= 1.0)) throw ParameterError("system gamma must be in [0, 1]");
  }
  params.exchange.validate();
  const std::size_t n_a = a.agents.size();
  const std::size_t n_b = b.agents.size();
  if (n_a != a.network.n_nodes() || n_b != b.network.n_nodes()) {
    throw StateError("system agents and network disagree");
  }
  if (n_a == 0 || n_b == 0) throw StateError("thermalization needs two non-empty systems");

  const std::size_t n = n_a + n_b;
  WeightedNetwork net(n);
  std::vector<double> edge_gamma;
  edge_gamma.reserve(a.network.n_edges() + b.network.n_edges());
  for (const auto& e : a.network.edges()) {
    net.add_edge(e.u, e.v, e.weight);
    edge_gamma.push_back(a.gamma);
  }
  for (const auto& e : b.network.edges()) {
    net.add_edge(e.u + n_a, e.v + n_a, e.weight);
    edge_gamma.push_back(b.gamma);
  }
  if (net.n_edges() == 0) throw StateError("thermalization needs at least one internal link");
  const double cross_gamma = 0.5 * (a.gamma + b.gamma);

  ThermalizationResult result;
  result.n_a = n_a;
  result.agents.reserve(n);
  for (const auto& ag : a.agents) {
    result.agents.push_back({result.agents.size(), ag.wealth, Subsystem::Core});
  }
  for (const auto& ag : b.agents) {
    result.agents.push_back({result.agents.size(), ag.wealth, Subsystem::S});
  }
  auto& agents = result.agents;
  auto& acc = result.accounts;
  acc.n_agents = n;
  acc.lambda = total_wealth(agents);
  acc.omega = a.omega + b.omega > 0.0 ? a.omega + b.omega : acc.lambda;

  Rng rng(seed);
  const auto& ex = params.exchange;
  const double floor = ex.payer_floor * (1.0 + 1e-12);
  const std::size_t max_cross = n_a * n_b;
  std::size_t cross = 0;

  result.trajectory.push_back(sample_union(0, agents, n_a, acc, cross));
  for (std::uint64_t sweep = 1; sweep <= params.steps; ++sweep) {
    for (std::size_t c = 0; c < params.coupling && cross < max_cross; ++c) {
      const std::size_t u = uniform_index(rng, n_a);
      const std::size_t v = n_a + uniform_index(rng, n_b);
      if (!net.has_edge(u, v)) {
        net.add_edge(u, v);
        edge_gamma.push_back(cross_gamma);
        ++cross;
      }
    }
    for (std::size_t k = 0; k < n; ++k) {
      std::size_t e = 0, payer = 0, receiver = 0;
      bool found = false;
      for (int attempt = 0; attempt <= ex.max_resamples && !found; ++attempt) {
        e = uniform_index(rng, net.n_edges());
        const auto& edge = net.edge(e);
        const bool flip = uniform01(rng) < 0.5;
        payer = flip ? edge.v : edge.u;
        receiver = flip ? edge.u : edge.v;
        found = agents[payer].wealth > floor;
      }
      ++acc.step;
      if (!found) continue;
      const double share =
          ex.money_leg_rule == MoneyLegRule::FixedFraction ? ex.f : ex.f * uniform01(rng);
      const double m = share * agents[payer].wealth;
      const double g = edge_gamma[e];
      agents[payer].wealth += g * m - m;
      agents[receiver].wealth += m;
      net.add_weight(e, m);
      acc.omega += m;
      acc.lambda += g * m;
      if (!std::isfinite(acc.omega)) throw StateError("gross product overflowed while joined");
    }
    if (sweep % params.stride == 0 || sweep == params.steps) {
      result.trajectory.push_back(sample_union(sweep, agents, n_a, acc, cross));
    }
  }
  return result;
}

}  // namespace paretolab
