#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include "doctest.h"
#include "paretolab/dynamics.hpp"
#include "paretolab/errors.hpp"
#include "paretolab/inference.hpp"
#include "paretolab/model.hpp"

using namespace paretolab;

namespace {

WeightedNetwork single_link() {
  WeightedNetwork net(2);
  net.add_edge(0, 1);
  return net;
}

}  // namespace

// --- Kesten ----------------------------------------------------------------

TEST_CASE("drift for a target exponent") {
  CHECK(target_alpha_to_drift(2.0, 0.1) == doctest::Approx(-0.005));
  CHECK(target_alpha_to_drift(1.5, 0.5) == doctest::Approx(-0.0625));
  const double mu = target_alpha_to_drift(1.5, 0.2);
  CHECK(mu == doctest::Approx(-0.01));
  CHECK(1.0 - 2.0 * mu / (0.2 * 0.2) == doctest::Approx(1.5));
  CHECK_THROWS_AS(target_alpha_to_drift(1.0, 0.1), ParameterError);
  CHECK_THROWS_AS(target_alpha_to_drift(2.5, 0.1), ParameterError);
  CHECK_THROWS_AS(target_alpha_to_drift(1.5, 0.0), ParameterError);
  for (double a : {1.1, 1.4, 1.77, 2.0}) {
    const KestenParams p{target_alpha_to_drift(a, 0.3), 0.3, 1.0};
    CHECK(p.stationary_exponent() == doctest::Approx(a));
  }
}

TEST_CASE("barrier reflection") {
  auto agents = make_agents(1000, 1.0);
  Rng rng(3);
  const KestenParams p{-0.5, 0.5, 1.0};
  for (int s = 0; s < 50; ++s) {
    kesten_step(agents, p, rng);
    for (const auto& a : agents) CHECK(a.wealth >= 1.0);
  }
  auto below = make_agents(3, 0.5);
  CHECK_THROWS_AS(kesten_step(below, p, rng), DomainError);
}

TEST_CASE("tiny sigma keeps wealth near the drift path") {
  auto agents = make_agents(100, 10.0);
  Rng rng(4);
  const KestenParams p{0.01, 1e-9, 1.0};
  kesten_step(agents, p, rng);
  for (const auto& a : agents) CHECK(a.wealth == doctest::Approx(10.0 * std::exp(0.01)));
}

TEST_CASE("vanishing noise and zero drift leave wealth unchanged") {
  auto agents = make_agents(100, 3.0);
  Rng rng(5);
  const KestenParams p{0.0, 1e-300, 1.0};
  const auto delta = kesten_step(agents, p, rng);
  for (const auto& a : agents) CHECK(a.wealth == 3.0);
  CHECK(delta.omega == 0.0);
}

TEST_CASE("kesten omega is half the absolute flow") {
  auto agents = make_agents(500, 2.0);
  const auto before = wealths_of(agents);
  Rng rng(11);
  const auto d = kesten_step(agents, {-0.02, 0.4, 1.0}, rng);
  double abs_sum = 0.0, sum = 0.0;
  for (std::size_t i = 0; i < agents.size(); ++i) {
    abs_sum += std::abs(agents[i].wealth - before[i]);
    sum += agents[i].wealth - before[i];
  }
  CHECK(d.omega == doctest::Approx(0.5 * abs_sum).epsilon(1e-12));
  CHECK(d.lambda == doctest::Approx(sum).epsilon(1e-12));
}

TEST_CASE("kesten engine is deterministic and keeps its ledgers") {
  KestenEngine a(make_agents(200, 1.0), {-0.05, 0.5, 1.0}, 9);
  KestenEngine b(make_agents(200, 1.0), {-0.05, 0.5, 1.0}, 9);
  a.run(100);
  b.run(100);
  CHECK(wealths_of(a.agents()) == wealths_of(b.agents()));
  CHECK(a.accounts().step == 100);
  CHECK(ledger_consistent(a.accounts(), a.agents()));
  double sum_log = 0.0;
  for (const auto& ag : a.agents()) sum_log += std::log(ag.wealth);
  CHECK(a.sum_log_wealth() == doctest::Approx(sum_log));
}

TEST_CASE("kesten engine reaches its stationary exponent") {
  const double sigma = 0.1;
  const double mu = target_alpha_to_drift(2.0, sigma);
  CHECK(mu == doctest::Approx(-0.005));
  KestenEngine engine(make_agents(100'000, 1.0), {mu, sigma, 1.0}, 2024);
  engine.run(10'000);
  const auto w = wealths_of(engine.agents());
  const auto fit = fit_pareto(w);
  CHECK(fit.alpha_hat >= 1.95);
  CHECK(fit.alpha_hat <= 2.05);
}

// --- Exchange --------------------------------------------------------------

TEST_CASE("perfect exchange and pure transfer") {
  for (double gamma : {1.0, 0.0}) {
    auto net = single_link();
    std::vector<AgentState> agents{{0, 100.0, Subsystem::Core}, {1, 100.0, Subsystem::Core}};
    ExchangeParams p;
    p.gamma = gamma;
    p.f = 0.01;
    Rng rng(1);
    const auto ev = exchange_step(net, agents, p, rng);
    CHECK(ev.money_leg == doctest::Approx(1.0));
    CHECK(ev.omega_delta == doctest::Approx(1.0));
    CHECK(agents[ev.receiver].wealth == doctest::Approx(101.0));
    CHECK(agents[ev.payer].wealth == doctest::Approx(gamma == 1.0 ? 100.0 : 99.0));
    CHECK(total_wealth(agents) == doctest::Approx(200.0 + gamma));
    CHECK(net.weight(0, 1) == doctest::Approx(1.0));
  }
}

TEST_CASE("accounting identity: lambda grows by gamma times omega") {
  for (double gamma : {0.0, 0.3, 0.8, 1.0}) {
    auto net = generate_scale_free(300, 2, 5);
    ExchangeParams p;
    p.gamma = gamma;
    p.money_leg_rule = MoneyLegRule::UniformFraction;
    ExchangeEngine engine(net, make_agents(300, 1.0), p, 17);
    const auto start = engine.accounts();
    engine.run(20'000);
    const auto& end = engine.accounts();
    CHECK(end.lambda - start.lambda ==
          doctest::Approx(gamma * (end.omega - start.omega)).epsilon(1e-9));
    CHECK(ledger_consistent(end, engine.agents()));
    for (const auto& a : engine.agents()) CHECK(a.wealth > 0.0);
  }
}

TEST_CASE("half growth of total wealth") {
  // gamma = 1/2: omega of 100 adds 50 to total wealth.
  auto net = generate_scale_free(50, 2, 1);
  ExchangeParams p;
  p.gamma = 0.5;
  ExchangeEngine engine(net, make_agents(50, 4.0), p, 3);
  while (engine.accounts().omega - 200.0 < 100.0) engine.step();
  const double d_omega = engine.accounts().omega - 200.0;
  CHECK(engine.accounts().lambda - 200.0 == doctest::Approx(0.5 * d_omega));
}

TEST_CASE("weight-proportional link sampling") {
  WeightedNetwork net(4);
  net.add_edge(0, 1, 0.0);
  net.add_edge(1, 2, 1.0);
  net.add_edge(2, 3, 5.0);
  LinkSampler s(net, LinkSampling::WeightPlusOne);
  Rng rng(8);
  std::map<std::size_t, int> counts;
  const int draws = 90'000;
  for (int i = 0; i < draws; ++i) ++counts[s.sample(rng)];
  // Probabilities 1/9, 2/9, 6/9.
  CHECK(counts[0] / double(draws) == doctest::Approx(1.0 / 9).epsilon(0.05));
  CHECK(counts[1] / double(draws) == doctest::Approx(2.0 / 9).epsilon(0.05));
  CHECK(counts[2] / double(draws) == doctest::Approx(6.0 / 9).epsilon(0.02));

  s.on_weight_added(0, 6.0);  // weights + 1 now 7, 2, 6
  counts.clear();
  for (int i = 0; i < draws; ++i) ++counts[s.sample(rng)];
  CHECK(counts[0] / double(draws) == doctest::Approx(7.0 / 15).epsilon(0.03));
  CHECK(counts[1] / double(draws) == doctest::Approx(2.0 / 15).epsilon(0.05));
}

TEST_CASE("exchange errors") {
  WeightedNetwork empty(3);
  auto agents = make_agents(3, 1.0);
  Rng rng(1);
  CHECK_THROWS_AS((exchange_step(empty, agents, {}, rng)), StateError);
  ExchangeParams bad;
  bad.gamma = 1.5;
  auto net = single_link();
  auto two = make_agents(2, 1.0);
  CHECK_THROWS_AS(exchange_step(net, two, bad, rng), ParameterError);
  bad = {};
  bad.f = 1.0;
  CHECK_THROWS_AS(exchange_step(net, two, bad, rng), ParameterError);
}

TEST_CASE("payer floor turns exhausted draws into no-ops") {
  auto net = single_link();
  ExchangeParams p;
  p.payer_floor = 10.0;
  p.max_resamples = 3;
  ExchangeEngine engine(net, make_agents(2, 1.0), p, 5);
  const auto ev = engine.step();
  CHECK(ev.noop);
  CHECK(engine.noop_steps() == 1);
  CHECK(engine.accounts().omega == doctest::Approx(2.0));
}

// --- Government channel ----------------------------------------------------

TEST_CASE("untaxed channel equals plain exchange on the induced network") {
  const auto full = generate_scale_free(200, 3, 12);
  const auto members = carve_subsystem(full, {Selection::BreadthFirstBall, 0.3}, 4);
  std::vector<std::size_t> local(full.n_nodes(), 0);
  for (std::size_t i = 0; i < members.size(); ++i) local[members[i]] = i;
  std::vector<char> in(full.n_nodes(), 0);
  for (auto m : members) in[m] = 1;
  WeightedNetwork induced(members.size());
  for (const auto& e : full.edges()) {
    if (in[e.u] && in[e.v]) induced.add_edge(local[e.u], local[e.v]);
  }

  GovernmentChannel channel{members, 0.0, 0.0, Redistribution::UniformPerCapita};
  ExchangeParams p;
  p.gamma = 0.7;
  p.money_leg_rule = MoneyLegRule::UniformFraction;
  auto net_gov = full;
  auto agents_gov = make_agents(full.n_nodes(), 1.0);
  auto agents_sub = make_agents(members.size(), 1.0);
  Rng rng_gov(99), rng_sub(99);
  for (int s = 0; s < 2000; ++s) {
    government_step(net_gov, agents_gov, channel, p, rng_gov);
    exchange_step(induced, agents_sub, p, rng_sub);
  }
  for (std::size_t i = 0; i < members.size(); ++i) {
    CHECK(agents_gov[members[i]].wealth == agents_sub[i].wealth);
  }
}

TEST_CASE("full taxation without government product stops wealth creation") {
  const auto net = generate_scale_free(400, 2, 6);
  const auto members = carve_subsystem(net, {Selection::BreadthFirstBall, 0.25}, 1);
  double previous = 2.0;
  for (double tau : {0.0, 0.5, 0.9, 0.999}) {
    ExchangeParams p;
    p.gamma = 0.9;
    ExchangeEngine engine(net, make_agents(400, 1.0), p, 21);
    engine.set_channel({members, tau, 0.0, Redistribution::UniformPerCapita});
    engine.run(40'000);
    REQUIRE(engine.subsystem_omega() > 0.0);
    const double ratio = engine.subsystem_created() / engine.subsystem_omega();
    CHECK(ratio <= previous);
    previous = ratio;
    CHECK(ledger_consistent(engine.accounts(), engine.agents()));
  }
  CHECK(previous < 0.01);
}

TEST_CASE("taxed exchange arithmetic") {
  auto net = single_link();
  std::vector<AgentState> agents{{0, 100.0, Subsystem::S}, {1, 100.0, Subsystem::S}};
  GovernmentChannel channel{{0, 1}, 0.5, 0.2, Redistribution::UniformPerCapita};
  ExchangeParams p;
  p.gamma = 1.0;
  p.f = 0.1;
  Rng rng(2);
  const auto ev = government_step(net, agents, channel, p, rng);
  CHECK(ev.taxed);
  CHECK(ev.money_leg == doctest::Approx(10.0));
  CHECK(ev.pooled == doctest::Approx(5.0));
  // Payer: -10 + 1 * 5 + 0.2 * 5 + 2.5 redistributed. Receiver: +5 + 2.5.
  CHECK(agents[ev.payer].wealth == doctest::Approx(98.5));
  CHECK(agents[ev.receiver].wealth == doctest::Approx(107.5));
  CHECK(ev.wealth_delta == doctest::Approx(6.0));
  CHECK(ev.omega_delta == doctest::Approx(15.0));
  CHECK(net.weight(0, 1) == doctest::Approx(5.0));
}

TEST_CASE("channel validation") {
  auto net = single_link();
  auto agents = make_agents(2, 1.0);
  Rng rng(1);
  ExchangeParams p;
  p.gamma = 0.5;
  CHECK_THROWS_AS((government_step(net, agents, {{}, 0.1, 0.1, {}}, p, rng)), ParameterError);
  CHECK_THROWS_AS((government_step(net, agents, {{0, 1}, 1.0, 0.1, {}}, p, rng)), ParameterError);
  CHECK_THROWS_AS((government_step(net, agents, {{0, 1}, 0.1, 0.6, {}}, p, rng)), ParameterError);
  CHECK_THROWS_AS((government_step(net, agents, {{0, 5}, 0.1, 0.1, {}}, p, rng)), ParameterError);
  CHECK_THROWS_AS((government_step(net, agents, {{0}, 0.1, 0.1, {}}, p, rng)), StateError);
}

TEST_CASE("engine copies are paired snapshots") {
  const auto net = generate_scale_free(100, 2, 2);
  ExchangeEngine a(net, make_agents(100, 1.0), {}, 4);
  a.run(500);
  ExchangeEngine b = a;
  a.run(500);
  b.run(500);
  CHECK(wealths_of(a.agents()) == wealths_of(b.agents()));
  CHECK(a.network() == b.network());
}

// --- Thermalization --------------------------------------------------------

TEST_CASE("thermalization needs coupling") {
  ExchangeSystem a{single_link(), make_agents(2, 1.0), 0.5, 0.0};
  ExchangeSystem b = a;
  ThermalizeParams p;
  p.coupling = 0;
  CHECK_THROWS_AS(thermalize(a, b, p, 1), ParameterError);
}

TEST_CASE("thermalization keeps the union ledger") {
  const auto net_a = generate_scale_free(300, 2, 1);
  const auto net_b = generate_scale_free(200, 2, 2);
  ExchangeParams pa, pb;
  pa.gamma = 0.3;
  pb.gamma = 0.9;
  ExchangeEngine ea(net_a, make_agents(300, 1.0), pa, 1);
  ExchangeEngine eb(net_b, make_agents(200, 1.0), pb, 2);
  ea.run(10'000);
  eb.run(10'000);
  ThermalizeParams tp;
  tp.coupling = 3;
  tp.steps = 40;
  tp.stride = 10;
  const auto r = thermalize(to_system(ea), to_system(eb), tp, 5);
  CHECK(r.n_a == 300);
  CHECK(r.agents.size() == 500);
  CHECK(r.agents[300].subsystem == Subsystem::S);
  CHECK(r.trajectory.size() == 5);
  CHECK(r.trajectory.back().cross_links > 0);
  CHECK(r.trajectory.back().cross_links <= 120);
  CHECK(ledger_consistent(r.accounts, r.agents));
  CHECK(r.accounts.omega >= ea.accounts().omega + eb.accounts().omega);
}
