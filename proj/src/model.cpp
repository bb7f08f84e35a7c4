#include "paretolab/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "paretolab/errors.hpp"

namespace paretolab {

void CorrelationParams::validate() const {
  if (!(alpha_target > 1.0 && alpha_target <= 2.0)) {
    throw ParameterError("alpha_target must be in (1, 2], got " + std::to_string(alpha_target));
  }
  if (!(beta >= 0.0) || !std::isfinite(beta)) {
    throw ParameterError("beta must be finite and >= 0");
  }
}

std::vector<AgentState> make_agents(std::size_t n, double wealth) {
  if (!(wealth > 0.0)) throw DomainError("initial wealth must be positive");
  std::vector<AgentState> agents(n);
  for (std::size_t i = 0; i < n; ++i) agents[i] = AgentState{i, wealth, Subsystem::Core};
  return agents;
}

double total_wealth(std::span<const AgentState> agents) noexcept {
  double sum = 0.0;
  for (const auto& a : agents) sum += a.wealth;
  return sum;
}

SystemAccounts make_accounts(std::span<const AgentState> agents) {
  SystemAccounts acc;
  acc.lambda = total_wealth(agents);
  acc.omega = acc.lambda;
  acc.n_agents = agents.size();
  acc.step = 0;
  return acc;
}

ConservedQuantity compute_conserved(std::span<const AgentState> agents, double alpha,
                                    double denominator) {
  if (!(denominator > 0.0)) {
    throw DomainError("conserved quantity needs a positive denominator, got " +
                      std::to_string(denominator));
  }
  const double log_den = std::log(denominator);
  ConservedQuantity out;
  out.e_per_agent.reserve(agents.size());
  for (const auto& a : agents) {
    if (!(a.wealth > 0.0)) {
      throw DomainError("agent " + std::to_string(a.id) + " has non-positive wealth " +
                        std::to_string(a.wealth));
    }
    const double e = alpha * std::log(a.wealth) - log_den;
    out.e_per_agent.push_back(e);
    out.e_total += e;
    if (a.subsystem == Subsystem::S) out.e_subsystem += e;
  }
  return out;
}

ConservedQuantity compute_conserved(std::span<const AgentState> agents, double alpha,
                                    const SystemAccounts& accounts, EDenominator which) {
  return compute_conserved(agents, alpha,
                           which == EDenominator::Omega ? accounts.omega : accounts.lambda);
}

SystemAccounts record_exchange(SystemAccounts accounts, double money_leg) {
  if (!(money_leg >= 0.0)) {
    throw DomainError("money leg must be >= 0, got " + std::to_string(money_leg));
  }
  accounts.omega += money_leg;
  return accounts;
}

double gini(std::span<const double> wealths) {
  if (wealths.empty()) throw DomainError("gini of an empty list");
  std::vector<double> sorted(wealths.begin(), wealths.end());
  for (double w : sorted) {
    if (!(w > 0.0)) throw DomainError("gini requires positive entries, got " + std::to_string(w));
  }
  std::sort(sorted.begin(), sorted.end());
  const auto n = static_cast<double>(sorted.size());
  double weighted = 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    weighted += static_cast<double>(i + 1) * sorted[i];
    total += sorted[i];
  }
  const double g = 2.0 * weighted / (n * total) - (n + 1.0) / n;
  return std::max(g, 0.0);
}

bool ledger_consistent(const SystemAccounts& accounts,
                       std::span<const AgentState> agents) noexcept {
  return std::abs(accounts.lambda - total_wealth(agents)) <= kLedgerTolerance * accounts.lambda;
}

std::vector<double> wealths_of(std::span<const AgentState> agents) {
  std::vector<double> w(agents.size());
  std::transform(agents.begin(), agents.end(), w.begin(),
                 [](const AgentState& a) { return a.wealth; });
  return w;
}

}  // namespace paretolab
