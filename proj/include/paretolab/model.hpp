#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace paretolab {

enum class Subsystem : std::uint8_t { Core, S, External };

/// One economic agent. `wealth` is in currency units and always positive.
struct AgentState {
  std::size_t id = 0;
  double wealth = 1.0;
  Subsystem subsystem = Subsystem::Core;
};

/// Macroscopic ledgers of a run.
///   omega    gross product: cumulative money leg of all exchanges
///   lambda   total wealth, sum of agent wealth
///   n_agents constant over a run
struct SystemAccounts {
  double omega = 0.0;
  double lambda = 0.0;
  std::size_t n_agents = 0;
  std::uint64_t step = 0;
};

/// Correlation coefficient of individual growth with gross-product growth
/// (1 independent, 2 perfectly correlated) and the slow production rate.
struct CorrelationParams {
  double alpha_target = 2.0;
  double beta = 0.0;

  /// Throws ParameterError unless 1 < alpha_target <= 2 and beta >= 0.
  void validate() const;
};

/// Per-agent E_i = alpha ln(x_i) - ln(denominator) with its sums.
struct ConservedQuantity {
  std::vector<double> e_per_agent;
  double e_total = 0.0;
  double e_subsystem = 0.0;
};

/// Which ledger divides x_i^alpha inside E_i. Omega is the default; Lambda is
/// kept for sensitivity checks.
enum class EDenominator { Omega, Lambda };

/// Ledger tolerance relative to lambda.
inline constexpr double kLedgerTolerance = 1e-9;

std::vector<AgentState> make_agents(std::size_t n, double wealth);

double total_wealth(std::span<const AgentState> agents) noexcept;

/// Accounts for a fresh population; omega starts at the initial total wealth
/// so that log(omega) is defined from step 0.
SystemAccounts make_accounts(std::span<const AgentState> agents);

/// E_i = alpha ln(wealth_i) - ln(denominator). `e_subsystem` sums agents
/// tagged Subsystem::S. Throws DomainError naming the offending agent for a
/// non-positive wealth, and for a non-positive denominator.
ConservedQuantity compute_conserved(std::span<const AgentState> agents, double alpha,
                                    double denominator);

/// Same, with the denominator taken from `accounts` per `which`.
ConservedQuantity compute_conserved(std::span<const AgentState> agents, double alpha,
                                    const SystemAccounts& accounts,
                                    EDenominator which = EDenominator::Omega);

/// Adds a non-negative money leg to omega. Stepping is not touched.
SystemAccounts record_exchange(SystemAccounts accounts, double money_leg);

/// Gini coefficient by the sorted-rank formula. Requires a non-empty list of
/// positive values.
double gini(std::span<const double> wealths);

/// True when |lambda - sum wealth| <= kLedgerTolerance * lambda.
bool ledger_consistent(const SystemAccounts& accounts, std::span<const AgentState> agents) noexcept;

std::vector<double> wealths_of(std::span<const AgentState> agents);

}  // namespace paretolab
