#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace paretolab {

/// Continuous Pareto fit p(x) = alpha x_min^alpha / x^(alpha + 1), x >= x_min.
struct ParetoFit {
  double alpha_hat = 0.0;
  double x_min = 0.0;
  double std_error = 0.0;    // alpha_hat / sqrt(n_tail)
  double ks_distance = 0.0;  // sup |F_emp - F_fit| over the tail
  std::size_t n_tail = 0;
};

/// Fits below this many tail points are rejected.
inline constexpr std::size_t kMinTailPoints = 10;

/// Width, in units of 1/sqrt(n_tail) at the KS minimum, of the band inside
/// which x_min candidates count as tied.
inline constexpr double kXminTieBand = 0.5;

/// Maximum-likelihood exponent over samples >= x_min:
/// alpha = n_tail / sum ln(x_i / x_min). Throws InsufficientDataError for
/// fewer than 10 tail points or a degenerate tail (all points at x_min), and
/// DomainError for x_min <= 0.
ParetoFit pareto_mle(std::span<const double> samples, double x_min);

/// Hill estimator on the k largest order statistics:
/// alpha = k / sum_{i=1..k} ln(x_(i) / x_(k+1)), descending order.
/// Throws ParameterError unless 10 <= k < n.
double hill_estimator(std::span<const double> samples, std::size_t k);

/// Tail onset minimising the KS distance of the MLE fit above it. Candidates
/// are unique sample values, log-spaced down to at most 200. Among candidates
/// tied with the minimum (see kXminTieBand) the lowest is returned. Throws
/// InsufficientDataError below 100 samples or if no candidate keeps 10 tail
/// points.
double select_xmin(std::span<const double> samples);

/// select_xmin followed by pareto_mle.
ParetoFit fit_pareto(std::span<const double> samples);

/// Hill estimate on the top decile (k = n / 10). NaN below 110 samples.
/// Cheap enough to evaluate at every trajectory sample.
double top_decile_alpha(std::span<const double> samples);

/// Asymptotic one-sample KS critical value at the 1% level, 1.63 / sqrt(n).
double ks_critical_value_1pct(std::size_t n);

/// True when |mle - hill| exceeds `sigmas` joint standard errors, using
/// fit.std_error and hill / sqrt(k) for the Hill side.
bool estimates_disagree(const ParetoFit& mle, double hill_alpha, std::size_t k,
                        double sigmas = 3.0);

struct BootstrapInterval {
  double lower = 0.0;
  double upper = 0.0;
  std::size_t resamples = 0;
};

/// Percentile bootstrap of the MLE exponent at fixed x_min. Resamples are
/// evaluated in index order, so the result depends only on `seed`.
BootstrapInterval bootstrap_alpha(std::span<const double> samples, double x_min,
                                  std::size_t resamples, std::uint64_t seed, double level = 0.95);

/// One sampled point of a flow trajectory.
struct FlowPoint {
  double mean_log_wealth = 0.0;
  double log_omega = 0.0;
};

struct FlowFit {
  double alpha_hat = 0.0;
  double alpha_std_error = 0.0;
  double slope = 0.0;
  double slope_std_error = 0.0;
  double intercept = 0.0;
  std::size_t n_increments = 0;
};

/// Ordinary least squares of the increments of mean log-wealth against the
/// increments of log omega; alpha = 1 / slope with the slope error propagated.
/// Throws DataError for fewer than 30 points, non-increasing omega or
/// constant omega increments.
FlowFit alpha_from_flows(std::span<const FlowPoint> trajectory);

/// Integrated autocorrelation time with Sokal's automatic window (c = 5), in
/// units of the series spacing. Returns at least 1.
double integrated_autocorrelation_time(std::span<const double> series);

}  // namespace paretolab
