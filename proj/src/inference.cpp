#include "paretolab/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "paretolab/errors.hpp"
#include "paretolab/rng.hpp"

namespace paretolab {

namespace {

// KS distance of an ascending tail against 1 - (x_min / x)^alpha.
double ks_sorted(std::span<const double> tail, double x_min, double alpha) {
  const auto n = static_cast<double>(tail.size());
  double d = 0.0;
  for (std::size_t i = 0; i < tail.size(); ++i) {
    const double cdf = 1.0 - std::pow(x_min / tail[i], alpha);
    d = std::max({d, static_cast<double>(i + 1) / n - cdf, cdf - static_cast<double>(i) / n});
  }
  return std::min(d, 1.0);
}

ParetoFit fit_sorted_tail(std::span<const double> tail, double x_min, double log_sum) {
  const std::size_t n = tail.size();
  if (n < kMinTailPoints) {
    throw InsufficientDataError("Pareto fit needs at least 10 samples >= x_min, got " +
                                std::to_string(n));
  }
  const double denom = log_sum - static_cast<double>(n) * std::log(x_min);
  if (!(denom > 0.0)) {
    throw InsufficientDataError("degenerate tail: every sample equals x_min");
  }
  ParetoFit fit;
  fit.x_min = x_min;
  fit.n_tail = n;
  fit.alpha_hat = static_cast<double>(n) / denom;
  fit.std_error = fit.alpha_hat / std::sqrt(static_cast<double>(n));
  fit.ks_distance = ks_sorted(tail, x_min, fit.alpha_hat);
  return fit;
}

std::vector<double> sorted_positive(std::span<const double> samples) {
  std::vector<double> v(samples.begin(), samples.end());
  for (double x : v) {
    if (!(x > 0.0) || !std::isfinite(x)) throw DomainError("samples must be finite and positive");
  }
  std::sort(v.begin(), v.end());
  return v;
}

}  // namespace

ParetoFit pareto_mle(std::span<const double> samples, double x_min) {
  if (!(x_min > 0.0)) throw DomainError("x_min must be positive");
  std::vector<double> tail;
  tail.reserve(samples.size());
  double log_sum = 0.0;
  for (double x : samples) {
    if (x >= x_min) {
      tail.push_back(x);
      log_sum += std::log(x);
    }
  }
  std::sort(tail.begin(), tail.end());
  return fit_sorted_tail(tail, x_min, log_sum);
}

double hill_estimator(std::span<const double> samples, std::size_t k) {
  const std::size_t n = samples.size();
  if (k < kMinTailPoints || k >= n) {
    throw ParameterError("Hill estimator needs 10 <= k < n (k=" + std::to_string(k) +
                         ", n=" + std::to_string(n) + ")");
  }
  std::vector<double> v(samples.begin(), samples.end());
  // Descending order: v[0..k-1] are the k largest, v[k] is x_(k+1).
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(k), v.end(),
                   std::greater<>());
  const double threshold = v[k];
  if (!(threshold > 0.0)) throw DomainError("Hill estimator needs positive order statistics");
  double sum = 0.0;
  for (std::size_t i = 0; i < k; ++i) sum += std::log(v[i] / threshold);
  if (!(sum > 0.0)) throw InsufficientDataError("Hill estimator: tail is constant");
  return static_cast<double>(k) / sum;
}

double select_xmin(std::span<const double> samples) {
  if (samples.size() < 100) {
    throw InsufficientDataError("x_min selection needs at least 100 samples, got " +
                                std::to_string(samples.size()));
  }
  const auto sorted = sorted_positive(samples);
  const std::size_t n = sorted.size();

  // suffix_log[i] = sum of ln(sorted[j]) for j >= i.
  std::vector<double> suffix_log(n + 1, 0.0);
  for (std::size_t i = n; i-- > 0;) suffix_log[i] = suffix_log[i + 1] + std::log(sorted[i]);

  // Start index of each run of equal values, restricted to runs that leave
  // at least kMinTailPoints samples at or above them.
  std::vector<std::size_t> starts;
  for (std::size_t i = 0; i + kMinTailPoints <= n; ++i) {
    if (i == 0 || sorted[i] != sorted[i - 1]) starts.push_back(i);
  }
  if (starts.empty()) throw InsufficientDataError("no x_min candidate keeps 10 tail points");

  constexpr std::size_t kMaxCandidates = 200;
  std::vector<std::size_t> candidates;
  if (starts.size() <= kMaxCandidates) {
    candidates = starts;
  } else {
    const double lo = std::log(sorted[starts.front()]);
    const double hi = std::log(sorted[starts.back()]);
    for (std::size_t c = 0; c < kMaxCandidates; ++c) {
      const double target = std::exp(lo + (hi - lo) * static_cast<double>(c) /
                                              static_cast<double>(kMaxCandidates - 1));
      // First run start whose value is >= target.
      auto it = std::lower_bound(starts.begin(), starts.end(), target,
                                 [&](std::size_t idx, double t) { return sorted[idx] < t; });
      if (it == starts.end()) it = std::prev(starts.end());
      if (candidates.empty() || candidates.back() != *it) candidates.push_back(*it);
    }
  }

  std::vector<double> ks(candidates.size(), std::numeric_limits<double>::infinity());
  std::size_t best = candidates.size();
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    const std::size_t idx = candidates[c];
    std::span<const double> tail(sorted.data() + idx, n - idx);
    const double x_min = sorted[idx];
    const double denom = suffix_log[idx] - static_cast<double>(tail.size()) * std::log(x_min);
    if (!(denom > 0.0)) continue;
    ks[c] = ks_sorted(tail, x_min, static_cast<double>(tail.size()) / denom);
    if (best == candidates.size() || ks[c] < ks[best]) best = c;
  }
  if (best == candidates.size()) {
    throw InsufficientDataError("no x_min candidate yields a usable fit");
  }
  // KS distances of nested tails differ by sampling noise of order
  // 1/sqrt(n_tail); candidates within that band of the minimum are tied and
  // the lowest one wins, so clean power laws are not truncated at random.
  const double band =
      kXminTieBand / std::sqrt(static_cast<double>(n - candidates[best]));
  for (std::size_t c = 0; c < best; ++c) {
    if (ks[c] <= ks[best] + band) return sorted[candidates[c]];
  }
  return sorted[candidates[best]];
}

ParetoFit fit_pareto(std::span<const double> samples) {
  return pareto_mle(samples, select_xmin(samples));
}

double top_decile_alpha(std::span<const double> samples) {
  const std::size_t k = samples.size() / 10;
  if (k < kMinTailPoints + 1) return std::numeric_limits<double>::quiet_NaN();
  return hill_estimator(samples, k);
}

double ks_critical_value_1pct(std::size_t n) {
  return 1.63 / std::sqrt(static_cast<double>(n));
}

bool estimates_disagree(const ParetoFit& mle, double hill_alpha, std::size_t k, double sigmas) {
  const double hill_se = hill_alpha / std::sqrt(static_cast<double>(k));
  const double joint = std::sqrt(mle.std_error * mle.std_error + hill_se * hill_se);
  return std::abs(mle.alpha_hat - hill_alpha) > sigmas * joint;
}

BootstrapInterval bootstrap_alpha(std::span<const double> samples, double x_min,
                                  std::size_t resamples, std::uint64_t seed, double level) {
  if (resamples < 2) throw ParameterError("bootstrap needs at least 2 resamples");
  if (!(level > 0.0 && level < 1.0)) throw ParameterError("bootstrap level must be in (0, 1)");
  std::vector<double> alphas;
  alphas.reserve(resamples);
  std::vector<double> draw(samples.size());
  for (std::size_t r = 0; r < resamples; ++r) {
    Rng rng(derive_seed(seed, r));
    for (auto& x : draw) x = samples[uniform_index(rng, samples.size())];
    try {
      alphas.push_back(pareto_mle(draw, x_min).alpha_hat);
    } catch (const InsufficientDataError&) {
      // A resample can lose its tail; it carries no information.
    }
  }
  if (alphas.size() < 2) throw InsufficientDataError("bootstrap produced no usable resamples");
  std::sort(alphas.begin(), alphas.end());
  const auto at = [&](double q) {
    const double pos = q * static_cast<double>(alphas.size() - 1);
    const auto i = static_cast<std::size_t>(pos);
    const double frac = pos - static_cast<double>(i);
    return i + 1 < alphas.size() ? alphas[i] * (1 - frac) + alphas[i + 1] * frac : alphas[i];
  };
  const double tail = (1.0 - level) / 2.0;
  return {at(tail), at(1.0 - tail), alphas.size()};
}

FlowFit alpha_from_flows(std::span<const FlowPoint> trajectory) {
  if (trajectory.size() < 30) {
    throw DataError("flow regression needs at least 30 trajectory points, got " +
                    std::to_string(trajectory.size()));
  }
  const std::size_t m = trajectory.size() - 1;
  std::vector<double> dx(m), dy(m);
  for (std::size_t i = 0; i < m; ++i) {
    dx[i] = trajectory[i + 1].log_omega - trajectory[i].log_omega;
    dy[i] = trajectory[i + 1].mean_log_wealth - trajectory[i].mean_log_wealth;
    if (!(dx[i] > 0.0)) throw DataError("omega must be strictly increasing along the trajectory");
  }
  const double mx = std::accumulate(dx.begin(), dx.end(), 0.0) / static_cast<double>(m);
  const double my = std::accumulate(dy.begin(), dy.end(), 0.0) / static_cast<double>(m);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    sxx += (dx[i] - mx) * (dx[i] - mx);
    sxy += (dx[i] - mx) * (dy[i] - my);
  }
  if (!(sxx > 0.0)) throw DataError("omega increments are constant; slope is not identified");
  FlowFit fit;
  fit.n_increments = m;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ssr = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double r = dy[i] - fit.intercept - fit.slope * dx[i];
    ssr += r * r;
  }
  fit.slope_std_error = std::sqrt(ssr / static_cast<double>(m - 2) / sxx);
  fit.alpha_hat = 1.0 / fit.slope;
  fit.alpha_std_error = fit.slope_std_error / (fit.slope * fit.slope);
  return fit;
}

double integrated_autocorrelation_time(std::span<const double> series) {
  const std::size_t n = series.size();
  if (n < 4) return 1.0;
  const double mean = std::accumulate(series.begin(), series.end(), 0.0) / static_cast<double>(n);
  std::vector<double> c(series.begin(), series.end());
  for (auto& x : c) x -= mean;
  double c0 = 0.0;
  for (double x : c) c0 += x * x;
  if (!(c0 > 0.0)) return 1.0;
  double tau = 1.0;
  for (std::size_t t = 1; t < n / 2; ++t) {
    double ct = 0.0;
    for (std::size_t i = 0; i + t < n; ++i) ct += c[i] * c[i + t];
    tau += 2.0 * ct / c0;
    if (static_cast<double>(t) >= 5.0 * tau) break;
  }
  return std::max(tau, 1.0);
}

}  // namespace paretolab
