#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "hcpi/core/error.hpp"
#include "hcpi/core/random.hpp"
#include "hcpi/gate/normal.hpp"

namespace hcpi::gate {

struct BcaResult {
  double lower_bound = 0.0;
  double sample_mean = 0.0;
  double bias_proportion = 0.0;  // share of bootstrap means below the sample mean
  double z0 = 0.0;
  double acceleration = 0.0;
  double adjusted_level = 0.0;   // beta, in (0, 1)
  double bootstrap_min = 0.0;
  double bootstrap_max = 0.0;
};

/// Inclusive-method percentile with linear interpolation, q in [0, 1].
inline double percentile_sorted(std::span<const double> sorted, double q) {
  require(!sorted.empty(), "percentile: empty sample");
  q = std::clamp(q, 0.0, 1.0);
  const double h = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

/// Jackknife acceleration from leave-one-out means; 0 when all of them agree.
inline double jackknife_acceleration(std::span<const double> xs) {
  const std::size_t n = xs.size();
  double total = 0.0;
  for (double x : xs) total += x;
  std::vector<double> loo(n);
  double loo_mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    loo[i] = (total - xs[i]) / static_cast<double>(n - 1);
    loo_mean += loo[i];
  }
  loo_mean /= static_cast<double>(n);
  double num = 0.0;
  double den = 0.0;
  for (double y : loo) {
    const double d = loo_mean - y;
    num += d * d * d;
    den += d * d;
  }
  if (den == 0.0) return 0.0;
  return num / (6.0 * std::pow(den, 1.5));
}

/// Bias-corrected and accelerated bootstrap lower bound on the mean of `xs`
/// at confidence level `delta` with `resamples` bootstrap means.
inline BcaResult bca_lower_bound(std::span<const double> xs, double delta, int resamples, Rng& rng) {
  require(xs.size() >= 2, "bca_lower_bound: need at least two samples");
  require(resamples >= 100, "bca_lower_bound: need at least 100 bootstrap resamples");
  require(delta > 0.5 && delta < 1.0, "bca_lower_bound: confidence level must lie in (0.5, 1)");
  const std::size_t n = xs.size();
  BcaResult r;
  const auto [lo, hi] = std::minmax_element(xs.begin(), xs.end());
  if (*lo == *hi) {
    // every resample mean equals the common value
    r.lower_bound = r.sample_mean = r.bootstrap_min = r.bootstrap_max = *lo;
    r.adjusted_level = 1.0 - delta;
    return r;
  }
  for (double x : xs) r.sample_mean += x;
  r.sample_mean /= static_cast<double>(n);

  std::vector<double> means(static_cast<std::size_t>(resamples));
  for (auto& m : means) {
    double s = 0.0;
    for (std::size_t k = 0; k < n; ++k) s += xs[uniform_index(rng, n)];
    m = s / static_cast<double>(n);
  }

  std::size_t below = 0;
  for (double m : means)
    if (m < r.sample_mean) ++below;
  const double b = static_cast<double>(resamples);
  r.bias_proportion = static_cast<double>(below) / b;
  r.z0 = normal_quantile(std::clamp(r.bias_proportion, 1.0 / b, 1.0 - 1.0 / b));
  r.acceleration = jackknife_acceleration(xs);

  const double z_alpha = normal_quantile(1.0 - delta);
  const double shifted = r.z0 + z_alpha;
  r.adjusted_level = normal_cdf(r.z0 + shifted / (1.0 - r.acceleration * shifted));

  std::sort(means.begin(), means.end());
  r.bootstrap_min = means.front();
  r.bootstrap_max = means.back();
  r.lower_bound = percentile_sorted(means, r.adjusted_level);
  return r;
}

}  // namespace hcpi::gate
