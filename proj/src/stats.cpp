#include "bdlab/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <boost/math/distributions/normal.hpp>
#include <fmt/core.h>

#include "bdlab/error.hpp"

namespace bdlab {

namespace {

std::vector<double> sorted_copy(std::span<const double> xs, const char* who) {
  if (xs.empty()) throw DomainError(fmt::format("{}: empty sample", who));
  std::vector<double> out(xs.begin(), xs.end());
  for (double x : out) {
    if (std::isnan(x)) throw DomainError(fmt::format("{}: NaN in sample", who));
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

EmpiricalDistribution::EmpiricalDistribution(std::vector<double> sample)
    : sorted_(sorted_copy(sample, "EmpiricalDistribution")) {}

double EmpiricalDistribution::cdf(double x) const {
  const auto it = std::upper_bound(sorted_.begin(), sorted_.end(), x);
  return static_cast<double>(it - sorted_.begin()) / static_cast<double>(sorted_.size());
}

double EmpiricalDistribution::cdf_left(double x) const {
  const auto it = std::lower_bound(sorted_.begin(), sorted_.end(), x);
  return static_cast<double>(it - sorted_.begin()) / static_cast<double>(sorted_.size());
}

double ks_mixed(const EmpiricalDistribution& sample, const std::function<double(double)>& cdf) {
  const auto xs = sample.sorted();
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  std::size_t i = 0;
  while (i < xs.size()) {
    const double v = xs[i];
    std::size_t j = i;
    while (j < xs.size() && xs[j] == v) ++j;
    const double below = static_cast<double>(i) / n;  // F_N(v-)
    const double at = static_cast<double>(j) / n;     // F_N(v)
    const double f_at = cdf(v);
    const double f_left = cdf(std::nextafter(v, -std::numeric_limits<double>::infinity()));
    d = std::max({d, std::abs(at - f_at), std::abs(f_left - below)});
    i = j;
  }
  return d;
}

double ks_mixed(std::span<const double> sample, const std::function<double(double)>& cdf) {
  return ks_mixed(EmpiricalDistribution(std::vector<double>(sample.begin(), sample.end())), cdf);
}

double ks_two_sample(std::span<const double> a, std::span<const double> b) {
  const auto xa = sorted_copy(a, "ks_two_sample");
  const auto xb = sorted_copy(b, "ks_two_sample");
  const double na = static_cast<double>(xa.size());
  const double nb = static_cast<double>(xb.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < xa.size() || j < xb.size()) {
    double v;
    if (j == xb.size() || (i < xa.size() && xa[i] <= xb[j])) {
      v = xa[i];
    } else {
      v = xb[j];
    }
    while (i < xa.size() && xa[i] == v) ++i;
    while (j < xb.size() && xb[j] == v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

double wasserstein1(std::span<const double> a, std::span<const double> b) {
  const auto xa = sorted_copy(a, "wasserstein1");
  const auto xb = sorted_copy(b, "wasserstein1");
  std::vector<double> all;
  all.reserve(xa.size() + xb.size());
  std::merge(xa.begin(), xa.end(), xb.begin(), xb.end(), std::back_inserter(all));
  const double na = static_cast<double>(xa.size());
  const double nb = static_cast<double>(xb.size());
  double w = 0.0;
  std::size_t i = 0, j = 0;
  for (std::size_t k = 0; k + 1 < all.size(); ++k) {
    while (i < xa.size() && xa[i] <= all[k]) ++i;
    while (j < xb.size() && xb[j] <= all[k]) ++j;
    w += std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb) * (all[k + 1] - all[k]);
  }
  return w;
}

double dkw_epsilon(std::size_t n, double delta) {
  if (n == 0) throw DomainError("dkw_epsilon: n must be positive");
  if (!(delta > 0.0 && delta < 1.0)) throw DomainError(fmt::format("dkw_epsilon: delta = {} outside (0, 1)", delta));
  return std::sqrt(std::log(2.0 / delta) / (2.0 * static_cast<double>(n)));
}

Interval binom_ci(std::int64_t successes, std::int64_t trials, double delta) {
  if (trials <= 0) throw DomainError("binom_ci: trials must be positive");
  if (successes < 0 || successes > trials) {
    throw DomainError(fmt::format("binom_ci: successes = {} outside [0, {}]", successes, trials));
  }
  if (!(delta > 0.0 && delta < 1.0)) throw DomainError(fmt::format("binom_ci: delta = {} outside (0, 1)", delta));
  const double z = boost::math::quantile(boost::math::normal(), 1.0 - delta / 2.0);
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double centre = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
  const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / (1.0 + z2 / n);
  // The endpoints are exact at the boundary; the formula leaves rounding residue there.
  const double lo = successes == 0 ? 0.0 : std::max(0.0, centre - half);
  const double hi = successes == trials ? 1.0 : std::min(1.0, centre + half);
  return {lo, hi};
}

double mean(std::span<const double> xs) {
  if (xs.empty()) throw DomainError("mean: empty sample");
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double variance(std::span<const double> xs) {
  if (xs.size() < 2) return 0.0;
  const double m = mean(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  return ss / static_cast<double>(xs.size() - 1);
}

double standard_error(std::span<const double> xs) {
  if (xs.empty()) throw DomainError("standard_error: empty sample");
  return std::sqrt(variance(xs) / static_cast<double>(xs.size()));
}

double quantile(std::span<const double> xs, double q) {
  if (!(q >= 0.0 && q <= 1.0)) throw DomainError(fmt::format("quantile: q = {} outside [0, 1]", q));
  const auto s = sorted_copy(xs, "quantile");
  const double h = q * static_cast<double>(s.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, s.size() - 1);
  return s[lo] + (h - static_cast<double>(lo)) * (s[hi] - s[lo]);
}

}  // namespace bdlab
