#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace bdlab {

/// Sorted sample with its empirical CDF.
class EmpiricalDistribution {
 public:
  explicit EmpiricalDistribution(std::vector<double> sample);

  std::size_t size() const noexcept { return sorted_.size(); }
  std::span<const double> sorted() const noexcept { return sorted_; }
  /// F_N(x) = #{i : x_i <= x} / N.
  double cdf(double x) const;
  /// F_N(x-) = #{i : x_i < x} / N.
  double cdf_left(double x) const;

 private:
  std::vector<double> sorted_;
};

/// sup_x |F_N(x) - F(x)| for a reference CDF F that may have atoms.
///
/// The supremum of a difference of two right-continuous step-or-continuous
/// functions is attained at a sample point from one side or the other, so both
/// F_N(v) - F(v) and F(v-) - F_N(v-) are checked at every distinct value v.
/// F(v-) is approximated by F(nextafter(v, -inf)).
double ks_mixed(const EmpiricalDistribution& sample, const std::function<double(double)>& cdf);
double ks_mixed(std::span<const double> sample, const std::function<double(double)>& cdf);

/// sup_x |F_N(x) - G_M(x)|.
double ks_two_sample(std::span<const double> a, std::span<const double> b);

/// Integral of |F_N - G_M|.
double wasserstein1(std::span<const double> a, std::span<const double> b);

/// Dvoretzky-Kiefer-Wolfowitz radius sqrt(log(2/delta) / (2N)).
double dkw_epsilon(std::size_t n, double delta);

struct Interval {
  double lo;
  double hi;
};

/// Wilson score interval for a binomial proportion at level 1 - delta.
Interval binom_ci(std::int64_t successes, std::int64_t trials, double delta = 0.05);

double mean(std::span<const double> xs);
/// Unbiased sample variance; 0 for fewer than two values.
double variance(std::span<const double> xs);
double standard_error(std::span<const double> xs);
/// Linear-interpolation quantile (type 7) for q in [0, 1].
double quantile(std::span<const double> xs, double q);

}  // namespace bdlab
