#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "bdlab/model.hpp"

namespace bdlab {

/// H0(x) = int_0^x g(u) / (u (1 - g(u))) du by adaptive quadrature, for
/// 0 <= x < x_inf. Below x_inf/2 the integral is taken in s = log u, which
/// removes the 1/u factor; above it in v = -log(x_inf - u), which removes the
/// pole at x_inf. Throws DomainError for x >= x_inf.
double big_h(const ModelSpec& model, double x_inf, double x, double tolerance = 1e-12);

struct GTableOptions {
  std::size_t nodes = 4096;
  /// Table spans [lo_fraction * x_inf, (1 - lo_fraction) * x_inf].
  double lo_fraction = 1e-8;
  double tolerance = 1e-12;
};

/// G0(x) = log x + H0(x) on (0, x_inf), tabulated on Chebyshev-spaced nodes.
///
/// Evaluation between nodes integrates from the nearest node below, so values
/// carry quadrature accuracy rather than interpolation error. Outside the
/// table the same integrals extend the function exactly up to x_inf and down
/// to 0. Immutable after construction.
class GTable {
 public:
  explicit GTable(const ModelAnalysis& analysis, const GTableOptions& options = {});

  const ModelSpec& model() const noexcept { return model_; }
  double x_inf() const noexcept { return x_inf_; }
  double x_lo() const noexcept { return x_.front(); }
  double x_hi() const noexcept { return x_.back(); }
  /// lambda - mu.
  double growth_rate() const noexcept { return model_.lambda - model_.mu; }

  std::span<const double> nodes() const noexcept { return x_; }
  std::span<const double> g_values() const noexcept { return g_; }
  std::span<const double> h_values() const noexcept { return h_; }

  double h(double x) const;
  double g(double x) const;
  double inverse(double y) const;

 private:
  double segment(double a, double b) const;
  double tail(double x) const;

  ModelSpec model_;
  double x_inf_;
  double tolerance_;
  std::vector<double> x_;
  std::vector<double> g_;
  std::vector<double> h_;
};

/// G0(x); x in (0, x_inf).
double big_g(const GTable& table, double x);

/// Unique x with G0(x) = y; -inf maps to 0 and +inf to x_inf.
double big_g_inv(const GTable& table, double y);

/// Psi(x) = G0^{-1}(log x) for x > 0 and Psi(0) = 0.
double psi(const GTable& table, double x);

/// Flow of x' = (lambda-mu) x (1 - g(x)) from time s to t >= s.
///
/// For 0 < x < x_inf this is G0^{-1}(G0(x) + (lambda-mu)(t-s)). States above
/// x_inf (a simulated density can overshoot the equilibrium) are carried by
/// ode_rk, since G0 is only a bijection on (0, x_inf).
double flow_phi(const GTable& table, double s, double t, double x);

struct OdeOptions {
  double tolerance = 1e-9;
  double min_step = 1e-13;
  std::size_t max_steps = 10'000'000;
};

/// Dormand-Prince 5(4) integration of x' = (lambda-mu) x (1 - g(x)) from s to t.
double ode_rk(const ModelSpec& model, double s, double t, double x, const OdeOptions& options = {});

/// Writes "x,G,H" rows for every table node.
void write_gtable_csv(std::ostream& out, const GTable& table);

}  // namespace bdlab
