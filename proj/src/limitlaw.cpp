#include "bdlab/limitlaw.hpp"

#include <cmath>
#include <limits>

#include <fmt/core.h>

#include "bdlab/error.hpp"

namespace bdlab {

namespace {

void require_supercritical(double gamma, double beta) {
  if (!(gamma > beta) || !(beta >= 0.0)) {
    throw DomainError(fmt::format("linear BD formulas need gamma > beta >= 0 (gamma={}, beta={})", gamma, beta));
  }
}

// eta_t = (beta/gamma) e^{-(gamma-beta)t}, and q = (gamma/beta - 1) eta_t / (1 - eta_t)
// rewritten without the division by beta so that beta = 0 is covered.
struct Transient {
  double eta;
  double q;
};

Transient transient(double gamma, double beta, double t) {
  const double decay = std::exp(-(gamma - beta) * t);
  const double eta = (beta / gamma) * decay;
  const double q = ((gamma - beta) / gamma) * decay / (1.0 - eta);
  return {eta, q};
}

}  // namespace

WLaw::WLaw(double lambda_, double mu_) : lambda(lambda_), mu(mu_) {
  if (!(lambda > mu) || !(mu >= 0.0)) {
    throw DomainError(fmt::format("WLaw needs lambda > mu >= 0 (lambda={}, mu={})", lambda, mu));
  }
}

double w_cdf(const WLaw& law, double w) {
  if (w < 0.0) return 0.0;
  if (w == std::numeric_limits<double>::infinity()) return 1.0;
  const double rate = law.tail_rate();
  return 1.0 - rate * std::exp(-rate * w);
}

double w_sample(const WLaw& law, RngStream& rng) {
  if (rng.uniform() < law.atom()) return 0.0;
  return rng.exponential() / law.tail_rate();
}

W0Law::W0Law(WLaw w_, const GTable& table_, double alpha) : w(w_), table(&table_), degenerate(alpha > 0.0) {
  if (!(alpha >= 0.0 && alpha < 1.0)) throw DomainError(fmt::format("W0Law: alpha = {} outside [0, 1)", alpha));
}

double w0_cdf(const W0Law& law, double u) {
  const double x_inf = law.table->x_inf();
  if (!(u >= 0.0) || !(u < x_inf)) {
    throw DomainError(fmt::format("w0_cdf: u = {} outside [0, x_inf = {})", u, x_inf));
  }
  if (law.degenerate) return u >= big_g_inv(*law.table, 0.0) ? 1.0 : 0.0;
  if (u == 0.0) return w_cdf(law.w, 0.0);
  // w0 <= u  <=>  W <= exp(G(u)).
  return w_cdf(law.w, std::exp(big_g(*law.table, u)));
}

double linear_bd_tail(double gamma, double beta, double t, std::int64_t r) {
  require_supercritical(gamma, beta);
  if (!(t >= 0.0)) throw DomainError(fmt::format("linear_bd_tail: negative time {}", t));
  if (r < 0) return 1.0;
  const auto [eta, q] = transient(gamma, beta, t);
  const double survive = (1.0 - beta / gamma) / (1.0 - eta);
  if (r == 0) return survive;
  if (q >= 1.0) return 0.0;
  // Log-space keeps large r and large t finite.
  return std::exp(std::log(survive) + static_cast<double>(r) * std::log1p(-q));
}

double linear_bd_zero(double gamma, double beta, double t) {
  require_supercritical(gamma, beta);
  if (!(t >= 0.0)) throw DomainError(fmt::format("linear_bd_zero: negative time {}", t));
  const auto [eta, q] = transient(gamma, beta, t);
  (void)q;
  return beta / gamma - (eta / (1.0 - eta)) * (1.0 - beta / gamma);
}

std::int64_t linear_bd_sample(double gamma, double beta, double t, RngStream& rng) {
  require_supercritical(gamma, beta);
  if (!(t >= 0.0)) throw DomainError(fmt::format("linear_bd_sample: negative time {}", t));
  const auto [eta, q] = transient(gamma, beta, t);
  const double survive = (1.0 - beta / gamma) / (1.0 - eta);
  if (!(rng.uniform() < survive)) return 0;
  if (q >= 1.0) return 1;
  // Given survival, Z_t - 1 is geometric: P[Z_t - 1 >= r] = (1 - q)^r.
  const double extra = std::floor(std::log(rng.uniform()) / std::log1p(-q));
  if (!(extra < 9.0e18)) throw NumericError("linear_bd_sample: population exceeds the 64-bit range");
  return 1 + static_cast<std::int64_t>(extra);
}

double linear_bd_cdf(double gamma, double beta, double t, double z) {
  if (z < 0.0) return 0.0;
  if (z == std::numeric_limits<double>::infinity()) return 1.0;
  return 1.0 - linear_bd_tail(gamma, beta, t, static_cast<std::int64_t>(std::floor(z)));
}

LinearBdMoments linear_bd_moments(double gamma, double beta, double t) {
  require_supercritical(gamma, beta);
  const double growth = (gamma - beta) * t;
  return {std::exp(growth), (gamma + beta) / (gamma - beta) * std::exp(2.0 * growth)};
}

double chebyshev_dev_bound(double gamma, double beta, double M, double eps) {
  require_supercritical(gamma, beta);
  if (!(M >= 1.0) || !(eps > 0.0)) {
    throw DomainError(fmt::format("chebyshev_dev_bound: need M >= 1 and eps > 0 (M={}, eps={})", M, eps));
  }
  return std::min(1.0, (gamma + beta) / (M * eps * eps * (gamma - beta)));
}

}  // namespace bdlab
