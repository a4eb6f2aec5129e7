#pragma once

#include <cstdint>

#include "bdlab/flow.hpp"
#include "bdlab/rng.hpp"

namespace bdlab {

/// Law of the martingale limit W of e^{-(lambda-mu)t} Y_t for the linear BD
/// process started at 1: an atom mu/lambda at 0 plus an exponential tail of
/// rate 1 - mu/lambda, so that E W = 1.
struct WLaw {
  double lambda;
  double mu;

  WLaw(double lambda, double mu);

  double atom() const noexcept { return mu / lambda; }
  double tail_rate() const noexcept { return 1.0 - mu / lambda; }
};

double w_cdf(const WLaw& law, double w);
double w_sample(const WLaw& law, RngStream& rng);

/// Law of the random initial condition w0: G0^{-1}(log W) when alpha = 0, the
/// point mass at G0^{-1}(0) when alpha is in (0, 1).
struct W0Law {
  WLaw w;
  const GTable* table;
  bool degenerate;  // alpha in (0, 1)

  W0Law(WLaw w, const GTable& table, double alpha);
};

/// P[w0 <= u] for 0 <= u < x_inf, computed through G rather than by sampling.
double w0_cdf(const W0Law& law, double u);

// Transient law of the linear BD process with per-capita rates gamma (birth)
// and beta (death), gamma > beta >= 0, started from one individual.

/// P[Z_t > r].
double linear_bd_tail(double gamma, double beta, double t, std::int64_t r);

/// P[Z_t = 0].
double linear_bd_zero(double gamma, double beta, double t);

/// Exact draw of Z_t: survival with probability P[Z_t > 0], then 1 plus a
/// geometric number of extra individuals.
std::int64_t linear_bd_sample(double gamma, double beta, double t, RngStream& rng);

/// P[Z_t <= z]; 0 for z < 0.
double linear_bd_cdf(double gamma, double beta, double t, double z);

struct LinearBdMoments {
  double mean;
  double var_bound;
};

/// E Z_t = e^{(gamma-beta)t} and the bound Var Z_t <= (gamma+beta)/(gamma-beta) e^{2(gamma-beta)t}.
LinearBdMoments linear_bd_moments(double gamma, double beta, double t);

/// Chebyshev bound (gamma+beta)/(M eps^2 (gamma-beta)) on
/// P[|M^{-1} e^{-(gamma-beta)t} Z_t - 1| >= eps] for a start at M, clamped to 1.
double chebyshev_dev_bound(double gamma, double beta, double M, double eps);

}  // namespace bdlab
