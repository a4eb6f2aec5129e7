#include "bdlab/flow.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <fmt/core.h>

#include "bdlab/error.hpp"

namespace bdlab {

namespace {

using boost::math::quadrature::exp_sinh;
using boost::math::quadrature::gauss_kronrod;

constexpr unsigned kMaxDepth = 15;

// Integrand of H0 in s = log u: g(e^s) / (1 - g(e^s)).
double integrand_low(const ModelSpec& model, double s) {
  const long double u = std::exp(static_cast<long double>(s));
  const long double g = g_eval_long(model, u).g;
  return static_cast<double>(g / (1.0L - g));
}

// Integrand of H0 in v = -log(x_inf - u): g(u) (x_inf - u) / (u (1 - g(u))).
double integrand_high(const ModelSpec& model, double x_inf, double v) {
  const long double d = std::exp(-static_cast<long double>(v));
  const long double u = static_cast<long double>(x_inf) - d;
  const long double g = g_eval_long(model, u).g;
  return static_cast<double>(g * d / (u * (1.0L - g)));
}

// Boost's recursion compares an error estimate taken on [-1, 1] with a
// tolerance scaled by the interval, so narrow intervals never terminate.
// Mapping every interval onto [-1, 1] first keeps the two consistent.
double gk(auto&& f, double a, double b, double tolerance) {
  if (!(b > a)) return 0.0;
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  double error = 0.0;
  const double value = half * gauss_kronrod<double, 21>::integrate(
                                  [&](double t) { return f(mid + half * t); }, -1.0, 1.0, kMaxDepth, tolerance,
                                  &error);
  if (!std::isfinite(value)) throw NumericError("H quadrature produced a non-finite value");
  return value;
}

// int_a^b of the H0 integrand, 0 < a <= b < x_inf.
double segment_integral(const ModelSpec& model, double x_inf, double a, double b, double tolerance) {
  if (!(b > a)) return 0.0;
  const double mid = 0.5 * x_inf;
  double total = 0.0;
  if (a < mid) {
    const double top = std::min(b, mid);
    total += gk([&](double s) { return integrand_low(model, s); }, std::log(a), std::log(top), tolerance);
  }
  if (b > mid) {
    // 1 - g(u) cancels as u -> x_inf, leaving about eps_ld * x_inf / d relative
    // noise at distance d. The stopping tolerance follows that floor, and past
    // d = 1e-12 x_inf the integrand is continued at its limiting constant.
    const double va = -std::log(x_inf - std::max(a, mid));
    const double vb = -std::log(x_inf - b);
    const double vc = -std::log(1e-12 * x_inf);
    const double upper = std::min(vb, vc);
    if (upper > va) {
      const double noise = 64.0 * static_cast<double>(std::numeric_limits<long double>::epsilon()) * x_inf /
                           std::exp(-upper);
      total += gk([&](double v) { return integrand_high(model, x_inf, v); }, va, upper,
                  std::max(tolerance, noise));
    }
    if (vb > vc) total += (vb - std::max(va, vc)) * integrand_high(model, x_inf, vc);
  }
  return total;
}

// int_0^x of the H0 integrand for 0 < x <= x_inf / 2, as int_0^inf over t = log x - s.
double tail_integral(const ModelSpec& model, double x, double tolerance) {
  if (x <= 0.0) return 0.0;
  const double log_x = std::log(x);
  exp_sinh<double> integrator;
  double error = 0.0;
  double l1 = 0.0;
  const double value = integrator.integrate(
      [&](double t) {
        const double s = log_x - t;
        return s < -745.0 ? 0.0 : integrand_low(model, s);
      },
      tolerance, &error, &l1);
  if (!std::isfinite(value)) throw NumericError("H quadrature near 0 did not converge");
  return value;
}

// Safeguarded Newton for an increasing F on [a, b] with F(a) <= y <= F(b).
template <class F, class DF>
double solve_increasing(F&& f, DF&& df, double a, double b, double fa, double fb, double y) {
  double x = fb > fa ? a + (b - a) * std::clamp((y - fa) / (fb - fa), 0.0, 1.0) : 0.5 * (a + b);
  const double ftol = 1e-13 * std::max(1.0, std::abs(y));
  for (int it = 0; it < 200; ++it) {
    const double r = f(x) - y;
    if (std::abs(r) <= ftol) return x;
    if (r < 0.0) a = x; else b = x;
    if (b - a <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(std::abs(a), std::abs(b))) {
      return x;
    }
    const double d = df(x);
    double next = (d > 0.0 && std::isfinite(d)) ? x - r / d : 0.5 * (a + b);
    if (!(next > a && next < b)) next = 0.5 * (a + b);
    x = next;
  }
  return x;
}

}  // namespace

double big_h(const ModelSpec& model, double x_inf, double x, double tolerance) {
  if (!(x >= 0.0)) throw DomainError(fmt::format("big_h: negative density {}", x));
  if (x >= x_inf) throw DomainError(fmt::format("big_h: H diverges at x = {} >= x_inf = {}", x, x_inf));
  if (x == 0.0) return 0.0;
  const double mid = 0.5 * x_inf;
  return tail_integral(model, std::min(x, mid), tolerance) +
         (x > mid ? segment_integral(model, x_inf, mid, x, tolerance) : 0.0);
}

GTable::GTable(const ModelAnalysis& analysis, const GTableOptions& options)
    : model_(analysis.model()), x_inf_(analysis.x_inf()), tolerance_(options.tolerance) {
  if (!analysis.has_x_inf()) throw AssumptionError("GTable: model has no x_inf");
  const std::size_t n = std::max<std::size_t>(options.nodes, 2);
  const double lo = options.lo_fraction * x_inf_;
  const double hi = (1.0 - options.lo_fraction) * x_inf_;
  x_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double c = std::cos(std::numbers::pi * static_cast<double>(i) / static_cast<double>(n - 1));
    x_[i] = 0.5 * (lo + hi) - 0.5 * (hi - lo) * c;
  }
  x_.front() = lo;
  x_.back() = hi;

  h_.resize(n);
  g_.resize(n);
  h_[0] = tail(lo);
  for (std::size_t i = 1; i < n; ++i) h_[i] = h_[i - 1] + segment(x_[i - 1], x_[i]);
  for (std::size_t i = 0; i < n; ++i) {
    g_[i] = std::log(x_[i]) + h_[i];
    if (i > 0 && !(g_[i] > g_[i - 1])) {
      throw NumericError(fmt::format("GTable: G not increasing between x = {} and {}", x_[i - 1], x_[i]));
    }
  }
}

double GTable::segment(double a, double b) const {
  return segment_integral(model_, x_inf_, a, b, tolerance_);
}

double GTable::tail(double x) const { return tail_integral(model_, x, tolerance_); }

double GTable::h(double x) const {
  if (!(x >= 0.0)) throw DomainError(fmt::format("H: negative density {}", x));
  if (x >= x_inf_) throw DomainError(fmt::format("H diverges at x = {} >= x_inf = {}", x, x_inf_));
  if (x == 0.0) return 0.0;
  if (x < x_.front()) return tail(x);
  const auto it = std::upper_bound(x_.begin(), x_.end(), x);
  const auto i = static_cast<std::size_t>(it - x_.begin()) - 1;
  return h_[i] + segment(x_[i], x);
}

double GTable::g(double x) const {
  if (!(x > 0.0) || !(x < x_inf_)) {
    throw DomainError(fmt::format("G: x = {} outside (0, x_inf = {})", x, x_inf_));
  }
  return std::log(x) + h(x);
}

double GTable::inverse(double y) const {
  if (std::isnan(y)) throw DomainError("G inverse of NaN");
  if (y == -std::numeric_limits<double>::infinity()) return 0.0;
  if (y == std::numeric_limits<double>::infinity()) return x_inf_;

  auto slope = [&](double x) {
    const double g = g_eval(model_, x).g;
    return 1.0 / (x * (1.0 - g));
  };

  if (y < g_.front()) {
    // Below the table G(x) = log x + H(x) with H small: iterate x = exp(y - H(x)).
    double x = std::exp(y - h_.front());
    if (x == 0.0) return 0.0;
    for (int it = 0; it < 200; ++it) {
      const double next = std::exp(y - tail(x));
      if (next == 0.0) return 0.0;
      if (std::abs(next - x) <= 4.0 * std::numeric_limits<double>::epsilon() * x) return next;
      x = next;
    }
    return std::clamp(x, 0.0, x_.front());
  }

  if (y <= g_.back()) {
    const auto it = std::upper_bound(g_.begin(), g_.end(), y);
    std::size_t i = static_cast<std::size_t>(it - g_.begin());
    i = std::clamp<std::size_t>(i, 1, g_.size() - 1);
    const double a = x_[i - 1];
    const double b = x_[i];
    const double base = h_[i - 1];
    return solve_increasing([&](double x) { return std::log(x) + base + segment(a, x); }, slope, a, b,
                            g_[i - 1], g_[i], y);
  }

  // Above the table: work in v = -log(x_inf - x), in which G grows roughly linearly.
  const double x_top = x_.back();
  const double v0 = -std::log(x_inf_ - x_top);
  auto x_of = [&](double v) { return x_inf_ - std::exp(-v); };
  auto g_of_v = [&](double v) {
    const double x = x_of(v);
    return std::log(x) + h_.back() + segment(x_top, x);
  };
  auto dg_dv = [&](double v) {
    const double x = x_of(v);
    return slope(x) * (x_inf_ - x);
  };
  const double largest = std::nextafter(x_inf_, 0.0);
  double v_lo = v0;
  double g_lo = g_.back();
  double step = 1.0;
  double v_hi = v0 + step;
  while (true) {
    if (x_of(v_hi) >= largest) {
      v_hi = -std::log(x_inf_ - largest);
      const double g_hi = g_of_v(v_hi);
      if (g_hi <= y) return largest;
      break;
    }
    if (g_of_v(v_hi) >= y) break;
    v_lo = v_hi;
    g_lo = g_of_v(v_lo);
    step *= 2.0;
    v_hi = v_lo + step;
  }
  const double v = solve_increasing(g_of_v, dg_dv, v_lo, v_hi, g_lo, g_of_v(v_hi), y);
  return std::min(x_of(v), largest);
}

double big_g(const GTable& table, double x) { return table.g(x); }

double big_g_inv(const GTable& table, double y) { return table.inverse(y); }

double psi(const GTable& table, double x) {
  if (!(x >= 0.0)) throw DomainError(fmt::format("psi: negative argument {}", x));
  if (x == 0.0) return 0.0;
  return table.inverse(std::log(x));
}

double flow_phi(const GTable& table, double s, double t, double x) {
  if (t < s) throw DomainError(fmt::format("flow_phi: backward flow requested (s = {}, t = {})", s, t));
  if (!(x >= 0.0)) throw DomainError(fmt::format("flow_phi: negative density {}", x));
  if (x == 0.0 || t == s) return x;
  if (x >= table.x_inf()) {
    if (x == table.x_inf()) return x;
    return ode_rk(table.model(), s, t, x);
  }
  return table.inverse(table.g(x) + table.growth_rate() * (t - s));
}

double ode_rk(const ModelSpec& model, double s, double t, double x, const OdeOptions& options) {
  if (t < s) throw DomainError(fmt::format("ode_rk: t = {} < s = {}", t, s));
  if (!(x >= 0.0)) throw DomainError(fmt::format("ode_rk: negative density {}", x));
  if (t == s || x == 0.0) return x;

  const double r = model.lambda - model.mu;
  auto f = [&](double y) {
    y = std::max(y, 0.0);
    return r * y * (1.0 - g_eval(model, y).g);
  };

  // Dormand-Prince tableau (autonomous, so the c_i nodes are not needed).
  constexpr double a21 = 1.0 / 5;
  constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                   a65 = -5103.0 / 18656;
  constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                   e6 = 22.0 / 525, e7 = -1.0 / 40;

  double time = s;
  double y = x;
  double h = std::min(0.01 / std::max(r, 1e-300), t - s);
  double k1 = f(y);
  for (std::size_t step = 0; step < options.max_steps; ++step) {
    if (time >= t) return y;
    h = std::min(h, t - time);
    const double k2 = f(y + h * a21 * k1);
    const double k3 = f(y + h * (a31 * k1 + a32 * k2));
    const double k4 = f(y + h * (a41 * k1 + a42 * k2 + a43 * k3));
    const double k5 = f(y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
    const double k6 = f(y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
    const double y_new = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    const double k7 = f(y_new);
    const double err = std::abs(h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7));
    const double scale = options.tolerance * (1.0 + std::max(std::abs(y), std::abs(y_new)));
    const double ratio = err / scale;
    if (ratio <= 1.0) {
      time = (t - time <= h) ? t : time + h;
      y = y_new;
      k1 = k7;
    }
    const double factor = ratio == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(ratio, -0.2), 0.2, 5.0);
    h *= factor;
    if (h < options.min_step && time < t) {
      throw NumericError(fmt::format("ode_rk: step size collapsed to {} at t = {}", h, time));
    }
  }
  throw NumericError("ode_rk: step budget exhausted");
}

void write_gtable_csv(std::ostream& out, const GTable& table) {
  out << "x,G,H\n";
  const auto x = table.nodes();
  const auto g = table.g_values();
  const auto h = table.h_values();
  for (std::size_t i = 0; i < x.size(); ++i) out << fmt::format("{:.17g},{:.17g},{:.17g}\n", x[i], g[i], h[i]);
}

}  // namespace bdlab
