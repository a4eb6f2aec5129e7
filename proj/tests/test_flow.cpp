#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>
#include <string>

#include "bdlab/error.hpp"
#include "bdlab/flow.hpp"
#include "bdlab/model.hpp"
#include "oracles.hpp"

using namespace bdlab;

namespace {

ModelSpec make(RegulationKind kind, double lambda = 2.0, double mu = 1.0) {
  ModelSpec m;
  m.lambda = lambda;
  m.mu = mu;
  m.K = 1000.0;
  m.regulation.kind = std::move(kind);
  return m;
}

const GTable& logistic_table() {
  static const GTable t(ModelAnalysis::analyze(make(Logistic{})));
  return t;
}

const GTable& quadratic_table() {
  static const GTable t(ModelAnalysis::analyze(make(PowerLaw{2.0})));
  return t;
}

const GTable& ricker_table() {
  static const GTable t(ModelAnalysis::analyze(make(Ricker{1.5}, 3.0, 1.0)));
  return t;
}

}  // namespace

TEST_CASE("big_h examples") {
  const auto logistic = make(Logistic{});
  CHECK(big_h(logistic, 1.0, 0.0) == 0.0);
  CHECK(big_h(logistic, 1.0, 0.5) == doctest::Approx(double(oracle::power_h(1, 0.5L))).epsilon(1e-12));
  CHECK(big_h(logistic, 1.0, 0.5) == doctest::Approx(0.693147).epsilon(1e-6));
  const auto quad = make(PowerLaw{2.0});
  CHECK(big_h(quad, 1.0, 0.5) == doctest::Approx(double(oracle::power_h(2, 0.5L))).epsilon(1e-12));
  CHECK(big_h(quad, 1.0, 0.5) == doctest::Approx(0.143841).epsilon(1e-5));
  CHECK_THROWS_AS(big_h(logistic, 1.0, 1.0), DomainError);
}

TEST_CASE("big_h against Simpson on a non-closed-form model") {
  // Ricker: g(u)/u = amp (1 - e^{-a u}) / u.
  const double lambda = 3.0, mu = 1.0, a = 1.5;
  const long double amp = lambda / (lambda - mu);
  auto g = [&](long double u) { return amp * -std::expm1(-a * u); };
  auto g_over_u = [&](long double u) {
    return u == 0 ? amp * a : amp * -std::expm1(-a * u) / u;
  };
  const auto m = make(Ricker{a}, lambda, mu);
  const double x_inf = find_x_inf(m);
  for (double frac : {0.1, 0.4, 0.7}) {
    const double x = frac * x_inf;
    CHECK(big_h(m, x_inf, x) == doctest::Approx(double(oracle::simpson_h(g_over_u, g, x))).epsilon(1e-10));
  }
}

TEST_CASE("big_g and big_g_inv examples") {
  const auto& t = logistic_table();
  CHECK(std::abs(big_g(t, 0.5)) < 1e-12);
  CHECK(big_g(t, 0.75) == doctest::Approx(std::log(3.0)).epsilon(1e-12));
  CHECK(big_g_inv(t, 0.0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(big_g_inv(t, std::log(3.0)) == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(big_g_inv(t, -INFINITY) == 0.0);
  CHECK(big_g_inv(t, INFINITY) == 1.0);
  CHECK(std::abs(big_g(quadratic_table(), std::sqrt(0.5))) < 1e-12);
  CHECK(big_g_inv(quadratic_table(), 0.0) == doctest::Approx(std::sqrt(0.5)).epsilon(1e-12));
  CHECK_THROWS_AS(big_g(t, 0.0), DomainError);
  CHECK_THROWS_AS(big_g(t, 1.0), DomainError);
}

TEST_CASE("G identity at table nodes") {
  for (const GTable* t : {&logistic_table(), &ricker_table()}) {
    const auto xs = t->nodes();
    const auto gs = t->g_values();
    const auto hs = t->h_values();
    for (std::size_t i = 1; i < xs.size(); ++i) CHECK(gs[i] > gs[i - 1]);
    for (std::size_t i = 0; i < xs.size(); i += 97) {
      CHECK(gs[i] == doctest::Approx(std::log(xs[i]) + hs[i]).epsilon(1e-12));
    }
    CHECK(t->x_lo() == doctest::Approx(1e-8 * t->x_inf()));
    CHECK(t->x_hi() == doctest::Approx((1 - 1e-8) * t->x_inf()));
  }
}

TEST_CASE("closed forms for logistic and power law") {
  for (double p : {1.0, 2.0, 0.5}) {
    const GTable t(ModelAnalysis::analyze(make(PowerLaw{p})));
    for (int i = 1; i < 1000; ++i) {
      const double x = i / 1000.0;
      CHECK(big_g(t, x) == doctest::Approx(double(oracle::power_g(p, x))).epsilon(1e-8).scale(1.0));
    }
    for (double x : {1e-7, 1e-10, 1 - 1e-7, 1 - 1e-10}) {
      CHECK(std::abs(big_g(t, x) - double(oracle::power_g(p, x))) < 1e-8);
    }
    for (double y : {-20.0, -3.0, 0.0, 1.5, 20.0}) {
      CHECK(big_g_inv(t, y) == doctest::Approx(double(oracle::power_g_inv(p, y))).epsilon(1e-9));
    }
  }
}

TEST_CASE("round trip on a 1000-point grid") {
  for (const GTable* t : {&logistic_table(), &quadratic_table(), &ricker_table()}) {
    for (int i = 1; i <= 1000; ++i) {
      const double x = 0.01 * t->x_inf() + (0.98 * t->x_inf()) * (i - 1) / 999.0;
      CHECK(std::abs(big_g_inv(*t, big_g(*t, x)) - x) <= 1e-9);
    }
  }
}

TEST_CASE("psi") {
  const auto& t = logistic_table();
  CHECK(psi(t, 0.0) == 0.0);
  CHECK(psi(t, 1.0) == doctest::Approx(0.5).epsilon(1e-12));
  std::mt19937_64 gen(3);
  std::exponential_distribution<double> expo(0.5);
  for (int i = 0; i < 200; ++i) {
    const double w = expo(gen);
    CHECK(psi(t, w) == doctest::Approx(w / (1 + w)).epsilon(1e-10));
  }
  CHECK_THROWS_AS(psi(t, -1.0), DomainError);
}

TEST_CASE("boundedness of inverse") {
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> y(-800.0, 800.0);
  for (const GTable* t : {&logistic_table(), &ricker_table()}) {
    for (int i = 0; i < 2000; ++i) {
      const double v = big_g_inv(*t, y(gen));
      CHECK(v >= 0.0);
      CHECK(v <= t->x_inf());
      const double p = psi(*t, std::exp(y(gen) / 40));
      CHECK(p >= 0.0);
      CHECK(p <= t->x_inf());
    }
  }
}

TEST_CASE("flow_phi examples") {
  const auto& t = logistic_table();
  CHECK(flow_phi(t, 1.0, 1.0, 0.3) == 0.3);
  CHECK(flow_phi(t, 0.0, 5.0, 0.0) == 0.0);
  CHECK(flow_phi(t, 0.0, std::log(9.0), 0.1) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(flow_phi(t, 0.0, 2.0, 1.0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_THROWS_AS(flow_phi(t, 2.0, 1.0, 0.3), DomainError);
  // Above x_inf the flow decays back toward it.
  const double above = flow_phi(t, 0.0, 1.0, 1.2);
  CHECK(above < 1.2);
  CHECK(above > 1.0);
  CHECK(above == doctest::Approx(oracle::logistic_flow(1.2, 1.0, 1.0)).epsilon(1e-7));
}

TEST_CASE("ode_rk examples") {
  const auto m = make(Logistic{});
  CHECK(ode_rk(m, 0.0, 7.0, 1.0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(ode_rk(m, 0.0, 7.0, 0.0) == 0.0);
  CHECK(std::abs(ode_rk(m, 0.0, std::log(9.0), 0.1) - 0.5) < 1e-6);
  for (double x0 : {0.01, 0.2, 0.6}) {
    for (double dt : {0.1, 1.0, 4.0}) {
      CHECK(std::abs(ode_rk(m, 0.0, dt, x0) - oracle::logistic_flow(x0, 1.0, dt)) < 1e-7);
    }
  }
}

TEST_CASE("flow_phi agrees with ode_rk on a grid") {
  for (const GTable* t : {&logistic_table(), &quadratic_table(), &ricker_table()}) {
    for (int i = 1; i <= 12; ++i) {
      const double x = t->x_inf() * i / 13.0;
      for (double dt : {0.01, 0.3, 1.0, 3.0, 8.0}) {
        CHECK(std::abs(flow_phi(*t, 0.5, 0.5 + dt, x) - ode_rk(t->model(), 0.5, 0.5 + dt, x)) <= 1e-6);
      }
    }
  }
}

TEST_CASE("flow is order preserving and a semigroup") {
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (const GTable* t : {&logistic_table(), &ricker_table()}) {
    for (int i = 0; i < 300; ++i) {
      double a = unif(gen) * t->x_inf(), b = unif(gen) * t->x_inf();
      if (a > b) std::swap(a, b);
      if (b - a < 1e-6) continue;
      CHECK(big_g(*t, a) < big_g(*t, b));
      const double s = 3 * unif(gen), dt = 3 * unif(gen);
      CHECK(flow_phi(*t, s, s + dt, a) <= flow_phi(*t, s, s + dt, b));

      const double mid = s + dt * unif(gen);
      const double direct = flow_phi(*t, s, s + dt, a);
      const double split = flow_phi(*t, mid, s + dt, flow_phi(*t, s, mid, a));
      CHECK(std::abs(direct - split) <= 1e-8);
    }
  }
}

TEST_CASE("gtable csv") {
  std::ostringstream out;
  write_gtable_csv(out, logistic_table());
  const std::string s = out.str();
  CHECK(s.rfind("x,G,H\n", 0) == 0);
  std::size_t lines = 0;
  for (char c : s) lines += c == '\n';
  CHECK(lines == logistic_table().nodes().size() + 1);
}
