#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "bdlab/error.hpp"
#include "bdlab/flow.hpp"
#include "bdlab/limitlaw.hpp"
#include "bdlab/rng.hpp"
#include "bdlab/sim.hpp"
#include "bdlab/stats.hpp"
#include "oracles.hpp"

using namespace bdlab;

namespace {

ModelSpec logistic(double alpha = 0.0) {
  ModelSpec m;
  m.K = 1000.0;
  m.alpha = alpha;
  return m;
}

const GTable& table() {
  static const GTable t(ModelAnalysis::analyze(logistic()));
  return t;
}

}  // namespace

TEST_CASE("w_cdf examples") {
  const WLaw law(2.0, 1.0);
  CHECK(law.atom() == 0.5);
  CHECK(w_cdf(law, 0.0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(w_cdf(law, 1.0) == doctest::Approx(0.696735).epsilon(1e-6));
  CHECK(w_cdf(law, 1.0) == doctest::Approx(oracle::w_cdf(2, 1, 1)).epsilon(1e-15));
  CHECK(w_cdf(law, 1e6) == 1.0);
  CHECK(w_cdf(law, -1e-300) == 0.0);
  CHECK_THROWS_AS(WLaw(1.0, 1.0), DomainError);
}

TEST_CASE("w_cdf is a distribution function with mean 1") {
  for (auto [l, m] : {std::pair{2.0, 1.0}, std::pair{1.0, 0.0}, std::pair{5.0, 4.5}}) {
    const WLaw law(l, m);
    double prev = 0.0;
    for (int i = 0; i <= 400; ++i) {
      const double w = i * 0.1;
      const double f = w_cdf(law, w);
      CHECK(f >= prev);
      CHECK(f == doctest::Approx(oracle::w_cdf(l, m, w)).epsilon(1e-14));
      prev = f;
    }
    // E W = int_0^inf (1 - F(w)) dw, exactly (1 - a) / (1 - a).
    const double rate = law.tail_rate();
    CHECK((1.0 - law.atom()) / rate == doctest::Approx(1.0).epsilon(1e-12));
    // Mixture normalizes: atom plus tail integral.
    CHECK(law.atom() + (1.0 - law.atom()) == doctest::Approx(1.0).epsilon(1e-15));
  }
}

TEST_CASE("w_sample") {
  RngStream rng(42, 0);
  const WLaw law(2.0, 1.0);
  const int n = 1'000'000;
  double sum = 0.0;
  int zeros = 0;
  for (int i = 0; i < n; ++i) {
    const double w = w_sample(law, rng);
    CHECK_FALSE(w < 0.0);
    sum += w;
    zeros += w == 0.0;
  }
  CHECK(std::abs(sum / n - 1.0) <= 0.004);
  const double sigma = std::sqrt(0.25 / n);
  CHECK(std::abs(double(zeros) / n - 0.5) <= 3 * sigma);

  const WLaw pure(1.0, 0.0);
  std::vector<double> xs(10000);
  for (auto& x : xs) {
    x = w_sample(pure, rng);
    CHECK(x > 0.0);
  }
  CHECK(ks_mixed(xs, [](double w) { return w < 0 ? 0.0 : 1.0 - std::exp(-w); }) <= dkw_epsilon(xs.size(), 0.01));
}

TEST_CASE("w0_cdf examples") {
  const W0Law law(WLaw(2.0, 1.0), table(), 0.0);
  CHECK(w0_cdf(law, 0.0) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(w0_cdf(law, 0.5) == doctest::Approx(0.696735).epsilon(1e-6));
  for (int i = 1; i < 100; ++i) {
    const double u = i / 100.0;
    // w0 = W / (1 + W) <= u iff W <= u / (1 - u).
    CHECK(w0_cdf(law, u) == doctest::Approx(oracle::w_cdf(2, 1, u / (1 - u))).epsilon(1e-10));
    CHECK(w0_cdf(law, u) == doctest::Approx(w_cdf(law.w, std::exp(big_g(table(), u)))).epsilon(1e-14));
  }

  const W0Law point(WLaw(2.0, 1.0), table(), 0.5);
  CHECK(point.degenerate);
  CHECK(w0_cdf(point, std::nextafter(0.5, 0.0) - 1e-12) == 0.0);
  CHECK(w0_cdf(point, 0.5 + 1e-12) == 1.0);
}

TEST_CASE("linear_bd_zero and tail examples") {
  CHECK(linear_bd_zero(2.0, 1.0, std::log(2.0)) == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
  CHECK(linear_bd_zero(2.0, 1.0, 200.0) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(linear_bd_zero(2.0, 1.0, 1e5) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(linear_bd_zero(1.0, 0.0, 3.0) == 0.0);
  for (double t : {0.1, 1.0, 4.0}) {
    CHECK(linear_bd_tail(2.0, 1.0, t, 0) == doctest::Approx(1.0 - linear_bd_zero(2.0, 1.0, t)).epsilon(1e-14));
  }
  CHECK(linear_bd_tail(2.0, 1.0, 0.0, 0) == 1.0);
  CHECK(linear_bd_tail(2.0, 1.0, 0.0, 1) == 0.0);
}

TEST_CASE("linear BD law against the forward equations") {
  struct Case {
    double gamma, beta, t;
  };
  for (const auto& c : {Case{2.0, 1.0, std::log(2.0)}, Case{1.0, 0.0, 1.0}, Case{3.0, 2.5, 1.5}}) {
    const auto pmf = oracle::linear_bd_pmf(c.gamma, c.beta, c.t, 300);
    CHECK(linear_bd_zero(c.gamma, c.beta, c.t) == doctest::Approx(pmf[0]).epsilon(1e-9));
    double tail = 1.0 - pmf[0];
    for (int r = 0; r < 40; ++r) {
      if (r > 0) tail -= pmf[r];
      CHECK(std::abs(linear_bd_tail(c.gamma, c.beta, c.t, r) - tail) < 1e-10);
      CHECK(std::abs(linear_bd_cdf(c.gamma, c.beta, c.t, r) - (1.0 - tail)) < 1e-10);
    }
  }
}

TEST_CASE("linear BD total mass") {
  const double g = 2.0, b = 1.0, t = 2.0;
  double mass = linear_bd_zero(g, b, t);
  std::int64_t r = 0;
  while (linear_bd_tail(g, b, t, r) > 1e-12) {
    mass += linear_bd_tail(g, b, t, r) - linear_bd_tail(g, b, t, r + 1);
    ++r;
  }
  mass += linear_bd_tail(g, b, t, r);
  CHECK(mass == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(linear_bd_cdf(g, b, t, -1.0) == 0.0);
}

TEST_CASE("linear BD at large t stays finite") {
  const double z = linear_bd_zero(2.0, 1.0, 800.0);
  CHECK(std::isfinite(z));
  const double tail = linear_bd_tail(2.0, 1.0, 800.0, 1000);
  CHECK(std::isfinite(tail));
  CHECK(tail == doctest::Approx(0.5).epsilon(1e-10));
}

TEST_CASE("linear_bd_sample matches the transient law") {
  RngStream rng(9, 1);
  const double g = 2.0, b = 1.0, t = std::log(2.0);
  std::vector<double> xs(20000);
  for (auto& x : xs) x = static_cast<double>(linear_bd_sample(g, b, t, rng));
  const double eps = dkw_epsilon(xs.size(), 0.01);
  CHECK(ks_mixed(xs, [&](double z) { return linear_bd_cdf(g, b, t, std::floor(z)); }) <= eps);
  CHECK(std::abs(mean(xs) - 2.0) <= 3 * standard_error(xs));

  // Direct simulation agrees with the closed-form draw.
  std::vector<double> sim(20000);
  for (std::size_t i = 0; i < sim.size(); ++i) {
    RngStream r(9, 100 + i);
    sim[i] = static_cast<double>(simulate_linear_bd(g, b, 1, t, r).final_state());
  }
  CHECK(ks_two_sample(xs, sim) <= 2 * eps);
  CHECK(linear_bd_sample(g, b, 0.0, rng) == 1);
}

TEST_CASE("moments and Chebyshev bound") {
  auto m = linear_bd_moments(2.0, 1.0, 1.0);
  CHECK(m.mean == doctest::Approx(std::exp(1.0)).epsilon(1e-14));
  CHECK(m.var_bound == doctest::Approx(3 * std::exp(2.0)).epsilon(1e-14));
  CHECK(m.var_bound == doctest::Approx(22.167).epsilon(1e-4));
  CHECK(linear_bd_moments(2.0, 1.0, 0.0).mean == 1.0);

  CHECK(chebyshev_dev_bound(2.0, 1.0, 100.0, 0.5) == doctest::Approx(0.12).epsilon(1e-14));
  CHECK(chebyshev_dev_bound(2.0, 1.0, 1e300, 0.5) < 1e-290);
  CHECK(chebyshev_dev_bound(2.0, 1.0, 1.0, 0.01) == 1.0);
}

TEST_CASE("Chebyshev bound dominates simulated deviations") {
  const double g = 2.0, b = 1.0, t = 2.0, M = 50.0, eps = 0.3;
  int hits = 0;
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    RngStream rng(5, i);
    std::int64_t z = 0;
    for (int k = 0; k < M; ++k) z += linear_bd_sample(g, b, t, rng);
    hits += std::abs(std::exp(-(g - b) * t) * z / M - 1.0) >= eps;
  }
  CHECK(double(hits) / n <= chebyshev_dev_bound(g, b, M, eps));
}

TEST_CASE("normalized linear BD approaches the W law") {
  const double g = 2.0, b = 1.0, t = 8.0;
  std::vector<double> xs(10000);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    RngStream rng(77, i);
    xs[i] = std::exp(-(g - b) * t) * static_cast<double>(linear_bd_sample(g, b, t, rng));
  }
  const WLaw law(g, b);
  CHECK(ks_mixed(xs, [&](double w) { return w_cdf(law, w); }) <= dkw_epsilon(xs.size(), 0.01) + 1e-3);
}
