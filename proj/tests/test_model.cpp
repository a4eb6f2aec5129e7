#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <tuple>
#include <vector>

#include "bdlab/error.hpp"
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

std::vector<ModelSpec> builtin_models() {
  return {make(Logistic{}),          make(PowerLaw{0.5}),           make(PowerLaw{2.0}),
          make(Ricker{1.5}),         make(BevertonHolt{1.0}),       make(Hassell{0.5, 2.0}),
          make(MaynardSmithSlatkin{1.0, 2.0}), make(BevertonHolt{2.0}, 3.0, 0.5)};
}

}  // namespace

TEST_CASE("g_eval examples") {
  auto g = g_eval(make(Logistic{}), 0.0);
  CHECK(g.g1 == 0.0);
  CHECK(g.g2 == 0.0);
  CHECK(g.g == 0.0);

  g = g_eval(make(Logistic{}), 0.3);
  CHECK(g.g1 == 0.0);
  CHECK(g.g2 == doctest::Approx(0.3).epsilon(1e-15));
  CHECK(g.g == doctest::Approx(0.3).epsilon(1e-15));

  g = g_eval(make(BevertonHolt{1.0}), 1.0);
  CHECK(g.g1 == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(g.g2 == 0.0);

  CHECK_THROWS_AS(g_eval(make(Logistic{}), -0.1), DomainError);
}

TEST_CASE("g_eval long double agrees with double") {
  for (const auto& m : builtin_models()) {
    for (double x : {0.0, 0.01, 0.2, 0.5, 0.9}) {
      const auto a = g_eval(m, x);
      const auto b = g_eval_long(m, x);
      CHECK(a.g == doctest::Approx(static_cast<double>(b.g)).epsilon(1e-13));
    }
  }
}

TEST_CASE("rates") {
  auto m = make(Logistic{});
  m.K = 100.0;
  CHECK(birth_rate(m, 10) == doctest::Approx(20.0));
  CHECK(death_rate(m, 10) == doctest::Approx(10.0 * (1.0 + 0.1)));
  CHECK(birth_rate(m, 0) == 0.0);
  CHECK(death_rate(m, 0) == 0.0);

  // g1 above lambda/(lambda-mu) clamps the birth rate at zero.
  auto t = make(Tabulated{{0.0, 1.0, 3.0}, {0.0, 1.0, 3.0}, {0.0, 0.0, 0.0}});
  t.K = 1.0;
  CHECK(birth_rate(t, 3) == 0.0);
}

TEST_CASE("model validation") {
  auto m = make(Logistic{});
  CHECK_NOTHROW(m.validate());
  m.mu = 2.0;
  CHECK_THROWS_AS(m.validate(), DomainError);
  m = make(Logistic{});
  m.K = 0.5;
  CHECK_THROWS_AS(m.validate(), DomainError);
  m = make(Logistic{});
  m.alpha = 1.0;
  CHECK_THROWS_AS(m.validate(), DomainError);
  m = make(BevertonHolt{-1.0});
  CHECK_THROWS_AS(m.validate(), DomainError);
  m = make(Tabulated{{0.0, 0.5, 0.4}, {0, 0, 0}, {0, 0.5, 1}});
  CHECK_THROWS_AS(m.validate(), DomainError);

  m = make(Logistic{});
  m.K = 1e4;
  m.alpha = 0.5;
  CHECK(m.initial_size() == 100);
  m.alpha = 0.0;
  CHECK(m.initial_size() == 1);
}

TEST_CASE("fingerprint distinguishes models") {
  auto a = make(Logistic{});
  auto b = a;
  CHECK(a.fingerprint() == b.fingerprint());
  b.K = 1001.0;
  CHECK(a.fingerprint() != b.fingerprint());
  b = a;
  b.regulation.kind = PowerLaw{1.0};
  CHECK(a.fingerprint() != b.fingerprint());
}

TEST_CASE("find_x_inf examples") {
  CHECK(find_x_inf(make(Logistic{})) == doctest::Approx(1.0).epsilon(1e-12));
  for (double p : {0.5, 1.0, 2.0, 3.5}) {
    CHECK(find_x_inf(make(PowerLaw{p})) == doctest::Approx(1.0).epsilon(1e-12));
  }
  using Triple = std::tuple<double, double, double>;
  for (auto [lambda, mu, mm] : std::vector<Triple>{{2.0, 1.0, 1.0}, {3.0, 0.5, 2.0}, {5.0, 4.0, 0.3}}) {
    CHECK(find_x_inf(make(BevertonHolt{mm}, lambda, mu)) ==
          doctest::Approx(oracle::beverton_holt_x_inf(lambda, mu, mm)).epsilon(1e-10));
  }
  for (auto [lambda, mu, a] : std::vector<Triple>{{2.0, 1.0, 1.0}, {3.0, 0.5, 2.0}}) {
    CHECK(find_x_inf(make(Ricker{a}, lambda, mu)) ==
          doctest::Approx(oracle::ricker_x_inf(lambda, mu, a)).epsilon(1e-10));
  }
  // No root: zero regulation.
  CHECK_THROWS_AS(find_x_inf(make(Tabulated{{0.0, 1.0}, {0.0, 0.0}, {0.0, 0.0}})), AssumptionError);
}

TEST_CASE("find_x_inf root accuracy on every built-in variant") {
  for (const auto& m : builtin_models()) {
    const double r = find_x_inf(m);
    CHECK(std::abs(g_eval(m, r).g - 1.0) < 1e-10);
  }
}

TEST_CASE("lipschitz_estimate examples") {
  CHECK(lipschitz_estimate(make(Logistic{}), 1.0) == doctest::Approx(2.0).epsilon(1e-4));
  CHECK(lipschitz_estimate(make(PowerLaw{1.0}), 1.0) == doctest::Approx(2.0).epsilon(1e-4));
  CHECK(lipschitz_estimate(make(Tabulated{{0.0, 1.0}, {0.0, 0.0}, {0.0, 0.0}}), 1.0) == 1.0);

  // Finite-difference oracle: max slope of x g(x) on a coarser grid bounds it from below.
  const auto m = make(PowerLaw{3.0});
  double fd = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const double a = i / 1000.0, b = (i + 1) / 1000.0;
    fd = std::max(fd, (b * b * b * b - a * a * a * a) / (b - a));
  }
  const double theta = lipschitz_estimate(m, 1.0);
  CHECK(theta >= fd * (1 - 1e-12));
  CHECK(theta == doctest::Approx(4.0).epsilon(1e-4));
}

TEST_CASE("g_plus examples") {
  const auto logistic = ModelAnalysis::analyze(make(Logistic{}));
  auto gp = g_plus(logistic, 0.4);
  CHECK(gp.g1plus == 0.0);
  CHECK(gp.g2plus == doctest::Approx(0.4).epsilon(1e-14));

  const auto quad = ModelAnalysis::analyze(make(PowerLaw{2.0}));
  gp = g_plus(quad, 0.5);
  CHECK(gp.g1plus == doctest::Approx(0.25).epsilon(1e-14));
  CHECK(gp.g2plus == 0.0);

  // Non-monotone g1 on [0, 1]; g2 brings g up to 1 at x = 2.
  const std::vector<double> xs{0.0, 0.5, 1.0, 2.0};
  const std::vector<double> g1{0.0, 0.3, 0.2, 0.2};
  const auto toy = ModelAnalysis::analyze(make(Tabulated{xs, g1, {0.0, 0.0, 0.0, 0.8}}));
  CHECK(toy.x_inf() == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(g_plus(toy, 1.0).g1plus == doctest::Approx(oracle::running_max(g1, 2)));
  CHECK(g_plus(toy, 0.75).g1plus == doctest::Approx(0.3));
  CHECK(g_plus(toy, 0.25).g1plus == doctest::Approx(0.15));

  CHECK_THROWS_AS(g_plus(logistic, 1.5), DomainError);
  CHECK_THROWS_AS(g_plus(logistic, -0.1), DomainError);
}

TEST_CASE("g_plus properties on random grids") {
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (const auto& m : builtin_models()) {
    AnalysisOptions opt;
    opt.grid_points = 2000;
    const auto a = ModelAnalysis::analyze(m, opt);
    REQUIRE(a.has_x_inf());
    std::vector<double> xs(200);
    for (auto& x : xs) x = unif(gen) * a.x_inf();
    std::sort(xs.begin(), xs.end());
    GPlus prev{0.0, 0.0};
    for (double x : xs) {
      const auto gp = g_plus(a, x);
      CHECK(gp.g1plus >= prev.g1plus);
      CHECK(gp.g2plus >= prev.g2plus);
      prev = gp;
      const auto g = g_eval(m, x);
      CHECK(gp.g1plus >= g.g1);
      CHECK(gp.g2plus >= g.g2);
    }
  }
  // Monotone variants: g+ equals g.
  for (const auto& m : {make(Logistic{}), make(PowerLaw{0.5}), make(PowerLaw{2.0})}) {
    const auto a = ModelAnalysis::analyze(m);
    for (int i = 0; i < 50; ++i) {
      const double x = unif(gen);
      const auto gp = g_plus(a, x);
      const auto g = g_eval(m, x);
      CHECK(gp.g1plus == doctest::Approx(g.g1).epsilon(1e-13));
      CHECK(gp.g2plus == doctest::Approx(g.g2).epsilon(1e-13));
    }
  }
}

TEST_CASE("g stays in [0, 1] below x_inf") {
  for (const auto& m : builtin_models()) {
    const double r = find_x_inf(m);
    for (int i = 0; i <= 1000; ++i) {
      const double x = r * i / 1000.0;
      const double g = g_eval(m, x).g;
      CHECK(g >= 0.0);
      if (i < 1000) CHECK(g < 1.0);
      else CHECK(g == doctest::Approx(1.0).epsilon(1e-10));
    }
  }
}

TEST_CASE("validate_assumptions examples") {
  CHECK(validate_assumptions(make(Logistic{})).all_passed());
  CHECK(validate_assumptions(make(PowerLaw{0.5})).all_passed());
  for (const auto& m : builtin_models()) CHECK(validate_assumptions(m).all_passed());

  const auto bad = validate_assumptions(make(Tabulated{{0.0, 1.0}, {0.1, 0.1}, {0.0, 0.9}}));
  CHECK_FALSE(bad.all_passed());
  bool found = false;
  for (const auto& c : bad.checks) {
    if (c.name == "g(0) = 0") {
      found = true;
      CHECK_FALSE(c.passed);
    }
  }
  CHECK(found);

  const auto a = ModelAnalysis::analyze(make(Tabulated{{0.0, 1.0}, {0.0, 0.0}, {0.0, 0.0}}));
  CHECK_FALSE(a.has_x_inf());
  CHECK_THROWS_AS(a.require_valid(), AssumptionError);
  CHECK_NOTHROW(ModelAnalysis::analyze(make(Logistic{})).require_valid());
}
