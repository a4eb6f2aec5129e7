#include "bdlab/model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <sstream>

#include <fmt/core.h>

#include "bdlab/error.hpp"

namespace bdlab {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

template <class T>
T interpolate(const std::vector<double>& xs, const std::vector<double>& ys, T x) {
  auto it = std::upper_bound(xs.begin(), xs.end(), static_cast<double>(x));
  if (it == xs.begin()) return static_cast<T>(ys.front());
  if (it == xs.end()) return static_cast<T>(ys.back());
  const auto i = static_cast<std::size_t>(it - xs.begin());
  const T x0 = xs[i - 1], x1 = xs[i];
  const T w = (x - x0) / (x1 - x0);
  return static_cast<T>(ys[i - 1]) * (T(1) - w) + static_cast<T>(ys[i]) * w;
}

template <class T>
std::pair<T, T> eval_pair(const ModelSpec& model, T x) {
  if (!(x >= T(0))) throw DomainError(fmt::format("g_eval: negative density {}", double(x)));
  const T amp = T(model.lambda) / (T(model.lambda) - T(model.mu));
  using std::exp;
  using std::pow;
  return std::visit(
      Overloaded{
          [&](const Logistic&) { return std::pair<T, T>{T(0), x}; },
          [&](const PowerLaw& r) { return std::pair<T, T>{pow(x, T(r.p)), T(0)}; },
          [&](const Ricker& r) { return std::pair<T, T>{amp * -std::expm1(-T(r.a) * x), T(0)}; },
          [&](const BevertonHolt& r) { return std::pair<T, T>{amp * x / (x + T(r.m)), T(0)}; },
          [&](const Hassell& r) {
            return std::pair<T, T>{amp * (T(1) - pow(T(1) + x / T(r.m), -T(r.c))), T(0)};
          },
          [&](const MaynardSmithSlatkin& r) {
            const T q = pow(x / T(r.m), T(r.c));
            return std::pair<T, T>{amp * q / (T(1) + q), T(0)};
          },
          [&](const Tabulated& r) {
            if (static_cast<double>(x) > r.x.back() * (1.0 + 1e-12)) {
              throw DomainError(fmt::format("g_eval: density {} beyond tabulated range [0, {}]",
                                            double(x), r.x.back()));
            }
            return std::pair<T, T>{interpolate(r.x, r.g1, x), interpolate(r.x, r.g2, x)};
          },
      },
      model.regulation.kind);
}

void require_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw DomainError(fmt::format("regulation parameter {} must be positive, got {}", what, v));
  }
}

std::uint64_t fnv_mix(std::uint64_t h, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) {
    h ^= (v >> (8 * i)) & 0xffu;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t fnv_mix(std::uint64_t h, double v) { return fnv_mix(h, std::bit_cast<std::uint64_t>(v)); }

}  // namespace

std::string RegulationSpec::name() const {
  std::string base = std::visit(Overloaded{
                                    [](const Logistic&) -> std::string { return "logistic"; },
                                    [](const PowerLaw&) -> std::string { return "power_law"; },
                                    [](const Ricker&) -> std::string { return "ricker"; },
                                    [](const BevertonHolt&) -> std::string { return "beverton_holt"; },
                                    [](const Hassell&) -> std::string { return "hassell"; },
                                    [](const MaynardSmithSlatkin&) -> std::string {
                                      return "maynard_smith_slatkin";
                                    },
                                    [](const Tabulated&) -> std::string { return "tabulated"; },
                                },
                                kind);
  return birth_only ? base + "[birth]" : base;
}

void ModelSpec::validate() const {
  if (!(lambda > mu) || !(mu >= 0.0) || !std::isfinite(lambda)) {
    throw DomainError(fmt::format("model requires lambda > mu >= 0 (lambda={}, mu={})", lambda, mu));
  }
  if (!(K >= 1.0) || !std::isfinite(K)) throw DomainError(fmt::format("model requires K >= 1, got {}", K));
  if (!(alpha >= 0.0 && alpha < 1.0)) {
    throw DomainError(fmt::format("model requires alpha in [0, 1), got {}", alpha));
  }
  std::visit(Overloaded{
                 [](const Logistic&) {},
                 [](const PowerLaw& r) { require_positive(r.p, "p"); },
                 [](const Ricker& r) { require_positive(r.a, "a"); },
                 [](const BevertonHolt& r) { require_positive(r.m, "m"); },
                 [](const Hassell& r) {
                   require_positive(r.m, "m");
                   require_positive(r.c, "c");
                 },
                 [](const MaynardSmithSlatkin& r) {
                   require_positive(r.m, "m");
                   require_positive(r.c, "c");
                 },
                 [](const Tabulated& r) {
                   if (r.x.size() < 2 || r.g1.size() != r.x.size() || r.g2.size() != r.x.size()) {
                     throw DomainError("tabulated regulation needs >= 2 knots with matching g1, g2");
                   }
                   if (r.x.front() != 0.0) throw DomainError("tabulated grid must start at x = 0");
                   for (std::size_t i = 1; i < r.x.size(); ++i) {
                     if (!(r.x[i] > r.x[i - 1])) {
                       throw DomainError("tabulated grid x must be strictly increasing");
                     }
                   }
                 },
             },
             regulation.kind);
}

std::int64_t ModelSpec::initial_size() const {
  // pow(10^k, 0.5) and friends can land a hair below an exact integer.
  const double v = std::pow(K, alpha);
  const double r = std::round(v);
  return static_cast<std::int64_t>(std::abs(v - r) < 1e-9 * std::max(1.0, r) ? r : std::floor(v));
}

std::uint64_t ModelSpec::fingerprint() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  h = fnv_mix(h, lambda);
  h = fnv_mix(h, mu);
  h = fnv_mix(h, K);
  h = fnv_mix(h, alpha);
  h = fnv_mix(h, static_cast<std::uint64_t>(regulation.kind.index()));
  h = fnv_mix(h, static_cast<std::uint64_t>(regulation.birth_only));
  std::visit(Overloaded{
                 [&](const Logistic&) {},
                 [&](const PowerLaw& r) { h = fnv_mix(h, r.p); },
                 [&](const Ricker& r) { h = fnv_mix(h, r.a); },
                 [&](const BevertonHolt& r) { h = fnv_mix(h, r.m); },
                 [&](const Hassell& r) { h = fnv_mix(fnv_mix(h, r.m), r.c); },
                 [&](const MaynardSmithSlatkin& r) { h = fnv_mix(fnv_mix(h, r.m), r.c); },
                 [&](const Tabulated& r) {
                   for (std::size_t i = 0; i < r.x.size(); ++i) {
                     h = fnv_mix(fnv_mix(fnv_mix(h, r.x[i]), r.g1[i]), r.g2[i]);
                   }
                 },
             },
             regulation.kind);
  return h;
}

GValues g_eval(const ModelSpec& model, double x) {
  auto [g1, g2] = eval_pair<double>(model, x);
  if (model.regulation.birth_only) {
    g1 += g2;
    g2 = 0.0;
  }
  return {g1, g2, g1 + g2};
}

GValuesLong g_eval_long(const ModelSpec& model, long double x) {
  auto [g1, g2] = eval_pair<long double>(model, x);
  if (model.regulation.birth_only) {
    g1 += g2;
    g2 = 0.0L;
  }
  return {g1, g2, g1 + g2};
}

double birth_rate(const ModelSpec& model, std::int64_t z) {
  if (z <= 0) return 0.0;
  const auto g = g_eval(model, static_cast<double>(z) / model.K);
  const double per_capita = model.lambda - (model.lambda - model.mu) * g.g1;
  return per_capita > 0.0 ? static_cast<double>(z) * per_capita : 0.0;
}

double death_rate(const ModelSpec& model, std::int64_t z) {
  if (z <= 0) return 0.0;
  const auto g = g_eval(model, static_cast<double>(z) / model.K);
  const double per_capita = model.mu + (model.lambda - model.mu) * g.g2;
  return per_capita > 0.0 ? static_cast<double>(z) * per_capita : 0.0;
}

bool AssumptionReport::all_passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const AssumptionCheck& c) { return c.passed; });
}

double find_x_inf(const ModelSpec& model, double search_limit) {
  double scale = 1.0;
  std::visit(Overloaded{
                 [&](const BevertonHolt& r) { scale = std::max(scale, r.m); },
                 [&](const Hassell& r) { scale = std::max(scale, r.m); },
                 [&](const MaynardSmithSlatkin& r) { scale = std::max(scale, r.m); },
                 [&](const auto&) {},
             },
             model.regulation.kind);
  double hi = 10.0 * scale;
  double table_end = std::numeric_limits<double>::infinity();
  if (const auto* tab = std::get_if<Tabulated>(&model.regulation.kind)) {
    table_end = tab->x.back();
    hi = std::min(hi, table_end);
  }

  constexpr int kScan = 1024;
  double lo_x = 0.0;
  while (true) {
    double prev = lo_x;
    for (int i = 1; i <= kScan; ++i) {
      const double x = lo_x + (hi - lo_x) * i / kScan;
      if (g_eval(model, x).g - 1.0 >= 0.0) {
        double a = prev, b = x;
        for (int it = 0; it < 400; ++it) {
          const double mid = 0.5 * (a + b);
          if (mid <= a || mid >= b) break;
          (g_eval(model, mid).g >= 1.0 ? b : a) = mid;
        }
        const double ea = std::abs(g_eval(model, a).g - 1.0);
        const double eb = std::abs(g_eval(model, b).g - 1.0);
        return ea < eb ? a : b;
      }
      prev = x;
    }
    if (hi >= table_end || hi >= search_limit) break;
    lo_x = hi;
    hi = std::min({2.0 * hi, search_limit, table_end});
  }
  throw AssumptionError(
      fmt::format("no root of g(x) = 1 found in [0, {}]", std::min(hi, search_limit)));
}

double lipschitz_estimate(const ModelSpec& model, double x_inf, std::size_t grid_points) {
  if (grid_points < 2) grid_points = 2;
  double best = 0.0;
  double x_prev = 0.0;
  double f_prev = 0.0;
  for (std::size_t i = 1; i < grid_points; ++i) {
    const double x = x_inf * static_cast<double>(i) / static_cast<double>(grid_points - 1);
    const double f = x * g_eval(model, x).g;
    best = std::max(best, std::abs(f - f_prev) / (x - x_prev));
    x_prev = x;
    f_prev = f;
  }
  return std::max(1.0, best);
}

bool ModelAnalysis::has_x_inf() const noexcept { return std::isfinite(x_inf_); }

void ModelAnalysis::require_valid() const {
  if (report_.all_passed()) return;
  std::ostringstream msg;
  msg << "model fails assumptions:";
  for (const auto& c : report_.checks) {
    if (!c.passed) msg << " [" << c.name << ": " << c.detail << "]";
  }
  throw AssumptionError(msg.str());
}

GPlus g_plus(const ModelAnalysis& analysis, double x) {
  if (!analysis.has_x_inf()) throw AssumptionError("g_plus: model has no x_inf");
  const double x_inf = analysis.x_inf();
  if (!(x >= 0.0) || x > x_inf * (1.0 + 1e-9)) {
    throw DomainError(fmt::format("g_plus: x = {} outside [0, x_inf = {}]", x, x_inf));
  }
  x = std::min(x, x_inf);
  const auto& grid = analysis.grid();
  const auto& p1 = analysis.g1plus_grid();
  const auto& p2 = analysis.g2plus_grid();
  const auto it = std::upper_bound(grid.begin(), grid.end(), x);
  const auto i = static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, (it - grid.begin()) - 1));
  double s1 = p1[i];
  double s2 = p2[i];
  const auto& model = analysis.model();
  auto take = [&](double y) {
    const auto g = g_eval(model, y);
    s1 = std::max(s1, std::abs(g.g1));
    s2 = std::max(s2, std::abs(g.g2));
  };
  // Refine between the last grid node and x.
  constexpr int kRefine = 16;
  for (int k = 1; k <= kRefine; ++k) take(grid[i] + (x - grid[i]) * k / kRefine);
  if (i == 0 && x > 0.0) {
    for (int k = 0; k <= 32; ++k) take(x * std::pow(10.0, -12.0 * k / 32.0));
  }
  return {s1, s2};
}

namespace {

AssumptionReport build_report(const ModelAnalysis& analysis, const ModelSpec& model) {
  AssumptionReport report;

  const auto g0 = g_eval(model, 0.0);
  report.checks.push_back({"g(0) = 0", std::abs(g0.g1) <= 1e-14 && std::abs(g0.g2) <= 1e-14,
                           fmt::format("g1(0) = {}, g2(0) = {}", g0.g1, g0.g2)});

  if (!analysis.has_x_inf()) {
    report.checks.push_back({"x_inf exists", false, "no root of g(x) = 1 in the search range"});
    return report;
  }
  const double x_inf = analysis.x_inf();
  report.checks.push_back({"x_inf exists", true, fmt::format("x_inf = {}", x_inf)});

  {
    AssumptionCheck below{"g < 1 on (0, x_inf)", true, "ok"};
    for (double x : analysis.grid()) {
      if (x <= 0.0 || x >= x_inf * (1.0 - 1e-9)) continue;
      const double g = g_eval(model, x).g;
      if (!(g < 1.0)) {
        below.passed = false;
        below.detail = fmt::format("g({}) = {} >= 1", x, g);
        break;
      }
    }
    report.checks.push_back(below);
  }

  report.checks.push_back({"x g(x) Lipschitz", std::isfinite(analysis.theta()),
                           fmt::format("theta estimate = {}", analysis.theta())});

  // g+(x) log(1/x) decreases toward 0.
  const double x_ref = std::min(1.0, x_inf);
  {
    AssumptionCheck log_check{"g+(x) log(1/x) -> 0", true, ""};
    double first = 0.0, prev = std::numeric_limits<double>::infinity(), last = 0.0;
    for (int k = 1; k <= 6; ++k) {
      const double x = x_ref * std::pow(10.0, -2.0 * k);
      const auto gp = g_plus(analysis, x);
      const double v = (gp.g1plus + gp.g2plus) * std::log(1.0 / x);
      if (k == 1) first = v;
      if (v > prev * (1.0 + 1e-12) + 1e-300) {
        log_check.passed = false;
        log_check.detail = fmt::format("not decreasing at x = {} (value {})", x, v);
      }
      prev = v;
      last = v;
    }
    if (log_check.passed && !(last <= std::max(1e-6, 0.5 * first))) {
      log_check.passed = false;
      log_check.detail = fmt::format("value at x = 1e-12 scale is {} (first {})", last, first);
    }
    if (log_check.passed) log_check.detail = fmt::format("{} -> {}", first, last);
    report.checks.push_back(log_check);
  }

  // Blocks of int g+(u)/u du over successive 4-decade windows must shrink.
  {
    AssumptionCheck integ{"x^-1 g+(x) integrable at 0", true, ""};
    constexpr int kBlocks = 4;
    constexpr int kNodes = 400;
    double prev_block = std::numeric_limits<double>::infinity();
    std::vector<double> blocks;
    for (int b = 0; b < kBlocks; ++b) {
      const double s_lo = std::log(x_ref) - std::log(1e4) * (b + 1);
      const double s_hi = std::log(x_ref) - std::log(1e4) * b;
      double sum = 0.0;
      for (int k = 0; k <= kNodes; ++k) {
        const double s = s_lo + (s_hi - s_lo) * k / kNodes;
        const auto gp = g_plus(analysis, std::min(std::exp(s), x_inf));
        const double w = (k == 0 || k == kNodes) ? 0.5 : 1.0;
        sum += w * (gp.g1plus + gp.g2plus);
      }
      sum *= (s_hi - s_lo) / kNodes;
      blocks.push_back(sum);
      if (b > 0 && !(sum < prev_block || sum < 1e-12)) {
        integ.passed = false;
      }
      prev_block = sum;
    }
    if (blocks.back() > 0.05) integ.passed = false;
    integ.detail = fmt::format("block integrals {:.3g}, {:.3g}, {:.3g}, {:.3g}", blocks[0], blocks[1],
                               blocks[2], blocks[3]);
    report.checks.push_back(integ);
  }

  for (double x : analysis.grid()) {
    const double per_capita = model.lambda - (model.lambda - model.mu) * g_eval(model, x).g1;
    if (per_capita < 0.0) {
      report.warnings.push_back(
          fmt::format("per-capita birth rate negative at x = {}; clamped to 0 in simulation", x));
      break;
    }
  }
  return report;
}

}  // namespace

ModelAnalysis ModelAnalysis::analyze(const ModelSpec& model, const AnalysisOptions& options) {
  model.validate();
  ModelAnalysis a;
  a.model_ = model;
  try {
    a.x_inf_ = find_x_inf(model, options.x_inf_search_limit);
  } catch (const AssumptionError&) {
    a.x_inf_ = std::numeric_limits<double>::quiet_NaN();
  }
  if (a.has_x_inf()) {
    a.theta_ = lipschitz_estimate(model, a.x_inf_, options.grid_points);
    const std::size_t n = std::max<std::size_t>(options.grid_points, 2);
    a.grid_.reserve(n + 16);
    for (std::size_t i = 0; i < n; ++i) {
      a.grid_.push_back(a.x_inf_ * static_cast<double>(i) / static_cast<double>(n - 1));
    }
    if (const auto* tab = std::get_if<Tabulated>(&model.regulation.kind)) {
      for (double x : tab->x) {
        if (x <= a.x_inf_) a.grid_.push_back(x);
      }
      std::sort(a.grid_.begin(), a.grid_.end());
      a.grid_.erase(std::unique(a.grid_.begin(), a.grid_.end()), a.grid_.end());
    }
    a.g1plus_.resize(a.grid_.size());
    a.g2plus_.resize(a.grid_.size());
    double s1 = 0.0, s2 = 0.0;
    for (std::size_t i = 0; i < a.grid_.size(); ++i) {
      const auto g = g_eval(model, a.grid_[i]);
      s1 = std::max(s1, std::abs(g.g1));
      s2 = std::max(s2, std::abs(g.g2));
      a.g1plus_[i] = s1;
      a.g2plus_[i] = s2;
    }
  } else {
    a.theta_ = std::numeric_limits<double>::quiet_NaN();
  }
  a.report_ = build_report(a, model);
  return a;
}

AssumptionReport validate_assumptions(const ModelSpec& model, const AnalysisOptions& options) {
  return ModelAnalysis::analyze(model, options).report();
}

}  // namespace bdlab
