#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

namespace bdlab {

// Regulation variants. Each defines g1 (birth-side) and g2 (death-side) as
// functions of the dimensionless density x = z / K.

/// Verhulst: g1 = 0, g2 = x.
struct Logistic {};

/// g1 = x^p, g2 = 0.
struct PowerLaw {
  double p = 1.0;
};

/// g1 = lambda/(lambda-mu) * (1 - exp(-a x)).
struct Ricker {
  double a = 1.0;
};

/// g1 = lambda/(lambda-mu) * x / (x + m).
struct BevertonHolt {
  double m = 1.0;
};

/// g1 = lambda/(lambda-mu) * (1 - (1 + x/m)^-c).
struct Hassell {
  double m = 1.0;
  double c = 1.0;
};

/// g1 = lambda/(lambda-mu) * (1 - 1/(1 + (x/m)^c)).
struct MaynardSmithSlatkin {
  double m = 1.0;
  double c = 1.0;
};

/// Piecewise-linear interpolation of (x, g1, g2) knots; x strictly increasing.
struct Tabulated {
  std::vector<double> x;
  std::vector<double> g1;
  std::vector<double> g2;
};

using RegulationKind = std::variant<Logistic, PowerLaw, Ricker, BevertonHolt, Hassell,
                                    MaynardSmithSlatkin, Tabulated>;

struct RegulationSpec {
  RegulationKind kind = Logistic{};
  /// Fold the whole regulation into the birth side: g1 := g1 + g2, g2 := 0.
  /// This is how a single-g pure-birth rate lambda z (1 - g(z/K)) is expressed.
  bool birth_only = false;

  std::string name() const;
};

struct ModelSpec {
  double lambda = 2.0;
  double mu = 1.0;
  double K = 1.0;
  double alpha = 0.0;
  RegulationSpec regulation;

  /// Throws DomainError unless lambda > mu >= 0, K >= 1, alpha in [0, 1) and
  /// the regulation parameters are admissible.
  void validate() const;

  /// floor(K^alpha).
  std::int64_t initial_size() const;

  /// Stable 64-bit fingerprint of all fields; used to match trajectories to models.
  std::uint64_t fingerprint() const;
};

struct GValues {
  double g1;
  double g2;
  double g;
};

struct GValuesLong {
  long double g1;
  long double g2;
  long double g;
};

/// g1, g2 and g = g1 + g2 at density x >= 0. Throws DomainError for negative x
/// or Tabulated queries outside the grid.
GValues g_eval(const ModelSpec& model, double x);

/// Extended-precision evaluation; used where 1 - g(x) cancels near x_inf.
GValuesLong g_eval_long(const ModelSpec& model, long double x);

/// Total birth rate z * max(0, lambda - (lambda-mu) g1(z/K)).
double birth_rate(const ModelSpec& model, std::int64_t z);

/// Total death rate z * (mu + (lambda-mu) g2(z/K)).
double death_rate(const ModelSpec& model, std::int64_t z);

struct AssumptionCheck {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct AssumptionReport {
  std::vector<AssumptionCheck> checks;
  std::vector<std::string> warnings;

  bool all_passed() const;
};

struct AnalysisOptions {
  std::size_t grid_points = 100'000;
  double x_inf_search_limit = 1e6;
};

/// Derived quantities of a model: x_inf, the Lipschitz estimate and a running
/// supremum grid for g1+, g2+. When x_inf does not exist the analysis is still
/// constructed (x_inf is NaN) and the report records the failure.
class ModelAnalysis {
 public:
  static ModelAnalysis analyze(const ModelSpec& model, const AnalysisOptions& options = {});

  const ModelSpec& model() const noexcept { return model_; }
  double x_inf() const noexcept { return x_inf_; }
  bool has_x_inf() const noexcept;
  double theta() const noexcept { return theta_; }
  const AssumptionReport& report() const noexcept { return report_; }
  const std::vector<double>& grid() const noexcept { return grid_; }
  const std::vector<double>& g1plus_grid() const noexcept { return g1plus_; }
  const std::vector<double>& g2plus_grid() const noexcept { return g2plus_; }

  /// Throws AssumptionError listing failed checks.
  void require_valid() const;

 private:
  ModelSpec model_;
  double x_inf_ = 0.0;
  double theta_ = 1.0;
  std::vector<double> grid_;
  std::vector<double> g1plus_;
  std::vector<double> g2plus_;
  AssumptionReport report_;
};

struct GPlus {
  double g1plus;
  double g2plus;
};

/// Running suprema sup_{0<=y<=x} |g_l(y)| for 0 <= x <= x_inf.
GPlus g_plus(const ModelAnalysis& analysis, double x);

/// Root of g(x) = 1 by bracketing scan and bisection. Throws AssumptionError
/// when no sign change is found below `search_limit`.
double find_x_inf(const ModelSpec& model, double search_limit = 1e6);

/// max(1, max_i |x_{i+1} g(x_{i+1}) - x_i g(x_i)| / (x_{i+1} - x_i)) over a
/// uniform grid of [0, x_inf]. This is a lower bound on the true constant.
double lipschitz_estimate(const ModelSpec& model, double x_inf, std::size_t grid_points = 100'000);

/// Checks the regularity assumptions on g numerically: g(0) = 0, a unique x_inf, x g(x) Lipschitz, and integrability of g+(x)/x at 0.
AssumptionReport validate_assumptions(const ModelSpec& model, const AnalysisOptions& options = {});

}  // namespace bdlab
