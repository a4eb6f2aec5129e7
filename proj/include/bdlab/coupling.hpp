#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bdlab/model.hpp"
#include "bdlab/rng.hpp"
#include "bdlab/sim.hpp"

namespace bdlab {

struct CouplingOverrides {
  std::optional<double> c;
  std::optional<double> eta;
  /// Replaces K^{alpha+c+eta}; +inf keeps Z attached for the whole run.
  std::optional<double> tau_level;
  /// Multiplies the Lipschitz estimate in the default rule for c.
  double theta_safety = 1.25;
};

/// Constants of the four-process coupling at a fixed K.
struct CouplingParams {
  double K = 0.0;
  double alpha = 0.0;
  double lambda = 0.0;
  double mu = 0.0;
  double theta_hat = 1.0;
  double c = 0.0;
  double eta = 0.0;
  double lambda_K = 0.0;
  double mu_K = 0.0;
  double t0 = 0.0;
  double t1 = 0.0;
  double tau_level = 0.0;
  double chi_alpha = 1.0;
  std::int64_t z0 = 0;
  std::uint64_t model_tag = 0;
  std::vector<std::string> warnings;
};

/// Default rule: c solves (1 - alpha - c)(1 + safety * theta_hat) = 1/4 and
/// eta = (1 - alpha - c) / 2. Throws ParameterError naming the violated
/// constraint when (c, eta) or the perturbed rates are infeasible.
CouplingParams derive_params(const ModelSpec& model, const ModelAnalysis& analysis,
                             const CouplingOverrides& overrides = {});

struct ThinningProbs {
  double p3;
  double p4;
};

/// Acceptance probabilities for Z on the thinned streams 3 and 4, chosen so
/// that (lambda - lambda_K) + 2 lambda_K p3 and (mu - mu_K) + 2 mu_K p4 equal
/// Z's per-capita birth and death rates. z must not exceed tau_level.
ThinningProbs thinning_probs(const ModelSpec& model, const CouplingParams& params, std::int64_t z);

struct QuadrupleState {
  std::int64_t u = 0;
  std::int64_t y = 0;
  std::int64_t z = 0;
  std::int64_t v = 0;
};

struct AuditRecord {
  double t;
  int stream;  // 1..4, or 0 for an event of the detached Z
  std::int64_t n;
  double mark;
  QuadrupleState after;
};

struct QuadrupleOptions {
  bool record_paths = true;
  bool record_audit = false;
  /// Simulate only indices n <= max(Y, Z, V). The excess of U over that
  /// maximum is a linear BD process fed by immigrants at coupled events, and
  /// each immigrant's line is drawn from the exact transient law at the
  /// horizon. U is then known only at the horizon, so paths and audit logs
  /// are unavailable and U-side domination holds by construction.
  bool lump_excess = false;
  std::uint64_t event_budget = 100'000'000;
};

struct QuadruplePath {
  double horizon = 0.0;
  bool has_paths = false;
  Trajectory u, y, z, v;
  QuadrupleState initial;
  QuadrupleState final_state;
  /// First time Z >= tau_level, +inf if not reached before the horizon.
  double tau_K = std::numeric_limits<double>::infinity();
  std::int64_t z_at_tau = -1;
  std::uint64_t domination_violations = 0;
  std::uint64_t events = 0;
  Terminal terminal = Terminal::HorizonReached;
  std::vector<AuditRecord> audit;
};

/// Simulates (U, Y, Z, V) on shared Poisson drivers up to `horizon`.
///
/// Per-index stream rates are lambda - lambda_K (1, births), mu - mu_K
/// (2, deaths), 2 lambda_K (3, births) and 2 mu_K (4, deaths). Since U
/// dominates the others, an event picks a stream in proportion to its rate, an
/// index n uniform on {1..U}, and a uniform mark; each process with value >= n
/// then applies the jump through its own gate:
///   U: streams 1, 3 up; 2 down
///   Y: 1 up; 3 up iff mark <= 1/2; 2 down; 4 down iff mark <= 1/2
///   Z: 1 up; 3 up iff mark <= p3; 2 down; 4 down iff mark <= p4
///   V: 1 up; 2, 4 down
/// After tau_K, Z continues as an independent exact SSA on the same clock.
/// With options.lump_excess the index range is max(Y, Z, V) instead of U.
QuadruplePath simulate_quadruple(const ModelSpec& model, const CouplingParams& params, double horizon,
                                 RngStream& rng, const QuadrupleOptions& options = {});

/// W_K = e^{-(lambda-mu) t0} Y_{t0} / Y_0.
double wk_statistic(const QuadruplePath& path, const CouplingParams& params);

struct HittingStats {
  double fraction = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  std::size_t n = 0;
};

/// Fraction of paths with tau_K <= t0 and its Wilson interval at level 1 - delta.
HittingStats hitting_stats(std::span<const QuadruplePath> paths, const CouplingParams& params,
                           double delta = 0.05);
HittingStats hitting_stats(std::span<const double> tau_values, const CouplingParams& params,
                           double delta = 0.05);

/// "t,U,Y,Z,V,stream,n" rows from the audit log (requires record_audit).
void write_quadruple_csv(std::ostream& out, const QuadruplePath& path);

}  // namespace bdlab
