#include "bdlab/coupling.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include <fmt/core.h>

#include "bdlab/error.hpp"
#include "bdlab/limitlaw.hpp"
#include "bdlab/stats.hpp"

namespace bdlab {

CouplingParams derive_params(const ModelSpec& model, const ModelAnalysis& analysis,
                             const CouplingOverrides& overrides) {
  model.validate();
  if (!analysis.has_x_inf()) throw AssumptionError("derive_params: model has no x_inf");

  CouplingParams p;
  p.K = model.K;
  p.alpha = model.alpha;
  p.lambda = model.lambda;
  p.mu = model.mu;
  p.theta_hat = analysis.theta();
  p.z0 = model.initial_size();
  p.model_tag = model.fingerprint();
  if (p.z0 < 1) throw ParameterError("derive_params: floor(K^alpha) must be at least 1");

  const double room = 1.0 - model.alpha;
  if (overrides.c) {
    p.c = *overrides.c;
  } else {
    p.c = room - 0.25 / (1.0 + overrides.theta_safety * p.theta_hat);
    if (p.c <= 0.0) p.c = 0.5 * room;
  }
  if (!(p.c > 0.0 && p.c < room)) {
    throw ParameterError(fmt::format("constraint 0 < c < 1 - alpha violated (c = {})", p.c));
  }
  p.eta = overrides.eta ? *overrides.eta : 0.5 * (room - p.c);
  if (!(p.eta > 0.0 && p.eta < room - p.c)) {
    throw ParameterError(fmt::format("constraint 0 < eta < 1 - alpha - c violated (eta = {})", p.eta));
  }
  const double lhs = (room - p.c) * (1.0 + p.theta_hat);
  if (!(lhs > 0.0 && lhs < 0.5)) {
    throw ParameterError(
        fmt::format("constraint 0 < (1 - (alpha + c))(1 + theta) < 1/2 violated (value {})", lhs));
  }

  const double x_level = std::pow(model.K, model.alpha + p.c + p.eta - 1.0);
  if (x_level > analysis.x_inf()) {
    throw ParameterError(fmt::format("K^(alpha+c+eta-1) = {} exceeds x_inf = {}", x_level, analysis.x_inf()));
  }
  const auto gp = g_plus(analysis, x_level);
  const double spread = model.lambda - model.mu;
  p.lambda_K = spread * gp.g1plus;
  p.mu_K = spread * gp.g2plus;
  if (!(model.lambda - p.lambda_K > 0.0)) {
    throw ParameterError(fmt::format("constraint lambda - lambda_K > 0 violated (lambda_K = {}); K too small",
                                     p.lambda_K));
  }
  if (!(model.mu - p.mu_K >= 0.0)) {
    throw ParameterError(
        fmt::format("constraint mu - mu_K >= 0 violated (mu_K = {}, mu = {}); K too small", p.mu_K, model.mu));
  }
  if (p.lambda_K + p.mu_K > 0.1 * spread) {
    p.warnings.push_back(fmt::format(
        "rate perturbation lambda_K + mu_K = {:.4g} exceeds 10% of lambda - mu; the asymptotic regime needs larger K",
        p.lambda_K + p.mu_K));
  }

  const double log_k = std::log(model.K);
  p.t0 = p.c * log_k / spread;
  p.t1 = room * log_k / spread;
  p.tau_level = overrides.tau_level ? *overrides.tau_level : std::pow(model.K, model.alpha + p.c + p.eta);
  p.chi_alpha = std::pow(model.K, model.alpha) / static_cast<double>(p.z0);
  return p;
}

ThinningProbs thinning_probs(const ModelSpec& model, const CouplingParams& params, std::int64_t z) {
  if (z < 0 || static_cast<double>(z) > params.tau_level) {
    throw DomainError(fmt::format("thinning_probs: z = {} outside [0, tau_level = {}]", z, params.tau_level));
  }
  const auto g = g_eval(model, static_cast<double>(z) / model.K);
  const double spread = model.lambda - model.mu;
  ThinningProbs out{0.0, 0.5};
  if (params.lambda_K > 0.0) {
    out.p3 = std::clamp((params.lambda_K - spread * g.g1) / (2.0 * params.lambda_K), 0.0, 1.0);
  }
  if (params.mu_K > 0.0) {
    out.p4 = std::clamp((params.mu_K + spread * g.g2) / (2.0 * params.mu_K), 0.0, 1.0);
  }
  return out;
}

QuadruplePath simulate_quadruple(const ModelSpec& model, const CouplingParams& params, double horizon,
                                 RngStream& rng, const QuadrupleOptions& options) {
  if (!(horizon > 0.0)) throw DomainError(fmt::format("simulate_quadruple: horizon must be positive, got {}", horizon));
  if (params.model_tag != model.fingerprint()) {
    throw DomainError("simulate_quadruple: coupling parameters were derived for a different model");
  }
  const bool lump = options.lump_excess;
  if (lump && (options.record_paths || options.record_audit)) {
    throw DomainError("simulate_quadruple: lump_excess cannot record paths or audit logs");
  }

  const double r1 = params.lambda - params.lambda_K;
  const double r2 = params.mu - params.mu_K;
  const double r3 = 2.0 * params.lambda_K;
  const double r4 = 2.0 * params.mu_K;
  const double per_index = r1 + r2 + r3 + r4;
  const double spread = model.lambda - model.mu;
  // Per-capita rates of U, used for the lumped excess.
  const double u_birth = r1 + r3;
  const double u_death = r2;

  QuadruplePath path;
  path.horizon = horizon;
  path.has_paths = options.record_paths;
  QuadrupleState s{params.z0, params.z0, params.z0, params.z0};
  path.initial = s;
  for (auto* traj : {&path.u, &path.y, &path.z, &path.v}) {
    traj->z0 = params.z0;
    traj->horizon = horizon;
  }
  path.z.model_tag = model.fingerprint();

  bool attached = static_cast<double>(s.z) < params.tau_level;
  if (!attached) {
    path.tau_K = 0.0;
    path.z_at_tau = s.z;
  }

  // Lumped mode: top = max of the processes still driven by the indices, and
  // excess_final accumulates the horizon values of the immigrant lines.
  auto top_of = [&] { return std::max({s.y, s.v, attached ? s.z : std::int64_t{0}}); };
  std::int64_t top = top_of();
  std::int64_t excess_final = 0;
  double t = 0.0;
  auto immigrate = [&](std::int64_t count) {
    for (std::int64_t i = 0; i < count; ++i) excess_final += linear_bd_sample(u_birth, u_death, horizon - t, rng);
  };

  auto note = [&](Trajectory& traj, double when, int delta) {
    if (options.record_paths) traj.events.push_back({when, delta});
  };

  while (true) {
    const std::int64_t range = lump ? top : s.u;
    const double coupled = static_cast<double>(range) * per_index;
    double det_birth = 0.0, det_death = 0.0;
    if (!attached && s.z > 0) {
      det_birth = birth_rate(model, s.z);
      det_death = death_rate(model, s.z);
    }
    const double detached = det_birth + det_death;
    const double total = coupled + detached;
    if (!(total > 0.0)) {
      path.terminal = Terminal::AbsorbedAtZero;
      break;
    }
    const double t_next = t + rng.exponential() / total;
    if (t_next > horizon) {
      path.terminal = Terminal::HorizonReached;
      break;
    }
    if (path.events >= options.event_budget) {
      path.terminal = Terminal::EventBudgetExhausted;
      for (auto* traj : {&path.u, &path.y, &path.z, &path.v}) traj->horizon = t_next;
      break;
    }
    t = t_next;
    ++path.events;

    const double pick = rng.uniform() * total;
    if (pick < detached) {
      const int delta = pick < det_birth ? 1 : -1;
      s.z += delta;
      note(path.z, t, delta);
      if (options.record_audit) path.audit.push_back({t, 0, 0, 0.0, s});
      continue;
    }

    const double x = (pick - detached) / static_cast<double>(range);
    const int stream = x < r1 ? 1 : x < r1 + r2 ? 2 : x < r1 + r2 + r3 ? 3 : 4;
    const std::int64_t n = rng.index(range) + 1;
    const double mark = (stream >= 3) ? rng.uniform() : 0.0;
    const std::int64_t z_before = s.z;

    auto jump = [&](std::int64_t& value, Trajectory& traj, int delta) {
      value += delta;
      note(traj, t, delta);
    };
    int du = 0;
    switch (stream) {
      case 1:
        du = +1;
        if (n <= s.y) jump(s.y, path.y, +1);
        if (attached && n <= s.z) jump(s.z, path.z, +1);
        if (n <= s.v) jump(s.v, path.v, +1);
        break;
      case 2:
        du = -1;
        if (n <= s.y) jump(s.y, path.y, -1);
        if (attached && n <= s.z) jump(s.z, path.z, -1);
        if (n <= s.v) jump(s.v, path.v, -1);
        break;
      case 3: {
        du = +1;
        if (n <= s.y && mark <= 0.5) jump(s.y, path.y, +1);
        if (attached && n <= s.z) {
          const double g1 = g_eval(model, static_cast<double>(z_before) / model.K).g1;
          const double p3 = std::clamp((params.lambda_K - spread * g1) / r3, 0.0, 1.0);
          if (mark <= p3) jump(s.z, path.z, +1);
        }
        break;
      }
      case 4: {
        if (n <= s.y && mark <= 0.5) jump(s.y, path.y, -1);
        if (attached && n <= s.z) {
          const double g2 = g_eval(model, static_cast<double>(z_before) / model.K).g2;
          const double p4 = std::clamp((params.mu_K + spread * g2) / r4, 0.0, 1.0);
          if (mark <= p4) jump(s.z, path.z, -1);
        }
        if (n <= s.v) jump(s.v, path.v, -1);
        break;
      }
    }
    if (lump) {
      const std::int64_t new_top = top_of();
      // Indices above the new maximum no longer move Y, Z or V.
      const std::int64_t arrivals = du - (new_top - top);
      if (arrivals < 0) ++path.domination_violations;
      immigrate(std::max<std::int64_t>(arrivals, 0));
      top = new_top;
    } else if (du != 0) {
      jump(s.u, path.u, du);
    }

    const bool lower_ok = s.v <= s.y && (!attached || s.v <= s.z);
    const bool upper_ok = lump || (s.y <= s.u && (!attached || s.z <= s.u));
    if (!lower_ok || !upper_ok) ++path.domination_violations;
    if (options.record_audit) path.audit.push_back({t, stream, n, mark, s});
    if (attached && static_cast<double>(s.z) >= params.tau_level) {
      attached = false;
      path.tau_K = t;
      path.z_at_tau = s.z;
      if (lump) {
        const std::int64_t new_top = top_of();
        immigrate(top - new_top);
        top = new_top;
      }
    }
  }
  if (lump) s.u = top + excess_final;
  path.final_state = s;
  return path;
}

double wk_statistic(const QuadruplePath& path, const CouplingParams& params) {
  if (path.terminal == Terminal::EventBudgetExhausted) throw DomainError("wk_statistic: path exhausted its event budget");
  std::int64_t y = 0;
  if (std::abs(path.horizon - params.t0) <= 1e-12 * std::max(1.0, params.t0)) {
    y = path.final_state.y;
  } else if (path.horizon > params.t0 && path.has_paths) {
    y = state_at(path.y, params.t0);
  } else if (path.horizon > params.t0) {
    throw DomainError("wk_statistic: path runs past t0 but trajectories were not recorded");
  } else {
    throw DomainError(fmt::format("wk_statistic: path horizon {} shorter than t0 = {}", path.horizon, params.t0));
  }
  return std::exp(-(params.lambda - params.mu) * params.t0) * static_cast<double>(y) /
         static_cast<double>(path.initial.y);
}

HittingStats hitting_stats(std::span<const double> tau_values, const CouplingParams& params, double delta) {
  if (tau_values.empty()) throw DomainError("hitting_stats: no paths");
  if (tau_values.size() < 100) {
    throw DomainError(fmt::format("hitting_stats: need at least 100 paths, got {}", tau_values.size()));
  }
  const auto hits = static_cast<std::int64_t>(
      std::count_if(tau_values.begin(), tau_values.end(), [&](double tau) { return tau <= params.t0; }));
  const auto n = static_cast<std::int64_t>(tau_values.size());
  const auto ci = binom_ci(hits, n, delta);
  return {static_cast<double>(hits) / static_cast<double>(n), ci.lo, ci.hi, tau_values.size()};
}

HittingStats hitting_stats(std::span<const QuadruplePath> paths, const CouplingParams& params, double delta) {
  std::vector<double> taus;
  taus.reserve(paths.size());
  for (const auto& p : paths) taus.push_back(p.tau_K);
  return hitting_stats(std::span<const double>(taus), params, delta);
}

void write_quadruple_csv(std::ostream& out, const QuadruplePath& path) {
  if (path.audit.empty() && path.events > 0) {
    throw DomainError("write_quadruple_csv: path was simulated without an audit log");
  }
  out << "t,U,Y,Z,V,stream,n\n";
  const auto& s0 = path.initial;
  out << fmt::format("0,{},{},{},{},,\n", s0.u, s0.y, s0.z, s0.v);
  for (const auto& a : path.audit) {
    out << fmt::format("{:.17g},{},{},{},{},{},{}\n", a.t, a.after.u, a.after.y, a.after.z, a.after.v, a.stream,
                       a.n);
  }
}

}  // namespace bdlab
