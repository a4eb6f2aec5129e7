#include "bdlab/sim.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include <fmt/core.h>

#include "bdlab/error.hpp"

namespace bdlab {

namespace {

struct Rates {
  double birth;
  double death;
};

struct ModelRates {
  const ModelSpec& model;
  Rates operator()(std::int64_t z) const {
    const auto n = static_cast<double>(z);
    const auto g = g_eval(model, n / model.K);
    const double spread = model.lambda - model.mu;
    return {n * std::max(0.0, model.lambda - spread * g.g1), n * std::max(0.0, model.mu + spread * g.g2)};
  }
};

struct LinearRates {
  double gamma;
  double beta;
  Rates operator()(std::int64_t z) const {
    const auto n = static_cast<double>(z);
    return {gamma * n, beta * n};
  }
};

// Direct method with a Bernoulli split between the two reactions. `on_jump`
// receives (time, state after the jump, delta).
template <class RateFn, class OnJump>
Terminal run_ssa(const RateFn& rates, std::int64_t z, double t, double horizon, const SimOptions& options,
                 RngStream& rng, std::uint64_t& n_events, OnJump&& on_jump) {
  if (options.cap > 0 && z >= options.cap) return Terminal::CapReached;
  while (true) {
    if (z == 0) return Terminal::AbsorbedAtZero;
    const auto [birth, death] = rates(z);
    const double total = birth + death;
    if (!(total > 0.0)) return Terminal::HorizonReached;
    t += rng.exponential() / total;
    if (t > horizon) return Terminal::HorizonReached;
    if (n_events >= options.event_budget) return Terminal::EventBudgetExhausted;
    const int delta = rng.uniform() * total < birth ? 1 : -1;
    z += delta;
    ++n_events;
    on_jump(t, z, delta);
    if (options.cap > 0 && z >= options.cap) return Terminal::CapReached;
  }
}

template <class RateFn>
Trajectory record(const RateFn& rates, std::int64_t z0, double horizon, RngStream& rng,
                  const SimOptions& options) {
  if (z0 < 0) throw DomainError(fmt::format("simulate: negative initial state {}", z0));
  if (!(horizon > 0.0)) throw DomainError(fmt::format("simulate: horizon must be positive, got {}", horizon));
  if (options.cap > 0 && options.cap < z0) {
    throw DomainError(fmt::format("simulate: cap {} below initial state {}", options.cap, z0));
  }
  Trajectory traj;
  traj.z0 = z0;
  traj.horizon = horizon;
  std::uint64_t n = 0;
  traj.terminal = run_ssa(rates, z0, 0.0, horizon, options, rng, n,
                          [&](double t, std::int64_t, int delta) { traj.events.push_back({t, delta}); });
  if (traj.terminal == Terminal::EventBudgetExhausted) {
    traj.horizon = traj.events.empty() ? 0.0 : traj.events.back().t;
  }
  return traj;
}

}  // namespace

std::string_view to_string(Terminal terminal) {
  switch (terminal) {
    case Terminal::HorizonReached: return "horizon-reached";
    case Terminal::AbsorbedAtZero: return "absorbed-at-0";
    case Terminal::CapReached: return "cap-reached";
    case Terminal::EventBudgetExhausted: return "event-budget-exhausted";
  }
  return "unknown";
}

std::int64_t Trajectory::final_state() const {
  std::int64_t z = z0;
  for (const auto& e : events) z += e.delta;
  return z;
}

std::int64_t state_at(const Trajectory& traj, double t) {
  if (!(t >= 0.0) || t > traj.horizon) {
    throw DomainError(fmt::format("state_at: t = {} outside recorded range [0, {}]", t, traj.horizon));
  }
  const auto it = std::upper_bound(traj.events.begin(), traj.events.end(), t,
                                   [](double v, const JumpEvent& e) { return v < e.t; });
  std::int64_t z = traj.z0;
  for (auto e = traj.events.begin(); e != it; ++e) z += e->delta;
  return z;
}

Trajectory simulate_bd(const ModelSpec& model, std::int64_t z0, double horizon, RngStream& rng,
                       const SimOptions& options) {
  auto traj = record(ModelRates{model}, z0, horizon, rng, options);
  traj.model_tag = model.fingerprint();
  return traj;
}

Trajectory simulate_linear_bd(double gamma, double beta, std::int64_t z0, double horizon, RngStream& rng,
                              const SimOptions& options) {
  if (!(gamma >= 0.0) || !(beta >= 0.0)) {
    throw DomainError(fmt::format("simulate_linear_bd: negative rate (gamma={}, beta={})", gamma, beta));
  }
  return record(LinearRates{gamma, beta}, z0, horizon, rng, options);
}

Snapshots simulate_bd_snapshots(const ModelSpec& model, std::int64_t z0, std::span<const double> times,
                                RngStream& rng, const SimOptions& options, double t_begin) {
  if (times.empty()) throw DomainError("simulate_bd_snapshots: no snapshot times");
  if (!std::is_sorted(times.begin(), times.end()) || times.front() < t_begin) {
    throw DomainError("simulate_bd_snapshots: times must be sorted and not before t_begin");
  }
  if (z0 < 0) throw DomainError(fmt::format("simulate: negative initial state {}", z0));
  Snapshots out;
  out.states.assign(times.size(), -1);
  std::size_t k = 0;
  std::int64_t z = z0;
  out.terminal = run_ssa(ModelRates{model}, z0, t_begin, times.back(), options, rng, out.events,
                         [&](double t, std::int64_t z_after, int delta) {
                           while (k < times.size() && times[k] < t) out.states[k++] = z_after - delta;
                           z = z_after;
                         });
  if (out.terminal != Terminal::EventBudgetExhausted) {
    while (k < times.size()) out.states[k++] = z;
  }
  return out;
}

JumpTimes pure_birth_jump_times(const ModelSpec& model, std::int64_t n_max, RngStream& rng) {
  return pure_birth_jump_times(model, find_x_inf(model), n_max, rng);
}

JumpTimes pure_birth_jump_times(const ModelSpec& model, double x_inf, std::int64_t n_max, RngStream& rng) {
  if (model.mu != 0.0) throw DomainError("pure_birth_jump_times: requires mu = 0");
  const auto level = static_cast<std::int64_t>(std::floor(model.K * x_inf));
  if (n_max < 1 || n_max > level) {
    throw DomainError(fmt::format("pure_birth_jump_times: n_max = {} outside [1, floor(K x_inf) = {}]", n_max, level));
  }
  JumpTimes out;
  out.T.resize(static_cast<std::size_t>(n_max));
  out.T_tilde.resize(static_cast<std::size_t>(n_max));
  double t = 0.0, t_lin = 0.0;
  for (std::int64_t i = 1; i <= n_max; ++i) {
    const double tau = rng.exponential();
    t += tau / birth_rate(model, i);
    t_lin += tau / (model.lambda * static_cast<double>(i));
    out.T[static_cast<std::size_t>(i - 1)] = t;
    out.T_tilde[static_cast<std::size_t>(i - 1)] = t_lin;
  }
  return out;
}

double MartingaleResidual::at(double t) const {
  if (!(t >= 0.0) || t > horizon_) {
    throw DomainError(fmt::format("martingale residual: t = {} outside [0, {}]", t, horizon_));
  }
  const auto it = std::upper_bound(times_.begin(), times_.end(), t);
  const auto k = static_cast<std::size_t>(it - times_.begin()) - 1;
  return state_[k] - static_cast<double>(z0_) - (drift_[k] + rate_[k] * (t - times_[k]));
}

double MartingaleResidual::qv_ratio() const noexcept {
  return predictable_qv_ > 0.0 ? realized_qv_ / predictable_qv_ : 1.0;
}

MartingaleResidual martingale_residual(const Trajectory& traj, const ModelSpec& model) {
  if (traj.model_tag != 0 && traj.model_tag != model.fingerprint()) {
    throw DomainError("martingale_residual: trajectory was generated by a different model");
  }
  MartingaleResidual m;
  m.z0_ = traj.z0;
  m.horizon_ = traj.horizon;
  m.times_.reserve(traj.events.size() + 1);
  m.state_.reserve(traj.events.size() + 1);
  m.drift_.reserve(traj.events.size() + 1);
  m.rate_.reserve(traj.events.size() + 1);

  std::int64_t z = traj.z0;
  double t = 0.0;
  double drift = 0.0;
  double compensator = 0.0;
  auto open_interval = [&]() {
    const double b = birth_rate(model, z);
    const double d = death_rate(model, z);
    m.times_.push_back(t);
    m.state_.push_back(static_cast<double>(z));
    m.drift_.push_back(drift);
    m.rate_.push_back(b - d);
    return b + d;
  };
  double intensity = open_interval();
  for (const auto& e : traj.events) {
    const double dt = e.t - t;
    drift += m.rate_.back() * dt;
    compensator += intensity * dt;
    t = e.t;
    z += e.delta;
    intensity = open_interval();
  }
  const double dt = traj.horizon - t;
  drift += m.rate_.back() * dt;
  compensator += intensity * dt;

  m.terminal_ = static_cast<double>(z - traj.z0) - drift;
  m.realized_qv_ = static_cast<double>(traj.events.size());
  m.predictable_qv_ = compensator;
  return m;
}

void write_trajectory_csv(std::ostream& out, const Trajectory& traj) {
  out << "t,z\n";
  std::int64_t z = traj.z0;
  out << fmt::format("{:.17g},{}\n", 0.0, z);
  for (const auto& e : traj.events) {
    z += e.delta;
    out << fmt::format("{:.17g},{}\n", e.t, z);
  }
}

}  // namespace bdlab
