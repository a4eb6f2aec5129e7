#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

#include "bdlab/model.hpp"
#include "bdlab/rng.hpp"

namespace bdlab {

enum class Terminal { HorizonReached, AbsorbedAtZero, CapReached, EventBudgetExhausted };

std::string_view to_string(Terminal terminal);

struct JumpEvent {
  double t;
  int delta;  // +1 or -1
};

/// Exact jump path of an integer-valued process: initial state plus
/// time-ordered +-1 events. `horizon` is the end of the interval on which the
/// path is known; after absorption or a cap the state stays constant up to it.
struct Trajectory {
  std::int64_t z0 = 0;
  double horizon = 0.0;
  std::vector<JumpEvent> events;
  Terminal terminal = Terminal::HorizonReached;
  /// ModelSpec::fingerprint() of the generating model; 0 when not model-based.
  std::uint64_t model_tag = 0;

  std::int64_t final_state() const;
};

/// Right-continuous state at time t in [0, horizon].
std::int64_t state_at(const Trajectory& traj, double t);

struct SimOptions {
  /// Absorbing upper level; 0 disables.
  std::int64_t cap = 0;
  std::uint64_t event_budget = 100'000'000;
};

/// Direct two-reaction SSA of the density-dependent BD process.
Trajectory simulate_bd(const ModelSpec& model, std::int64_t z0, double horizon, RngStream& rng,
                       const SimOptions& options = {});

/// Linear BD process with per-capita rates gamma (birth) and beta (death).
Trajectory simulate_linear_bd(double gamma, double beta, std::int64_t z0, double horizon, RngStream& rng,
                              const SimOptions& options = {});

struct Snapshots {
  /// State at each requested time; -1 where the event budget ran out first.
  std::vector<std::int64_t> states;
  Terminal terminal = Terminal::HorizonReached;
  std::uint64_t events = 0;
};

/// Same dynamics as simulate_bd without storing events. `times` must be
/// nondecreasing and nonnegative; simulation runs from t_begin to times.back().
Snapshots simulate_bd_snapshots(const ModelSpec& model, std::int64_t z0, std::span<const double> times,
                                RngStream& rng, const SimOptions& options = {}, double t_begin = 0.0);

struct JumpTimes {
  std::vector<double> T;        // n-th jump of the nonlinear pure-birth process
  std::vector<double> T_tilde;  // n-th jump of the linear pure-birth process
};

/// Jump times T_n = sum_i tau_i / lambda(i) and T~_n = sum_i tau_i / (lambda i),
/// i = 1..n, from one shared Exp(1) sequence, where lambda(i) is the total
/// birth rate of `model` at state i. Requires mu = 0 and
/// n_max <= floor(K x_inf).
JumpTimes pure_birth_jump_times(const ModelSpec& model, std::int64_t n_max, RngStream& rng);
JumpTimes pure_birth_jump_times(const ModelSpec& model, double x_inf, std::int64_t n_max, RngStream& rng);

/// M_t = Z_t - Z_0 - int_0^t (b(Z_s) - d(Z_s)) ds along a trajectory, with the
/// drift integral summed exactly over constant-state intervals.
class MartingaleResidual {
 public:
  double at(double t) const;
  double terminal() const noexcept { return terminal_; }
  /// [M]_T: number of jumps.
  double realized_qv() const noexcept { return realized_qv_; }
  /// <M>_T = int_0^T (b(Z_s) + d(Z_s)) ds.
  double predictable_qv() const noexcept { return predictable_qv_; }
  /// [M]_T / <M>_T, defined as 1 when <M>_T = 0.
  double qv_ratio() const noexcept;

 private:
  friend MartingaleResidual martingale_residual(const Trajectory&, const ModelSpec&);
  std::int64_t z0_ = 0;
  double horizon_ = 0.0;
  std::vector<double> times_;   // 0 followed by event times
  std::vector<double> state_;   // state on [times_[k], times_[k+1])
  std::vector<double> drift_;   // cumulative drift integral at times_[k]
  std::vector<double> rate_;    // b - d on that interval
  double terminal_ = 0.0;
  double realized_qv_ = 0.0;
  double predictable_qv_ = 0.0;
};

MartingaleResidual martingale_residual(const Trajectory& traj, const ModelSpec& model);

/// "t,z" rows: the initial state at t = 0, then one row per event.
void write_trajectory_csv(std::ostream& out, const Trajectory& traj);

}  // namespace bdlab
