#include "bdlab/experiment.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <functional>
#include <limits>
#include <mutex>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <thread>

#include <fmt/core.h>

#include "bdlab/coupling.hpp"
#include "bdlab/error.hpp"
#include "bdlab/flow.hpp"
#include "bdlab/limitlaw.hpp"
#include "bdlab/sim.hpp"
#include "bdlab/stats.hpp"

namespace bdlab {

using nlohmann::json;

namespace {

constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();
constexpr double kInf = std::numeric_limits<double>::infinity();

struct Outcome {
  bool exhausted = false;
  std::vector<double> values;
};

using ReplicateFn = std::function<Outcome(std::uint64_t replicate, RngStream& rng)>;

void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& body) {
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < n;) {
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(n);
      }
    }
  };
  const std::size_t extra = std::min(threads, n) > 1 ? std::min(threads, n) - 1 : 0;
  std::vector<std::thread> pool;
  pool.reserve(extra);
  for (std::size_t i = 0; i < extra; ++i) pool.emplace_back(work);
  work();
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

ResultRecord start_record(ExperimentKind kind, const std::vector<std::string>& extra) {
  ResultRecord rec;
  rec.kind = kind;
  rec.columns.assign(std::begin(kBaseColumns), std::end(kBaseColumns));
  rec.columns.insert(rec.columns.end(), extra.begin(), extra.end());
  return rec;
}

std::size_t column(const std::vector<std::string>& columns, std::string_view name) {
  const auto it = std::find(columns.begin(), columns.end(), name);
  if (it == columns.end()) throw ConfigError(fmt::format("replicate table has no column '{}'", name));
  return static_cast<std::size_t>(it - columns.begin());
}

std::vector<double> blank_values(const ResultRecord& rec) { return std::vector<double>(rec.columns.size(), kMissing); }

void collect(ResultRecord& rec, const ExperimentConfig& cfg, std::size_t k_index, const ReplicateFn& fn) {
  const auto t_start = std::chrono::steady_clock::now();
  std::vector<Outcome> slots(cfg.replicates);
  parallel_for(cfg.replicates, cfg.threads, [&](std::size_t r) {
    RngStream rng(cfg.seed, stream_id(k_index, r));
    slots[r] = fn(r, rng);
  });
  std::vector<std::uint64_t> dropped;
  for (std::size_t r = 0; r < slots.size(); ++r) {
    if (slots[r].exhausted) {
      dropped.push_back(r);
      continue;
    }
    rec.rows.push_back({cfg.K_list[k_index], r, cfg.seed, std::move(slots[r].values)});
  }
  rec.exhausted.push_back(std::move(dropped));
  rec.wall_seconds.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count());
}

ModelSpec model_at(const ModelSpec& base, double K) {
  ModelSpec m = base;
  m.K = K;
  m.validate();
  return m;
}

ModelSpec purebirth_model(const ExperimentConfig& cfg) {
  if (cfg.model.mu != 0.0) throw DomainError(fmt::format("purebirth requires mu = 0, got {}", cfg.model.mu));
  ModelSpec m = cfg.model;
  m.regulation.birth_only = true;
  return m;
}

/// Model that the experiment actually simulates (K is irrelevant here).
ModelSpec effective_model(const ExperimentConfig& cfg) {
  ModelSpec m = cfg.kind == ExperimentKind::PureBirth ? purebirth_model(cfg) : cfg.model;
  m.validate();
  return m;
}

struct Kernel {
  ModelAnalysis analysis;
  GTable table;
};

Kernel build_kernel(const ModelSpec& model) {
  auto analysis = ModelAnalysis::analyze(model);
  analysis.require_valid();
  GTable table(analysis);
  return {std::move(analysis), std::move(table)};
}

std::string offset_column(double s) { return fmt::format("zbar_t1+{}", s); }
std::string jump_column(std::string_view stem, double x) { return fmt::format("{}_x{}", stem, x); }

std::vector<double> positive_offsets(const ExperimentConfig& cfg) {
  std::vector<double> out;
  for (double s : cfg.offsets) {
    if (s > 0.0 && std::find(out.begin(), out.end(), s) == out.end()) out.push_back(s);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<double> jump_grid(const ExperimentConfig& cfg) {
  std::vector<double> xs = cfg.jump_x;
  if (std::find(xs.begin(), xs.end(), 0.5) == xs.end()) xs.push_back(0.5);
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  return xs;
}

double t1_of(const ModelSpec& m, double K) { return (1.0 - m.alpha) * std::log(K) / (m.lambda - m.mu); }

std::vector<double> values_of(const std::vector<const ReplicateRow*>& rows, std::size_t col) {
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto* r : rows) {
    if (!std::isnan(r->values[col])) out.push_back(r->values[col]);
  }
  return out;
}

}  // namespace

std::uint64_t stream_id(std::size_t k_index, std::uint64_t replicate) {
  return (static_cast<std::uint64_t>(k_index) << 32) | replicate;
}

ResultRecord run_theorem1(const ExperimentConfig& cfg) {
  cfg.validate();
  const ModelSpec base = effective_model(cfg);
  if (!(base.mu > 0.0)) throw DomainError("theorem1 requires mu > 0");
  build_kernel(base);  // assumption check before any simulation

  const auto offsets = positive_offsets(cfg);
  std::vector<std::string> extra;
  for (double s : offsets) extra.push_back(offset_column(s));
  ResultRecord rec = start_record(ExperimentKind::Theorem1, extra);
  const std::size_t c_zbar = column(rec.columns, "zbar_t1");
  const std::size_t c_ext = column(rec.columns, "extinct");
  const std::size_t c_off = rec.columns.size() - offsets.size();

  for (std::size_t k = 0; k < cfg.K_list.size(); ++k) {
    const ModelSpec model = model_at(base, cfg.K_list[k]);
    const double t1 = t1_of(model, model.K);
    std::vector<double> times{t1};
    for (double s : offsets) times.push_back(t1 + s);
    const SimOptions opts{0, cfg.event_budget};
    const auto z0 = model.initial_size();
    collect(rec, cfg, k, [&](std::uint64_t, RngStream& rng) {
      const auto snap = simulate_bd_snapshots(model, z0, times, rng, opts);
      Outcome out;
      if (snap.terminal == Terminal::EventBudgetExhausted) {
        out.exhausted = true;
        return out;
      }
      out.values = blank_values(rec);
      out.values[c_zbar] = static_cast<double>(snap.states[0]) / model.K;
      out.values[c_ext] = snap.states[0] == 0 ? 1.0 : 0.0;
      for (std::size_t i = 0; i < offsets.size(); ++i) {
        out.values[c_off + i] = static_cast<double>(snap.states[i + 1]) / model.K;
      }
      return out;
    });
  }
  rec.per_k = summarize(cfg, rec.columns, rec.rows, rec.exhausted);
  return rec;
}

ResultRecord run_purebirth(const ExperimentConfig& cfg) {
  cfg.validate();
  const ModelSpec base = effective_model(cfg);
  const Kernel kernel = build_kernel(base);
  const double x_inf = kernel.analysis.x_inf();
  const auto xs = jump_grid(cfg);
  if (xs.back() >= x_inf) throw ConfigError(fmt::format("jump_x must stay below x_inf = {}", x_inf));

  std::vector<std::string> extra;
  for (double x : xs) {
    extra.push_back(jump_column("T", x));
    extra.push_back(jump_column("Ttilde", x));
  }
  ResultRecord rec = start_record(ExperimentKind::PureBirth, extra);
  const std::size_t c_zbar = column(rec.columns, "zbar_t1");
  const std::size_t c_ext = column(rec.columns, "extinct");
  const std::size_t c_first = column(rec.columns, jump_column("T", xs.front()));

  for (std::size_t k = 0; k < cfg.K_list.size(); ++k) {
    const ModelSpec model = model_at(base, cfg.K_list[k]);
    const double t = std::log(model.K) / model.lambda;
    const auto level = static_cast<std::int64_t>(std::floor(model.K * x_inf));
    std::vector<std::int64_t> ns;
    for (double x : xs) ns.push_back(std::max<std::int64_t>(1, static_cast<std::int64_t>(std::floor(x * model.K))));
    if (ns.back() > level) throw ConfigError("jump_x grid exceeds floor(K x_inf) at this K");
    const SimOptions opts{level, cfg.event_budget};
    const std::array<double, 1> times{t};
    collect(rec, cfg, k, [&](std::uint64_t, RngStream& rng) {
      const auto snap = simulate_bd_snapshots(model, model.initial_size(), times, rng, opts);
      Outcome out;
      if (snap.terminal == Terminal::EventBudgetExhausted) {
        out.exhausted = true;
        return out;
      }
      out.values = blank_values(rec);
      out.values[c_zbar] = static_cast<double>(snap.states[0]) / model.K;
      out.values[c_ext] = snap.states[0] == 0 ? 1.0 : 0.0;
      const auto jt = pure_birth_jump_times(model, x_inf, ns.back(), rng);
      for (std::size_t i = 0; i < ns.size(); ++i) {
        const auto idx = static_cast<std::size_t>(ns[i] - 1);
        out.values[c_first + 2 * i] = jt.T[idx];
        out.values[c_first + 2 * i + 1] = jt.T_tilde[idx];
      }
      return out;
    });
  }
  rec.per_k = summarize(cfg, rec.columns, rec.rows, rec.exhausted);
  return rec;
}

namespace {

std::vector<double> fluid_grid(const ExperimentConfig& cfg) {
  std::vector<double> times;
  const auto steps = static_cast<std::size_t>(std::floor(cfg.T / cfg.snapshot_dt + 1e-9));
  for (std::size_t i = 0; i <= steps; ++i) times.push_back(static_cast<double>(i) * cfg.snapshot_dt);
  if (times.back() < cfg.T) times.push_back(cfg.T);
  return times;
}

}  // namespace

ResultRecord run_fluidcheck(const ExperimentConfig& cfg) {
  cfg.validate();
  const ModelSpec base = effective_model(cfg);
  const Kernel kernel = build_kernel(base);
  if (!(cfg.x0 < kernel.analysis.x_inf() * (1.0 + 1e-12))) {
    throw ConfigError(fmt::format("x0 = {} must not exceed x_inf = {}", cfg.x0, kernel.analysis.x_inf()));
  }
  const auto times = fluid_grid(cfg);
  std::vector<double> fluid(times.size());
  fluid[0] = cfg.x0;
  for (std::size_t i = 1; i < times.size(); ++i) fluid[i] = ode_rk(base, times[i - 1], times[i], fluid[i - 1]);

  ResultRecord rec = start_record(ExperimentKind::FluidCheck, {"sup_error", "zbar_T"});
  const std::size_t c_sup = column(rec.columns, "sup_error");
  const std::size_t c_end = column(rec.columns, "zbar_T");

  for (std::size_t k = 0; k < cfg.K_list.size(); ++k) {
    const ModelSpec model = model_at(base, cfg.K_list[k]);
    const auto z0 = static_cast<std::int64_t>(std::floor(cfg.x0 * model.K));
    const SimOptions opts{0, cfg.event_budget};
    collect(rec, cfg, k, [&](std::uint64_t, RngStream& rng) {
      const auto snap = simulate_bd_snapshots(model, z0, times, rng, opts);
      Outcome out;
      if (snap.terminal == Terminal::EventBudgetExhausted) {
        out.exhausted = true;
        return out;
      }
      double sup = 0.0;
      for (std::size_t i = 0; i < times.size(); ++i) {
        sup = std::max(sup, std::abs(static_cast<double>(snap.states[i]) / model.K - fluid[i]));
      }
      out.values = blank_values(rec);
      out.values[c_sup] = sup;
      out.values[c_end] = static_cast<double>(snap.states.back()) / model.K;
      return out;
    });
  }
  rec.per_k = summarize(cfg, rec.columns, rec.rows, rec.exhausted);
  return rec;
}

namespace {

CouplingOverrides overrides_of(const ExperimentConfig& cfg) {
  CouplingOverrides o;
  o.c = cfg.c;
  o.eta = cfg.eta;
  return o;
}

}  // namespace

ResultRecord run_coupling_diag(const ExperimentConfig& cfg) {
  cfg.validate();
  const ModelSpec base = effective_model(cfg);
  const Kernel kernel = build_kernel(base);

  ResultRecord rec = start_record(ExperimentKind::CouplingDiag, {"zbar_t0", "ybar_t0", "flow_diff", "violations"});
  const std::size_t c_zbar = column(rec.columns, "zbar_t1");
  const std::size_t c_ext = column(rec.columns, "extinct");
  const std::size_t c_tau = column(rec.columns, "tau_K");
  const std::size_t c_wk = column(rec.columns, "W_K");
  const std::size_t c_delta = column(rec.columns, "delta_t1");
  const std::size_t c_z0 = column(rec.columns, "zbar_t0");
  const std::size_t c_y0 = column(rec.columns, "ybar_t0");
  const std::size_t c_fd = column(rec.columns, "flow_diff");
  const std::size_t c_viol = column(rec.columns, "violations");

  for (std::size_t k = 0; k < cfg.K_list.size(); ++k) {
    const ModelSpec model = model_at(base, cfg.K_list[k]);
    const CouplingParams params = derive_params(model, kernel.analysis, overrides_of(cfg));
    for (const auto& w : params.warnings) rec.warnings.push_back(fmt::format("K={}: {}", model.K, w));
    QuadrupleOptions qopts;
    qopts.record_paths = false;
    qopts.lump_excess = true;
    qopts.event_budget = cfg.event_budget;
    const SimOptions sopts{0, cfg.event_budget};
    const std::array<double, 1> t1{params.t1};
    collect(rec, cfg, k, [&](std::uint64_t, RngStream& rng) {
      Outcome out;
      const auto path = simulate_quadruple(model, params, params.t0, rng, qopts);
      if (path.terminal == Terminal::EventBudgetExhausted) {
        out.exhausted = true;
        return out;
      }
      const auto z_t0 = path.final_state.z;
      const auto snap = simulate_bd_snapshots(model, z_t0, t1, rng, sopts, params.t0);
      if (snap.terminal == Terminal::EventBudgetExhausted) {
        out.exhausted = true;
        return out;
      }
      const double zbar_t0 = static_cast<double>(z_t0) / model.K;
      const double ybar_t0 = static_cast<double>(path.final_state.y) / model.K;
      const double zbar_t1 = static_cast<double>(snap.states[0]) / model.K;
      const double phi_z = flow_phi(kernel.table, params.t0, params.t1, zbar_t0);
      const double phi_y = flow_phi(kernel.table, params.t0, params.t1, ybar_t0);
      out.values = blank_values(rec);
      out.values[c_zbar] = zbar_t1;
      out.values[c_ext] = snap.states[0] == 0 ? 1.0 : 0.0;
      out.values[c_tau] = path.tau_K;
      out.values[c_wk] = wk_statistic(path, params);
      out.values[c_delta] = zbar_t1 - phi_z;
      out.values[c_z0] = zbar_t0;
      out.values[c_y0] = ybar_t0;
      out.values[c_fd] = phi_z - phi_y;
      out.values[c_viol] = static_cast<double>(path.domination_violations);
      return out;
    });
  }
  rec.per_k = summarize(cfg, rec.columns, rec.rows, rec.exhausted);
  return rec;
}

ResultRecord run_experiment(const ExperimentConfig& cfg) {
  switch (cfg.kind) {
    case ExperimentKind::Theorem1: return run_theorem1(cfg);
    case ExperimentKind::PureBirth: return run_purebirth(cfg);
    case ExperimentKind::FluidCheck: return run_fluidcheck(cfg);
    case ExperimentKind::CouplingDiag: return run_coupling_diag(cfg);
  }
  throw ConfigError("unknown experiment kind");
}

namespace {

double w0_cdf_total(const W0Law& law, double u) {
  if (u < 0.0) return 0.0;
  if (u >= law.table->x_inf()) return 1.0;
  return w0_cdf(law, u);
}

/// CDF of phi_{t1, t1+s}(w0): the flow keeps 0 fixed and is increasing on (0, x_inf).
double flowed_cdf(const W0Law& law, double s, double u) {
  if (u <= 0.0) return w0_cdf_total(law, u);
  const GTable& table = *law.table;
  if (u >= table.x_inf()) return 1.0;
  const double back = big_g_inv(table, big_g(table, u) - table.growth_rate() * s);
  return w0_cdf_total(law, back);
}

json summarize_theorem1(const ExperimentConfig& cfg, const std::vector<std::string>& columns,
                        const std::vector<const ReplicateRow*>& rows, const Kernel& kernel) {
  const ModelSpec& m = kernel.analysis.model();
  const W0Law law(WLaw(m.lambda, m.mu), kernel.table, m.alpha);
  const auto z = values_of(rows, column(columns, "zbar_t1"));
  const auto ext = values_of(rows, column(columns, "extinct"));
  json j;
  j["ks_w0"] = ks_mixed(z, [&](double u) { return w0_cdf_total(law, u); });
  j["dkw_99"] = dkw_epsilon(z.size(), 0.01);
  const auto extinct = static_cast<std::int64_t>(std::count(ext.begin(), ext.end(), 1.0));
  const auto ci = binom_ci(extinct, static_cast<std::int64_t>(ext.size()), 0.01);
  j["extinction_fraction"] = static_cast<double>(extinct) / static_cast<double>(ext.size());
  j["extinction_target"] = m.mu / m.lambda;
  j["extinction_ci99"] = {ci.lo, ci.hi};
  j["median"] = quantile(z, 0.5);
  j["iqr"] = quantile(z, 0.75) - quantile(z, 0.25);
  j["offsets"] = json::array();
  for (double s : positive_offsets(cfg)) {
    const auto zs = values_of(rows, column(columns, offset_column(s)));
    j["offsets"].push_back({{"s", s}, {"ks", ks_mixed(zs, [&](double u) { return flowed_cdf(law, s, u); })}});
  }
  return j;
}

json summarize_purebirth(const ExperimentConfig& cfg, const std::vector<std::string>& columns,
                         const std::vector<const ReplicateRow*>& rows, const Kernel& kernel, double K) {
  const ModelSpec& m = kernel.analysis.model();
  const W0Law law(WLaw(m.lambda, 0.0), kernel.table, 0.0);
  const auto z = values_of(rows, column(columns, "zbar_t1"));
  json j;
  j["ks_psi_exp1"] = ks_mixed(z, [&](double u) { return w0_cdf_total(law, u); });
  j["dkw_99"] = dkw_epsilon(z.size(), 0.01);
  j["median"] = quantile(z, 0.5);
  const double t = std::log(K) / m.lambda;
  j["jump_times"] = json::array();
  for (double x : jump_grid(cfg)) {
    const auto T = values_of(rows, column(columns, jump_column("T", x)));
    const auto Tt = values_of(rows, column(columns, jump_column("Ttilde", x)));
    std::vector<double> gap(T.size());
    for (std::size_t i = 0; i < T.size(); ++i) gap[i] = T[i] - Tt[i];
    const double n = std::max(1.0, std::floor(x * K));
    const double p_ssa = static_cast<double>(std::count_if(z.begin(), z.end(), [&](double v) { return v * K > n; })) /
                         static_cast<double>(z.size());
    const double p_jump =
        static_cast<double>(std::count_if(T.begin(), T.end(), [&](double v) { return v <= t; })) /
        static_cast<double>(T.size());
    j["jump_times"].push_back({{"x", x},
                               {"n", n},
                               {"mean_gap", mean(gap)},
                               {"se_gap", standard_error(gap)},
                               {"target_gap", big_h(m, kernel.analysis.x_inf(), x) / m.lambda},
                               {"p_ssa", p_ssa},
                               {"p_jump", p_jump}});
  }
  return j;
}

json summarize_fluid(const std::vector<std::string>& columns, const std::vector<const ReplicateRow*>& rows) {
  const auto sup = values_of(rows, column(columns, "sup_error"));
  return {{"median_sup_error", quantile(sup, 0.5)},
          {"mean_sup_error", mean(sup)},
          {"q90_sup_error", quantile(sup, 0.9)}};
}

json summarize_coupling(const ExperimentConfig& cfg, const std::vector<std::string>& columns,
                        const std::vector<const ReplicateRow*>& rows, const Kernel& kernel, double K) {
  const ModelSpec model = model_at(kernel.analysis.model(), K);
  const CouplingParams params = derive_params(model, kernel.analysis, overrides_of(cfg));
  auto abs_all = [](std::vector<double> v) {
    for (auto& x : v) x = std::abs(x);
    return v;
  };
  const auto delta = abs_all(values_of(rows, column(columns, "delta_t1")));
  const auto fd = abs_all(values_of(rows, column(columns, "flow_diff")));
  const auto wk = values_of(rows, column(columns, "W_K"));
  const auto tau = values_of(rows, column(columns, "tau_K"));
  const auto viol = values_of(rows, column(columns, "violations"));
  json j;
  j["mean_abs_delta"] = mean(delta);
  j["se_abs_delta"] = standard_error(delta);
  j["mean_abs_flow_diff"] = mean(fd);
  j["se_abs_flow_diff"] = standard_error(fd);
  j["mean_W_K"] = mean(wk);
  j["var_W_K"] = variance(wk);
  const WLaw wlaw(model.lambda, model.mu);
  j["ks_W_K"] = model.alpha == 0.0 ? json(ks_mixed(wk, [&](double w) { return w_cdf(wlaw, w); })) : json(nullptr);
  if (tau.size() >= 100) {
    const auto h = hitting_stats(std::span<const double>(tau), params);
    j["hitting"] = {{"fraction", h.fraction}, {"ci95", {h.lo, h.hi}}};
  } else {
    j["hitting"] = nullptr;
  }
  j["violations"] = std::accumulate(viol.begin(), viol.end(), 0.0);
  j["params"] = {{"c", params.c},
                 {"eta", params.eta},
                 {"theta_hat", params.theta_hat},
                 {"lambda_K", params.lambda_K},
                 {"mu_K", params.mu_K},
                 {"t0", params.t0},
                 {"t1", params.t1},
                 {"tau_level", params.tau_level}};
  return j;
}

}  // namespace

json summarize(const ExperimentConfig& cfg, const std::vector<std::string>& columns,
               const std::vector<ReplicateRow>& rows, const std::vector<std::vector<std::uint64_t>>& exhausted) {
  const ModelSpec base = effective_model(cfg);
  const Kernel kernel = build_kernel(base);
  json out = json::array();
  for (std::size_t k = 0; k < cfg.K_list.size(); ++k) {
    const double K = cfg.K_list[k];
    std::vector<const ReplicateRow*> group;
    for (const auto& r : rows) {
      if (r.K == K) group.push_back(&r);
    }
    const std::size_t dropped = k < exhausted.size() ? exhausted[k].size() : 0;
    json j;
    if (group.empty()) {
      j["note"] = "no completed replicates";
    } else {
      switch (cfg.kind) {
        case ExperimentKind::Theorem1: j = summarize_theorem1(cfg, columns, group, kernel); break;
        case ExperimentKind::PureBirth: j = summarize_purebirth(cfg, columns, group, kernel, K); break;
        case ExperimentKind::FluidCheck: j = summarize_fluid(columns, group); break;
        case ExperimentKind::CouplingDiag: j = summarize_coupling(cfg, columns, group, kernel, K); break;
      }
    }
    j["K"] = K;
    j["n"] = group.size();
    j["exhausted"] = dropped;
    j["exhausted_fraction"] = static_cast<double>(dropped) / static_cast<double>(group.size() + dropped);
    out.push_back(std::move(j));
  }
  return out;
}

json summary_document(const ExperimentConfig& cfg, const ResultRecord& rec) {
  json per_k = rec.per_k;
  json exhausted = json::array();
  for (std::size_t k = 0; k < per_k.size(); ++k) {
    if (k < rec.wall_seconds.size()) per_k[k]["wall_seconds"] = rec.wall_seconds[k];
    exhausted.push_back(k < rec.exhausted.size() ? json(rec.exhausted[k]) : json::array());
  }
  return {{"code_version", std::string(kCodeVersion)},
          {"experiment", std::string(to_string(rec.kind))},
          {"config", config_to_json(cfg)},
          {"columns", rec.columns},
          {"per_K", per_k},
          {"exhausted_replicates", exhausted},
          {"warnings", rec.warnings},
          {"exit_status", exit_status(rec)}};
}

void write_replicates_csv(std::ostream& out, const ResultRecord& rec) {
  out << "K,replicate,seed";
  for (const auto& c : rec.columns) out << ',' << c;
  out << '\n';
  for (const auto& row : rec.rows) {
    out << fmt::format("{:.17g},{},{}", row.K, row.replicate, row.seed);
    for (double v : row.values) {
      out << ',';
      if (std::isnan(v)) continue;
      if (std::isinf(v)) {
        out << (v > 0 ? "inf" : "-inf");
      } else {
        out << fmt::format("{:.17g}", v);
      }
    }
    out << '\n';
  }
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_cell(const std::string& s) {
  if (s.empty()) return kMissing;
  if (s == "inf") return kInf;
  if (s == "-inf") return -kInf;
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw ConfigError(fmt::format("replicates.csv: bad number '{}'", s));
  }
  if (used != s.size()) throw ConfigError(fmt::format("replicates.csv: bad number '{}'", s));
  return v;
}

}  // namespace

ReplicateTable read_replicates_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("replicates.csv: empty file");
  auto header = split_csv(line);
  if (header.size() < 3 || header[0] != "K" || header[1] != "replicate" || header[2] != "seed") {
    throw ConfigError("replicates.csv: header must start with K,replicate,seed");
  }
  ReplicateTable table;
  table.columns.assign(header.begin() + 3, header.end());
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() != header.size()) throw ConfigError("replicates.csv: ragged row");
    ReplicateRow row;
    row.K = parse_cell(cells[0]);
    row.replicate = std::stoull(cells[1]);
    row.seed = std::stoull(cells[2]);
    for (std::size_t i = 3; i < cells.size(); ++i) row.values.push_back(parse_cell(cells[i]));
    table.rows.push_back(std::move(row));
  }
  return table;
}

void write_outputs(const ExperimentConfig& cfg, const ResultRecord& rec, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream csv(dir / "replicates.csv", std::ios::binary);
    write_replicates_csv(csv, rec);
    if (!csv) throw std::runtime_error(fmt::format("cannot write {}", (dir / "replicates.csv").string()));
  }
  std::ofstream js(dir / "summary.json", std::ios::binary);
  js << summary_document(cfg, rec).dump(2) << '\n';
  if (!js) throw std::runtime_error(fmt::format("cannot write {}", (dir / "summary.json").string()));
}

int exit_status(const ResultRecord& rec) {
  for (const auto& k : rec.per_k) {
    if (k.value("exhausted_fraction", 0.0) > 0.01) return 2;
    if (k.contains("violations") && k["violations"].is_number() && k["violations"].get<double>() > 0.0) return 2;
  }
  return 0;
}

namespace {

bool near_equal(const json& a, const json& b) {
  if (a.is_number() && b.is_number()) {
    const double x = a.get<double>(), y = b.get<double>();
    return x == y || std::abs(x - y) <= 1e-12 * std::max(std::abs(x), std::abs(y));
  }
  if (a.is_object() && b.is_object()) {
    for (const auto& [key, value] : a.items()) {
      if (key == "wall_seconds") continue;
      if (!b.contains(key) || !near_equal(value, b.at(key))) return false;
    }
    for (const auto& [key, value] : b.items()) {
      if (key != "wall_seconds" && !a.contains(key)) return false;
    }
    return true;
  }
  if (a.is_array() && b.is_array()) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (!near_equal(a[i], b[i])) return false;
    }
    return true;
  }
  return a == b;
}

std::string format_table(ExperimentKind kind, const json& per_k) {
  std::string out;
  auto num = [](const json& j, const char* key) -> std::string {
    if (!j.contains(key) || !j[key].is_number()) return "-";
    return fmt::format("{:.6g}", j[key].get<double>());
  };
  switch (kind) {
    case ExperimentKind::Theorem1:
      out += fmt::format("{:>12} {:>7} {:>10} {:>10} {:>10} {:>10}\n", "K", "n", "ks_w0", "extinct", "median", "iqr");
      for (const auto& j : per_k) {
        out += fmt::format("{:>12} {:>7} {:>10} {:>10} {:>10} {:>10}\n", num(j, "K"), num(j, "n"), num(j, "ks_w0"),
                           num(j, "extinction_fraction"), num(j, "median"), num(j, "iqr"));
      }
      break;
    case ExperimentKind::PureBirth:
      out += fmt::format("{:>12} {:>7} {:>12} {:>10}\n", "K", "n", "ks_psi_exp1", "median");
      for (const auto& j : per_k) {
        out += fmt::format("{:>12} {:>7} {:>12} {:>10}\n", num(j, "K"), num(j, "n"), num(j, "ks_psi_exp1"),
                           num(j, "median"));
      }
      break;
    case ExperimentKind::FluidCheck:
      out += fmt::format("{:>12} {:>7} {:>12} {:>12}\n", "K", "n", "median_sup", "q90_sup");
      for (const auto& j : per_k) {
        out += fmt::format("{:>12} {:>7} {:>12} {:>12}\n", num(j, "K"), num(j, "n"), num(j, "median_sup_error"),
                           num(j, "q90_sup_error"));
      }
      break;
    case ExperimentKind::CouplingDiag:
      out += fmt::format("{:>12} {:>7} {:>12} {:>12} {:>10} {:>10} {:>6}\n", "K", "n", "mean|delta|", "mean|dflow|",
                         "ks_W_K", "hit", "viol");
      for (const auto& j : per_k) {
        const std::string hit =
            j.contains("hitting") && j["hitting"].is_object() ? num(j["hitting"], "fraction") : std::string("-");
        out += fmt::format("{:>12} {:>7} {:>12} {:>12} {:>10} {:>10} {:>6}\n", num(j, "K"), num(j, "n"),
                           num(j, "mean_abs_delta"), num(j, "mean_abs_flow_diff"), num(j, "ks_W_K"), hit,
                           num(j, "violations"));
      }
      break;
  }
  return out;
}

}  // namespace

ReportResult report(const std::filesystem::path& dir) {
  std::ifstream js(dir / "summary.json");
  if (!js) throw ConfigError(fmt::format("cannot open {}", (dir / "summary.json").string()));
  json doc;
  try {
    doc = json::parse(js);
  } catch (const json::parse_error& e) {
    throw ConfigError(fmt::format("malformed summary.json: {}", e.what()));
  }
  const ExperimentConfig cfg = config_from_json(doc.at("config"));
  std::vector<std::vector<std::uint64_t>> exhausted;
  for (const auto& e : doc.at("exhausted_replicates")) exhausted.push_back(e.get<std::vector<std::uint64_t>>());

  std::ifstream csv(dir / "replicates.csv");
  if (!csv) throw ConfigError(fmt::format("cannot open {}", (dir / "replicates.csv").string()));
  const auto table = read_replicates_csv(csv);

  ReportResult res;
  res.recomputed = summarize(cfg, table.columns, table.rows, exhausted);
  res.matches = near_equal(res.recomputed, doc.at("per_K"));
  res.table = format_table(cfg.kind, res.recomputed);
  return res;
}

}  // namespace bdlab
