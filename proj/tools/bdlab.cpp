#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/core.h>

#include "bdlab/config.hpp"
#include "bdlab/error.hpp"
#include "bdlab/experiment.hpp"
#include "bdlab/flow.hpp"
#include "bdlab/model.hpp"

namespace {

constexpr int kExitValidation = 1;
constexpr int kExitNumeric = 2;
constexpr int kExitUsage = 64;

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::vector<double> k_list;
  std::optional<std::size_t> replicates;
  std::optional<std::size_t> threads;
};

bdlab::ExperimentConfig load(const Flags& f) {
  bdlab::ExperimentConfig cfg;
  if (!f.config.empty()) cfg = bdlab::load_config(f.config);
  if (f.seed) cfg.seed = *f.seed;
  if (!f.out.empty()) cfg.out_dir = f.out;
  if (!f.k_list.empty()) cfg.K_list = f.k_list;
  if (f.replicates) cfg.replicates = *f.replicates;
  if (f.threads) cfg.threads = *f.threads;
  return cfg;
}

int cmd_validate(const Flags& f) {
  const auto cfg = load(f);
  cfg.model.validate();
  const auto analysis = bdlab::ModelAnalysis::analyze(cfg.model);
  const auto& rep = analysis.report();
  fmt::print("model: {} lambda={} mu={} alpha={}\n", cfg.model.regulation.name(), cfg.model.lambda, cfg.model.mu,
             cfg.model.alpha);
  fmt::print("x_inf = {:.12g}\ntheta_hat = {:.6g}\n", analysis.x_inf(), analysis.theta());
  for (const auto& c : rep.checks) fmt::print("[{}] {}: {}\n", c.passed ? "pass" : "FAIL", c.name, c.detail);
  for (const auto& w : rep.warnings) fmt::print("warning: {}\n", w);
  return rep.all_passed() ? 0 : kExitValidation;
}

int cmd_gtable(const Flags& f) {
  const auto cfg = load(f);
  cfg.model.validate();
  const auto analysis = bdlab::ModelAnalysis::analyze(cfg.model);
  analysis.require_valid();
  const bdlab::GTable table(analysis);
  if (f.out.empty()) {
    bdlab::write_gtable_csv(std::cout, table);
    return 0;
  }
  std::filesystem::create_directories(cfg.out_dir);
  std::ofstream out(cfg.out_dir / "gtable.csv");
  bdlab::write_gtable_csv(out, table);
  fmt::print("wrote {}\n", (cfg.out_dir / "gtable.csv").string());
  return 0;
}

int cmd_run(const Flags& f, bdlab::ExperimentKind kind) {
  auto cfg = load(f);
  cfg.kind = kind;
  const auto rec = bdlab::run_experiment(cfg);
  bdlab::write_outputs(cfg, rec, cfg.out_dir);
  for (const auto& w : rec.warnings) fmt::print(stderr, "warning: {}\n", w);
  const auto rep = bdlab::report(cfg.out_dir);
  fmt::print("{}", rep.table);
  fmt::print("wrote {} rows to {}\n", rec.rows.size(), cfg.out_dir.string());
  const int status = bdlab::exit_status(rec);
  if (status != 0) fmt::print(stderr, "error: event budget exhaustion above 1% or domination violations\n");
  return status;
}

int cmd_report(const Flags& f) {
  const std::filesystem::path dir = f.out.empty() ? std::filesystem::path("out") : std::filesystem::path(f.out);
  const auto rep = bdlab::report(dir);
  fmt::print("{}", rep.table);
  if (!rep.matches) {
    fmt::print(stderr, "error: recomputed summary differs from {}\n", (dir / "summary.json").string());
    return kExitNumeric;
  }
  fmt::print("summary.json consistent with replicates.csv\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Density-dependent birth-death experiments"};
  app.require_subcommand(1);
  Flags flags;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", flags.config, "JSON config file")->check(CLI::ExistingFile);
    sub->add_option("--seed", flags.seed, "base seed");
    sub->add_option("--out", flags.out, "output directory");
    sub->add_option("--k", flags.k_list, "comma-separated K list")->delimiter(',');
    sub->add_option("--replicates", flags.replicates, "replicates per K");
    sub->add_option("--threads", flags.threads, "worker threads");
  };
  struct Entry {
    const char* name;
    const char* help;
  };
  const Entry entries[] = {{"validate", "check the model assumptions"},
                           {"gtable", "tabulate G and H"},
                           {"theorem1", "law of Z/K at t1 against the limit law"},
                           {"purebirth", "pure-birth limit law and jump-time gap"},
                           {"fluidcheck", "sup distance to the fluid limit"},
                           {"couplingdiag", "four-process coupling diagnostics"},
                           {"report", "recompute the per-K table of a finished run"}};
  for (const auto& e : entries) add_common(app.add_subcommand(e.name, e.help));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  const std::string cmd = app.get_subcommands().front()->get_name();
  try {
    if (cmd == "validate") return cmd_validate(flags);
    if (cmd == "gtable") return cmd_gtable(flags);
    if (cmd == "theorem1") return cmd_run(flags, bdlab::ExperimentKind::Theorem1);
    if (cmd == "purebirth") return cmd_run(flags, bdlab::ExperimentKind::PureBirth);
    if (cmd == "fluidcheck") return cmd_run(flags, bdlab::ExperimentKind::FluidCheck);
    if (cmd == "couplingdiag") return cmd_run(flags, bdlab::ExperimentKind::CouplingDiag);
    return cmd_report(flags);
  } catch (const bdlab::ConfigError& e) {
    fmt::print(stderr, "config error: {}\n", e.what());
    return kExitUsage;
  } catch (const bdlab::NumericError& e) {
    fmt::print(stderr, "numeric error: {}\n", e.what());
    return kExitNumeric;
  } catch (const bdlab::AssumptionError& e) {
    fmt::print(stderr, "assumption check failed: {}\n", e.what());
    return kExitValidation;
  } catch (const bdlab::ParameterError& e) {
    fmt::print(stderr, "infeasible parameters: {}\n", e.what());
    return kExitValidation;
  } catch (const bdlab::DomainError& e) {
    fmt::print(stderr, "invalid input: {}\n", e.what());
    return kExitValidation;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kExitNumeric;
  }
}
