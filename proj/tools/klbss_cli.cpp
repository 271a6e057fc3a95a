// Experiment driver. Exit codes: 0 success, 2 configuration error,
// 3 estimator failure with --strict, 1 anything else.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "klbss/experiment.hpp"
#include "klbss/model_io.hpp"

namespace {

struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_path;
  unsigned threads = 0;
  std::vector<std::string> methods;
  bool strict = false;
  bool timing = false;
};

void add_common(CLI::App* cmd, Common& c, bool with_methods) {
  cmd->add_option("--config", c.config_path, "key = value experiment file")->check(CLI::ExistingFile);
  cmd->add_option("--seed", c.seed, "base seed");
  cmd->add_option("--out", c.out_path, "output CSV (default: config output, else stdout)");
  cmd->add_option("--threads", c.threads, "worker threads (0 = hardware)");
  if (with_methods) cmd->add_option("--method", c.methods, "estimator, e.g. full_klbss or full_klbss@0.05");
  cmd->add_flag("--strict", c.strict, "exit 3 if any estimator fails");
  cmd->add_flag("--timing", c.timing, "fill wall_ms (breaks byte-identical output)");
}

klbss::ExperimentConfig load(const Common& c) {
  klbss::ExperimentConfig cfg;
  if (!c.config_path.empty()) cfg = klbss::parse_config_file(c.config_path);
  if (c.seed) cfg.base_seed = *c.seed;
  if (!c.methods.empty()) {
    cfg.methods.clear();
    for (const auto& m : c.methods) cfg.methods.push_back(klbss::MethodSpec::parse(m));
  }
  if (!c.out_path.empty()) cfg.output_path = c.out_path;
  cfg.strict = cfg.strict || c.strict;
  cfg.timing = cfg.timing || c.timing;
  cfg.validate();
  return cfg;
}

unsigned thread_count(const Common& c) {
  if (c.threads > 0) return c.threads;
  return std::max(1u, std::thread::hardware_concurrency());
}

// Writes to the file if a path is given, stdout otherwise.
template <class Fn>
void emit(const std::string& path, Fn&& fn) {
  if (path.empty()) {
    fn(std::cout);
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  fn(out);
}

int finish(const klbss::ExperimentConfig& cfg, const klbss::RunResult& r) {
  emit(cfg.output_path, [&](std::ostream& os) { r.write_csv(os); });
  if (r.errors > 0) {
    std::cerr << r.errors << " estimator run(s) failed\n";
    if (cfg.strict) return 3;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"klbss experiment driver"};
  app.require_subcommand(1);

  Common recover_opts, misspec_opts, independent_opts, genmodel_opts;
  auto* recover = app.add_subcommand("recover", "exact-recovery frequencies over the n grid");
  add_common(recover, recover_opts, true);

  auto* misspec = app.add_subcommand("misspec", "Full klBSS under a misspecified beta_min floor");
  add_common(misspec, misspec_opts, false);

  auto* independent = app.add_subcommand("independent", "empty-graph design");
  add_common(independent, independent_opts, true);
  std::optional<double> sigma_max;
  independent->add_option("--sigma-max", sigma_max, "standard deviation off the support");

  auto* signals = app.add_subcommand("signals", "Delta curves on the motivating example");
  std::size_t sig_s = 12;
  double sig_beta_min = 0.1, sig_beta_max = 5.0;
  std::string sig_out;
  signals->add_option("--s", sig_s, "sparsity")->check(CLI::PositiveNumber);
  signals->add_option("--beta-min", sig_beta_min);
  signals->add_option("--beta-max", sig_beta_max);
  signals->add_option("--out", sig_out);

  auto* construct = app.add_subcommand("construct", "report for an analytic construction");
  std::string which;
  std::string con_out;
  double omega = 0.3;
  construct->add_option("which", which, "prop43 | thm51 | gpc_bound")->required();
  construct->add_option("--omega", omega, "equicorrelation for prop43");
  construct->add_option("--out", con_out);

  auto* genmodel = app.add_subcommand("genmodel", "write the SEM of one replication");
  add_common(genmodel, genmodel_opts, false);
  std::size_t rep = 0;
  genmodel->add_option("--rep", rep, "replication index");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*recover) {
      const auto cfg = load(recover_opts);
      return finish(cfg, klbss::run_recovery(cfg, thread_count(recover_opts)));
    }
    if (*misspec) {
      const auto cfg = load(misspec_opts);
      return finish(cfg, klbss::run_misspec(cfg, thread_count(misspec_opts)));
    }
    if (*independent) {
      auto cfg = load(independent_opts);
      if (sigma_max) cfg.independent_sigma_max = *sigma_max;
      cfg.validate();
      return finish(cfg, klbss::run_independent(cfg, thread_count(independent_opts)));
    }
    if (*signals) {
      const auto rows = klbss::run_signal_curves(sig_s, sig_beta_min, sig_beta_max);
      emit(sig_out, [&](std::ostream& os) { klbss::write_signal_curves(os, rows); });
      return 0;
    }
    if (*construct) {
      const auto kind = klbss::parse_construction(which);
      if (!kind) throw klbss::ConfigError("unknown construction '" + which + "'");
      emit(con_out, [&](std::ostream& os) {
        switch (*kind) {
          case klbss::Construction::prop43:
            klbss::report_prop43(os, omega, {10, 100, 500, 1000, 2000});
            break;
          case klbss::Construction::thm51:
            klbss::report_thm51(os, {1e-1, 1e-2, 1e-3, 1e-4});
            break;
          case klbss::Construction::gpc_bound:
            klbss::report_gpc_bound(os, 4, 0.1, 0.5, 1.0, {1.0, 2.0, 4.0});
            break;
        }
      });
      return 0;
    }
    if (*genmodel) {
      const auto cfg = load(genmodel_opts);
      const auto seeds = klbss::replicate_seeds(cfg, "recover", rep);
      const auto mp = klbss::make_replicate_model(cfg, seeds.graph_seed);
      emit(cfg.output_path, [&](std::ostream& os) { klbss::write_model(os, mp.spec, &mp.model); });
      return 0;
    }
  } catch (const klbss::ConfigError& e) {
    std::cerr << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
