#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ustash/ustash.hpp"

namespace {

using namespace ustash;

struct GlobalFlags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::string> format;
};

config::ExperimentConfig resolve_config(const GlobalFlags& g) {
  auto cfg = g.config_path.empty() ? config::parse_config("") : config::load_config(g.config_path);
  if (g.seed) cfg.workload.seed = *g.seed;
  if (g.out) cfg.output_dir = *g.out;
  if (g.format) cfg.format = *g.format;
  config::validate(cfg);
  return cfg;
}

void print_summary(const experiment::Report& rep, const std::vector<std::string>& written) {
  for (const auto& w : rep.warnings) std::cerr << "warning: " << w << '\n';
  if (!rep.summary.empty()) std::cout << rep.summary.dump(2) << '\n';
  if (rep.run) {
    const auto& m = *rep.run;
    std::cout << "requests " << m.total << "  hit_rate " << io::format_double(m.hit_rate)
              << "  partial_hit_rate " << io::format_double(m.partial_hit_rate)
              << "  mean_completion_s " << io::format_double(m.mean_completion_s) << '\n';
  }
  for (const auto& r : rep.scenarios) {
    std::cout << r.name << ": T=" << io::format_double(r.metrics.mean_completion_s)
              << "s user=" << io::format_double(r.metrics.user_cost_cents)
              << "c stash=" << io::format_double(r.metrics.stash_cost_cents) << "c\n";
  }
  for (const auto& w : written) std::cout << "wrote " << w << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"uStash workload generator, model and simulator"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalFlags g;
  app.add_option("--config", g.config_path, "experiment config file");
  app.add_option("--seed", g.seed, "override workload seed");
  app.add_option("--out", g.out, "output directory");
  app.add_option("--format", g.format, "artifact format")->check(CLI::IsMember({"csv", "json"}));

  experiment::RunOptions opts;
  std::string trace_path;

  auto* gen = app.add_subcommand("generate", "generate a synthetic request trace");

  auto* ana = app.add_subcommand("analyze", "Jaccard similarity and source entropy");
  ana->add_option("--input", opts.analyze_input, "label,content_id CSV");
  ana->add_option("--trace", trace_path, "trace CSV split into groups");
  ana->add_option("--groups", opts.groups, "chunks when analyzing a trace")->check(CLI::PositiveNumber);
  ana->add_flag("--observed-sources", opts.observed_sources,
                "normalize entropy by the number of sources that requested the content");

  auto* mod = app.add_subcommand("model", "evaluate the analytical model");

  std::string policy;
  std::optional<double> fixed_x;
  auto* simc = app.add_subcommand("simulate", "simulate one split policy");
  simc->add_option("--trace", trace_path, "trace CSV instead of generating");
  simc->add_option("--policy", policy, "split policy")
      ->check(CLI::IsMember({"fixed", "optimal", "no_stash", "all_stash"}));
  simc->add_option("--x", fixed_x, "split for the fixed policy")->check(CLI::Range(0.0, 1.0));
  simc->add_flag("--log-outcomes", opts.log_outcomes, "write outcomes.csv");

  auto* cmp = app.add_subcommand("compare", "run the four canonical scenarios");
  cmp->add_option("--trace", trace_path, "trace CSV instead of generating");

  std::vector<std::string> sweep_params;
  std::vector<double> sweep_values;
  std::optional<std::uint32_t> replications;
  auto* swp = app.add_subcommand("sweep", "parameter sweeps producing figure tables");
  swp->add_option("param,--param", sweep_params, "x, s, r_v, omega_ratio or all");
  swp->add_option("--values", sweep_values, "grid values")->delimiter(',');
  swp->add_option("--replications", replications, "seeded runs pooled per r_v point")
      ->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    auto cfg = resolve_config(g);
    if (!trace_path.empty()) opts.trace_path = trace_path;

    experiment::Command cmd = experiment::Command::Generate;
    if (*gen) cmd = experiment::Command::Generate;
    if (*ana) cmd = experiment::Command::Analyze;
    if (*mod) cmd = experiment::Command::Model;
    if (*cmp) cmd = experiment::Command::Compare;
    if (*simc) {
      cmd = experiment::Command::Simulate;
      if (!policy.empty()) {
        cfg.policy.kind = sim::parse_policy_kind(policy);
      }
      if (fixed_x) {
        cfg.policy.kind = sim::SplitPolicy::Kind::Fixed;
        cfg.policy.x = *fixed_x;
      }
    }
    if (*swp) {
      cmd = experiment::Command::Sweep;
      if (replications) cfg.sweep.replications = *replications;
      for (const auto& p : sweep_params) {
        if (p == "all") {
          opts.sweeps = {config::SweepParam::X, config::SweepParam::S, config::SweepParam::RV,
                         config::SweepParam::OmegaRatio};
          continue;
        }
        auto sp = config::parse_sweep_param(p);
        if (!sp) throw config::ConfigError(config::ErrorKind::Domain, "sweep.param", "unknown parameter '" + p + "'");
        opts.sweeps.push_back(*sp);
      }
      if (!sweep_values.empty()) {
        if (opts.sweeps.size() != 1) {
          throw config::ConfigError(config::ErrorKind::Domain, "sweep.values",
                                    "--values needs exactly one sweep parameter");
        }
        cfg.sweep.param = opts.sweeps.front();
        cfg.sweep.values = sweep_values;
      } else if (opts.sweeps.size() == 1 && opts.sweeps.front() != cfg.sweep.param) {
        cfg.sweep.param = opts.sweeps.front();
        cfg.sweep.values = config::default_grid(cfg.sweep.param);
      }
    }
    config::validate(cfg);

    const auto rep = experiment::run_experiment(cfg, cmd, opts);
    const auto written = experiment::write_report(rep, cfg.output_dir);
    print_summary(rep, written);
    return 0;
  } catch (const config::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.exit_code();
  } catch (const io::IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(config::ErrorKind::Io);
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(config::ErrorKind::Io);
  } catch (const std::domain_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(config::ErrorKind::Domain);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
