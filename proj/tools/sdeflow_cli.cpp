// sdeflow: batch runner for interacting-particle SDE flow experiments.

#include "sdeflow/experiment.hpp"
#include "sdeflow/gamma.hpp"
#include "sdeflow/trajectory_io.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace sdeflow;

namespace {

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kConfig = 2,
  kReplicaFailure = 3,
  kStageDependency = 4,
};

struct Common {
  std::string config;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<int> replicas;
  int threads = 1;
};

void add_common(CLI::App* cmd, Common& c, bool needs_config) {
  auto* opt = cmd->add_option("--config", c.config, "experiment JSON file");
  if (needs_config) opt->required()->check(CLI::ExistingFile);
  cmd->add_option("--out-dir", c.out_dir, "output directory (default: $SDEFLOW_OUT_DIR or ./out)");
  cmd->add_option("--seed", c.seed, "override sim.seed");
  cmd->add_option("--replicas", c.replicas, "override sim.replicas")->check(CLI::PositiveNumber);
  cmd->add_option("--threads", c.threads, "worker threads (never changes results)")
      ->check(CLI::PositiveNumber);
}

fs::path out_dir_of(const Common& c) {
  if (!c.out_dir.empty()) return c.out_dir;
  if (const char* env = std::getenv("SDEFLOW_OUT_DIR"); env && *env) return env;
  return "out";
}

ExperimentConfig load(const Common& c) {
  ExperimentConfig cfg = parse_config(c.config);
  apply_overrides(cfg, c.seed, c.replicas);
  for (const auto& w : cfg.warnings) std::cerr << "warning: " << w << "\n";
  return cfg;
}

int report_manifest(const RunManifest& m, const fs::path& out) {
  for (const auto& f : m.failures) {
    std::cerr << "error: replica " << f.replica << " failed (" << f.kind << "): " << f.message
              << "\n";
  }
  std::cout << "wrote " << out.string() << " (config " << m.config_hash << ", "
            << m.replicas - static_cast<int>(m.failures.size()) << "/" << m.replicas
            << " replicas)\n";
  return m.ok() ? kOk : kReplicaFailure;
}

int print_file(const fs::path& path) {
  std::ifstream in(path);
  std::cout << in.rdbuf();
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Interacting-particle stochastic flow experiments"};
  app.set_version_flag("--version", library_version());
  app.require_subcommand(1);

  Common common;
  auto* run_cmd = app.add_subcommand("run", "simulate and run every analysis stage");
  add_common(run_cmd, common, true);
  auto* sim_cmd = app.add_subcommand("simulate", "write trajectories and the run manifest");
  add_common(sim_cmd, common, true);

  auto* moments_cmd = app.add_subcommand("moments", "L^p moments of the transported density");
  auto* lyap_cmd = app.add_subcommand("lyapunov", "pointwise Lyapunov exponents");
  auto* inter_cmd = app.add_subcommand("intermittency", "moment Lyapunov exponents and verdict");
  for (auto* cmd : {moments_cmd, lyap_cmd, inter_cmd}) add_common(cmd, common, false);

  std::uint64_t id_seed = 20240917;
  int id_trials = 100;
  auto* id_cmd = app.add_subcommand("identities", "randomized determinant identity checks");
  id_cmd->add_option("--seed", id_seed, "RNG seed");
  id_cmd->add_option("--trials", id_trials, "random pairs per dimension")
      ->check(CLI::PositiveNumber);
  std::string id_out;
  id_cmd->add_option("--out-dir", id_out, "also write identities.csv here");

  std::string gamma_a, gamma_b;
  auto* gamma_cmd = app.add_subcommand("gamma", "bounded-cost distance between two point sets");
  gamma_cmd->add_option("a", gamma_a, "CSV of points")->required()->check(CLI::ExistingFile);
  gamma_cmd->add_option("b", gamma_b, "CSV of points")->required()->check(CLI::ExistingFile);

  std::vector<std::string> report_dirs;
  auto* report_cmd = app.add_subcommand("report", "one verdict row per output directory");
  report_cmd->add_option("dirs", report_dirs, "directories holding summary.json")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    const fs::path out = out_dir_of(common);
    if (*run_cmd) {
      const auto m = run_experiment(load(common), out, common.threads);
      const int code = report_manifest(m, out);
      print_file(out / artifacts::kSummary);
      return code;
    }
    if (*sim_cmd) return report_manifest(simulate_stage(load(common), out, common.threads), out);
    if (*moments_cmd) {
      moments_stage(out, common.threads);
      std::cout << "wrote " << (out / artifacts::kMoments).string() << "\n";
      return kOk;
    }
    if (*lyap_cmd) {
      lyapunov_stage(out, common.threads);
      return print_file(out / artifacts::kLyapunov);
    }
    if (*inter_cmd) {
      intermittency_stage(out);
      return print_file(out / artifacts::kIntermittency);
    }
    if (*id_cmd) {
      const auto rows = identities_stage(id_seed, id_trials, id_out);
      bool all = true;
      std::cout << "identity,d,trials,max_deviation,tolerance,pass\n";
      for (const auto& r : rows) {
        std::cout << r.identity << ',' << r.dim << ',' << r.trials << ','
                  << format_double(r.max_deviation) << ',' << format_double(r.tolerance) << ','
                  << (r.pass ? "true" : "false") << "\n";
        all = all && r.pass;
      }
      return all ? kOk : kFailure;
    }
    if (*gamma_cmd) {
      const auto a = read_point_csv(gamma_a);
      const auto b = read_point_csv(gamma_b);
      const auto match = gamma_empirical(a, b);
      std::cout << "{\"distance\": " << format_double(match.distance) << ", \"matching\": [";
      for (std::size_t i = 0; i < match.matching.size(); ++i) {
        std::cout << (i ? ", " : "") << match.matching[i];
      }
      std::cout << "]}\n";
      return kOk;
    }
    if (*report_cmd) {
      std::vector<fs::path> dirs(report_dirs.begin(), report_dirs.end());
      std::cout << report_table(dirs);
      return kOk;
    }
  } catch (const StageDependencyError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kStageDependency;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailure;
  }
  return kFailure;
}
