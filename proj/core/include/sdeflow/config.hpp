#pragma once

#include "sdeflow/density.hpp"
#include "sdeflow/integrator.hpp"
#include "sdeflow/kernels.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace sdeflow {

struct ContractionConfig {
  double p = 1.0;
  Vec u;
  Vec v;
  /// Defaults to sim.replicas.
  std::optional<int> replicas;
};

struct AnalysisConfig {
  std::vector<double> p_grid{1.5, 2.0, 3.0, 4.0};
  double fit_window = 0.5;
  double eps_mono = 1e-3;
  double burn_in = 0.0;
  /// Extra tracked points, appended after the quadrature grid.
  std::vector<Vec> probes;
  /// Echoed in the well-posedness report; defaults to d + 1.
  std::optional<double> q;
  std::optional<ContractionConfig> contraction;
};

/// A fully validated experiment. Built only by parse_config*.
struct ExperimentConfig {
  std::string name;
  ModelSpec model;
  DensityModel density;
  SimConfig sim;
  /// Nodes per axis; the parser defaults to 64 (d=1), 32 (d=2), 16 (d>=3).
  int grid_per_axis = 32;
  AnalysisConfig analysis;
  /// Non-fatal findings, e.g. a contraction order outside the moment range.
  std::vector<std::string> warnings;

  /// Grid nodes followed by probes: the tracked points of every replica.
  std::vector<Vec> tracked_points() const;
  QuadratureGrid grid() const;
  double q() const { return analysis.q.value_or(model.dim() + 1.0); }
};

/// Thrown with every violation found, one per line in what().
class ConfigValidationError : public ConfigError {
 public:
  explicit ConfigValidationError(std::vector<std::string> violations);
  const std::vector<std::string>& violations() const { return violations_; }

 private:
  std::vector<std::string> violations_;
};

ExperimentConfig parse_config(const std::filesystem::path& path);
ExperimentConfig parse_config_text(const std::string& text, const std::string& source = "<text>");

/// Seed / replica overrides from the command line; re-runs the warnings.
void apply_overrides(ExperimentConfig& config, std::optional<std::uint64_t> seed,
                     std::optional<int> replicas);

/// Canonical JSON of the effective config (defaults filled). Parsing it
/// yields an equivalent config.
std::string config_to_json(const ExperimentConfig& config, int indent = 2);

/// 64-bit FNV-1a, rendered as 16 hex digits.
std::string fnv1a_hex(const std::string& bytes);

}  // namespace sdeflow
