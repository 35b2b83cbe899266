#pragma once

#include "sdeflow/config.hpp"
#include "sdeflow/determinant.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace sdeflow {

/// Library version baked in at build time.
std::string library_version();

struct ReplicaFailure {
  std::uint64_t replica = 0;
  std::string kind;  // "blow_up", "determinant_sign", "error"
  std::string message;
};

struct RunManifest {
  std::string config_hash;
  std::uint64_t seed = 0;
  std::string version;
  int replicas = 0;
  /// Relative to the output directory; empty for failed replicas.
  std::vector<std::string> trajectory_paths;
  std::vector<ReplicaFailure> failures;
  /// Wall-clock seconds per stage.
  std::map<std::string, double> timings;

  bool ok() const { return failures.empty(); }
};

/// Output layout inside --out-dir.
namespace artifacts {
inline constexpr const char* kHeader = "header.json";
inline constexpr const char* kManifest = "manifest.json";
inline constexpr const char* kTrajectoryDir = "trajectories";
inline constexpr const char* kMoments = "moments.csv";
inline constexpr const char* kDensityProfile = "density_profile.csv";
inline constexpr const char* kClustering = "clustering.csv";
inline constexpr const char* kContraction = "contraction.csv";
inline constexpr const char* kLyapunov = "lyapunov.json";
inline constexpr const char* kIntermittency = "intermittency.json";
inline constexpr const char* kSummary = "summary.json";
inline constexpr const char* kIdentities = "identities.csv";
}  // namespace artifacts

std::string trajectory_file_name(std::uint64_t replica);

/// Runs every replica, writing header.json, trajectories/, clustering.csv,
/// contraction.csv and manifest.json. Replica failures are recorded, not thrown.
RunManifest simulate_stage(const ExperimentConfig& config, const std::filesystem::path& out_dir,
                           int threads = 1);

/// Each stage reads the outputs of the previous ones and throws
/// StageDependencyError when they are missing.
void moments_stage(const std::filesystem::path& out_dir, int threads = 1);
void lyapunov_stage(const std::filesystem::path& out_dir, int threads = 1);
void intermittency_stage(const std::filesystem::path& out_dir);
void summary_stage(const std::filesystem::path& out_dir);

/// All stages in order; summary.json is the final product.
RunManifest run_experiment(const ExperimentConfig& config, const std::filesystem::path& out_dir,
                           int threads = 1);

/// The determinant identity table; also written to out_dir when non-empty.
std::vector<IdentityCheck> identities_stage(std::uint64_t seed, int trials,
                                            const std::filesystem::path& out_dir = {});

/// CSV table with one row per directory, read from each summary.json.
std::string report_table(std::span<const std::filesystem::path> out_dirs);

}  // namespace sdeflow
