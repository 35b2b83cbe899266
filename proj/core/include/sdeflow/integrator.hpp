#pragma once

#include "sdeflow/density.hpp"
#include "sdeflow/ensemble.hpp"
#include "sdeflow/kernels.hpp"
#include "sdeflow/rng.hpp"
#include "sdeflow/types.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace sdeflow {

/// One flow line: position x(u0, t), Jacobian Dx(u0, t), and ln det Dx split
/// into its bounded-variation part bv and martingale part mart.
struct TrackedPoint {
  Vec u0;
  Vec x;
  Mat jac;
  double bv = 0.0;
  double mart = 0.0;

  static TrackedPoint start(const Vec& u0);
  double log_det() const { return bv + mart; }
};

struct SimConfig {
  double dt = 1e-3;
  double horizon = 1.0;
  int particles = 64;
  int replicas = 1;
  int save_every = 10;
  std::uint64_t seed = 1;
  /// Brownian sub-increments per step; see NoiseStream.
  int noise_substeps = 1;
  bool record_particles = false;
  /// Explicit initial ensemble; replaces sampling from the density.
  std::optional<std::vector<Vec>> initial_particles;

  /// ceil(T / dt), robust to T being a float multiple of dt.
  long steps() const;
  /// Throws ConfigError listing the first violated constraint.
  void validate(const ModelSpec& model) const;
};

struct Snapshot {
  long step = 0;
  double t = 0.0;
  Vec ensemble_mean;
  std::vector<TrackedPoint> points;
  std::vector<Vec> particles;  // only when SimConfig::record_particles
};

struct Trajectory {
  std::uint64_t replica = 0;
  int dim = 0;
  double dt = 0.0;
  int save_every = 1;
  /// False when loaded from CSV, which carries no Jacobians.
  bool has_jacobians = true;
  std::vector<Snapshot> snapshots;

  /// Snapshot taken exactly at t; throws PreconditionError otherwise.
  const Snapshot& at_time(double t) const;
  const Snapshot& final() const;
  std::size_t point_count() const;
  const Vec& initial_point(std::size_t point_id) const;
};

/// Mutable state of one replica between steps.
struct FlowState {
  ParticleEnsemble ensemble;
  std::vector<TrackedPoint> points;
};

/// N i.i.d. draws from p0 on the (seed, replica) initial-ensemble stream.
ParticleEnsemble sample_initial_ensemble(const DensityModel& density, int n, std::uint64_t seed,
                                         std::uint64_t replica = 0);

/// One Euler-Maruyama step of particles, tracked points, their Jacobians and
/// log-determinant parts. All updates see the measure frozen at step start
/// and the same NoiseDraw. `step` is used only for diagnostics.
void em_step(FlowState& state, const NoiseDraw& noise, const ModelSpec& model, double dt,
             long step = 0);

/// Runs one replica and returns its snapshots every save_every steps
/// (including t = 0).
Trajectory run(const ModelSpec& model, const DensityModel& density, const SimConfig& config,
               std::span<const Vec> tracked, std::uint64_t replica = 0);

/// All config.replicas replicas, scheduled over `threads` workers. The result
/// does not depend on the thread count.
std::vector<Trajectory> run_replicas(const ModelSpec& model, const DensityModel& density,
                                     const SimConfig& config, std::span<const Vec> tracked,
                                     int threads = 1);

}  // namespace sdeflow
