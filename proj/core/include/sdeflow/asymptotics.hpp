#pragma once

#include "sdeflow/density.hpp"
#include "sdeflow/integrator.hpp"
#include "sdeflow/kernels.hpp"
#include "sdeflow/moments.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace sdeflow {

// ---------------------------------------------------------------------------
// Small statistics helpers shared by the estimators.
// ---------------------------------------------------------------------------

struct SampleStats {
  std::size_t n = 0;
  double mean = 0.0;
  /// Standard error of the mean; 0 when n < 2.
  double stderr_mean = 0.0;
};
SampleStats sample_stats(std::span<const double> xs);
double median(std::vector<double> xs);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  /// In [0, 1]; 1 for a constant response.
  double r2 = 1.0;
};
/// Ordinary least squares of y on x; needs two distinct x values.
LinearFit least_squares(std::span<const double> x, std::span<const double> y);

// ---------------------------------------------------------------------------
// Pointwise Lyapunov exponents ln det Dx(u, T) / T.
// ---------------------------------------------------------------------------

/// ln det Dx(u, T) / T per tracked point, bv and mart kept apart.
struct LyapunovSample {
  double horizon = 0.0;
  std::vector<double> bv_rate;    // bv / T
  std::vector<double> mart_rate;  // mart / T
};

/// Reads the final snapshot. `points` restricts to a subset (empty = all).
LyapunovSample lyapunov_sample(const Trajectory& trajectory, std::span<const std::size_t> points = {},
                               double burn_in = 0.0);

struct LyapunovReport {
  double horizon = 0.0;
  std::size_t replicas = 0;
  /// Replica mean of (bv + mart) / T for each selected point.
  std::vector<double> per_point;
  /// Replica mean of the per-replica point average, and its standard error
  /// across replicas.
  double lambda_hat = 0.0;
  double stderr_lambda = 0.0;
  /// Replica mean of bv / T alone.
  double bv_rate = 0.0;
  /// max over points and replicas of |mart| / T.
  double martingale_share = 0.0;
  /// Per-replica lambda estimates, in replica order.
  std::vector<double> per_replica;
};

LyapunovReport lyapunov_report(std::span<const LyapunovSample> samples);

/// Convenience wrapper over whole trajectories. point_id selects one point.
LyapunovReport pointwise_lyapunov(std::span<const Trajectory> trajectories,
                                  std::optional<std::size_t> point_id = std::nullopt,
                                  double burn_in = 0.0);

/// div phi(0) - L/2 with L = sum_{k,p} tr((D b_k^{., p}(u, delta_u))^2).
/// Throws NotApplicableError when L varies with u.
double closed_form_lambda(const ModelSpec& model, std::uint64_t seed = 7, int samples = 64);

/// tr(A) - 1/2 sum_{k,p} tr(C_p^2) for the linear kernel with mean-reverting
/// noise, the condition printed with the worked linear example. Nullopt for
/// other models.
std::optional<double> printed_example_condition(const ModelSpec& model);

// ---------------------------------------------------------------------------
// Moment Lyapunov exponents.
// ---------------------------------------------------------------------------

struct MomentLyapunov {
  double p = 0.0;
  double lambda_p = 0.0;
  double r2 = 1.0;
  double t0 = 0.0;
  double t1 = 0.0;
  std::size_t snapshots = 0;
};

/// Slope of ln M_p(t) over t in [t0, T] with t0 = T (1 - window_fraction).
/// Needs at least 10 snapshots in the window.
MomentLyapunov moment_lyapunov(const MomentSeries& series, double p, double window_fraction = 0.5);

struct MomentLyapunovFit {
  std::vector<double> p_grid;
  std::vector<double> lambda_p;  // replica mean
  std::vector<double> stderr_p;
  std::vector<double> r2_p;      // replica mean of the per-fit R^2
  double t0 = 0.0;
  double t1 = 0.0;
  std::size_t replicas = 0;
  /// lambda_p regressed on (p - 1), with the replica standard error of the slope.
  LinearFit global;
  double global_slope_stderr = 0.0;
};

/// Per-replica fits averaged across replicas.
MomentLyapunovFit fit_moment_lyapunov(std::span<const MomentSeries> replicas,
                                      double window_fraction = 0.5);

struct SlopeCheck {
  double slope = 0.0;
  double target = 0.0;  // -lambda_hat
  double residual = 0.0;
  double stderr_combined = 0.0;  // sqrt(se_slope^2 + se_lambda^2)
  bool within(double k = 3.0) const { return residual <= k * stderr_combined; }
};

SlopeCheck slope_relation_check(double lambda_hat, double lambda_hat_stderr,
                                const MomentLyapunovFit& fit);
/// Same check from a bare (p, lambda_p) list; the slope stderr is taken as 0.
SlopeCheck slope_relation_check(double lambda_hat, std::span<const double> p_grid,
                                std::span<const double> lambda_p);

struct IntermittencyVerdict {
  std::vector<double> p_grid;
  std::vector<double> ratios;  // lambda_p / p
  double eps_mono = 1e-3;
  /// Smallest consecutive increase of the ratios.
  double margin = 0.0;
  bool intermittent = false;

  std::string label() const { return intermittent ? "intermittent" : "not intermittent"; }
};

IntermittencyVerdict intermittency_verdict(std::span<const double> p_grid,
                                           std::span<const double> lambda_p,
                                           double eps_mono = 1e-3);

// ---------------------------------------------------------------------------
// Diagnostics.
// ---------------------------------------------------------------------------

struct ContractionRow {
  double t = 0.0;
  double mean = 0.0;    // replica mean of |x(u,t) - x(v,t)|^{2p}
  double stderr_mean = 0.0;
  double bound = 0.0;   // |u - v|^{2p}
};

/// Simulates config.replicas replicas tracking {u, v}. Throws
/// PreconditionError when p exceeds the admissible moment order.
std::vector<ContractionRow> contraction_diagnostic(const ModelSpec& model,
                                                   const DensityModel& density,
                                                   const SimConfig& config, const Vec& u,
                                                   const Vec& v, double p, int threads = 1);

/// Reduces finished trajectories (tracked points 0 and 1) to contraction rows.
std::vector<ContractionRow> contraction_rows(std::span<const Trajectory> trajectories, double p);

struct ClusteringPoint {
  double t = 0.0;
  double gamma = 0.0;
};

/// gamma(mu_t^N, delta_{x(probe, t)}) per snapshot; needs recorded particles.
std::vector<ClusteringPoint> clustering_diagnostic(const Trajectory& trajectory,
                                                   std::size_t probe_id);

/// max over the first `grid_points` tracked points of |mart| / t, per snapshot
/// (0 at t = 0).
struct MartingaleSeries {
  std::vector<double> times;
  std::vector<double> values;

  double at(double t) const;
};

MartingaleSeries martingale_series(const Trajectory& trajectory, std::size_t grid_points);

struct MartingaleDecay {
  double t_early = 0.0;
  double t_late = 0.0;
  std::size_t replicas = 0;
  /// Share of replicas with value(t_late) < value(t_early).
  double fraction_decreasing = 0.0;
  double median_early = 0.0;
  double median_late = 0.0;
  bool median_decreasing() const { return median_late <= median_early; }
};

/// t_late defaults to the horizon, t_early to a quarter of it.
MartingaleDecay martingale_decay_check(std::span<const MartingaleSeries> replicas,
                                       std::optional<double> t_early = std::nullopt,
                                       std::optional<double> t_late = std::nullopt);

}  // namespace sdeflow
