#include "sdeflow/asymptotics.hpp"

#include "sdeflow/gamma.hpp"
#include "sdeflow/parallel.hpp"
#include "sdeflow/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace sdeflow {

SampleStats sample_stats(std::span<const double> xs) {
  SampleStats s;
  s.n = xs.size();
  if (s.n == 0) return s;
  s.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(s.n);
  if (s.n < 2) return s;
  double ss = 0.0;
  for (double x : xs) ss += (x - s.mean) * (x - s.mean);
  const double var = ss / static_cast<double>(s.n - 1);
  s.stderr_mean = std::sqrt(var / static_cast<double>(s.n));
  return s;
}

double median(std::vector<double> xs) {
  if (xs.empty()) throw PreconditionError("median of an empty sample");
  const auto mid = xs.size() / 2;
  std::nth_element(xs.begin(), xs.begin() + static_cast<std::ptrdiff_t>(mid), xs.end());
  const double upper = xs[mid];
  if (xs.size() % 2 == 1) return upper;
  const double lower = *std::max_element(xs.begin(), xs.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

LinearFit least_squares(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw PreconditionError("least squares needs at least two (x, y) pairs");
  }
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (!(sxx > 0.0)) throw PreconditionError("least squares needs two distinct x values");
  LinearFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  if (syy > 0.0) {
    double ss_res = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double r = y[i] - (fit.intercept + fit.slope * x[i]);
      ss_res += r * r;
    }
    fit.r2 = std::clamp(1.0 - ss_res / syy, 0.0, 1.0);
  }
  return fit;
}

LyapunovSample lyapunov_sample(const Trajectory& trajectory, std::span<const std::size_t> points,
                               double burn_in) {
  const Snapshot& last = trajectory.final();
  if (!(last.t > 0.0)) throw PreconditionError("Lyapunov estimate needs T > 0");
  if (last.t < burn_in) {
    std::ostringstream os;
    os << "final time " << last.t << " is below the burn-in " << burn_in;
    throw PreconditionError(os.str());
  }
  std::vector<std::size_t> ids(points.begin(), points.end());
  if (ids.empty()) {
    ids.resize(last.points.size());
    std::iota(ids.begin(), ids.end(), std::size_t{0});
  }
  LyapunovSample s;
  s.horizon = last.t;
  for (std::size_t id : ids) {
    if (id >= last.points.size()) {
      std::ostringstream os;
      os << "point id " << id << " is not tracked";
      throw ConfigError(os.str());
    }
    s.bv_rate.push_back(last.points[id].bv / last.t);
    s.mart_rate.push_back(last.points[id].mart / last.t);
  }
  return s;
}

LyapunovReport lyapunov_report(std::span<const LyapunovSample> samples) {
  if (samples.empty()) throw PreconditionError("Lyapunov report needs at least one replica");
  LyapunovReport rep;
  rep.horizon = samples.front().horizon;
  rep.replicas = samples.size();
  const std::size_t points = samples.front().bv_rate.size();
  if (points == 0) throw PreconditionError("Lyapunov report needs tracked points");
  rep.per_point.assign(points, 0.0);

  std::vector<double> bv_means;
  for (const auto& s : samples) {
    if (s.bv_rate.size() != points) throw PreconditionError("replicas track different points");
    double total = 0.0, bv_total = 0.0;
    for (std::size_t i = 0; i < points; ++i) {
      const double rate = s.bv_rate[i] + s.mart_rate[i];
      rep.per_point[i] += rate / static_cast<double>(samples.size());
      total += rate;
      bv_total += s.bv_rate[i];
      rep.martingale_share = std::max(rep.martingale_share, std::abs(s.mart_rate[i]));
    }
    rep.per_replica.push_back(total / static_cast<double>(points));
    bv_means.push_back(bv_total / static_cast<double>(points));
  }
  const auto stats = sample_stats(rep.per_replica);
  rep.lambda_hat = stats.mean;
  rep.stderr_lambda = stats.stderr_mean;
  rep.bv_rate = sample_stats(bv_means).mean;
  return rep;
}

LyapunovReport pointwise_lyapunov(std::span<const Trajectory> trajectories,
                                  std::optional<std::size_t> point_id, double burn_in) {
  std::vector<LyapunovSample> samples;
  samples.reserve(trajectories.size());
  for (const auto& traj : trajectories) {
    if (point_id) {
      const std::size_t id = *point_id;
      samples.push_back(lyapunov_sample(traj, std::span<const std::size_t>(&id, 1), burn_in));
    } else {
      samples.push_back(lyapunov_sample(traj, {}, burn_in));
    }
  }
  return lyapunov_report(samples);
}

double closed_form_lambda(const ModelSpec& model, std::uint64_t seed, int samples) {
  const int d = model.dim();
  const auto& family = model.diffusion();
  auto trace_sum = [&](const Vec& u) {
    const ParticleEnsemble dirac(d, {u});
    double l = 0.0;
    for (std::size_t k = 0; k < family.size(); ++k) {
      for (int p = 0; p < d; ++p) {
        const Mat j = family[k].column_jacobian(p, u, dirac);
        l += (j * j).trace();
      }
    }
    return l;
  };

  Engine engine = make_engine(seed, 0, StreamTag::kInitial);
  std::uniform_real_distribution<double> box(-5.0, 5.0);
  const double l0 = trace_sum(Vec::Zero(d));
  for (int s = 0; s < samples; ++s) {
    Vec u(d);
    for (int i = 0; i < d; ++i) u(i) = box(engine);
    const double l = trace_sum(u);
    if (std::abs(l - l0) > 1e-9 * (1.0 + std::abs(l0))) {
      std::ostringstream os;
      os << "closed-form lambda needs a constant derivative trace L; found " << l0 << " at 0 and "
         << l << " elsewhere";
      throw NotApplicableError(os.str());
    }
  }
  return model.kernel().divergence(Vec::Zero(d)) - 0.5 * l0;
}

std::optional<double> printed_example_condition(const ModelSpec& model) {
  const auto* lin = std::get_if<LinearKernel>(&model.kernel().variant());
  if (!lin) return std::nullopt;
  double sum = 0.0;
  for (const auto& kernel : model.diffusion().kernels()) {
    const auto* mr = std::get_if<MeanRevertingDiffusion>(&kernel.variant());
    if (!mr) return std::nullopt;
    for (const auto& c : mr->column_gains) sum += (c * c).trace();
  }
  return lin->a.trace() - 0.5 * sum;
}

MomentLyapunov moment_lyapunov(const MomentSeries& series, double p, double window_fraction) {
  if (!(window_fraction > 0.0 && window_fraction <= 1.0)) {
    throw PreconditionError("fit window fraction must be in (0, 1]");
  }
  if (series.times.empty()) throw PreconditionError("empty moment series");
  const std::size_t pi = series.index_of(p);
  const double t1 = series.times.back();
  const double t0 = t1 * (1.0 - window_fraction);
  std::vector<double> ts, ys;
  for (std::size_t s = 0; s < series.times.size(); ++s) {
    if (series.times[s] >= t0 - 1e-12 * std::max(1.0, t1)) {
      ts.push_back(series.times[s]);
      ys.push_back(series.log_moments[pi][s]);
    }
  }
  if (ts.size() < 10) {
    std::ostringstream os;
    os << "moment Lyapunov fit needs >= 10 snapshots in [" << t0 << ", " << t1 << "], got "
       << ts.size();
    throw PreconditionError(os.str());
  }
  const auto fit = least_squares(ts, ys);
  return {p, fit.slope, fit.r2, t0, t1, ts.size()};
}

MomentLyapunovFit fit_moment_lyapunov(std::span<const MomentSeries> replicas,
                                      double window_fraction) {
  if (replicas.empty()) throw PreconditionError("moment fit needs at least one replica");
  MomentLyapunovFit fit;
  fit.p_grid = replicas.front().p_grid;
  fit.replicas = replicas.size();
  const std::size_t np = fit.p_grid.size();
  std::vector<std::vector<double>> per_p(np);
  std::vector<double> r2_sum(np, 0.0);
  for (const auto& series : replicas) {
    if (series.p_grid != fit.p_grid) throw PreconditionError("replicas use different p grids");
    for (std::size_t i = 0; i < np; ++i) {
      const auto est = moment_lyapunov(series, fit.p_grid[i], window_fraction);
      per_p[i].push_back(est.lambda_p);
      r2_sum[i] += est.r2;
      fit.t0 = est.t0;
      fit.t1 = est.t1;
    }
  }
  for (std::size_t i = 0; i < np; ++i) {
    const auto stats = sample_stats(per_p[i]);
    fit.lambda_p.push_back(stats.mean);
    fit.stderr_p.push_back(stats.stderr_mean);
    fit.r2_p.push_back(r2_sum[i] / static_cast<double>(replicas.size()));
  }

  if (np >= 2) {
    std::vector<double> x(np);
    for (std::size_t i = 0; i < np; ++i) x[i] = fit.p_grid[i] - 1.0;
    fit.global = least_squares(x, fit.lambda_p);
    // The slope is linear in lambda_p, so its replica spread gives the error.
    std::vector<double> slopes;
    for (std::size_t r = 0; r < replicas.size(); ++r) {
      std::vector<double> y(np);
      for (std::size_t i = 0; i < np; ++i) y[i] = per_p[i][r];
      slopes.push_back(least_squares(x, y).slope);
    }
    fit.global_slope_stderr = sample_stats(slopes).stderr_mean;
  }
  return fit;
}

SlopeCheck slope_relation_check(double lambda_hat, double lambda_hat_stderr,
                                const MomentLyapunovFit& fit) {
  if (fit.p_grid.size() < 3) throw PreconditionError("slope check needs >= 3 values of p");
  SlopeCheck c;
  c.slope = fit.global.slope;
  c.target = -lambda_hat;
  c.residual = std::abs(c.slope - c.target);
  c.stderr_combined = std::hypot(fit.global_slope_stderr, lambda_hat_stderr);
  return c;
}

SlopeCheck slope_relation_check(double lambda_hat, std::span<const double> p_grid,
                                std::span<const double> lambda_p) {
  if (p_grid.size() < 3 || p_grid.size() != lambda_p.size()) {
    throw PreconditionError("slope check needs >= 3 values of p");
  }
  std::vector<double> x(p_grid.size());
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = p_grid[i] - 1.0;
  SlopeCheck c;
  c.slope = least_squares(x, lambda_p).slope;
  c.target = -lambda_hat;
  c.residual = std::abs(c.slope - c.target);
  return c;
}

IntermittencyVerdict intermittency_verdict(std::span<const double> p_grid,
                                           std::span<const double> lambda_p, double eps_mono) {
  if (p_grid.size() < 3) throw PreconditionError("intermittency verdict needs >= 3 values of p");
  if (p_grid.size() != lambda_p.size()) throw PreconditionError("p grid and lambda_p differ in size");
  for (std::size_t i = 0; i < p_grid.size(); ++i) {
    if (!(p_grid[i] >= 1.0)) throw PreconditionError("intermittency verdict needs p >= 1");
    if (i > 0 && !(p_grid[i] > p_grid[i - 1])) {
      throw PreconditionError("p grid must be strictly increasing");
    }
  }
  IntermittencyVerdict v;
  v.p_grid.assign(p_grid.begin(), p_grid.end());
  v.eps_mono = eps_mono;
  for (std::size_t i = 0; i < p_grid.size(); ++i) v.ratios.push_back(lambda_p[i] / p_grid[i]);
  v.margin = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < v.ratios.size(); ++i) {
    v.margin = std::min(v.margin, v.ratios[i] - v.ratios[i - 1]);
  }
  v.intermittent = v.margin > eps_mono;
  return v;
}

std::vector<ContractionRow> contraction_rows(std::span<const Trajectory> trajectories, double p) {
  if (trajectories.empty()) throw PreconditionError("contraction needs at least one replica");
  const auto& first = trajectories.front();
  if (first.point_count() < 2) throw PreconditionError("contraction needs points u and v tracked");
  const Vec& u = first.initial_point(0);
  const Vec& v = first.initial_point(1);
  const double bound = std::pow((u - v).norm(), 2.0 * p);

  std::vector<ContractionRow> rows;
  for (std::size_t s = 0; s < first.snapshots.size(); ++s) {
    std::vector<double> vals;
    vals.reserve(trajectories.size());
    for (const auto& traj : trajectories) {
      const auto& pts = traj.snapshots.at(s).points;
      vals.push_back(std::pow((pts[0].x - pts[1].x).norm(), 2.0 * p));
    }
    const auto stats = sample_stats(vals);
    rows.push_back({first.snapshots[s].t, stats.mean, stats.stderr_mean, bound});
  }
  return rows;
}

std::vector<ContractionRow> contraction_diagnostic(const ModelSpec& model,
                                                   const DensityModel& density,
                                                   const SimConfig& config, const Vec& u,
                                                   const Vec& v, double p, int threads) {
  if (!(p >= 1.0)) throw PreconditionError("contraction diagnostic needs p >= 1");
  const auto p_max = max_moment_order(model.alpha(), model.b_const());
  if (p_max && p > static_cast<double>(*p_max)) {
    std::ostringstream os;
    os << "contraction diagnostic p=" << p << " exceeds the admissible moment order p_max="
       << *p_max;
    throw PreconditionError(os.str());
  }
  const std::vector<Vec> tracked{u, v};
  const auto trajectories = run_replicas(model, density, config, tracked, threads);
  return contraction_rows(trajectories, p);
}

std::vector<ClusteringPoint> clustering_diagnostic(const Trajectory& trajectory,
                                                   std::size_t probe_id) {
  if (probe_id >= trajectory.point_count()) {
    std::ostringstream os;
    os << "probe " << probe_id << " is not tracked";
    throw ConfigError(os.str());
  }
  std::vector<ClusteringPoint> out;
  for (const auto& snap : trajectory.snapshots) {
    if (snap.particles.empty()) {
      throw PreconditionError("clustering needs recorded particles (sim.record_particles)");
    }
    out.push_back({snap.t, gamma_to_dirac(snap.particles, snap.points[probe_id].x)});
  }
  return out;
}

double MartingaleSeries::at(double t) const {
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (std::abs(times[i] - t) <= 1e-9 * std::max(1.0, std::abs(t))) return values[i];
  }
  std::ostringstream os;
  os << "no martingale sample at t=" << t;
  throw PreconditionError(os.str());
}

MartingaleSeries martingale_series(const Trajectory& trajectory, std::size_t grid_points) {
  if (grid_points == 0 || grid_points > trajectory.point_count()) {
    throw PreconditionError("martingale series needs 1..point_count grid points");
  }
  MartingaleSeries series;
  for (const auto& snap : trajectory.snapshots) {
    double worst = 0.0;
    if (snap.t > 0.0) {
      for (std::size_t g = 0; g < grid_points; ++g) {
        worst = std::max(worst, std::abs(snap.points[g].mart) / snap.t);
      }
    }
    series.times.push_back(snap.t);
    series.values.push_back(worst);
  }
  return series;
}

MartingaleDecay martingale_decay_check(std::span<const MartingaleSeries> replicas,
                                       std::optional<double> t_early,
                                       std::optional<double> t_late) {
  if (replicas.empty()) throw PreconditionError("martingale decay needs at least one replica");
  const double horizon = replicas.front().times.back();
  MartingaleDecay out;
  out.t_late = t_late.value_or(horizon);
  out.t_early = t_early.value_or(horizon / 4.0);
  out.replicas = replicas.size();
  std::vector<double> early, late;
  std::size_t decreasing = 0;
  for (const auto& s : replicas) {
    early.push_back(s.at(out.t_early));
    late.push_back(s.at(out.t_late));
    if (late.back() < early.back()) ++decreasing;
  }
  out.fraction_decreasing = static_cast<double>(decreasing) / static_cast<double>(replicas.size());
  out.median_early = median(early);
  out.median_late = median(late);
  return out;
}

}  // namespace sdeflow
