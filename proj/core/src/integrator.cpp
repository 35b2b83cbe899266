#include "sdeflow/integrator.hpp"

#include "sdeflow/parallel.hpp"

#include <cmath>
#include <sstream>

namespace sdeflow {

namespace {

bool all_finite(const Vec& v) { return v.allFinite(); }

[[noreturn]] void blow_up(const char* what, std::size_t index, long step, double t) {
  std::ostringstream os;
  os << "non-finite " << what << " " << index << " at step " << step << " (t=" << t << ")";
  throw BlowUpError(os.str());
}

// x + a dt + sum_k b_k dB_k for one position against the frozen ensemble.
Vec advance_position(const ModelSpec& model, const Vec& x, const Vec& drift,
                     const ParticleEnsemble& ensemble, const NoiseDraw& noise, double dt) {
  Vec next = x + dt * drift;
  const auto& family = model.diffusion();
  for (std::size_t k = 0; k < family.size(); ++k) {
    next.noalias() += family[k].value(x, ensemble) * noise.increments[k];
  }
  return next;
}

}  // namespace

TrackedPoint TrackedPoint::start(const Vec& u0) {
  const int d = static_cast<int>(u0.size());
  return TrackedPoint{u0, u0, Mat::Identity(d, d), 0.0, 0.0};
}

long SimConfig::steps() const {
  return static_cast<long>(std::ceil(horizon / dt - 1e-9));
}

void SimConfig::validate(const ModelSpec& model) const {
  auto fail = [](const std::string& msg) { throw ConfigError(msg); };
  if (!(dt > 0.0)) fail("sim.dt must be > 0");
  if (!(horizon >= dt)) fail("sim.T must be >= sim.dt");
  if (particles < 1) fail("sim.N must be >= 1");
  if (replicas < 1) fail("sim.replicas must be >= 1");
  if (save_every < 1) fail("sim.save_every must be >= 1");
  if (noise_substeps < 1) fail("sim.noise_substeps must be >= 1");
  if (steps() % save_every != 0) {
    std::ostringstream os;
    os << "sim.save_every=" << save_every << " must divide the step count " << steps();
    fail(os.str());
  }
  const double stiffness = dt * model.kernel().derivative_bound();
  if (stiffness > 0.5) {
    std::ostringstream os;
    os << "sim.dt too large: dt * sup||D phi|| = " << stiffness << " exceeds 0.5";
    fail(os.str());
  }
  if (initial_particles) {
    if (initial_particles->empty()) fail("sim.initial_particles must be non-empty");
    for (const auto& x : *initial_particles) {
      if (x.size() != model.dim()) fail("sim.initial_particles has wrong dimension");
    }
  }
}

const Snapshot& Trajectory::at_time(double t) const {
  for (const auto& s : snapshots) {
    if (std::abs(s.t - t) <= 1e-9 * std::max(1.0, std::abs(t))) return s;
  }
  std::ostringstream os;
  os << "no snapshot at t=" << t << " (replica " << replica << "); interpolation is refused";
  throw PreconditionError(os.str());
}

const Snapshot& Trajectory::final() const {
  if (snapshots.empty()) throw PreconditionError("trajectory has no snapshots");
  return snapshots.back();
}

std::size_t Trajectory::point_count() const {
  return snapshots.empty() ? 0 : snapshots.front().points.size();
}

const Vec& Trajectory::initial_point(std::size_t point_id) const {
  if (point_id >= point_count()) {
    std::ostringstream os;
    os << "point id " << point_id << " is not tracked (" << point_count() << " points)";
    throw ConfigError(os.str());
  }
  return snapshots.front().points[point_id].u0;
}

ParticleEnsemble sample_initial_ensemble(const DensityModel& density, int n, std::uint64_t seed,
                                         std::uint64_t replica) {
  if (n < 1) throw PreconditionError("initial ensemble needs N >= 1");
  Engine engine = make_engine(seed, replica, StreamTag::kInitial);
  std::vector<Vec> positions;
  positions.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) positions.push_back(density.sample(engine));
  return ParticleEnsemble(density.dim(), std::move(positions));
}

void em_step(FlowState& state, const NoiseDraw& noise, const ModelSpec& model, double dt,
             long step) {
  const ParticleEnsemble& ensemble = state.ensemble;
  const auto& family = model.diffusion();
  const int d = model.dim();
  if (noise.increments.size() != family.size()) {
    throw ConfigError("noise draw does not match the number of diffusion kernels");
  }
  const double t_end = static_cast<double>(step + 1) * dt;

  std::vector<Vec> moved;
  moved.reserve(ensemble.size());
  for (std::size_t i = 0; i < ensemble.size(); ++i) {
    const Vec& x = ensemble[i];
    Vec next = advance_position(model, x, drift_eval(model, x, ensemble), ensemble, noise, dt);
    if (!all_finite(next)) blow_up("particle", i, step + 1, t_end);
    moved.push_back(std::move(next));
  }

  for (std::size_t i = 0; i < state.points.size(); ++i) {
    TrackedPoint& pt = state.points[i];
    const auto lin = drift_linearization(model, pt.x, ensemble);

    Mat step_map = Mat::Identity(d, d) + dt * lin.jacobian;
    double half_trace_sq = 0.0;
    double mart_inc = 0.0;
    for (std::size_t k = 0; k < family.size(); ++k) {
      const Vec& db = noise.increments[k];
      for (int p = 0; p < d; ++p) {
        const Mat col_jac = family[k].column_jacobian(p, pt.x, ensemble);
        step_map.noalias() += db(p) * col_jac;
        half_trace_sq += 0.5 * (col_jac * col_jac).trace();
        mart_inc += col_jac.trace() * db(p);
      }
    }

    const double integrand = lin.jacobian.trace() - half_trace_sq;
    pt.x = advance_position(model, pt.x, lin.value, ensemble, noise, dt);
    pt.jac = step_map * pt.jac;
    pt.bv += integrand * dt;
    pt.mart += mart_inc;

    if (!all_finite(pt.x) || !pt.jac.allFinite() || !std::isfinite(pt.bv) ||
        !std::isfinite(pt.mart)) {
      blow_up("tracked point", i, step + 1, t_end);
    }
    const double det = pt.jac.determinant();
    if (!(det > 0.0)) {
      std::ostringstream os;
      os << "det(J)=" << det << " <= 0 for tracked point " << i << " at step " << step + 1
         << " (t=" << t_end << "); reduce dt";
      throw DeterminantSignError(os.str());
    }
  }

  state.ensemble.assign(std::move(moved));
}

Trajectory run(const ModelSpec& model, const DensityModel& density, const SimConfig& config,
               std::span<const Vec> tracked, std::uint64_t replica) {
  config.validate(model);
  if (density.dim() != model.dim()) throw ConfigError("density and model dimensions differ");

  FlowState state;
  if (config.initial_particles) {
    state.ensemble = ParticleEnsemble(model.dim(), *config.initial_particles);
  } else {
    state.ensemble = sample_initial_ensemble(density, config.particles, config.seed, replica);
  }
  state.points.reserve(tracked.size());
  for (const auto& u0 : tracked) {
    if (u0.size() != model.dim()) throw ConfigError("tracked point has wrong dimension");
    state.points.push_back(TrackedPoint::start(u0));
  }

  Trajectory traj;
  traj.replica = replica;
  traj.dim = model.dim();
  traj.dt = config.dt;
  traj.save_every = config.save_every;

  auto save = [&](long step) {
    Snapshot snap;
    snap.step = step;
    snap.t = static_cast<double>(step) * config.dt;
    snap.ensemble_mean = state.ensemble.mean();
    snap.points = state.points;
    if (config.record_particles) snap.particles = state.ensemble.positions();
    traj.snapshots.push_back(std::move(snap));
  };

  const int kernels = static_cast<int>(model.diffusion().size());
  NoiseStream stream(config.seed, replica, model.dim(), std::max(kernels, 0), config.dt,
                     config.noise_substeps);
  NoiseDraw noise;
  noise.increments.clear();

  const long steps = config.steps();
  save(0);
  for (long n = 0; n < steps; ++n) {
    if (kernels > 0) stream.next(noise);
    em_step(state, noise, model, config.dt, n);
    if ((n + 1) % config.save_every == 0) save(n + 1);
  }
  return traj;
}

std::vector<Trajectory> run_replicas(const ModelSpec& model, const DensityModel& density,
                                     const SimConfig& config, std::span<const Vec> tracked,
                                     int threads) {
  config.validate(model);
  std::vector<Trajectory> out(static_cast<std::size_t>(config.replicas));
  parallel_for(out.size(), threads, [&](std::size_t r) {
    out[r] = run(model, density, config, tracked, static_cast<std::uint64_t>(r));
  });
  return out;
}

}  // namespace sdeflow
