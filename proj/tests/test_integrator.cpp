#include "sdeflow/integrator.hpp"

#include "test_util.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace sdeflow;
using namespace testutil;

namespace {

FlowState state_of(int d, std::vector<Vec> particles, std::vector<Vec> tracked) {
  FlowState s;
  s.ensemble = ParticleEnsemble(d, std::move(particles));
  for (const auto& u : tracked) s.points.push_back(TrackedPoint::start(u));
  return s;
}

SimConfig dirac_config(double dt, double horizon, int save_every) {
  SimConfig c;
  c.dt = dt;
  c.horizon = horizon;
  c.particles = 1;
  c.save_every = save_every;
  c.initial_particles = std::vector<Vec>{vec({0.0})};
  return c;
}

}  // namespace

TEST_SUITE("integrator") {

TEST_CASE("tracked points start at the identity") {
  const auto p = TrackedPoint::start(vec({1, 2}));
  CHECK(p.x == p.u0);
  CHECK(p.jac == Mat::Identity(2, 2));
  CHECK(p.bv == 0.0);
  CHECK(p.mart == 0.0);
}

TEST_CASE("ensemble mean") {
  std::mt19937_64 rng(17);
  std::vector<Vec> pts;
  for (int i = 0; i < 100; ++i) pts.push_back(random_vec(rng, 3));
  const ParticleEnsemble e(3, pts);
  Vec ref = Vec::Zero(3);
  for (const auto& x : pts) ref += x;
  ref /= 100.0;
  CHECK((e.mean() - ref).norm() <= 1e-12);
}

TEST_CASE("one explicit Euler step") {
  auto s = state_of(1, {vec({0})}, {vec({1})});
  em_step(s, NoiseDraw{}, linear_model(1, 1.0, 0.0), 0.1);
  CHECK(s.points[0].x(0) == doctest::Approx(0.9).epsilon(1e-15));
  CHECK(s.points[0].jac(0, 0) == doctest::Approx(0.9).epsilon(1e-15));
  CHECK(s.points[0].bv == doctest::Approx(-0.1).epsilon(1e-15));
  CHECK(s.points[0].mart == 0.0);
  CHECK(s.ensemble[0](0) == 0.0);
}

TEST_CASE("zero model leaves the state unchanged") {
  const ModelSpec zero(2, InteractionKernel::linear(Mat::Zero(2, 2)), DiffusionFamily{});
  auto s = state_of(2, {vec({1, 2}), vec({-1, 0.5})}, {vec({0.3, 0.4})});
  for (int n = 0; n < 10; ++n) em_step(s, NoiseDraw{}, zero, 0.05, n);
  CHECK(s.points[0].x == vec({0.3, 0.4}));
  CHECK(s.points[0].jac == Mat::Identity(2, 2));
  CHECK(s.points[0].bv == 0.0);
  CHECK(s.points[0].mart == 0.0);
  CHECK(s.ensemble[0] == vec({1, 2}));
}

TEST_CASE("d=2 step matches a dense reference step") {
  const Mat a = mat({{1.0, 0.3}, {-0.2, 0.8}});
  const Mat c0 = mat({{0.3, 0.1}, {0.0, 0.2}});
  const Mat c1 = mat({{0.1, 0.0}, {0.05, 0.25}});
  const Mat off = mat({{0.05, 0.0}, {0.02, 0.1}});
  std::vector<DiffusionKernel> fam;
  fam.push_back(DiffusionKernel::mean_reverting_columns({c0, c1}, off));
  const ModelSpec model(2, InteractionKernel::linear(a), DiffusionFamily(std::move(fam)));

  const std::vector<Vec> parts{vec({0.2, -0.1}), vec({1.0, 0.4}), vec({-0.5, 0.9})};
  const Vec u = vec({0.7, -0.3});
  auto s = state_of(2, parts, {u});
  NoiseDraw noise{{vec({0.031, -0.017})}};
  const double dt = 0.01;
  em_step(s, noise, model, dt);

  // Reference in plain dense Eigen with every term spelled out.
  Eigen::Vector2d m = Eigen::Vector2d::Zero();
  for (const auto& p : parts) m += Eigen::Vector2d(p(0), p(1));
  m /= 3.0;
  const Eigen::Matrix2d ad = Eigen::Matrix2d(a);
  const Eigen::Vector2d ud(u(0), u(1));
  const Eigen::Vector2d drift = -ad * (ud - m);
  Eigen::Matrix2d b;
  b.col(0) = Eigen::Matrix2d(c0) * (m - ud) + Eigen::Vector2d(off(0, 0), off(1, 0));
  b.col(1) = Eigen::Matrix2d(c1) * (m - ud) + Eigen::Vector2d(off(0, 1), off(1, 1));
  const Eigen::Vector2d db(0.031, -0.017);
  const Eigen::Vector2d x_ref = ud + drift * dt + b * db;
  const Eigen::Matrix2d j_ref = Eigen::Matrix2d::Identity() - ad * dt -
                                Eigen::Matrix2d(c0) * db(0) - Eigen::Matrix2d(c1) * db(1);
  const Eigen::Matrix2d c0d = c0, c1d = c1;
  const double bv_ref = (-ad.trace() - 0.5 * ((c0d * c0d).trace() + (c1d * c1d).trace())) * dt;
  const double mart_ref = -c0d.trace() * db(0) - c1d.trace() * db(1);

  const auto& p = s.points[0];
  CHECK(std::abs(p.x(0) - x_ref(0)) <= 1e-12);
  CHECK(std::abs(p.x(1) - x_ref(1)) <= 1e-12);
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) CHECK(std::abs(p.jac(i, j) - j_ref(i, j)) <= 1e-12);
  }
  CHECK(std::abs(p.bv - bv_ref) <= 1e-12);
  CHECK(std::abs(p.mart - mart_ref) <= 1e-12);
}

TEST_CASE("deterministic contraction to a Dirac at the origin") {
  const auto model = linear_model(1, 1.0, 0.0);
  const auto density = DensityModel::uniform(vec({-1}), vec({1}));
  const Vec u0 = vec({1});
  const auto traj = run(model, density, dirac_config(1e-3, 1.0, 100), std::span(&u0, 1));
  const auto& fin = traj.final();
  CHECK(fin.t == doctest::Approx(1.0));
  CHECK(std::abs(fin.points[0].x(0) - std::exp(-1.0)) <= 0.01);
  CHECK(std::abs(fin.points[0].bv + 1.0) <= 1e-9);
  for (const auto& snap : traj.snapshots) CHECK(snap.points[0].mart == 0.0);
  CHECK(traj.snapshots.size() == 11);
}

TEST_CASE("halving dt halves the deterministic endpoint error") {
  const auto model = linear_model(1, 1.0, 0.0);
  const auto density = DensityModel::uniform(vec({-1}), vec({1}));
  const Vec u0 = vec({1});
  auto err = [&](double dt) {
    const auto traj = run(model, density, dirac_config(dt, 1.0, 1), std::span(&u0, 1));
    return std::abs(traj.final().points[0].x(0) - std::exp(-1.0));
  };
  const double e1 = err(1e-2), e2 = err(5e-3), e3 = err(2.5e-3);
  CHECK(e2 / e1 == doctest::Approx(0.5).epsilon(0.05));
  CHECK(e3 / e2 == doctest::Approx(0.5).epsilon(0.05));
}

TEST_CASE("runs are deterministic given seed and replica") {
  const auto model = linear_model(2, 1.0, 0.3);
  const auto density = DensityModel::bump(vec({0, 0}), vec({1, 1}));
  SimConfig cfg;
  cfg.dt = 0.01;
  cfg.horizon = 0.5;
  cfg.particles = 16;
  cfg.save_every = 10;
  cfg.seed = 99;
  const std::vector<Vec> tracked{vec({0.2, 0.3}), vec({0.8, 0.6})};
  const auto a = run(model, density, cfg, tracked, 3);
  const auto b = run(model, density, cfg, tracked, 3);
  const auto c = run(model, density, cfg, tracked, 4);
  REQUIRE(a.snapshots.size() == b.snapshots.size());
  for (std::size_t s = 0; s < a.snapshots.size(); ++s) {
    for (std::size_t i = 0; i < tracked.size(); ++i) {
      CHECK(a.snapshots[s].points[i].x == b.snapshots[s].points[i].x);
      CHECK(a.snapshots[s].points[i].jac == b.snapshots[s].points[i].jac);
      CHECK(a.snapshots[s].points[i].mart == b.snapshots[s].points[i].mart);
    }
  }
  CHECK(a.final().points[0].x != c.final().points[0].x);

  cfg.replicas = 3;
  const auto one = run_replicas(model, density, cfg, tracked, 1);
  const auto many = run_replicas(model, density, cfg, tracked, 3);
  for (std::size_t r = 0; r < 3; ++r) {
    CHECK(one[r].final().points[1].x == many[r].final().points[1].x);
    CHECK(one[r].final().points[1].bv == many[r].final().points[1].bv);
  }
}

TEST_CASE("permuting tracked points does not change any flow line") {
  const auto model = linear_model(2, 1.0, 0.3);
  const auto density = DensityModel::uniform(vec({0, 0}), vec({1, 1}));
  SimConfig cfg;
  cfg.dt = 0.01;
  cfg.horizon = 1.0;
  cfg.particles = 8;
  cfg.save_every = 20;
  cfg.seed = 5;
  const std::vector<Vec> fwd{vec({0.1, 0.1}), vec({0.5, 0.9}), vec({0.7, 0.2})};
  const std::vector<Vec> rev{fwd[2], fwd[1], fwd[0]};
  const auto a = run(model, density, cfg, fwd);
  const auto b = run(model, density, cfg, rev);
  for (std::size_t s = 0; s < a.snapshots.size(); ++s) {
    for (std::size_t i = 0; i < 3; ++i) {
      const auto& p = a.snapshots[s].points[i];
      const auto& q = b.snapshots[s].points[2 - i];
      CHECK(p.x == q.x);
      CHECK(p.jac == q.jac);
      CHECK(p.bv == q.bv);
      CHECK(p.mart == q.mart);
    }
  }
}

TEST_CASE("flow lines keep their order in d=1") {
  const auto model = linear_model(1, 1.0, 0.3);
  const auto density = DensityModel::uniform(vec({0}), vec({1}));
  SimConfig cfg;
  cfg.dt = 1e-3;
  cfg.horizon = 2.0;
  cfg.particles = 16;
  cfg.save_every = 50;
  cfg.replicas = 4;
  cfg.seed = 8;
  std::vector<Vec> tracked;
  for (int i = 0; i < 6; ++i) tracked.push_back(vec({-0.5 + 0.4 * i}));
  for (const auto& traj : run_replicas(model, density, cfg, tracked)) {
    for (const auto& snap : traj.snapshots) {
      for (std::size_t i = 1; i < tracked.size(); ++i) {
        CHECK(snap.points[i - 1].x(0) < snap.points[i].x(0));
      }
      for (const auto& p : snap.points) CHECK(p.jac.determinant() > 0.0);
    }
  }
}

TEST_CASE("sample_initial_ensemble") {
  SUBCASE("uniform draws stay in the box and are reproducible") {
    const auto density = DensityModel::uniform(vec({0}), vec({1}));
    const auto a = sample_initial_ensemble(density, 4, 123);
    const auto b = sample_initial_ensemble(density, 4, 123);
    REQUIRE(a.size() == 4);
    for (std::size_t i = 0; i < 4; ++i) {
      CHECK(a[i](0) >= 0.0);
      CHECK(a[i](0) <= 1.0);
      CHECK(a[i] == b[i]);
    }
  }
  SUBCASE("narrow bump concentrates at its center") {
    const double w = 1e-3;
    const auto density = DensityModel::bump(vec({0.5 - w / 2}), vec({0.5 + w / 2}));
    const int n = 2000;
    const auto e = sample_initial_ensemble(density, n, 7);
    // Bump variance on a width-w box is w^2 / 20.
    const double sd = w / std::sqrt(20.0);
    CHECK(std::abs(e.mean()(0) - 0.5) <= 3.0 * sd / std::sqrt(static_cast<double>(n)));
  }
  SUBCASE("a single sample is its own mean") {
    const auto density = DensityModel::bump(vec({0, 0}), vec({1, 2}));
    const auto e = sample_initial_ensemble(density, 1, 1);
    CHECK(e.mean() == e[0]);
  }
  SUBCASE("rejection cap raises a sampling error") {
    const auto density = DensityModel::custom("empty", vec({0}), vec({1}),
                                              [](const Vec&) { return 0.0; }, 1.0);
    Engine engine(1);
    CHECK_THROWS_AS(density.sample(engine, 100), SamplingError);
  }
}

TEST_CASE("coupled noise reproduces the fine Brownian path") {
  NoiseStream coarse(11, 2, 2, 1, 0.02, 2);
  NoiseStream fine(11, 2, 2, 1, 0.01, 1);
  for (int n = 0; n < 50; ++n) {
    const auto c = coarse.next();
    const auto f1 = fine.next();
    const auto f2 = fine.next();
    CHECK((c.increments[0] - (f1.increments[0] + f2.increments[0])).norm() <= 1e-15);
  }
}

TEST_CASE("step errors") {
  SUBCASE("determinant sign flip") {
    auto s = state_of(1, {vec({0})}, {vec({1})});
    CHECK_THROWS_AS(em_step(s, NoiseDraw{}, linear_model(1, 1.0, 0.0), 2.0), DeterminantSignError);
  }
  SUBCASE("non-finite positions") {
    auto s = state_of(1, {vec({std::numeric_limits<double>::infinity()})}, {vec({1})});
    CHECK_THROWS_AS(em_step(s, NoiseDraw{}, linear_model(1, 1.0, 0.0), 0.1), BlowUpError);
  }
  SUBCASE("noise draw with the wrong kernel count") {
    auto s = state_of(1, {vec({0})}, {vec({1})});
    CHECK_THROWS_AS(em_step(s, NoiseDraw{}, linear_model(1, 1.0, 0.3), 0.1), ConfigError);
  }
  SUBCASE("config validation") {
    const auto model = linear_model(1, 1.0, 0.0);
    SimConfig c;
    c.dt = 0.0;
    CHECK_THROWS_AS(c.validate(model), ConfigError);
    c = SimConfig{};
    c.dt = 0.6;
    c.horizon = 6.0;
    c.save_every = 1;
    CHECK_THROWS_AS(c.validate(model), ConfigError);  // stability cap
    c = SimConfig{};
    c.save_every = 7;
    CHECK_THROWS_AS(c.validate(model), ConfigError);
  }
  SUBCASE("snapshots are never interpolated") {
    const auto model = linear_model(1, 1.0, 0.0);
    const auto density = DensityModel::uniform(vec({-1}), vec({1}));
    const Vec u0 = vec({1});
    const auto traj = run(model, density, dirac_config(0.01, 1.0, 10), std::span(&u0, 1));
    CHECK_NOTHROW(traj.at_time(0.5));
    CHECK_THROWS_AS(traj.at_time(0.55), PreconditionError);
  }
}

}  // TEST_SUITE
