#include "sdeflow/moments.hpp"

#include "test_util.hpp"

#include <doctest.h>

#include <cmath>
#include <vector>

using namespace sdeflow;
using testutil::vec;

namespace {

SimConfig deterministic_config(double horizon, int save_every) {
  SimConfig c;
  c.dt = 1e-3;
  c.horizon = horizon;
  c.particles = 1;
  c.save_every = save_every;
  c.initial_particles = std::vector<Vec>{vec({0})};
  return c;
}

// Contraction toward a Dirac at 0 with the grid of `density` tracked.
Trajectory contraction_run(const DensityModel& density, const QuadratureGrid& grid, double horizon,
                           double sigma = 0.0) {
  const auto model = testutil::linear_model(1, 1.0, sigma);
  return run(model, density, deterministic_config(horizon, 100), grid.nodes);
}

}  // namespace

TEST_SUITE("density_moments") {

TEST_CASE("densities integrate to one and vanish outside the box") {
  for (const auto& density :
       {DensityModel::uniform(vec({0}), vec({1})), DensityModel::bump(vec({0}), vec({1})),
        DensityModel::bump(vec({-1}), vec({3}))}) {
    const auto grid = QuadratureGrid::midpoint(density.lo(), density.hi(), 1000);
    double mass = 0.0;
    for (std::size_t g = 0; g < grid.size(); ++g) mass += grid.weights[g] * density(grid.nodes[g]);
    CHECK(std::abs(mass - 1.0) <= 1e-6);
    CHECK(density(Vec::Constant(1, density.hi()(0) + 0.1)) == 0.0);
    CHECK(density(Vec::Constant(1, density.lo()(0) - 0.1)) == 0.0);
  }
  const auto bump2 = DensityModel::bump(vec({0, 0}), vec({1, 2}));
  const auto g2 = QuadratureGrid::midpoint(bump2.lo(), bump2.hi(), 400);
  double mass = 0.0;
  for (std::size_t g = 0; g < g2.size(); ++g) mass += g2.weights[g] * bump2(g2.nodes[g]);
  CHECK(std::abs(mass - 1.0) <= 1e-5);
}

TEST_CASE("closed-form L^p norms") {
  const auto uni = DensityModel::uniform(vec({0}), vec({2}));
  CHECK(*uni.lp_norm_pow(2.0) == doctest::Approx(0.5));
  const auto bump = DensityModel::bump(vec({0}), vec({1}));
  // (3/2)^2 * int_0^1 (4 s (1 - s))^2 ds = 9/4 * 8/15.
  CHECK(*bump.lp_norm_pow(2.0) == doctest::Approx(1.2).epsilon(1e-12));
  CHECK(*bump.lp_norm_pow(1.0) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("midpoint grid layout") {
  const auto grid = QuadratureGrid::midpoint(vec({0, -1}), vec({2, 1}), 4);
  REQUIRE(grid.size() == 16);
  double total = 0.0;
  for (double w : grid.weights) total += w;
  CHECK(total == doctest::Approx(4.0));
  CHECK(grid.nodes[0] == vec({0.25, -0.75}));
  CHECK(grid.nodes[1] == vec({0.75, -0.75}));  // axis 0 fastest
  CHECK(grid.nodes[4] == vec({0.25, -0.25}));
  for (const auto& n : grid.nodes) {
    CHECK(n(0) > 0.0);
    CHECK(n(0) < 2.0);
  }
}

TEST_CASE("density_along_flow") {
  const auto density = DensityModel::uniform(vec({0}), vec({1}));
  const std::vector<Vec> tracked{vec({0.5}), vec({1.5})};
  const auto traj = run(testutil::linear_model(1, 1.0, 0.0), density,
                        deterministic_config(1.0, 100), tracked);

  const auto at0 = density_along_flow(traj, 0, 0.0, density);
  CHECK(at0.position == vec({0.5}));
  CHECK(at0.density == 1.0);

  const auto at1 = density_along_flow(traj, 0, 1.0, density);
  CHECK(at1.position(0) == doctest::Approx(0.5 * std::exp(-1.0)).epsilon(1e-3));
  CHECK(at1.density == doctest::Approx(std::exp(1.0)).epsilon(1e-9));

  CHECK(density_along_flow(traj, 1, 1.0, density).density == 0.0);
  CHECK_THROWS_AS(density_along_flow(traj, 0, 0.55, density), PreconditionError);
  CHECK_THROWS_AS(density_along_flow(traj, 2, 1.0, density), ConfigError);
}

TEST_CASE("lp_moment_at") {
  const auto density = DensityModel::uniform(vec({0}), vec({1}));
  const auto grid = QuadratureGrid::midpoint(density.lo(), density.hi(), 64);
  const auto traj = contraction_run(density, grid, 1.0);

  CHECK(std::abs(lp_moment_at(traj, density, grid, 1.0, 0.0) - 1.0) <= 1e-3);
  CHECK(std::abs(lp_moment_at(traj, density, grid, 1.0, 1.0) - 1.0) <= 1e-3);
  CHECK(std::abs(lp_moment_at(traj, density, grid, 2.0, 0.0) - 1.0) <= 1e-3);
  CHECK(lp_moment_at(traj, density, grid, 2.0, 1.0) ==
        doctest::Approx(std::exp(1.0) * *density.lp_norm_pow(2.0)).epsilon(0.02));
  CHECK_THROWS_AS(lp_moment_at(traj, density, grid, 0.5, 1.0), PreconditionError);

  const auto finer = QuadratureGrid::midpoint(density.lo(), density.hi(), 65);
  CHECK_THROWS_AS(lp_moment_at(traj, density, finer, 1.0, 0.0), ConfigError);
}

TEST_CASE("moment_series on the deterministic contraction") {
  const auto density = DensityModel::bump(vec({0}), vec({1}));
  const auto grid = QuadratureGrid::midpoint(density.lo(), density.hi(), 64);
  const auto traj = contraction_run(density, grid, 3.0);
  const std::vector<double> ps{1.0, 1.5, 2.0, 3.0, 4.0};
  const auto series = moment_series(traj, density, grid, ps);
  REQUIRE(series.times.size() == traj.snapshots.size());

  const auto i1 = series.index_of(1.0), i2 = series.index_of(2.0), i3 = series.index_of(3.0);
  const double m20 = series.log_moments[i2][0];
  for (std::size_t s = 0; s < series.times.size(); ++s) {
    const double t = series.times[s];
    CHECK(series.log_moments[i1][s] == doctest::Approx(series.log_moments[i1][0]).epsilon(1e-12));
    if (t >= 0.5) CHECK(std::abs(series.log_moments[i2][s] - m20 - t) <= 1e-2);
    if (s > 0) {
      const double gap = series.log_moments[i3][s] - series.log_moments[i2][s];
      const double prev = series.log_moments[i3][s - 1] - series.log_moments[i2][s - 1];
      CHECK(gap > prev);
    }
    for (std::size_t a = 1; a < ps.size(); ++a) {
      for (std::size_t b = a + 1; b < ps.size(); ++b) {
        CHECK(series.log_moments[b][s] / (ps[b] - 1) >=
              series.log_moments[a][s] / (ps[a] - 1) - 1e-6);
      }
    }
  }
  CHECK(series.moment(i2, 0) == doctest::Approx(std::exp(m20)));
}

TEST_CASE("moments stay positive with noise") {
  const auto density = DensityModel::bump(vec({0}), vec({1}));
  const auto grid = QuadratureGrid::midpoint(density.lo(), density.hi(), 32);
  const auto traj = contraction_run(density, grid, 2.0, 0.3);
  const std::vector<double> ps{1.0, 2.0, 4.0};
  const auto series = moment_series(traj, density, grid, ps);
  for (const auto& row : series.log_moments) {
    for (double lm : row) CHECK(std::isfinite(lm));
  }
  for (std::size_t g = 0; g < grid.size(); ++g) {
    CHECK(density_along_flow(traj, g, 2.0, density).density > 0.0);
  }
}

TEST_CASE("mass error shrinks about fourfold under grid refinement") {
  const auto density = DensityModel::bump(vec({0}), vec({1}));
  auto mass_error = [&](int per_axis) {
    const auto grid = QuadratureGrid::midpoint(density.lo(), density.hi(), per_axis);
    const auto traj = contraction_run(density, grid, 0.5, 0.3);
    return std::abs(lp_moment_at(traj, density, grid, 1.0, 0.5) - 1.0);
  };
  const double coarse = mass_error(16), fine = mass_error(32);
  CHECK(coarse <= 1e-2);
  CHECK(coarse / fine == doctest::Approx(4.0).epsilon(0.05));
}

}  // TEST_SUITE
