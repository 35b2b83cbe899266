#include "sdeflow/gamma.hpp"

#include "test_util.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

using namespace sdeflow;
using testutil::vec;

namespace {

std::vector<Vec> random_cloud(std::mt19937_64& rng, int d, std::size_t m) {
  std::vector<Vec> out;
  for (std::size_t i = 0; i < m; ++i) out.push_back(testutil::random_vec(rng, d, -2.0, 2.0));
  return out;
}

}  // namespace

TEST_SUITE("gamma") {

TEST_CASE("bounded_cost") {
  CHECK(bounded_cost(0.0) == 0.0);
  CHECK(bounded_cost(1.0) == 0.5);
  CHECK(bounded_cost(1e9) > 1.0 - 1e-8);
  CHECK(bounded_cost(1e9) < 1.0);
  CHECK_THROWS_AS(bounded_cost(-1.0), PreconditionError);
  CHECK_THROWS_AS(bounded_cost(std::nan("")), PreconditionError);
}

TEST_CASE("gamma_to_dirac") {
  const std::vector<Vec> same{vec({1}), vec({1})};
  CHECK(gamma_to_dirac(same, vec({1})) == 0.0);
  const std::vector<Vec> origin{vec({0})};
  CHECK(gamma_to_dirac(origin, vec({1})) == 0.5);
  const std::vector<Vec> pair{vec({0}), vec({2})};
  CHECK(gamma_to_dirac(pair, vec({1})) == 0.5);
  CHECK_THROWS_AS(gamma_to_dirac(std::vector<Vec>{}, vec({1})), PreconditionError);
}

TEST_CASE("gamma_empirical examples") {
  const std::vector<Vec> mu{vec({0.3, 1}), vec({-1, 2}), vec({5, 0})};
  const std::vector<Vec> shuffled{mu[2], mu[0], mu[1]};
  const auto self = gamma_empirical(mu, shuffled);
  CHECK(self.distance == 0.0);
  CHECK(self.matching == std::vector<std::size_t>{1, 2, 0});

  const std::vector<Vec> a{vec({0}), vec({0})};
  const std::vector<Vec> b{vec({1}), vec({2})};
  CHECK(gamma_empirical(a, b).distance == doctest::Approx(7.0 / 12.0).epsilon(1e-15));
  CHECK(gamma_bruteforce(a, b) == doctest::Approx(7.0 / 12.0).epsilon(1e-15));

  CHECK_THROWS_AS(gamma_empirical(a, std::vector<Vec>{vec({1})}), PreconditionError);
  CHECK_THROWS_AS(gamma_bruteforce(std::vector<Vec>(9, vec({0})), std::vector<Vec>(9, vec({0}))),
                  PreconditionError);
}

TEST_CASE("assignment matches permutation enumeration") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 50; ++trial) {
    const int d = 1 + trial % 3;
    const std::size_t m = 1 + static_cast<std::size_t>(trial % 7);
    const auto mu = random_cloud(rng, d, m);
    const auto nu = random_cloud(rng, d, m);
    const auto match = gamma_empirical(mu, nu);
    CHECK(match.distance == gamma_bruteforce(mu, nu));

    auto seen = match.matching;
    std::sort(seen.begin(), seen.end());
    for (std::size_t i = 0; i < m; ++i) CHECK(seen[i] == i);
    double recomputed = 0.0;
    for (std::size_t i = 0; i < m; ++i) recomputed += bounded_cost((mu[i] - nu[match.matching[i]]).norm());
    CHECK(std::abs(recomputed / static_cast<double>(m) - match.distance) <= 1e-15);
  }
}

TEST_CASE("metric axioms") {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 100; ++trial) {
    const int d = 1 + trial % 2;
    const std::size_t m = 1 + static_cast<std::size_t>(trial % 6);
    const auto mu = random_cloud(rng, d, m);
    const auto nu = random_cloud(rng, d, m);
    const auto rho = random_cloud(rng, d, m);
    const double mn = gamma_empirical(mu, nu).distance;
    const double nr = gamma_empirical(nu, rho).distance;
    const double mr = gamma_empirical(mu, rho).distance;
    CHECK(gamma_empirical(mu, mu).distance == 0.0);
    CHECK(std::abs(mn - gamma_empirical(nu, mu).distance) <= 1e-12);
    CHECK(mr <= mn + nr + 1e-12);
    CHECK(mn <= 1.0);
  }
}

TEST_CASE("gamma against a Dirac cloud") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const auto mu = random_cloud(rng, 2, 6);
    const Vec y = testutil::random_vec(rng, 2);
    const std::vector<Vec> dirac(6, y);
    CHECK(gamma_empirical(mu, dirac).distance == gamma_to_dirac(mu, y));
  }
}

TEST_CASE("larger instances stay consistent") {
  std::mt19937_64 rng(8);
  const auto mu = random_cloud(rng, 2, 200);
  const auto nu = random_cloud(rng, 2, 200);
  const auto match = gamma_empirical(mu, nu);
  CHECK(match.distance > 0.0);
  CHECK(match.distance < 1.0);
  // No single swap of two assignments improves the objective.
  double worst = 0.0;
  for (std::size_t i = 0; i < 200; i += 7) {
    for (std::size_t j = i + 1; j < 200; j += 11) {
      const auto& m = match.matching;
      const double now = bounded_cost((mu[i] - nu[m[i]]).norm()) + bounded_cost((mu[j] - nu[m[j]]).norm());
      const double swapped = bounded_cost((mu[i] - nu[m[j]]).norm()) + bounded_cost((mu[j] - nu[m[i]]).norm());
      worst = std::max(worst, now - swapped);
    }
  }
  CHECK(worst <= 1e-12);
}

}  // TEST_SUITE
