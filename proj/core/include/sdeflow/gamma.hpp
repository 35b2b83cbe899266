#pragma once

#include "sdeflow/types.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace sdeflow {

/// r / (1 + r).
double bounded_cost(double r);

/// gamma(mu, delta_y) = (1/M) sum_i bounded_cost(|u_i - y|); the only
/// coupling with a Dirac is the product one.
double gamma_to_dirac(std::span<const Vec> atoms, const Vec& y);

struct GammaMatch {
  double distance = 0.0;
  /// matching[i] is the atom of nu paired with atom i of mu.
  std::vector<std::size_t> matching;
};

/// Exact gamma between two uniform empirical measures of equal size, by
/// min-cost assignment (Hungarian method, O(M^3)).
GammaMatch gamma_empirical(std::span<const Vec> mu, std::span<const Vec> nu);

/// Minimum over all M! permutations. M <= 8.
double gamma_bruteforce(std::span<const Vec> mu, std::span<const Vec> nu);

}  // namespace sdeflow
