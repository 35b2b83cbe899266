#include "sdeflow/gamma.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <sstream>

namespace sdeflow {

namespace {

void require_pair(std::span<const Vec> mu, std::span<const Vec> nu) {
  if (mu.empty() || nu.empty()) throw PreconditionError("gamma needs non-empty measures");
  if (mu.size() != nu.size()) {
    std::ostringstream os;
    os << "gamma between measures of sizes " << mu.size() << " and " << nu.size()
       << " is unsupported (equal sizes required)";
    throw PreconditionError(os.str());
  }
  const auto d = mu.front().size();
  for (auto side : {mu, nu}) {
    for (const auto& x : side) {
      if (x.size() != d) throw PreconditionError("gamma atoms have mixed dimensions");
      if (!x.allFinite()) throw PreconditionError("gamma atoms must be finite");
    }
  }
}

// Summed in atom order so equal matchings give bit-identical distances.
double matched_cost(std::span<const Vec> mu, std::span<const Vec> nu,
                    const std::vector<std::size_t>& perm) {
  double sum = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) sum += bounded_cost((mu[i] - nu[perm[i]]).norm());
  return sum / static_cast<double>(mu.size());
}

}  // namespace

double bounded_cost(double r) {
  if (!(r >= 0.0)) throw PreconditionError("bounded_cost needs r >= 0");
  return r / (1.0 + r);
}

double gamma_to_dirac(std::span<const Vec> atoms, const Vec& y) {
  if (atoms.empty()) throw PreconditionError("gamma_to_dirac needs a non-empty measure");
  double sum = 0.0;
  for (const auto& x : atoms) {
    if (x.size() != y.size()) throw PreconditionError("gamma_to_dirac dimension mismatch");
    sum += bounded_cost((x - y).norm());
  }
  return sum / static_cast<double>(atoms.size());
}

GammaMatch gamma_empirical(std::span<const Vec> mu, std::span<const Vec> nu) {
  require_pair(mu, nu);
  const std::size_t n = mu.size();
  std::vector<double> cost(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) cost[i * n + j] = bounded_cost((mu[i] - nu[j]).norm());
  }

  // Shortest augmenting paths with row/column potentials; 1-based with a
  // virtual column 0.
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<std::size_t> row_of(n + 1, 0), way(n + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    row_of[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(n + 1, kInf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = row_of[j0];
      double delta = kInf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost[(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[row_of[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (row_of[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      row_of[j0] = row_of[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  GammaMatch out;
  out.matching.assign(n, 0);
  for (std::size_t j = 1; j <= n; ++j) out.matching[row_of[j] - 1] = j - 1;
  out.distance = matched_cost(mu, nu, out.matching);
  return out;
}

double gamma_bruteforce(std::span<const Vec> mu, std::span<const Vec> nu) {
  require_pair(mu, nu);
  if (mu.size() > 8) throw PreconditionError("gamma_bruteforce is limited to M <= 8");
  std::vector<std::size_t> perm(mu.size());
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  double best = std::numeric_limits<double>::infinity();
  do {
    best = std::min(best, matched_cost(mu, nu, perm));
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

}  // namespace sdeflow
