#pragma once

#include "sdeflow/types.hpp"

#include <cstdint>
#include <random>
#include <vector>

namespace sdeflow {

using Engine = std::mt19937_64;

/// Purpose tags keep the noise stream and the initial-ensemble stream of one
/// replica apart.
enum class StreamTag : std::uint32_t { kNoise = 0x6e6f6973, kInitial = 0x696e6974 };

/// Engine for (seed, replica, tag). The state is expanded through
/// std::seed_seq from the 32-bit halves of all three keys, so a replica's
/// stream never depends on how many other replicas exist or which thread
/// runs it.
Engine make_engine(std::uint64_t seed, std::uint64_t replica, StreamTag tag);

/// Increments Delta B_k in R^d for k = 0..K over one step.
struct NoiseDraw {
  std::vector<Vec> increments;
};

/// Sequential Brownian increments of one replica. With substeps = m each
/// draw is the sum of m sub-increments of variance dt/m, so a run at dt with
/// m = 2 follows exactly the same Brownian path as a run at dt/2 with m = 1
/// under the same (seed, replica).
class NoiseStream {
 public:
  NoiseStream(std::uint64_t seed, std::uint64_t replica, int dim, int kernels, double dt,
              int substeps = 1);

  void next(NoiseDraw& out);
  NoiseDraw next();

  int dim() const { return dim_; }
  int kernels() const { return kernels_; }

 private:
  Engine engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  int dim_;
  int kernels_;
  int substeps_;
  double sub_sd_;
};

}  // namespace sdeflow
