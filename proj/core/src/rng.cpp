#include "sdeflow/rng.hpp"

#include <cmath>

namespace sdeflow {

Engine make_engine(std::uint64_t seed, std::uint64_t replica, StreamTag tag) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(replica),
                    static_cast<std::uint32_t>(replica >> 32), static_cast<std::uint32_t>(tag)};
  return Engine(seq);
}

NoiseStream::NoiseStream(std::uint64_t seed, std::uint64_t replica, int dim, int kernels,
                         double dt, int substeps)
    : engine_(make_engine(seed, replica, StreamTag::kNoise)),
      dim_(dim),
      kernels_(kernels),
      substeps_(substeps) {
  if (dim < 1 || dim > kMaxDim) throw ConfigError("noise dimension out of range");
  if (kernels < 0) throw ConfigError("noise kernel count must be >= 0");
  if (!(dt > 0.0)) throw ConfigError("noise step dt must be > 0");
  if (substeps < 1) throw ConfigError("noise substeps must be >= 1");
  sub_sd_ = std::sqrt(dt / substeps);
}

void NoiseStream::next(NoiseDraw& out) {
  out.increments.resize(static_cast<std::size_t>(kernels_));
  for (auto& inc : out.increments) inc = Vec::Zero(dim_);
  // Sub-increment order: substep, then kernel, then coordinate.
  for (int s = 0; s < substeps_; ++s) {
    for (auto& inc : out.increments) {
      for (int i = 0; i < dim_; ++i) inc(i) += sub_sd_ * normal_(engine_);
    }
  }
}

NoiseDraw NoiseStream::next() {
  NoiseDraw out;
  next(out);
  return out;
}

}  // namespace sdeflow
