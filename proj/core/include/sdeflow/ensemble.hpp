#pragma once

#include "sdeflow/types.hpp"

#include <cstddef>
#include <vector>

namespace sdeflow {

/// N particle positions standing in for the law mu_t, plus the cached mean
/// that mean-field kernels read instead of looping over particles.
class ParticleEnsemble {
 public:
  ParticleEnsemble() = default;
  ParticleEnsemble(int dim, std::vector<Vec> positions);

  int dim() const { return dim_; }
  std::size_t size() const { return positions_.size(); }
  bool empty() const { return positions_.empty(); }

  const std::vector<Vec>& positions() const { return positions_; }
  const Vec& operator[](std::size_t i) const { return positions_[i]; }
  const Vec& mean() const { return mean_; }

  /// Replaces every position and recomputes the mean.
  void assign(std::vector<Vec> positions);

 private:
  void refresh_mean();

  int dim_ = 0;
  std::vector<Vec> positions_;
  Vec mean_;
};

}  // namespace sdeflow
