#pragma once

#include "sdeflow/rng.hpp"
#include "sdeflow/types.hpp"

#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace sdeflow {

/// Compactly supported initial density p0 on the box [lo, hi].
class DensityModel {
 public:
  /// Constant 1/vol on the box.
  static DensityModel uniform(Vec lo, Vec hi);
  /// Product over axes of c (1 - (2s - 1)^2) with s the axis coordinate
  /// rescaled to [0, 1]; c = 3/2 per unit width.
  static DensityModel bump(Vec lo, Vec hi);
  /// Arbitrary density bounded by pdf_max on the box; sampled by rejection.
  static DensityModel custom(std::string name, Vec lo, Vec hi,
                             std::function<double(const Vec&)> pdf, double pdf_max);

  int dim() const { return static_cast<int>(lo_.size()); }
  const Vec& lo() const { return lo_; }
  const Vec& hi() const { return hi_; }
  const std::string& name() const { return name_; }
  double volume() const;

  /// p0(u); zero outside the box.
  double operator()(const Vec& u) const;

  /// ||p0||_p^p when known in closed form.
  std::optional<double> lp_norm_pow(double p) const;

  bool has_inverse_cdf() const;
  /// One draw. Throws SamplingError when rejection exceeds max_tries.
  Vec sample(Engine& engine, long max_tries = 1'000'000) const;

 private:
  enum class Kind { kUniform, kBump, kCustom };
  DensityModel(Kind kind, std::string name, Vec lo, Vec hi);

  Kind kind_;
  std::string name_;
  Vec lo_;
  Vec hi_;
  std::function<double(const Vec&)> pdf_;
  double pdf_max_ = 0.0;
};

/// Tensor midpoint rule. Node g has multi-index (i_0, ..., i_{d-1}) with
/// g = i_0 + G i_1 + G^2 i_2 + ..., i.e. axis 0 varies fastest.
struct QuadratureGrid {
  int per_axis = 0;
  std::vector<Vec> nodes;
  std::vector<double> weights;

  static QuadratureGrid midpoint(const Vec& lo, const Vec& hi, int per_axis);
  std::size_t size() const { return nodes.size(); }
};

}  // namespace sdeflow
