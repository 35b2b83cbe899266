#include "sdeflow/density.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace sdeflow {

namespace {

void check_box(const Vec& lo, const Vec& hi) {
  if (lo.size() < 1 || lo.size() > kMaxDim || lo.size() != hi.size()) {
    throw ConfigError("density support box has invalid dimension");
  }
  for (int i = 0; i < lo.size(); ++i) {
    if (!(hi(i) > lo(i)) || !std::isfinite(lo(i)) || !std::isfinite(hi(i))) {
      std::ostringstream os;
      os << "density support box needs lo < hi on axis " << i;
      throw ConfigError(os.str());
    }
  }
}

bool inside(const Vec& u, const Vec& lo, const Vec& hi) {
  for (int i = 0; i < u.size(); ++i) {
    if (u(i) < lo(i) || u(i) > hi(i)) return false;
  }
  return true;
}

// int_0^1 (1 - (2s - 1)^2)^p ds = int_0^1 (1 - y^2)^p dy.
double bump_power_integral(double p) {
  return std::sqrt(std::numbers::pi) * std::tgamma(p + 1.0) / (2.0 * std::tgamma(p + 1.5));
}

}  // namespace

DensityModel::DensityModel(Kind kind, std::string name, Vec lo, Vec hi)
    : kind_(kind), name_(std::move(name)), lo_(std::move(lo)), hi_(std::move(hi)) {
  check_box(lo_, hi_);
}

DensityModel DensityModel::uniform(Vec lo, Vec hi) {
  return DensityModel(Kind::kUniform, "uniform", std::move(lo), std::move(hi));
}

DensityModel DensityModel::bump(Vec lo, Vec hi) {
  return DensityModel(Kind::kBump, "bump", std::move(lo), std::move(hi));
}

DensityModel DensityModel::custom(std::string name, Vec lo, Vec hi,
                                  std::function<double(const Vec&)> pdf, double pdf_max) {
  if (!pdf) throw ConfigError("custom density needs an evaluator");
  if (!(pdf_max > 0.0)) throw ConfigError("custom density needs pdf_max > 0");
  DensityModel m(Kind::kCustom, std::move(name), std::move(lo), std::move(hi));
  m.pdf_ = std::move(pdf);
  m.pdf_max_ = pdf_max;
  return m;
}

double DensityModel::volume() const { return (hi_ - lo_).prod(); }

double DensityModel::operator()(const Vec& u) const {
  if (u.size() != lo_.size()) throw ConfigError("density evaluated at point of wrong dimension");
  if (!inside(u, lo_, hi_)) return 0.0;
  switch (kind_) {
    case Kind::kUniform:
      return 1.0 / volume();
    case Kind::kBump: {
      double v = 1.0;
      for (int i = 0; i < u.size(); ++i) {
        const double width = hi_(i) - lo_(i);
        const double y = 2.0 * (u(i) - lo_(i)) / width - 1.0;
        v *= 1.5 * (1.0 - y * y) / width;
      }
      return v;
    }
    case Kind::kCustom:
      return pdf_(u);
  }
  return 0.0;
}

std::optional<double> DensityModel::lp_norm_pow(double p) const {
  switch (kind_) {
    case Kind::kUniform:
      return std::pow(volume(), 1.0 - p);
    case Kind::kBump: {
      double v = 1.0;
      for (int i = 0; i < lo_.size(); ++i) {
        const double width = hi_(i) - lo_(i);
        v *= std::pow(1.5, p) * bump_power_integral(p) * std::pow(width, 1.0 - p);
      }
      return v;
    }
    case Kind::kCustom:
      return std::nullopt;
  }
  return std::nullopt;
}

bool DensityModel::has_inverse_cdf() const { return kind_ != Kind::kCustom; }

Vec DensityModel::sample(Engine& engine, long max_tries) const {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const int d = dim();
  Vec u(d);
  switch (kind_) {
    case Kind::kUniform:
      for (int i = 0; i < d; ++i) u(i) = lo_(i) + (hi_(i) - lo_(i)) * unit(engine);
      return u;
    case Kind::kBump:
      // Inverse CDF of (3/4)(1 - y^2) on [-1, 1]: y = 2 sin(asin(2U - 1) / 3).
      for (int i = 0; i < d; ++i) {
        const double y = 2.0 * std::sin(std::asin(2.0 * unit(engine) - 1.0) / 3.0);
        u(i) = lo_(i) + 0.5 * (y + 1.0) * (hi_(i) - lo_(i));
      }
      return u;
    case Kind::kCustom:
      for (long t = 0; t < max_tries; ++t) {
        for (int i = 0; i < d; ++i) u(i) = lo_(i) + (hi_(i) - lo_(i)) * unit(engine);
        if (unit(engine) * pdf_max_ < pdf_(u)) return u;
      }
      break;
  }
  std::ostringstream os;
  os << "rejection sampler for density '" << name_ << "' exceeded " << max_tries << " tries";
  throw SamplingError(os.str());
}

QuadratureGrid QuadratureGrid::midpoint(const Vec& lo, const Vec& hi, int per_axis) {
  check_box(lo, hi);
  if (per_axis < 1) throw ConfigError("quadrature grid needs at least one node per axis");
  const int d = static_cast<int>(lo.size());
  const Vec h = (hi - lo) / per_axis;
  const double w = h.prod();

  std::size_t total = 1;
  for (int i = 0; i < d; ++i) total *= static_cast<std::size_t>(per_axis);

  QuadratureGrid grid;
  grid.per_axis = per_axis;
  grid.nodes.reserve(total);
  grid.weights.assign(total, w);
  for (std::size_t g = 0; g < total; ++g) {
    Vec x(d);
    std::size_t rest = g;
    for (int i = 0; i < d; ++i) {
      const auto idx = static_cast<double>(rest % static_cast<std::size_t>(per_axis));
      rest /= static_cast<std::size_t>(per_axis);
      x(i) = lo(i) + (idx + 0.5) * h(i);
    }
    grid.nodes.push_back(std::move(x));
  }
  return grid;
}

}  // namespace sdeflow
