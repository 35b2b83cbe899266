#include "sdeflow/moments.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace sdeflow {

FlowDensity density_along_flow(const Trajectory& trajectory, std::size_t point_id, double t,
                               const DensityModel& density) {
  const Snapshot& snap = trajectory.at_time(t);
  if (point_id >= snap.points.size()) {
    std::ostringstream os;
    os << "point id " << point_id << " is not tracked";
    throw ConfigError(os.str());
  }
  const TrackedPoint& pt = snap.points[point_id];
  const double p0 = density(pt.u0);
  if (p0 == 0.0) return {pt.x, 0.0};
  return {pt.x, p0 * std::exp(-pt.log_det())};
}

void require_grid_tracked(const Trajectory& trajectory, const QuadratureGrid& grid) {
  if (trajectory.point_count() < grid.size()) {
    std::ostringstream os;
    os << "quadrature grid has " << grid.size() << " nodes but only "
       << trajectory.point_count() << " points are tracked";
    throw ConfigError(os.str());
  }
  for (std::size_t g = 0; g < grid.size(); ++g) {
    const Vec& u0 = trajectory.initial_point(g);
    if (u0.size() != grid.nodes[g].size() ||
        (u0 - grid.nodes[g]).lpNorm<Eigen::Infinity>() > 1e-12) {
      std::ostringstream os;
      os << "grid node " << g << " is not tracked (point " << g << " starts elsewhere)";
      throw ConfigError(os.str());
    }
  }
}

double log_lp_moment(const Snapshot& snapshot, const DensityModel& density,
                     const QuadratureGrid& grid, double p) {
  if (!(p >= 1.0)) throw PreconditionError("moment order p must be >= 1");
  if (snapshot.points.size() < grid.size()) throw ConfigError("snapshot lacks grid nodes");

  // Log-sum-exp: exponents reach (p - 1) |lambda| T, far beyond double range
  // for long horizons.
  double top = -std::numeric_limits<double>::infinity();
  std::vector<double> terms;
  terms.reserve(grid.size());
  for (std::size_t g = 0; g < grid.size(); ++g) {
    const TrackedPoint& pt = snapshot.points[g];
    const double p0 = density(pt.u0);
    if (p0 <= 0.0) continue;
    const double term =
        std::log(grid.weights[g]) + p * std::log(p0) - (p - 1.0) * pt.log_det();
    terms.push_back(term);
    top = std::max(top, term);
  }
  if (terms.empty()) return -std::numeric_limits<double>::infinity();
  double sum = 0.0;
  for (double term : terms) sum += std::exp(term - top);
  return top + std::log(sum);
}

double lp_moment_at(const Trajectory& trajectory, const DensityModel& density,
                    const QuadratureGrid& grid, double p, double t) {
  require_grid_tracked(trajectory, grid);
  return std::exp(log_lp_moment(trajectory.at_time(t), density, grid, p));
}

std::size_t MomentSeries::index_of(double p) const {
  for (std::size_t i = 0; i < p_grid.size(); ++i) {
    if (p_grid[i] == p) return i;
  }
  std::ostringstream os;
  os << "moment order p=" << p << " not in series";
  throw PreconditionError(os.str());
}

double MomentSeries::moment(std::size_t p_index, std::size_t snapshot) const {
  return std::exp(log_moments.at(p_index).at(snapshot));
}

MomentSeries moment_series(const Trajectory& trajectory, const DensityModel& density,
                           const QuadratureGrid& grid, std::span<const double> p_grid) {
  require_grid_tracked(trajectory, grid);
  MomentSeries series;
  series.p_grid.assign(p_grid.begin(), p_grid.end());
  series.log_moments.resize(p_grid.size());
  for (const auto& snap : trajectory.snapshots) {
    series.times.push_back(snap.t);
    for (std::size_t i = 0; i < p_grid.size(); ++i) {
      series.log_moments[i].push_back(log_lp_moment(snap, density, grid, p_grid[i]));
    }
  }
  return series;
}

}  // namespace sdeflow
