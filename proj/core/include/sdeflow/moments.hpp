#pragma once

#include "sdeflow/density.hpp"
#include "sdeflow/integrator.hpp"

#include <span>
#include <vector>

namespace sdeflow {

/// Transported density seen from a flow line: p_t(x(u0, t)) = p0(u0) / det Dx(u0, t).
struct FlowDensity {
  Vec position;
  double density = 0.0;
};

/// Uses the accumulated log-determinant, never an inverse map.
FlowDensity density_along_flow(const Trajectory& trajectory, std::size_t point_id, double t,
                               const DensityModel& density);

/// ln of M_p(t) = sum_g w_g p0(u_g)^p exp(-(p - 1)(bv_g + mart_g)), the
/// pulled-back quadrature of int p_t^p. Grid node g must be tracked point g.
double log_lp_moment(const Snapshot& snapshot, const DensityModel& density,
                     const QuadratureGrid& grid, double p);

double lp_moment_at(const Trajectory& trajectory, const DensityModel& density,
                    const QuadratureGrid& grid, double p, double t);

/// ln M_p at every snapshot for each p.
struct MomentSeries {
  std::vector<double> p_grid;
  std::vector<double> times;
  std::vector<std::vector<double>> log_moments;  // [p index][snapshot]

  std::size_t index_of(double p) const;
  double moment(std::size_t p_index, std::size_t snapshot) const;
};

MomentSeries moment_series(const Trajectory& trajectory, const DensityModel& density,
                           const QuadratureGrid& grid, std::span<const double> p_grid);

/// Throws ConfigError unless the first grid.size() tracked points are the grid nodes.
void require_grid_tracked(const Trajectory& trajectory, const QuadratureGrid& grid);

}  // namespace sdeflow
