#pragma once

#include "sdeflow/integrator.hpp"

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace sdeflow {

/// Shortest decimal that round-trips to the same double.
std::string format_double(double x);
/// Strict full-token parse; throws ConfigError on junk.
double parse_double(std::string_view token);

/// Columns: replica,t,point_id,x_1..x_d,logdet_bv,logdet_mart. Rows are ordered
/// by snapshot then point.
void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory);
void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& trajectory);

/// Inverse of write_trajectory_csv. Jacobians are not stored, so the result
/// has has_jacobians = false; u0 comes from `tracked`.
Trajectory read_trajectory_csv(const std::filesystem::path& path, int dim, double dt,
                               int save_every, std::span<const Vec> tracked);

/// One point per line, comma separated. A first line that does not parse as
/// numbers is treated as a header.
std::vector<Vec> read_point_csv(const std::filesystem::path& path);

}  // namespace sdeflow
