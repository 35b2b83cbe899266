#include "sdeflow/trajectory_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace sdeflow {

namespace {

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(line.substr(start, comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

[[noreturn]] void bad_file(const std::filesystem::path& path, long line, const std::string& what) {
  std::ostringstream os;
  os << path.string() << ":" << line << ": " << what;
  throw ConfigError(os.str());
}

}  // namespace

std::string format_double(double x) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view token) {
  token = trim(token);
  double x = 0.0;
  const auto res = std::from_chars(token.data(), token.data() + token.size(), x);
  if (res.ec != std::errc() || res.ptr != token.data() + token.size()) {
    throw ConfigError("not a number: '" + std::string(token) + "'");
  }
  return x;
}

void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory) {
  out << "replica,t,point_id";
  for (int i = 1; i <= trajectory.dim; ++i) out << ",x_" << i;
  out << ",logdet_bv,logdet_mart\n";
  for (const auto& snap : trajectory.snapshots) {
    const std::string t = format_double(snap.t);
    for (std::size_t id = 0; id < snap.points.size(); ++id) {
      const auto& pt = snap.points[id];
      out << trajectory.replica << ',' << t << ',' << id;
      for (int i = 0; i < trajectory.dim; ++i) out << ',' << format_double(pt.x(i));
      out << ',' << format_double(pt.bv) << ',' << format_double(pt.mart) << '\n';
    }
  }
}

void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& trajectory) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  write_trajectory_csv(out, trajectory);
  if (!out) throw Error("write failed for " + path.string());
}

Trajectory read_trajectory_csv(const std::filesystem::path& path, int dim, double dt,
                               int save_every, std::span<const Vec> tracked) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path.string());
  Trajectory traj;
  traj.dim = dim;
  traj.dt = dt;
  traj.save_every = save_every;
  traj.has_jacobians = false;

  const std::size_t columns = static_cast<std::size_t>(dim) + 5;
  std::string line;
  long lineno = 0;
  bool first_row = true;
  while (std::getline(in, line)) {
    ++lineno;
    if (lineno == 1) {
      if (line.rfind("replica,t,point_id", 0) != 0) bad_file(path, lineno, "missing header");
      continue;
    }
    if (trim(line).empty()) continue;
    const auto cells = split(line);
    if (cells.size() != columns) bad_file(path, lineno, "expected " + std::to_string(columns) + " columns");
    try {
      const auto replica = static_cast<std::uint64_t>(parse_double(cells[0]));
      const double t = parse_double(cells[1]);
      const auto id = static_cast<std::size_t>(parse_double(cells[2]));
      if (first_row) {
        traj.replica = replica;
        first_row = false;
      }
      if (traj.snapshots.empty() || traj.snapshots.back().t != t) {
        Snapshot snap;
        snap.t = t;
        snap.step = std::lround(t / dt);
        traj.snapshots.push_back(std::move(snap));
      }
      auto& points = traj.snapshots.back().points;
      if (id != points.size()) bad_file(path, lineno, "point ids out of order");
      if (id >= tracked.size()) bad_file(path, lineno, "point id not in the tracked list");
      TrackedPoint pt;
      pt.u0 = tracked[id];
      pt.x.resize(dim);
      for (int i = 0; i < dim; ++i) pt.x(i) = parse_double(cells[3 + static_cast<std::size_t>(i)]);
      pt.bv = parse_double(cells[3 + static_cast<std::size_t>(dim)]);
      pt.mart = parse_double(cells[4 + static_cast<std::size_t>(dim)]);
      points.push_back(std::move(pt));
    } catch (const ConfigError& e) {
      bad_file(path, lineno, e.what());
    }
  }
  if (traj.snapshots.empty()) bad_file(path, lineno, "no rows");
  return traj;
}

std::vector<Vec> read_point_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path.string());
  std::vector<Vec> pts;
  std::string line;
  long lineno = 0;
  std::size_t dim = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto cells = split(line);
    std::vector<double> row;
    try {
      for (auto c : cells) row.push_back(parse_double(c));
    } catch (const ConfigError&) {
      if (pts.empty() && dim == 0 && lineno == 1) continue;
      bad_file(path, lineno, "not a numeric row");
    }
    if (dim == 0) dim = row.size();
    if (row.size() != dim) bad_file(path, lineno, "rows have different lengths");
    if (dim > static_cast<std::size_t>(kMaxDim)) bad_file(path, lineno, "dimension exceeds 4");
    Vec p(static_cast<int>(dim));
    for (std::size_t i = 0; i < dim; ++i) p(static_cast<int>(i)) = row[i];
    pts.push_back(std::move(p));
  }
  return pts;
}

}  // namespace sdeflow
