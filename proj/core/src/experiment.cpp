#include "sdeflow/experiment.hpp"

#include "sdeflow/asymptotics.hpp"
#include "sdeflow/moments.hpp"
#include "sdeflow/parallel.hpp"
#include "sdeflow/trajectory_io.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#ifndef SDEFLOW_VERSION
#define SDEFLOW_VERSION "0.0.0"
#endif

namespace sdeflow {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("write failed for " + path.string());
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

json require_artifact(const fs::path& dir, const char* name, const char* stage,
                      const char* producer) {
  const fs::path path = dir / name;
  if (!fs::exists(path)) {
    std::ostringstream os;
    os << "stage '" << stage << "' needs " << name << " from stage '" << producer << "' in "
       << dir.string();
    throw StageDependencyError(os.str());
  }
  return read_json(path);
}

void require_file(const fs::path& dir, const char* name, const char* stage, const char* producer) {
  if (!fs::exists(dir / name)) {
    std::ostringstream os;
    os << "stage '" << stage << "' needs " << name << " from stage '" << producer << "' in "
       << dir.string();
    throw StageDependencyError(os.str());
  }
}

json vec_json(const Vec& v) {
  json out = json::array();
  for (int i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Vec json_vec(const json& j) {
  Vec v(static_cast<int>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<int>(i)) = j[i].get<double>();
  return v;
}

json finite_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

struct NumericCsv {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

NumericCsv read_numeric_csv(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  NumericCsv csv;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (first) {
      csv.header = std::move(cells);
      first = false;
      continue;
    }
    std::vector<double> row;
    for (const auto& c : cells) row.push_back(parse_double(c));
    if (row.size() != csv.header.size()) throw Error(path.string() + ": ragged row");
    csv.rows.push_back(std::move(row));
  }
  return csv;
}

// Everything a post-processing stage needs from simulate's outputs.
struct StageContext {
  ExperimentConfig config;
  json header;
  json manifest;
  std::vector<Vec> tracked;
  std::size_t grid_points = 0;
  std::vector<std::uint64_t> replicas;  // successful ones, ascending
};

StageContext load_context(const fs::path& dir, const char* stage) {
  json header = require_artifact(dir, artifacts::kHeader, stage, "simulate");
  json manifest = require_artifact(dir, artifacts::kManifest, stage, "simulate");
  StageContext ctx{parse_config_text(header.at("config").dump(), "header.json"), header, manifest,
                   {}, header.at("grid_points").get<std::size_t>(), {}};
  for (const auto& p : header.at("tracked")) ctx.tracked.push_back(json_vec(p));
  const auto& paths = manifest.at("trajectories");
  for (std::size_t r = 0; r < paths.size(); ++r) {
    if (paths[r].is_null()) continue;
    const fs::path file = dir / paths[r].get<std::string>();
    if (!fs::exists(file)) {
      throw StageDependencyError("stage '" + std::string(stage) + "' needs " + file.string() +
                                 " from stage 'simulate'");
    }
    ctx.replicas.push_back(r);
  }
  if (ctx.replicas.empty()) {
    throw StageDependencyError("stage '" + std::string(stage) + "': no replica finished");
  }
  return ctx;
}

Trajectory load_trajectory(const fs::path& dir, const StageContext& ctx, std::uint64_t replica) {
  const auto& sim = ctx.config.sim;
  return read_trajectory_csv(dir / artifacts::kTrajectoryDir / trajectory_file_name(replica),
                             ctx.config.model.dim(), sim.dt, sim.save_every, ctx.tracked);
}

void record_timing(const fs::path& dir, const std::string& stage, double seconds) {
  const fs::path path = dir / artifacts::kManifest;
  json manifest = read_json(path);
  manifest["timings"][stage] = seconds;
  write_json(path, manifest);
}

std::vector<double> moment_orders(const ExperimentConfig& cfg) {
  std::vector<double> ps = cfg.analysis.p_grid;
  ps.push_back(1.0);
  std::sort(ps.begin(), ps.end());
  ps.erase(std::unique(ps.begin(), ps.end()), ps.end());
  return ps;
}

std::string failure_kind(const std::exception& e) {
  if (dynamic_cast<const BlowUpError*>(&e)) return "blow_up";
  if (dynamic_cast<const DeterminantSignError*>(&e)) return "determinant_sign";
  return "error";
}

json model_info(const ExperimentConfig& cfg) {
  const auto& m = cfg.model;
  json info;
  info["alpha"] = m.alpha();
  info["B"] = m.b_const();
  const auto p_max = max_moment_order(m.alpha(), m.b_const());
  info["p_max"] = p_max ? json(*p_max) : json(nullptr);
  try {
    info["closed_form_lambda"] = closed_form_lambda(m);
  } catch (const NotApplicableError& e) {
    info["closed_form_lambda"] = nullptr;
    info["closed_form_note"] = e.what();
  }
  const auto printed = printed_example_condition(m);
  info["printed_condition"] = printed ? json(*printed) : json(nullptr);
  return info;
}

}  // namespace

std::string library_version() { return SDEFLOW_VERSION; }

std::string trajectory_file_name(std::uint64_t replica) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "trajectory_r%04llu.csv", static_cast<unsigned long long>(replica));
  return buf;
}

RunManifest simulate_stage(const ExperimentConfig& cfg, const fs::path& out_dir, int threads) {
  const auto start = Clock::now();
  fs::create_directories(out_dir / artifacts::kTrajectoryDir);
  for (const char* stale : {artifacts::kMoments, artifacts::kDensityProfile, artifacts::kClustering,
                            artifacts::kContraction, artifacts::kLyapunov,
                            artifacts::kIntermittency, artifacts::kSummary}) {
    fs::remove(out_dir / stale);
  }

  const std::string canonical = config_to_json(cfg);
  RunManifest manifest;
  manifest.config_hash = fnv1a_hex(canonical);
  manifest.seed = cfg.sim.seed;
  manifest.version = library_version();
  manifest.replicas = cfg.sim.replicas;

  const auto tracked = cfg.tracked_points();
  const std::size_t grid_points = cfg.grid().size();

  json header;
  header["version"] = manifest.version;
  header["config_hash"] = manifest.config_hash;
  header["config"] = json::parse(canonical);
  header["grid_points"] = grid_points;
  json probes = json::array();
  for (std::size_t j = 0; j < cfg.analysis.probes.size(); ++j) probes.push_back(grid_points + j);
  header["probe_ids"] = probes;
  header["tracked"] = json::array();
  for (const auto& p : tracked) header["tracked"].push_back(vec_json(p));
  header["model"] = model_info(cfg);
  header["warnings"] = cfg.warnings;
  write_json(out_dir / artifacts::kHeader, header);

  const auto replicas = static_cast<std::size_t>(cfg.sim.replicas);
  std::vector<std::optional<ReplicaFailure>> failures(replicas);
  std::vector<std::string> clustering(replicas);
  const bool want_clustering = cfg.sim.record_particles && !cfg.analysis.probes.empty();

  parallel_for(replicas, threads, [&](std::size_t r) {
    try {
      const Trajectory traj = run(cfg.model, cfg.density, cfg.sim, tracked, r);
      write_trajectory_csv(out_dir / artifacts::kTrajectoryDir / trajectory_file_name(r), traj);
      if (want_clustering) {
        std::ostringstream os;
        for (std::size_t j = 0; j < cfg.analysis.probes.size(); ++j) {
          for (const auto& c : clustering_diagnostic(traj, grid_points + j)) {
            os << r << ',' << grid_points + j << ',' << format_double(c.t) << ','
               << format_double(c.gamma) << '\n';
          }
        }
        clustering[r] = os.str();
      }
    } catch (const std::exception& e) {
      failures[r] = ReplicaFailure{r, failure_kind(e), e.what()};
      fs::remove(out_dir / artifacts::kTrajectoryDir / trajectory_file_name(r));
    }
  });

  for (std::size_t r = 0; r < replicas; ++r) {
    if (failures[r]) {
      manifest.trajectory_paths.emplace_back();
      manifest.failures.push_back(*failures[r]);
    } else {
      manifest.trajectory_paths.push_back(std::string(artifacts::kTrajectoryDir) + "/" +
                                          trajectory_file_name(r));
    }
  }
  if (want_clustering) {
    std::string text = "replica,probe_id,t,gamma\n";
    for (const auto& chunk : clustering) text += chunk;
    write_text(out_dir / artifacts::kClustering, text);
  }

  std::string contraction_error;
  if (const auto& c = cfg.analysis.contraction) {
    const auto p_max = max_moment_order(cfg.model.alpha(), cfg.model.b_const());
    if (!p_max || c->p <= static_cast<double>(*p_max)) {
      SimConfig sim = cfg.sim;
      sim.replicas = c->replicas.value_or(cfg.sim.replicas);
      sim.record_particles = false;
      try {
        const auto rows =
            contraction_diagnostic(cfg.model, cfg.density, sim, c->u, c->v, c->p, threads);
        std::string text = "t,mean,stderr,bound\n";
        for (const auto& row : rows) {
          text += format_double(row.t) + ',' + format_double(row.mean) + ',' +
                  format_double(row.stderr_mean) + ',' + format_double(row.bound) + '\n';
        }
        write_text(out_dir / artifacts::kContraction, text);
      } catch (const Error& e) {
        contraction_error = e.what();
      }
    }
  }

  manifest.timings["simulate"] = seconds_since(start);

  json mj;
  mj["config_hash"] = manifest.config_hash;
  mj["seed"] = manifest.seed;
  mj["version"] = manifest.version;
  mj["replicas"] = manifest.replicas;
  mj["trajectories"] = json::array();
  for (const auto& p : manifest.trajectory_paths) {
    mj["trajectories"].push_back(p.empty() ? json(nullptr) : json(p));
  }
  mj["failures"] = json::array();
  for (const auto& f : manifest.failures) {
    mj["failures"].push_back({{"replica", f.replica}, {"kind", f.kind}, {"message", f.message}});
  }
  if (!contraction_error.empty()) mj["contraction_error"] = contraction_error;
  mj["timings"] = manifest.timings;
  write_json(out_dir / artifacts::kManifest, mj);
  return manifest;
}

void moments_stage(const fs::path& out_dir, int threads) {
  const auto start = Clock::now();
  const StageContext ctx = load_context(out_dir, "moments");
  const auto& cfg = ctx.config;
  const auto grid = cfg.grid();
  const auto orders = moment_orders(cfg);

  std::vector<std::string> chunks(ctx.replicas.size());
  std::string profile;
  parallel_for(ctx.replicas.size(), threads, [&](std::size_t i) {
    const auto r = ctx.replicas[i];
    const Trajectory traj = load_trajectory(out_dir, ctx, r);
    const auto series = moment_series(traj, cfg.density, grid, orders);
    std::string text;
    for (std::size_t pi = 0; pi < orders.size(); ++pi) {
      const std::string p = format_double(orders[pi]);
      for (std::size_t s = 0; s < series.times.size(); ++s) {
        const double ln_m = series.log_moments[pi][s];
        text += std::to_string(r) + ',' + p + ',' + format_double(series.times[s]) + ',' +
                format_double(std::exp(ln_m)) + ',' + format_double(ln_m) + '\n';
      }
    }
    chunks[i] = std::move(text);

    if (i == 0) {
      std::ostringstream os;
      for (const auto& snap : traj.snapshots) {
        for (std::size_t id = 0; id < snap.points.size(); ++id) {
          const auto& pt = snap.points[id];
          const double p0 = cfg.density(pt.u0);
          const double rho = p0 == 0.0 ? 0.0 : p0 * std::exp(-pt.log_det());
          os << id << ',' << format_double(snap.t);
          for (int k = 0; k < pt.x.size(); ++k) os << ',' << format_double(pt.x(k));
          os << ',' << format_double(rho) << '\n';
        }
      }
      profile = os.str();
    }
  });

  std::string text = "replica,p,t,M_p,ln_M_p\n";
  for (const auto& c : chunks) text += c;
  write_text(out_dir / artifacts::kMoments, text);

  std::string head = "point_id,t";
  for (int k = 1; k <= cfg.model.dim(); ++k) head += ",x_" + std::to_string(k);
  write_text(out_dir / artifacts::kDensityProfile, head + ",density\n" + profile);
  record_timing(out_dir, "moments", seconds_since(start));
}

void lyapunov_stage(const fs::path& out_dir, int threads) {
  const auto start = Clock::now();
  const StageContext ctx = load_context(out_dir, "lyapunov");
  const auto& cfg = ctx.config;

  std::vector<LyapunovSample> samples(ctx.replicas.size());
  std::vector<MartingaleSeries> martingales(ctx.replicas.size());
  parallel_for(ctx.replicas.size(), threads, [&](std::size_t i) {
    const Trajectory traj = load_trajectory(out_dir, ctx, ctx.replicas[i]);
    samples[i] = lyapunov_sample(traj, {}, cfg.analysis.burn_in);
    martingales[i] = martingale_series(traj, ctx.grid_points);
  });
  const auto rep = lyapunov_report(samples);

  json j;
  j["lambda_hat"] = rep.lambda_hat;
  j["stderr"] = rep.stderr_lambda;
  j["replicas"] = rep.replicas;
  j["horizon"] = rep.horizon;
  j["bv_rate"] = rep.bv_rate;
  j["martingale_share"] = rep.martingale_share;
  j["per_point"] = rep.per_point;
  j["per_replica"] = rep.per_replica;
  j["closed_form_lambda"] = ctx.header.at("model").at("closed_form_lambda");
  j["partial"] = ctx.replicas.size() != static_cast<std::size_t>(cfg.sim.replicas);

  json decay = nullptr;
  try {
    const auto d = martingale_decay_check(martingales);
    decay = {{"t_early", d.t_early},
             {"t_late", d.t_late},
             {"fraction_decreasing", d.fraction_decreasing},
             {"median_early", d.median_early},
             {"median_late", d.median_late},
             {"median_decreasing", d.median_decreasing()}};
  } catch (const PreconditionError&) {
    // No snapshot at T/4; the decay check is not defined for this save grid.
  }
  j["martingale_decay"] = decay;
  write_json(out_dir / artifacts::kLyapunov, j);
  record_timing(out_dir, "lyapunov", seconds_since(start));
}

void intermittency_stage(const fs::path& out_dir) {
  const auto start = Clock::now();
  const StageContext ctx = load_context(out_dir, "intermittency");
  require_file(out_dir, artifacts::kMoments, "intermittency", "moments");
  const json lyap = require_artifact(out_dir, artifacts::kLyapunov, "intermittency", "lyapunov");
  const auto& cfg = ctx.config;
  const auto& p_grid = cfg.analysis.p_grid;
  const auto orders = moment_orders(cfg);

  // moments.csv -> one full series per replica, in file order.
  const auto csv = read_numeric_csv(out_dir / artifacts::kMoments);
  std::vector<std::uint64_t> order;
  std::map<std::uint64_t, MomentSeries> by_replica;
  double mass_error = 0.0;
  for (const auto& row : csv.rows) {
    const auto r = static_cast<std::uint64_t>(row[0]);
    const double p = row[1], t = row[2], ln_m = row[4];
    auto [it, fresh] = by_replica.try_emplace(r);
    if (fresh) {
      order.push_back(r);
      it->second.p_grid = orders;
      it->second.log_moments.resize(orders.size());
    }
    auto& s = it->second;
    const std::size_t pi = s.index_of(p);
    if (pi == 0) s.times.push_back(t);  // rows are sorted by p, then t
    s.log_moments[pi].push_back(ln_m);
    if (p == 1.0) mass_error = std::max(mass_error, std::abs(std::exp(ln_m) - 1.0));
  }

  std::vector<MomentSeries> restricted, unit;
  for (auto r : order) {
    const auto& full = by_replica.at(r);
    MomentSeries s{p_grid, full.times, {}};
    for (double p : p_grid) s.log_moments.push_back(full.log_moments[full.index_of(p)]);
    restricted.push_back(std::move(s));
    unit.push_back(MomentSeries{{1.0}, full.times, {full.log_moments[full.index_of(1.0)]}});
  }

  const auto fit = fit_moment_lyapunov(restricted, cfg.analysis.fit_window);
  const auto lambda_1 = fit_moment_lyapunov(unit, cfg.analysis.fit_window);
  const auto verdict = intermittency_verdict(fit.p_grid, fit.lambda_p, cfg.analysis.eps_mono);
  const double lambda_hat = lyap.at("lambda_hat").get<double>();
  const double lambda_se = lyap.at("stderr").get<double>();
  const auto slope = slope_relation_check(lambda_hat, lambda_se, fit);

  json margins = json::array();
  for (std::size_t i = 1; i < verdict.ratios.size(); ++i) {
    margins.push_back(verdict.ratios[i] - verdict.ratios[i - 1]);
  }
  const json& printed = ctx.header.at("model").at("printed_condition");

  json j;
  j["p_grid"] = fit.p_grid;
  j["lambda_p"] = fit.lambda_p;
  j["stderr_p"] = fit.stderr_p;
  j["r2_p"] = fit.r2_p;
  j["fit_window"] = {fit.t0, fit.t1};
  j["ratios"] = verdict.ratios;
  j["margins"] = margins;
  j["margin"] = finite_or_null(verdict.margin);
  j["eps_mono"] = verdict.eps_mono;
  j["intermittent"] = verdict.intermittent;
  j["verdict"] = verdict.label();
  j["slope_check"] = {{"slope", slope.slope},
                      {"target", slope.target},
                      {"residual", slope.residual},
                      {"stderr", slope.stderr_combined},
                      {"r2", fit.global.r2},
                      {"within_3_stderr", slope.within(3.0)}};
  j["lambda_1"] = lambda_1.lambda_p.front();
  j["mass_conservation_error"] = mass_error;
  j["lambda_condition"] = {{"lambda_hat", lambda_hat}, {"holds", lambda_hat < 0.0}};
  j["printed_condition"] = {{"value", printed},
                            {"holds", printed.is_null() ? json(nullptr)
                                                        : json(printed.get<double>() < 0.0)}};
  write_json(out_dir / artifacts::kIntermittency, j);
  record_timing(out_dir, "intermittency", seconds_since(start));
}

void summary_stage(const fs::path& out_dir) {
  const json header = require_artifact(out_dir, artifacts::kHeader, "summary", "simulate");
  const json manifest = require_artifact(out_dir, artifacts::kManifest, "summary", "simulate");
  const json lyap = require_artifact(out_dir, artifacts::kLyapunov, "summary", "lyapunov");
  const json inter =
      require_artifact(out_dir, artifacts::kIntermittency, "summary", "intermittency");

  const bool failed = !manifest.at("failures").empty();
  json s;
  s["name"] = header.at("config").at("name");
  s["config_hash"] = header.at("config_hash");
  s["seed"] = manifest.at("seed");
  s["replicas"] = manifest.at("replicas");
  s["status"] = failed ? "failed" : "ok";
  s["failures"] = manifest.at("failures");
  s["warnings"] = header.at("warnings");

  for (const char* key : {"lambda_hat", "stderr"}) s[key] = lyap.at(key);
  for (const char* key : {"lambda_p", "ratios", "verdict", "intermittent", "margin", "margins"}) {
    s[key] = inter.at(key);
  }
  s["eps_mono"] = inter.at("eps_mono");
  s["slope_check"] = inter.at("slope_check");
  s["lambda_1"] = inter.at("lambda_1");
  s["mass_conservation_error"] = inter.at("mass_conservation_error");
  s["closed_form_lambda"] = lyap.at("closed_form_lambda");
  s["lambda_condition"] = inter.at("lambda_condition");
  s["printed_condition"] = inter.at("printed_condition");
  s["martingale"] = {{"share", lyap.at("martingale_share")}, {"decay", lyap.at("martingale_decay")}};

  json diagnostics = json::object();
  if (fs::exists(out_dir / artifacts::kClustering)) {
    // Final-time gamma per probe, averaged over replicas.
    const auto csv = read_numeric_csv(out_dir / artifacts::kClustering);
    std::map<long, std::pair<double, double>> last_t;  // probe -> (t, gamma sum)
    std::map<long, int> count;
    double t_max = 0.0;
    for (const auto& row : csv.rows) t_max = std::max(t_max, row[2]);
    for (const auto& row : csv.rows) {
      if (row[2] != t_max) continue;
      const long probe = static_cast<long>(row[1]);
      last_t[probe].first = t_max;
      last_t[probe].second += row[3];
      ++count[probe];
    }
    json c = json::array();
    for (const auto& [probe, v] : last_t) {
      c.push_back({{"probe_id", probe}, {"t", v.first}, {"gamma", v.second / count[probe]}});
    }
    diagnostics["clustering"] = c;
  }
  if (fs::exists(out_dir / artifacts::kContraction)) {
    const auto csv = read_numeric_csv(out_dir / artifacts::kContraction);
    double excess = -std::numeric_limits<double>::infinity();
    for (const auto& row : csv.rows) excess = std::max(excess, row[1] - row[3] - 2.0 * row[2]);
    diagnostics["contraction"] = {{"max_excess_over_bound", finite_or_null(excess)},
                                  {"holds", excess <= 0.0}};
  }
  s["diagnostics"] = diagnostics;

  json unavailable = json::array();
  if (failed) {
    for (const char* key : {"lambda_hat", "stderr", "lambda_p", "ratios", "verdict",
                            "intermittent", "margin", "margins", "slope_check"}) {
      s[key] = nullptr;
      unavailable.push_back(key);
    }
  }
  s["unavailable"] = unavailable;
  write_json(out_dir / artifacts::kSummary, s);
}

RunManifest run_experiment(const ExperimentConfig& config, const fs::path& out_dir, int threads) {
  RunManifest manifest = simulate_stage(config, out_dir, threads);
  if (manifest.trajectory_paths.size() == manifest.failures.size()) {
    // Nothing to analyse; still leave a summary behind.
    json s = {{"name", config.name},
              {"config_hash", manifest.config_hash},
              {"status", "failed"},
              {"unavailable", {"lambda_hat", "lambda_p", "verdict"}}};
    s["failures"] = json::array();
    for (const auto& f : manifest.failures) {
      s["failures"].push_back({{"replica", f.replica}, {"kind", f.kind}, {"message", f.message}});
    }
    write_json(out_dir / artifacts::kSummary, s);
    return manifest;
  }
  moments_stage(out_dir, threads);
  lyapunov_stage(out_dir, threads);
  intermittency_stage(out_dir);
  summary_stage(out_dir);
  const json mj = read_json(out_dir / artifacts::kManifest);
  for (const auto& [stage, secs] : mj.at("timings").items()) manifest.timings[stage] = secs;
  return manifest;
}

std::vector<IdentityCheck> identities_stage(std::uint64_t seed, int trials,
                                            const fs::path& out_dir) {
  auto rows = run_identity_suite(seed, trials, 2, 5);
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    std::string text = "identity,d,trials,max_deviation,tolerance,pass\n";
    for (const auto& r : rows) {
      text += r.identity + ',' + std::to_string(r.dim) + ',' + std::to_string(r.trials) + ',' +
              format_double(r.max_deviation) + ',' + format_double(r.tolerance) + ',' +
              (r.pass ? "true" : "false") + '\n';
    }
    write_text(out_dir / artifacts::kIdentities, text);
  }
  return rows;
}

std::string report_table(std::span<const fs::path> out_dirs) {
  auto cell = [](const json& v) -> std::string {
    if (v.is_null()) return "NA";
    if (v.is_number()) return format_double(v.get<double>());
    if (v.is_string()) return v.get<std::string>();
    return v.dump();
  };
  std::string text = "name,lambda_hat,stderr,verdict,margin,mass_error,status\n";
  for (const auto& dir : out_dirs) {
    const json s = require_artifact(dir, artifacts::kSummary, "report", "run");
    text += cell(s.value("name", json(dir.filename().string()))) + ',' +
            cell(s.value("lambda_hat", json(nullptr))) + ',' +
            cell(s.value("stderr", json(nullptr))) + ',' +
            cell(s.value("verdict", json(nullptr))) + ',' +
            cell(s.value("margin", json(nullptr))) + ',' +
            cell(s.value("mass_conservation_error", json(nullptr))) + ',' +
            cell(s.value("status", json("unknown"))) + '\n';
  }
  return text;
}

}  // namespace sdeflow
