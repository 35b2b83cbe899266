#include "sdeflow/config.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace sdeflow {

using nlohmann::json;

namespace {

constexpr long kMaxTrackedPoints = 1'000'000;

// Walks a JSON document, recording every violation with its dotted path.
class Reader {
 public:
  std::vector<std::string> violations;

  void fail(const std::string& path, const std::string& what) {
    violations.push_back(path + ": " + what);
  }

  bool object(const json& j, const std::string& path, std::initializer_list<const char*> allowed) {
    if (!j.is_object()) {
      fail(path, "must be an object");
      return false;
    }
    const std::set<std::string> keys(allowed.begin(), allowed.end());
    for (const auto& [key, value] : j.items()) {
      if (!keys.contains(key)) fail(path + "." + key, "unknown key");
    }
    return true;
  }

  const json* field(const json& obj, const std::string& path, const char* key, bool required) {
    if (obj.contains(key)) return &obj[key];
    if (required) fail(path + "." + key, "is required");
    return nullptr;
  }

  std::optional<double> number(const json& obj, const std::string& path, const char* key,
                               bool required = false) {
    const json* v = field(obj, path, key, required);
    if (!v) return std::nullopt;
    if (!v->is_number()) {
      fail(path + "." + key, "must be a number");
      return std::nullopt;
    }
    const double x = v->get<double>();
    if (!std::isfinite(x)) {
      fail(path + "." + key, "must be finite");
      return std::nullopt;
    }
    return x;
  }

  std::optional<long long> integer(const json& obj, const std::string& path, const char* key,
                                   bool required = false) {
    const json* v = field(obj, path, key, required);
    if (!v) return std::nullopt;
    if (!v->is_number_integer()) {
      fail(path + "." + key, "must be an integer");
      return std::nullopt;
    }
    return v->get<long long>();
  }

  std::optional<std::uint64_t> unsigned_integer(const json& obj, const std::string& path,
                                                const char* key) {
    const json* v = field(obj, path, key, false);
    if (!v) return std::nullopt;
    if (!v->is_number_unsigned()) {
      fail(path + "." + key, "must be a non-negative integer");
      return std::nullopt;
    }
    return v->get<std::uint64_t>();
  }

  std::optional<std::string> string(const json& obj, const std::string& path, const char* key,
                                    bool required = false) {
    const json* v = field(obj, path, key, required);
    if (!v) return std::nullopt;
    if (!v->is_string()) {
      fail(path + "." + key, "must be a string");
      return std::nullopt;
    }
    return v->get<std::string>();
  }

  std::optional<bool> boolean(const json& obj, const std::string& path, const char* key) {
    const json* v = field(obj, path, key, false);
    if (!v) return std::nullopt;
    if (!v->is_boolean()) {
      fail(path + "." + key, "must be true or false");
      return std::nullopt;
    }
    return v->get<bool>();
  }

  std::vector<double> numbers(const json& v, const std::string& path) {
    std::vector<double> out;
    if (!v.is_array()) {
      fail(path, "must be an array of numbers");
      return out;
    }
    for (const auto& x : v) {
      if (!x.is_number() || !std::isfinite(x.get<double>())) {
        fail(path, "must contain finite numbers only");
        return {};
      }
      out.push_back(x.get<double>());
    }
    return out;
  }

  // A number is broadcast to every coordinate when `broadcast` is set.
  std::optional<Vec> vector(const json& v, const std::string& path, int d, bool broadcast) {
    if (v.is_number()) {
      if (broadcast || d == 1) return Vec::Constant(d, v.get<double>());
      fail(path, "must be an array of " + std::to_string(d) + " numbers");
      return std::nullopt;
    }
    const auto xs = numbers(v, path);
    if (xs.size() != static_cast<std::size_t>(d)) {
      fail(path, "must have " + std::to_string(d) + " entries");
      return std::nullopt;
    }
    Vec out(d);
    for (int i = 0; i < d; ++i) out(i) = xs[static_cast<std::size_t>(i)];
    return out;
  }

  // Scalar c means c I; otherwise nested rows or a flat row-major array.
  std::optional<Mat> matrix(const json& v, const std::string& path, int d) {
    if (v.is_number()) return static_cast<Mat>(v.get<double>() * Mat::Identity(d, d));
    if (!v.is_array()) {
      fail(path, "must be a number, a list of rows, or a flat row-major array");
      return std::nullopt;
    }
    Mat m(d, d);
    if (!v.empty() && v.front().is_array()) {
      if (v.size() != static_cast<std::size_t>(d)) {
        fail(path, "must have " + std::to_string(d) + " rows");
        return std::nullopt;
      }
      for (int i = 0; i < d; ++i) {
        const auto row = numbers(v[static_cast<std::size_t>(i)], path);
        if (row.size() != static_cast<std::size_t>(d)) {
          fail(path, "every row must have " + std::to_string(d) + " entries");
          return std::nullopt;
        }
        for (int j = 0; j < d; ++j) m(i, j) = row[static_cast<std::size_t>(j)];
      }
      return m;
    }
    const auto flat = numbers(v, path);
    if (flat.size() != static_cast<std::size_t>(d * d)) {
      if (violations.empty() || violations.back().rfind(path, 0) != 0) {
        fail(path, "flat matrix must have " + std::to_string(d * d) + " entries");
      }
      return std::nullopt;
    }
    for (int i = 0; i < d; ++i) {
      for (int j = 0; j < d; ++j) m(i, j) = flat[static_cast<std::size_t>(i * d + j)];
    }
    return m;
  }

  std::vector<Vec> points(const json& v, const std::string& path, int d) {
    std::vector<Vec> out;
    if (!v.is_array()) {
      fail(path, "must be an array of points");
      return out;
    }
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (auto p = vector(v[i], path + "[" + std::to_string(i) + "]", d, false)) {
        out.push_back(*p);
      }
    }
    return out;
  }
};

json matrix_json(const Mat& m) {
  json rows = json::array();
  for (int i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

json vector_json(const Vec& v) {
  json out = json::array();
  for (int i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

json points_json(const std::vector<Vec>& pts) {
  json out = json::array();
  for (const auto& p : pts) out.push_back(vector_json(p));
  return out;
}

std::optional<DiffusionKernel> parse_diffusion(Reader& r, const json& item, const std::string& path,
                                               int d) {
  if (!item.is_object()) {
    r.fail(path, "must be an object");
    return std::nullopt;
  }
  const auto type = r.string(item, path, "type", true);
  if (!type) return std::nullopt;
  const Mat zero = Mat::Zero(d, d);

  if (*type == "mean_reverting") {
    r.object(item, path, {"type", "C", "C_columns", "D"});
    std::optional<Mat> offset = zero;
    if (item.contains("D")) offset = r.matrix(item["D"], path + ".D", d);
    const bool has_c = item.contains("C");
    const bool has_cols = item.contains("C_columns");
    if (has_c == has_cols) {
      r.fail(path, "exactly one of C and C_columns is required");
      return std::nullopt;
    }
    if (has_c) {
      const auto c = r.matrix(item["C"], path + ".C", d);
      if (!c || !offset) return std::nullopt;
      return DiffusionKernel::mean_reverting(*c, *offset);
    }
    const json& cols = item["C_columns"];
    if (!cols.is_array() || cols.size() != static_cast<std::size_t>(d)) {
      r.fail(path + ".C_columns", "must list " + std::to_string(d) + " matrices");
      return std::nullopt;
    }
    std::vector<Mat> gains;
    for (int p = 0; p < d; ++p) {
      auto c = r.matrix(cols[static_cast<std::size_t>(p)],
                        path + ".C_columns[" + std::to_string(p) + "]", d);
      if (!c) return std::nullopt;
      gains.push_back(*c);
    }
    if (!offset) return std::nullopt;
    return DiffusionKernel::mean_reverting_columns(std::move(gains), *offset);
  }
  if (*type == "frozen") {
    r.object(item, path, {"type", "D", "S", "w"});
    std::optional<Mat> offset = zero, loading = zero;
    std::optional<Vec> weights = Vec::Zero(d);
    if (item.contains("D")) offset = r.matrix(item["D"], path + ".D", d);
    if (item.contains("S")) loading = r.matrix(item["S"], path + ".S", d);
    if (item.contains("w")) weights = r.vector(item["w"], path + ".w", d, false);
    if (!offset || !loading || !weights) return std::nullopt;
    return DiffusionKernel::frozen(*offset, *loading, *weights);
  }
  r.fail(path + ".type", "must be \"mean_reverting\" or \"frozen\", got \"" + *type + "\"");
  return std::nullopt;
}

std::optional<InteractionKernel> parse_kernel(Reader& r, const json& k, const std::string& path,
                                              int d) {
  if (!r.object(k, path, {"type", "A", "beta", "scale"})) return std::nullopt;
  const auto type = r.string(k, path, "type", true);
  const json* a_json = r.field(k, path, "A", true);
  std::optional<Mat> a;
  if (a_json) a = r.matrix(*a_json, path + ".A", d);
  if (!type) return std::nullopt;
  if (*type == "linear") {
    if (k.contains("beta") || k.contains("scale")) {
      r.fail(path, "beta and scale apply to the saturating kernel only");
    }
    if (!a) return std::nullopt;
    return InteractionKernel::linear(*a);
  }
  if (*type == "saturating") {
    const double beta = r.number(k, path, "beta").value_or(0.0);
    const double scale = r.number(k, path, "scale").value_or(1.0);
    bool ok = true;
    if (beta < 0.0) {
      r.fail(path + ".beta", "must be >= 0");
      ok = false;
    }
    if (!(scale > 0.0)) {
      r.fail(path + ".scale", "must be > 0");
      ok = false;
    }
    if (!a || !ok) return std::nullopt;
    return InteractionKernel::saturating(*a, beta, scale);
  }
  r.fail(path + ".type", "must be \"linear\" or \"saturating\", got \"" + *type + "\"");
  return std::nullopt;
}

void collect_warnings(ExperimentConfig& cfg) {
  cfg.warnings.clear();
  const auto& model = cfg.model;
  const auto p_max = max_moment_order(model.alpha(), model.b_const());
  auto p_max_text = [&] { return p_max ? std::to_string(*p_max) : std::string("unbounded"); };

  if (!(model.alpha() > 0.0)) {
    std::ostringstream os;
    os << "model.alpha=" << model.alpha()
       << " is not positive; dissipativity diagnostics are skipped";
    cfg.warnings.push_back(os.str());
  } else {
    const auto report = dissipativity_report(model, cfg.q());
    if (!report.within_moment_range) {
      cfg.warnings.push_back("no moment order is admissible: p_max=" + p_max_text());
    }
    if (!report.q_margin_ok) {
      std::ostringstream os;
      os << "dissipativity margin 2 alpha - B^2 (4q - 1) = " << report.q_margin
         << " is not positive at q=" << cfg.q();
      cfg.warnings.push_back(os.str());
    }
    if (!report.dissipativity_ok) {
      std::ostringstream os;
      os << "declared alpha is violated by " << report.dissipativity_violation
         << " on sampled pairs";
      cfg.warnings.push_back(os.str());
    }
    if (!report.lipschitz_growth_ok || !report.derivative_bounds_ok) {
      cfg.warnings.push_back("coefficient bound spot checks failed");
    }
  }
  if (cfg.analysis.contraction) {
    const double p = cfg.analysis.contraction->p;
    if (p_max && p > static_cast<double>(*p_max)) {
      std::ostringstream os;
      os << "analysis.contraction.p=" << p << " is outside the admissible moment range (p_max="
         << *p_max << "); the contraction diagnostic is skipped";
      cfg.warnings.push_back(os.str());
    }
  }
}

ExperimentConfig parse_json(const json& root) {
  Reader r;
  if (!r.object(root, "$", {"name", "model", "density", "sim", "analysis"})) {
    throw ConfigValidationError(r.violations);
  }
  const std::string name = r.string(root, "$", "name").value_or("experiment");

  // Everything downstream needs d, so a bad dimension stops here.
  const json* model_j = r.field(root, "$", "model", true);
  if (!model_j || !r.object(*model_j, "model", {"dim", "kernel", "diffusion", "K", "alpha", "B"})) {
    throw ConfigValidationError(r.violations);
  }
  const auto dim = r.integer(*model_j, "model", "dim", true);
  if (dim && (*dim < 1 || *dim > kMaxDim)) {
    r.fail("model.dim", "must be in [1, " + std::to_string(kMaxDim) + "], got " +
                            std::to_string(*dim));
  }
  if (!dim || *dim < 1 || *dim > kMaxDim) throw ConfigValidationError(r.violations);
  const int d = static_cast<int>(*dim);

  // model
  std::optional<InteractionKernel> kernel;
  if (const json* k = r.field(*model_j, "model", "kernel", true)) {
    kernel = parse_kernel(r, *k, "model.kernel", d);
  }
  std::vector<DiffusionKernel> diffusion;
  bool diffusion_ok = true;
  if (model_j->contains("diffusion")) {
    const json& list = (*model_j)["diffusion"];
    if (!list.is_array()) {
      r.fail("model.diffusion", "must be an array");
      diffusion_ok = false;
    } else {
      for (std::size_t i = 0; i < list.size(); ++i) {
        auto dk = parse_diffusion(r, list[i], "model.diffusion[" + std::to_string(i) + "]", d);
        if (dk) {
          diffusion.push_back(std::move(*dk));
        } else {
          diffusion_ok = false;
        }
      }
    }
  }
  if (const auto k = r.integer(*model_j, "model", "K")) {
    if (diffusion_ok && *k != static_cast<long long>(diffusion.size()) - 1) {
      r.fail("model.K", "must equal the number of diffusion kernels minus one (" +
                            std::to_string(static_cast<long long>(diffusion.size()) - 1) + ")");
    }
  }
  const auto alpha = r.number(*model_j, "model", "alpha");
  const auto b_const = r.number(*model_j, "model", "B");
  if (b_const && *b_const < 0.0) r.fail("model.B", "must be >= 0");

  // density
  std::optional<DensityModel> density;
  if (const json* dj = r.field(root, "$", "density", true)) {
    if (r.object(*dj, "density", {"type", "lo", "hi"})) {
      const auto type = r.string(*dj, "density", "type", true);
      std::optional<Vec> lo, hi;
      if (const json* v = r.field(*dj, "density", "lo", true)) lo = r.vector(*v, "density.lo", d, true);
      if (const json* v = r.field(*dj, "density", "hi", true)) hi = r.vector(*v, "density.hi", d, true);
      bool box_ok = lo && hi;
      if (box_ok && !((hi->array() > lo->array()).all())) {
        r.fail("density", "hi must exceed lo on every axis");
        box_ok = false;
      }
      if (type && *type != "uniform" && *type != "bump") {
        r.fail("density.type", "must be \"uniform\" or \"bump\", got \"" + *type + "\"");
      } else if (type && box_ok) {
        density = *type == "uniform" ? DensityModel::uniform(*lo, *hi) : DensityModel::bump(*lo, *hi);
      }
    }
  }

  // sim
  SimConfig sim;
  int grid_per_axis = d == 1 ? 64 : d == 2 ? 32 : 16;
  if (const json* sj = r.field(root, "$", "sim", true)) {
    if (r.object(*sj, "sim", {"dt", "T", "N", "replicas", "seed", "save_every", "G",
                              "noise_substeps", "record_particles", "initial_particles"})) {
      sim.dt = r.number(*sj, "sim", "dt", true).value_or(sim.dt);
      sim.horizon = r.number(*sj, "sim", "T", true).value_or(sim.horizon);
      auto int_field = [&](const char* key, int fallback) {
        const auto v = r.integer(*sj, "sim", key);
        if (v && (*v < 1 || *v > 1'000'000'000)) {
          r.fail(std::string("sim.") + key, "must be in [1, 1e9]");
          return fallback;
        }
        return v ? static_cast<int>(*v) : fallback;
      };
      sim.particles = int_field("N", sim.particles);
      sim.replicas = int_field("replicas", sim.replicas);
      sim.save_every = int_field("save_every", sim.save_every);
      sim.noise_substeps = int_field("noise_substeps", sim.noise_substeps);
      grid_per_axis = int_field("G", grid_per_axis);
      sim.seed = r.unsigned_integer(*sj, "sim", "seed").value_or(sim.seed);
      sim.record_particles = r.boolean(*sj, "sim", "record_particles").value_or(false);
      if (sj->contains("initial_particles")) {
        auto pts = r.points((*sj)["initial_particles"], "sim.initial_particles", d);
        if (pts.empty()) r.fail("sim.initial_particles", "must be non-empty");
        sim.particles = static_cast<int>(pts.size());
        sim.initial_particles = std::move(pts);
      }
      if (!(sim.dt > 0.0)) r.fail("sim.dt", "must be > 0, got " + std::to_string(sim.dt));
      if (!(sim.horizon > 0.0)) r.fail("sim.T", "must be > 0");
      if (sim.dt > 0.0 && sim.horizon >= sim.dt) {
        if (sim.steps() % sim.save_every != 0) {
          r.fail("sim.save_every", "must divide the step count " + std::to_string(sim.steps()));
        }
      } else if (sim.dt > 0.0 && sim.horizon > 0.0) {
        r.fail("sim.T", "must be >= sim.dt");
      }
      const double nodes = std::pow(static_cast<double>(grid_per_axis), d);
      if (nodes > static_cast<double>(kMaxTrackedPoints)) {
        r.fail("sim.G", "G^d exceeds " + std::to_string(kMaxTrackedPoints) + " tracked points");
      }
    }
  }

  // analysis
  AnalysisConfig analysis;
  if (root.contains("analysis")) {
    const json& aj = root["analysis"];
    if (r.object(aj, "analysis", {"p_grid", "fit_window", "eps_mono", "burn_in", "probes", "q",
                                  "contraction"})) {
      if (aj.contains("p_grid")) analysis.p_grid = r.numbers(aj["p_grid"], "analysis.p_grid");
      analysis.fit_window = r.number(aj, "analysis", "fit_window").value_or(analysis.fit_window);
      analysis.eps_mono = r.number(aj, "analysis", "eps_mono").value_or(analysis.eps_mono);
      analysis.burn_in = r.number(aj, "analysis", "burn_in").value_or(analysis.burn_in);
      analysis.q = r.number(aj, "analysis", "q");
      if (aj.contains("probes")) analysis.probes = r.points(aj["probes"], "analysis.probes", d);
      if (aj.contains("contraction")) {
        const json& cj = aj["contraction"];
        if (r.object(cj, "analysis.contraction", {"p", "u", "v", "replicas"})) {
          ContractionConfig c;
          c.p = r.number(cj, "analysis.contraction", "p").value_or(1.0);
          std::optional<Vec> u, v;
          if (const json* x = r.field(cj, "analysis.contraction", "u", true)) {
            u = r.vector(*x, "analysis.contraction.u", d, false);
          }
          if (const json* x = r.field(cj, "analysis.contraction", "v", true)) {
            v = r.vector(*x, "analysis.contraction.v", d, false);
          }
          if (const auto reps = r.integer(cj, "analysis.contraction", "replicas")) {
            if (*reps < 1) r.fail("analysis.contraction.replicas", "must be >= 1");
            c.replicas = static_cast<int>(*reps);
          }
          if (!(c.p >= 1.0)) r.fail("analysis.contraction.p", "must be >= 1");
          if (u && v) {
            c.u = *u;
            c.v = *v;
            analysis.contraction = c;
          }
        }
      }
    }
  }
  if (analysis.p_grid.size() < 3) r.fail("analysis.p_grid", "needs at least 3 values");
  for (std::size_t i = 0; i < analysis.p_grid.size(); ++i) {
    if (!(analysis.p_grid[i] >= 1.0)) {
      r.fail("analysis.p_grid", "values must be >= 1");
      break;
    }
    if (i > 0 && !(analysis.p_grid[i] > analysis.p_grid[i - 1])) {
      r.fail("analysis.p_grid", "must be strictly increasing");
      break;
    }
  }
  if (!(analysis.fit_window > 0.0 && analysis.fit_window <= 1.0)) {
    r.fail("analysis.fit_window", "must be in (0, 1]");
  } else if (sim.dt > 0.0 && sim.horizon >= sim.dt && sim.save_every > 0) {
    const double snaps = static_cast<double>(sim.steps() / sim.save_every) * analysis.fit_window;
    if (snaps + 1.0 < 10.0) {
      r.fail("analysis.fit_window", "the fit window holds fewer than 10 snapshots; lower "
                                    "sim.save_every or widen the window");
    }
  }
  if (!(analysis.eps_mono >= 0.0)) r.fail("analysis.eps_mono", "must be >= 0");
  if (!(analysis.burn_in >= 0.0)) r.fail("analysis.burn_in", "must be >= 0");
  if (analysis.burn_in > sim.horizon) r.fail("analysis.burn_in", "must not exceed sim.T");
  if (analysis.q && !(*analysis.q > 0.0)) r.fail("analysis.q", "must be > 0");

  std::optional<ModelSpec> model;
  if (kernel && diffusion_ok) {
    try {
      model.emplace(d, *kernel, DiffusionFamily(std::move(diffusion)), alpha, b_const);
    } catch (const ConfigError& e) {
      r.fail("model", e.what());
    }
  }
  if (model && sim.dt > 0.0) {
    const double stiffness = sim.dt * model->kernel().derivative_bound();
    if (stiffness > 0.5) {
      std::ostringstream os;
      os << "dt * sup||D phi|| = " << stiffness << " exceeds the stability cap 0.5";
      r.fail("sim.dt", os.str());
    }
  }

  if (!r.violations.empty() || !model || !density) throw ConfigValidationError(r.violations);

  ExperimentConfig cfg{name, std::move(*model), std::move(*density), std::move(sim),
                       grid_per_axis, std::move(analysis), {}};
  cfg.sim.validate(cfg.model);
  collect_warnings(cfg);
  return cfg;
}

}  // namespace

ConfigValidationError::ConfigValidationError(std::vector<std::string> violations)
    : ConfigError([&] {
        std::string msg = "invalid config:";
        for (const auto& v : violations) msg += "\n  " + v;
        return msg;
      }()),
      violations_(std::move(violations)) {}

std::vector<Vec> ExperimentConfig::tracked_points() const {
  std::vector<Vec> pts = grid().nodes;
  pts.insert(pts.end(), analysis.probes.begin(), analysis.probes.end());
  return pts;
}

QuadratureGrid ExperimentConfig::grid() const {
  return QuadratureGrid::midpoint(density.lo(), density.hi(), grid_per_axis);
}

ExperimentConfig parse_config_text(const std::string& text, const std::string& source) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigValidationError({source + ": not valid JSON (" + e.what() + ")"});
  }
  return parse_json(root);
}

ExperimentConfig parse_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigValidationError({path.string() + ": cannot be read"});
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str(), path.string());
}

void apply_overrides(ExperimentConfig& config, std::optional<std::uint64_t> seed,
                     std::optional<int> replicas) {
  if (seed) config.sim.seed = *seed;
  if (replicas) {
    if (*replicas < 1) throw ConfigValidationError({"--replicas: must be >= 1"});
    config.sim.replicas = *replicas;
  }
  config.sim.validate(config.model);
  collect_warnings(config);
}

std::string config_to_json(const ExperimentConfig& cfg, int indent) {
  const auto& m = cfg.model;
  json kernel;
  std::visit(
      [&](const auto& k) {
        using K = std::decay_t<decltype(k)>;
        kernel["A"] = matrix_json(k.a);
        if constexpr (std::is_same_v<K, LinearKernel>) {
          kernel["type"] = "linear";
        } else {
          kernel["type"] = "saturating";
          kernel["beta"] = k.beta;
          kernel["scale"] = k.scale;
        }
      },
      m.kernel().variant());

  json diffusion = json::array();
  for (const auto& dk : m.diffusion().kernels()) {
    json item;
    std::visit(
        [&](const auto& k) {
          using K = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<K, MeanRevertingDiffusion>) {
            item["type"] = "mean_reverting";
            json cols = json::array();
            for (const auto& c : k.column_gains) cols.push_back(matrix_json(c));
            item["C_columns"] = cols;
            item["D"] = matrix_json(k.offset);
          } else {
            item["type"] = "frozen";
            item["D"] = matrix_json(k.offset);
            item["S"] = matrix_json(k.loading);
            item["w"] = vector_json(k.weights);
          }
        },
        dk.variant());
    diffusion.push_back(item);
  }

  json model = {{"dim", m.dim()},
                {"kernel", kernel},
                {"diffusion", diffusion},
                {"K", m.diffusion().truncation()},
                {"alpha", m.alpha()},
                {"B", m.b_const()}};

  const std::string dname = cfg.density.name();
  json density = {{"type", dname}, {"lo", vector_json(cfg.density.lo())},
                  {"hi", vector_json(cfg.density.hi())}};

  json sim = {{"dt", cfg.sim.dt},
              {"T", cfg.sim.horizon},
              {"N", cfg.sim.particles},
              {"replicas", cfg.sim.replicas},
              {"seed", cfg.sim.seed},
              {"save_every", cfg.sim.save_every},
              {"G", cfg.grid_per_axis},
              {"noise_substeps", cfg.sim.noise_substeps},
              {"record_particles", cfg.sim.record_particles}};
  if (cfg.sim.initial_particles) sim["initial_particles"] = points_json(*cfg.sim.initial_particles);

  const auto& a = cfg.analysis;
  json analysis = {{"p_grid", a.p_grid},
                   {"fit_window", a.fit_window},
                   {"eps_mono", a.eps_mono},
                   {"burn_in", a.burn_in},
                   {"probes", points_json(a.probes)},
                   {"q", cfg.q()}};
  if (a.contraction) {
    json c = {{"p", a.contraction->p},
              {"u", vector_json(a.contraction->u)},
              {"v", vector_json(a.contraction->v)}};
    if (a.contraction->replicas) c["replicas"] = *a.contraction->replicas;
    analysis["contraction"] = c;
  }

  json root = {{"name", cfg.name}, {"model", model},   {"density", density},
               {"sim", sim},       {"analysis", analysis}};
  return root.dump(indent);
}

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace sdeflow
