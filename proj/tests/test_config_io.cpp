#include "sdeflow/config.hpp"
#include "sdeflow/trajectory_io.hpp"

#include "test_util.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace sdeflow;
using testutil::vec;

namespace fs = std::filesystem;

namespace {

const char* kMinimal = R"({
  "model": {"dim": 1, "kernel": {"type": "linear", "A": 1}},
  "density": {"type": "uniform", "lo": [0], "hi": [1]},
  "sim": {"dt": 0.01, "T": 2}
})";

std::string with_sim(const std::string& sim) {
  return R"({"model": {"dim": 1, "kernel": {"type": "linear", "A": 1}},
            "density": {"type": "uniform", "lo": [0], "hi": [1]},
            "sim": )" + sim + "}";
}

std::vector<std::string> violations_of(const std::string& text) {
  try {
    parse_config_text(text);
  } catch (const ConfigValidationError& e) {
    return e.violations();
  }
  return {};
}

bool mentions(const std::vector<std::string>& vs, const std::string& needle) {
  for (const auto& v : vs) {
    if (v.find(needle) != std::string::npos) return true;
  }
  return false;
}

fs::path temp_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("sdeflow_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST_SUITE("config_io") {

TEST_CASE("minimal config gets defaults") {
  const auto cfg = parse_config_text(kMinimal);
  CHECK(cfg.name == "experiment");
  CHECK(cfg.model.dim() == 1);
  CHECK(cfg.model.diffusion().empty());
  CHECK(cfg.model.alpha() == 1.0);
  CHECK(cfg.model.b_const() == 0.0);
  CHECK(cfg.grid_per_axis == 64);
  CHECK(cfg.sim.replicas == 1);
  CHECK(cfg.sim.save_every == 10);
  CHECK(cfg.analysis.p_grid == std::vector<double>{1.5, 2.0, 3.0, 4.0});
  CHECK(cfg.analysis.fit_window == 0.5);
  CHECK(cfg.analysis.eps_mono == 1e-3);
  CHECK(cfg.q() == 2.0);
  CHECK(cfg.warnings.empty());
  CHECK(cfg.tracked_points().size() == 64);
}

TEST_CASE("violations name the field and the constraint") {
  const auto vs = violations_of(with_sim(R"({"dt": 0, "T": 2})"));
  REQUIRE_FALSE(vs.empty());
  CHECK(mentions(vs, "sim.dt: must be > 0"));
  CHECK_THROWS_AS(parse_config_text(with_sim(R"({"dt": 0, "T": 2})")), ConfigError);
}

TEST_CASE("every violation is reported at once") {
  const auto vs = violations_of(R"({
    "model": {"dim": 1, "kernel": {"type": "linear", "A": 1}, "colour": "red"},
    "density": {"type": "cone", "lo": [0], "hi": [1]},
    "sim": {"dt": -1, "T": 1, "N": 0}
  })");
  CHECK(mentions(vs, "model.colour: unknown key"));
  CHECK(mentions(vs, "density.type"));
  CHECK(mentions(vs, "sim.dt"));
  CHECK(mentions(vs, "sim.N"));
}

TEST_CASE("strict keys at every level") {
  CHECK(mentions(violations_of(R"({"model": {"dim": 1, "kernel": {"type": "linear", "A": 1}},
      "density": {"type": "uniform", "lo": [0], "hi": [1]}, "sim": {"dt": 0.01, "T": 2},
      "extra": 1})"),
                 "$.extra: unknown key"));
  CHECK(mentions(violations_of(with_sim(R"({"dt": 0.01, "T": 2, "seeds": 3})")),
                 "sim.seeds: unknown key"));
  CHECK(mentions(violations_of(R"({"model": {"dim": 5, "kernel": {"type": "linear", "A": 1}},
      "density": {"type": "uniform", "lo": [0], "hi": [1]}, "sim": {"dt": 0.01, "T": 2}})"),
                 "model.dim"));
}

TEST_CASE("well-posedness warnings") {
  const auto cfg = parse_config_text(R"({
    "model": {"dim": 1, "kernel": {"type": "linear", "A": 1}, "alpha": 1, "B": 2,
              "diffusion": [{"type": "mean_reverting", "C": 0.3}]},
    "density": {"type": "uniform", "lo": [0], "hi": [1]},
    "sim": {"dt": 0.01, "T": 2},
    "analysis": {"contraction": {"p": 2, "u": [0], "v": [1]}}
  })");
  CHECK(mentions(cfg.warnings, "analysis.contraction.p=2 is outside the admissible moment range (p_max=0)"));
  CHECK(mentions(cfg.warnings, "p_max=0"));
}

TEST_CASE("matrix forms") {
  auto a_of = [](const std::string& a) {
    const auto cfg = parse_config_text(
        R"({"model": {"dim": 2, "kernel": {"type": "linear", "A": )" + a +
        R"(}}, "density": {"type": "bump", "lo": [0, 0], "hi": [1, 1]},
            "sim": {"dt": 0.01, "T": 2}})");
    return std::get<LinearKernel>(cfg.model.kernel().variant()).a;
  };
  CHECK(a_of("2") == 2.0 * Mat::Identity(2, 2));
  const Mat want = testutil::mat({{1, 0.2}, {0, 3}});
  CHECK(a_of("[[1, 0.2], [0, 3]]") == want);
  CHECK(a_of("[1, 0.2, 0, 3]") == want);
  CHECK_THROWS_AS(a_of("[1, 2, 3]"), ConfigValidationError);
  CHECK_THROWS_AS(a_of("[[1, 2], [3]]"), ConfigValidationError);
}

TEST_CASE("diffusion blocks") {
  const auto cfg = parse_config_text(R"({
    "model": {"dim": 2, "kernel": {"type": "saturating", "A": 1, "beta": 0.5, "scale": 2},
              "K": 1,
              "diffusion": [
                {"type": "mean_reverting", "C_columns": [[[0.3, 0], [0, 0]], [[0, 0], [0, 0.3]]], "D": 0.1},
                {"type": "frozen", "D": 0, "S": 0.2, "w": [1, -1]}]},
    "density": {"type": "bump", "lo": [0, 0], "hi": [1, 1]},
    "sim": {"dt": 0.01, "T": 2}
  })");
  CHECK(cfg.model.diffusion().size() == 2);
  CHECK(cfg.model.diffusion()[1].name() == "frozen");
  CHECK(cfg.grid_per_axis == 32);

  CHECK(mentions(violations_of(R"({
    "model": {"dim": 1, "kernel": {"type": "linear", "A": 1}, "K": 3,
              "diffusion": [{"type": "mean_reverting", "C": 0.3}]},
    "density": {"type": "uniform", "lo": [0], "hi": [1]}, "sim": {"dt": 0.01, "T": 2}})"),
                 "model.K"));
  CHECK(mentions(violations_of(R"({
    "model": {"dim": 1, "kernel": {"type": "linear", "A": 1},
              "diffusion": [{"type": "mean_reverting", "C": 0.3, "C_columns": [0.3]}]},
    "density": {"type": "uniform", "lo": [0], "hi": [1]}, "sim": {"dt": 0.01, "T": 2}})"),
                 "exactly one of C and C_columns"));
}

TEST_CASE("analysis constraints") {
  auto analysis = [](const std::string& a) {
    return violations_of(R"({"model": {"dim": 1, "kernel": {"type": "linear", "A": 1}},
      "density": {"type": "uniform", "lo": [0], "hi": [1]},
      "sim": {"dt": 0.01, "T": 1, "save_every": 10}, "analysis": )" + a + "}");
  };
  CHECK(mentions(analysis(R"({"p_grid": [2, 1.5, 3]})"), "strictly increasing"));
  CHECK(mentions(analysis(R"({"p_grid": [1.5, 2]})"), "at least 3"));
  CHECK(mentions(analysis(R"({"fit_window": 0.5})"), "fewer than 10 snapshots"));
  CHECK(analysis(R"({"fit_window": 1.0})").empty());
}

TEST_CASE("stability cap") {
  CHECK(mentions(violations_of(with_sim(R"({"dt": 0.6, "T": 6, "save_every": 1})")),
                 "stability cap"));
}

TEST_CASE("canonical JSON round-trips") {
  for (const char* recipe : {"contraction.json", "nullmodel.json", "linear_noise.json",
                             "linear_2d.json", "saturating.json"}) {
    const auto cfg = parse_config(fs::path(SDEFLOW_RECIPE_DIR) / recipe);
    const std::string once = config_to_json(cfg);
    const auto again = parse_config_text(once);
    CHECK(config_to_json(again) == once);
    CHECK(fnv1a_hex(once) == fnv1a_hex(config_to_json(again)));
  }
}

TEST_CASE("overrides") {
  auto cfg = parse_config_text(kMinimal);
  apply_overrides(cfg, 77, 5);
  CHECK(cfg.sim.seed == 77);
  CHECK(cfg.sim.replicas == 5);
  CHECK_THROWS_AS(apply_overrides(cfg, std::nullopt, 0), ConfigError);
}

TEST_CASE("fnv1a") {
  CHECK(fnv1a_hex("") == "cbf29ce484222325");
  CHECK(fnv1a_hex("a") == "af63dc4c8601ec8c");
}

TEST_CASE("doubles round-trip through text") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (int i = 0; i < 1000; ++i) {
    const double x = u(rng) * std::pow(10.0, static_cast<int>(rng() % 40) - 20);
    CHECK(parse_double(format_double(x)) == x);
  }
  CHECK(format_double(0.5) == "0.5");
  CHECK(format_double(1.0) == "1");
  CHECK_THROWS_AS(parse_double("1.5x"), ConfigError);
  CHECK_THROWS_AS(parse_double(""), ConfigError);
}

TEST_CASE("trajectory CSV round-trip is bit exact") {
  const auto cfg = parse_config(fs::path(SDEFLOW_RECIPE_DIR) / "linear_2d.json");
  const auto tracked = cfg.tracked_points();
  const auto traj = run(cfg.model, cfg.density, cfg.sim, tracked, 1);
  const auto dir = temp_dir("csv");
  const auto path = dir / "traj.csv";
  write_trajectory_csv(path, traj);

  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  CHECK(header == "replica,t,point_id,x_1,x_2,logdet_bv,logdet_mart");

  const auto back = read_trajectory_csv(path, 2, cfg.sim.dt, cfg.sim.save_every, tracked);
  CHECK_FALSE(back.has_jacobians);
  REQUIRE(back.snapshots.size() == traj.snapshots.size());
  for (std::size_t s = 0; s < traj.snapshots.size(); ++s) {
    CHECK(back.snapshots[s].t == traj.snapshots[s].t);
    for (std::size_t i = 0; i < tracked.size(); ++i) {
      const auto& a = traj.snapshots[s].points[i];
      const auto& b = back.snapshots[s].points[i];
      CHECK(a.x == b.x);
      CHECK(a.bv == b.bv);
      CHECK(a.mart == b.mart);
      CHECK(a.u0 == b.u0);
    }
  }

  std::ostringstream again;
  write_trajectory_csv(again, back);
  std::ifstream orig(path);
  std::stringstream orig_text;
  orig_text << orig.rdbuf();
  CHECK(again.str() == orig_text.str());
  fs::remove_all(dir);
}

TEST_CASE("point CSV") {
  const auto dir = temp_dir("points");
  {
    std::ofstream out(dir / "p.csv");
    out << "x,y\n0,1\n2.5,-3\n";
  }
  const auto pts = read_point_csv(dir / "p.csv");
  REQUIRE(pts.size() == 2);
  CHECK(pts[1] == vec({2.5, -3}));
  {
    std::ofstream out(dir / "q.csv");
    out << "0,1\n2\n";
  }
  CHECK_THROWS_AS(read_point_csv(dir / "q.csv"), ConfigError);
  fs::remove_all(dir);
}

}  // TEST_SUITE
