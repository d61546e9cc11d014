#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "chemofront/config.hpp"
#include "chemofront/harness.hpp"

using namespace chemofront;
namespace fs = std::filesystem;

namespace {

const char* kSmall = R"({
  "name": "small",
  "params": {"chi": 0.1, "a": 1.0, "b": 1.0, "lambda": 1.0, "mu": 1.0},
  "init": {"family": "compact_bump", "width": 5.0},
  "grid": {"x_left": -20.0, "x_right": 40.0, "h": 0.2},
  "ctl": {"expand_margin": 20.0, "expand_chunk": 200},
  "t_end": 6.0,
  "dt_obs": 0.5,
  "omegas": [0.5, 0.2]
})";

const char* kSlow = R"({
  "name": "slow",
  "params": {"chi": 0.1, "a": 1.0, "b": 1.0, "lambda": 1.0, "mu": 1.0},
  "init": {"family": "algebraic", "p": 2.0},
  "grid": {"x_left": -20.0, "x_right": 60.0, "h": 0.25},
  "ctl": {"expand_margin": 30.0, "expand_chunk": 400},
  "t_end": 5.0,
  "dt_obs": 0.25,
  "bounds": {"epsilon": 0.4}
})";

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("chemofront_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string config_error(const std::string& text) {
  try {
    (void)parse_config(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

json small_with(const std::function<void(json&)>& edit) {
  auto j = json::parse(kSmall);
  edit(j);
  return j;
}

}  // namespace

TEST(Config, MinimalConfigGetsDefaults) {
  const auto c = parse_config(R"({"params": {"chi": 0.1, "a": 3.0, "b": 2.0},
                                  "init": {"family": "algebraic", "p": 2}})");
  EXPECT_DOUBLE_EQ(c.plateau, 1.5);
  EXPECT_DOUBLE_EQ(c.xi0, 1.0);
  EXPECT_DOUBLE_EQ(c.ctl.dt_max, c.grid.h * c.grid.h);
  EXPECT_DOUBLE_EQ(c.watch_level, 1.5e-3);
  ASSERT_EQ(c.profile_times.size(), 5u);
  EXPECT_DOUBLE_EQ(c.profile_times.back(), c.t_end);
  EXPECT_EQ(c.grid.n, 2501u);
  EXPECT_TRUE(c.warnings.empty());
  EXPECT_TRUE(c.checks.empty());
}

TEST(Config, LevelAtEquilibriumIsRejectedByPath) {
  const auto msg = config_error(small_with([](json& j) { j["omegas"] = {0.5, 1.0}; }).dump());
  EXPECT_NE(msg.find("omegas[1]"), std::string::npos) << msg;
  const auto first = config_error(small_with([](json& j) { j["omegas"] = {1.0}; }).dump());
  EXPECT_NE(first.find("omegas[0]"), std::string::npos) << first;
}

TEST(Config, CollectsEveryProblem) {
  const auto msg = config_error(small_with([](json& j) {
                                  j["params"]["lambda"] = -1.0;
                                  j["grid"]["colour"] = "red";
                                  j["checks"] = {{{"kind", "containment"}}};
                                }).dump());
  EXPECT_NE(msg.find("params"), std::string::npos) << msg;
  EXPECT_NE(msg.find("grid.colour"), std::string::npos) << msg;
  EXPECT_NE(msg.find("checks[0]"), std::string::npos) << msg;
  EXPECT_NE(config_error(small_with([](json& j) { j["init"]["family"] = "gaussian"; }).dump())
                .find("unknown family"),
            std::string::npos);
}

TEST(Config, WeakDampingWarnsAndSkipsTheoremChecks) {
  auto j = json::parse(kSlow);
  j["params"]["b"] = 0.2;  // b = 2 chi mu
  j["omegas"] = {2.0};
  j["checks"] = {{{"kind", "containment"}}, {{"kind", "comparison"}, {"pairs", 2}}};
  const auto c = config_from_json(j);
  ASSERT_EQ(c.warnings.size(), 1u);
  EXPECT_EQ(c.warnings[0].rfind("strong_damping=false", 0), 0u);
  EXPECT_FALSE(c.theorem_checks_enabled());
  const auto out = scratch("weak");
  EXPECT_EQ(cmd_verify(c, out, std::cout), kExitPass);
  const auto summary = json::parse(slurp(out / "summary.json"));
  EXPECT_EQ(summary["checks"][0]["status"], "skipped");
  EXPECT_EQ(summary["checks"][1]["status"], "pass");
  EXPECT_EQ(summary["warnings"].size(), 1u);
}

TEST(Config, ResolvedConfigRoundTrips) {
  for (const char* text : {kSmall, kSlow}) {
    const auto c = parse_config(text);
    const auto once = to_json(c).dump();
    const auto twice = to_json(parse_config(once)).dump();
    EXPECT_EQ(once, twice);
  }
}

TEST(Config, ParseErrorReportsLineAndColumn) {
  const auto msg = config_error("{\n  \"name\": \"x\",\n  \"t_end\": ,\n}");
  EXPECT_NE(msg.find("line 3"), std::string::npos) << msg;
  EXPECT_NE(msg.find("column"), std::string::npos) << msg;
}

TEST(Config, OverridesRederiveDefaults) {
  auto j = apply_overrides(json::parse(kSmall), {0.1, 3.0, std::string("elsewhere")});
  const auto c = config_from_json(j);
  EXPECT_DOUBLE_EQ(c.grid.h, 0.1);
  EXPECT_DOUBLE_EQ(c.ctl.dt_max, 0.01);
  EXPECT_NEAR(c.grid.window().x_right(), 40.0, 1e-9);
  EXPECT_DOUBLE_EQ(c.profile_times.back(), 3.0);
  EXPECT_EQ(c.output_dir, "elsewhere");
}

TEST(Commands, RunWritesArtifacts) {
  const auto out = scratch("run");
  ASSERT_EQ(cmd_run(parse_config(kSmall), out, std::cout), kExitPass);
  for (const char* f : {"config.resolved.json", "levelsets.csv", "fits.json"})
    EXPECT_TRUE(fs::exists(out / f)) << f;
  std::size_t profiles = 0, svgs = 0;
  for (const auto& e : fs::directory_iterator(out / "profiles")) {
    ++profiles;
    EXPECT_EQ(slurp(e.path()).rfind("x,u,v,vx\n", 0), 0u);
  }
  EXPECT_EQ(profiles, 5u);
  for (const auto& e : fs::recursive_directory_iterator(out)) {
    if (e.path().extension() != ".svg") continue;
    ++svgs;
    auto csv = e.path();
    csv.replace_extension(".csv");
    EXPECT_TRUE(fs::exists(csv)) << csv;
  }
  EXPECT_EQ(svgs, 3u);
  const auto levels = slurp(out / "levelsets.csv");
  EXPECT_EQ(levels.rfind("t,omega,min_x,max_x,count,avg_speed\n", 0), 0u);
}

TEST(Commands, EquilibriumStartHasNoLevelCrossings) {
  const auto out = scratch("equilibrium");
  auto j = json::parse(kSmall);
  j["start"] = "equilibrium";
  ASSERT_EQ(cmd_run(config_from_json(j), out, std::cout), kExitPass);
  EXPECT_EQ(slurp(out / "levelsets.csv"), "t,omega,min_x,max_x,count,avg_speed\n");
}

TEST(Commands, ExitCodes) {
  auto failing = json::parse(kSmall);
  failing["checks"] = {{{"kind", "asymptotic"}, {"law", "speed"}, {"edge", "max"},
                        {"window", {2.0, 6.0}}, {"expected", 10.0}}};
  EXPECT_EQ(cmd_verify(config_from_json(failing), scratch("fail"), std::cout), kExitCheckFailure);

  auto capped = json::parse(kSmall);
  capped["ctl"]["node_cap"] = 320;
  capped["ctl"]["expand_margin"] = 50.0;
  EXPECT_EQ(cmd_run(config_from_json(capped), scratch("capped"), std::cout), kExitNumerical);

  const auto dir = scratch("badsweep");
  std::ofstream(dir / "broken.json") << "{ \"params\": ";
  std::ostringstream log;
  EXPECT_EQ(cmd_sweep(dir, dir / "out", 1, log), kExitConfig);
  EXPECT_NE(log.str().find("config error"), std::string::npos);
}

TEST(Commands, RunsAreDeterministic) {
  const auto cfg = parse_config(kSlow);
  const auto a = scratch("det_a"), b = scratch("det_b");
  ASSERT_EQ(cmd_run(cfg, a, std::cout), kExitPass);
  ASSERT_EQ(cmd_run(cfg, b, std::cout), kExitPass);
  EXPECT_EQ(slurp(a / "levelsets.csv"), slurp(b / "levelsets.csv"));
  EXPECT_EQ(slurp(a / "fits.json"), slurp(b / "fits.json"));
  for (const auto& e : fs::directory_iterator(a / "profiles"))
    EXPECT_EQ(slurp(e.path()), slurp(b / "profiles" / e.path().filename())) << e.path();
}

TEST(Commands, ParallelSweepMatchesSerial) {
  const auto dir = scratch("sweep_in");
  std::ofstream(dir / "a_small.json") << kSmall;
  std::ofstream(dir / "b_slow.json") << kSlow;
  auto eq = json::parse(kSmall);
  eq["start"] = "equilibrium";
  std::ofstream(dir / "c_equilibrium.json") << eq.dump();
  const auto serial = scratch("sweep_serial"), parallel = scratch("sweep_parallel");
  std::ostringstream log1, log2;
  std::vector<SweepEntry> e1, e2;
  EXPECT_EQ(cmd_sweep(dir, serial, 1, log1, {}, &e1), kExitPass);
  EXPECT_EQ(cmd_sweep(dir, parallel, 3, log2, {}, &e2), kExitPass);
  ASSERT_EQ(e1.size(), 3u);
  ASSERT_EQ(e2.size(), 3u);
  for (const char* name : {"a_small", "b_slow", "c_equilibrium"}) {
    EXPECT_EQ(slurp(serial / name / "levelsets.csv"), slurp(parallel / name / "levelsets.csv"));
    EXPECT_EQ(slurp(serial / name / "fits.json"), slurp(parallel / name / "fits.json"));
  }
  EXPECT_EQ(slurp(serial / "sweep_summary.json"), slurp(parallel / "sweep_summary.json"));
}
