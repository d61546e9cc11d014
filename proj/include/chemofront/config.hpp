#pragma once

/// \file
/// Experiment configuration: JSON schema, defaults, validation with field paths, and the
/// inverse serializer (load -> dump -> load is the identity).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "chemofront/errors.hpp"
#include "chemofront/evolution.hpp"
#include "chemofront/levelset.hpp"
#include "chemofront/model.hpp"

namespace chemofront {

using json = nlohmann::json;

struct GridSeed {
  double x_left = -50.0;
  double h = 0.1;
  std::size_t n = 2501;

  [[nodiscard]] GridWindow window() const { return {x_left, h, n}; }
};

struct BoundsConfig {
  double epsilon = 0.4;
  double gamma1 = 1.0;
  double gamma2 = 1.0;
};

struct CheckSpec {
  enum class Kind { Containment, Asymptotic, Acceleration, Residuals, Comparison, Stabilization };
  Kind kind = Kind::Asymptotic;
  std::optional<double> omega;  ///< defaults to the first configured level

  // asymptotic
  FitLaw law = FitLaw::power(2.0);
  FrontEdge edge = FrontEdge::Min;
  std::optional<double> expected;
  double tolerance = 0.15;  ///< relative
  // asymptotic, acceleration
  std::optional<std::pair<double, double>> window;
  // acceleration
  double min_ratio = 2.0;
  // containment
  std::optional<double> max_T;
  // stabilization: sup |u - a/b| over [x_left, x_left + width] at t_end below bound
  double width = 50.0;
  double bound = 0.01;
  // residuals
  std::vector<double> times{0.0, 5.0};
  double residual_h = 0.05;
  double extent = 3000.0;
  double sandwich_horizon = 20.0;
  // comparison
  double alpha = 0.4;
  std::size_t pairs = 50;
  double horizon = 1.0;
  std::uint64_t seed = 1;

  /// Needs b > 2 chi mu to be meaningful.
  [[nodiscard]] bool needs_strong_damping() const {
    return kind == Kind::Containment || kind == Kind::Acceleration || kind == Kind::Residuals ||
           kind == Kind::Stabilization;
  }
};

[[nodiscard]] inline const char* check_name(CheckSpec::Kind k) {
  switch (k) {
    case CheckSpec::Kind::Containment: return "containment";
    case CheckSpec::Kind::Asymptotic: return "asymptotic";
    case CheckSpec::Kind::Acceleration: return "acceleration";
    case CheckSpec::Kind::Residuals: return "residuals";
    case CheckSpec::Kind::Comparison: return "comparison";
    case CheckSpec::Kind::Stabilization: return "stabilization";
  }
  return "?";
}

enum class StartKind { InitialData, Equilibrium };

struct ExperimentConfig {
  std::string name;
  ModelParams params;
  TailFamily family = family::CompactBump{5.0};
  double plateau = 1.0;
  double xi0 = 1.0;
  double glue_width = 0.5;
  StartKind start = StartKind::InitialData;
  GridSeed grid;
  StepControl ctl;
  double t_end = 40.0;
  double dt_obs = 0.5;
  std::vector<double> omegas{0.5};
  /// Lowest level whose rightmost position drives domain growth.
  double watch_level = 1e-3;
  /// Times at which full profiles are written.
  std::vector<double> profile_times;
  std::optional<BoundsConfig> bounds;
  std::vector<CheckSpec> checks;
  std::string output_dir = "out";

  /// Not serialized.
  std::vector<std::string> warnings;

  [[nodiscard]] InitialData initial_data() const {
    return InitialData(family, plateau, xi0, glue_width);
  }
  [[nodiscard]] bool theorem_checks_enabled() const { return params.strong_damping(); }
};

// ---------------------------------------------------------------------------------------------
// Serialization

namespace detail {

inline json family_json(const TailFamily& f) {
  return std::visit(
      [](const auto& v) -> json {
        using F = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<F, family::ExpOverLog>)
          return {{"family", "exp_over_log"}, {"p", v.p}, {"C", v.C}};
        else if constexpr (std::is_same_v<F, family::StretchedExp>)
          return {{"family", "stretched_exp"}, {"p", v.p}, {"q", v.q}, {"C", v.C}};
        else if constexpr (std::is_same_v<F, family::Algebraic>)
          return {{"family", "algebraic"}, {"p", v.p}, {"C", v.C}};
        else if constexpr (std::is_same_v<F, family::LogPower>)
          return {{"family", "log_power"}, {"p", v.p}, {"C", v.C}};
        else if constexpr (std::is_same_v<F, family::Exponential>)
          return {{"family", "exponential"}, {"beta", v.beta}, {"C", v.C}};
        else
          return {{"family", "compact_bump"}, {"width", v.width}};
      },
      f);
}

inline std::string repr(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", x);
  return buf;
}

inline const char* edge_name(FrontEdge e) { return e == FrontEdge::Min ? "min" : "max"; }

inline json check_json(const CheckSpec& c) {
  json j{{"kind", check_name(c.kind)}};
  if (c.omega) j["omega"] = *c.omega;
  auto put_window = [&] {
    if (c.window) j["window"] = {c.window->first, c.window->second};
  };
  switch (c.kind) {
    case CheckSpec::Kind::Asymptotic:
      j["law"] = c.law.name();
      if (c.law.kind == FitLaw::Kind::Power) j["exponent"] = c.law.exponent;
      j["edge"] = edge_name(c.edge);
      if (c.expected) j["expected"] = *c.expected;
      j["tolerance"] = c.tolerance;
      put_window();
      break;
    case CheckSpec::Kind::Acceleration:
      put_window();
      j["min_ratio"] = c.min_ratio;
      break;
    case CheckSpec::Kind::Containment:
      if (c.max_T) j["max_T"] = *c.max_T;
      break;
    case CheckSpec::Kind::Stabilization:
      j["width"] = c.width;
      j["bound"] = c.bound;
      break;
    case CheckSpec::Kind::Residuals:
      j["times"] = c.times;
      j["residual_h"] = c.residual_h;
      j["extent"] = c.extent;
      j["sandwich_horizon"] = c.sandwich_horizon;
      break;
    case CheckSpec::Kind::Comparison:
      j["alpha"] = c.alpha;
      j["pairs"] = c.pairs;
      j["horizon"] = c.horizon;
      j["seed"] = c.seed;
      break;
  }
  return j;
}

}  // namespace detail

/// Fully resolved JSON form; load_config of this text reproduces the config.
[[nodiscard]] inline json to_json(const ExperimentConfig& c) {
  json init = detail::family_json(c.family);
  init["plateau"] = c.plateau;
  init["xi0"] = c.xi0;
  init["glue_width"] = c.glue_width;
  json j;
  j["name"] = c.name;
  j["params"] = {{"chi", c.params.chi},
                 {"a", c.params.a},
                 {"b", c.params.b},
                 {"lambda", c.params.lambda},
                 {"mu", c.params.mu}};
  j["init"] = init;
  j["start"] = c.start == StartKind::Equilibrium ? "equilibrium" : "initial_data";
  j["grid"] = {{"x_left", c.grid.x_left}, {"h", c.grid.h}, {"n", c.grid.n}};
  j["ctl"] = {{"cfl_safety", c.ctl.cfl_safety},
              {"dt_max", c.ctl.dt_max},
              {"expand_margin", c.ctl.expand_margin},
              {"expand_chunk", c.ctl.expand_chunk},
              {"node_cap", c.ctl.node_cap},
              {"wall_clock_budget", c.ctl.wall_clock_budget}};
  j["t_end"] = c.t_end;
  j["dt_obs"] = c.dt_obs;
  j["omegas"] = c.omegas;
  j["watch_level"] = c.watch_level;
  j["profile_times"] = c.profile_times;
  if (c.bounds)
    j["bounds"] = {{"epsilon", c.bounds->epsilon},
                   {"gamma1", c.bounds->gamma1},
                   {"gamma2", c.bounds->gamma2}};
  j["checks"] = json::array();
  for (const auto& ch : c.checks) j["checks"].push_back(detail::check_json(ch));
  j["output_dir"] = c.output_dir;
  return j;
}

// ---------------------------------------------------------------------------------------------
// Parsing

namespace detail {

/// Collects every violation with its JSON path.
class Reader {
 public:
  std::vector<std::string> errors;

  void fail(const std::string& path, const std::string& what) { errors.push_back(path + ": " + what); }

  /// Optional number at obj[key]; reports a type error and returns nullopt.
  std::optional<double> number(const json& obj, const std::string& key, const std::string& path) {
    if (!obj.is_object() || !obj.contains(key)) return std::nullopt;
    const auto& v = obj.at(key);
    if (!v.is_number()) {
      fail(path + "." + key, "expected a number");
      return std::nullopt;
    }
    return v.get<double>();
  }
  double number_or(const json& obj, const std::string& key, const std::string& path, double dflt) {
    return number(obj, key, path).value_or(dflt);
  }
  std::optional<std::size_t> count(const json& obj, const std::string& key,
                                   const std::string& path) {
    if (!obj.is_object() || !obj.contains(key)) return std::nullopt;
    const auto& v = obj.at(key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
      fail(path + "." + key, "expected a nonnegative integer");
      return std::nullopt;
    }
    return v.get<std::size_t>();
  }
  std::optional<std::string> string(const json& obj, const std::string& key,
                                    const std::string& path) {
    if (!obj.is_object() || !obj.contains(key)) return std::nullopt;
    const auto& v = obj.at(key);
    if (!v.is_string()) {
      fail(path + "." + key, "expected a string");
      return std::nullopt;
    }
    return v.get<std::string>();
  }
  std::optional<std::vector<double>> numbers(const json& obj, const std::string& key,
                                             const std::string& path) {
    if (!obj.is_object() || !obj.contains(key)) return std::nullopt;
    const auto& v = obj.at(key);
    if (!v.is_array()) {
      fail(path + "." + key, "expected an array of numbers");
      return std::nullopt;
    }
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number()) fail(path + "." + key + "[" + std::to_string(i) + "]", "expected a number");
      else out.push_back(v[i].get<double>());
    }
    return out;
  }
  const json& object(const json& obj, const std::string& key, const std::string& path) {
    static const json empty = json::object();
    if (!obj.contains(key)) return empty;
    const auto& v = obj.at(key);
    if (!v.is_object()) {
      fail(path + "." + key, "expected an object");
      return empty;
    }
    return v;
  }
  void known_keys(const json& obj, const std::string& path, std::initializer_list<const char*> keys) {
    if (!obj.is_object()) return;
    for (const auto& [k, _] : obj.items()) {
      bool ok = false;
      for (const char* kk : keys) ok = ok || k == kk;
      if (!ok) fail(path + "." + k, "unknown field");
    }
  }
};

inline std::optional<TailFamily> read_family(Reader& r, const json& init) {
  const std::string path = "init";
  const auto name = r.string(init, "family", path);
  if (!name) {
    r.fail(path + ".family", "required");
    return std::nullopt;
  }
  auto req = [&](const char* key) {
    auto v = r.number(init, key, path);
    if (!v) r.fail(path + "." + key, "required for family " + *name);
    return v.value_or(1.0);
  };
  auto opt = [&](const char* key, double d) { return r.number_or(init, key, path, d); };
  const std::initializer_list<const char*> common = {"family", "plateau", "xi0", "glue_width"};
  auto keys = [&](std::initializer_list<const char*> extra) {
    std::vector<const char*> all(common);
    all.insert(all.end(), extra);
    for (const auto& [k, _] : init.items())
      if (std::find_if(all.begin(), all.end(), [&](const char* s) { return k == s; }) == all.end())
        r.fail(path + "." + k, "unknown field for family " + *name);
  };
  if (*name == "exp_over_log") {
    keys({"p", "C"});
    return family::ExpOverLog{req("p"), opt("C", 1.0)};
  }
  if (*name == "stretched_exp") {
    keys({"p", "q", "C"});
    return family::StretchedExp{req("p"), req("q"), opt("C", 1.0)};
  }
  if (*name == "algebraic") {
    keys({"p", "C"});
    return family::Algebraic{req("p"), opt("C", 1.0)};
  }
  if (*name == "log_power") {
    keys({"p", "C"});
    return family::LogPower{req("p"), opt("C", 1.0)};
  }
  if (*name == "exponential") {
    keys({"beta", "C"});
    return family::Exponential{req("beta"), opt("C", 1.0)};
  }
  if (*name == "compact_bump") {
    keys({"width"});
    return family::CompactBump{opt("width", 5.0)};
  }
  r.fail(path + ".family",
         "unknown family '" + *name +
             "' (exp_over_log, stretched_exp, algebraic, log_power, exponential, compact_bump)");
  return std::nullopt;
}

inline std::optional<FitLaw> read_law(Reader& r, const json& j, const std::string& path) {
  const auto name = r.string(j, "law", path).value_or("power");
  if (name == "t_log_t") return FitLaw::t_log_t();
  if (name == "exp_rate") return FitLaw::exp_rate();
  if (name == "log_log_rate") return FitLaw::log_log_rate();
  if (name == "speed") return FitLaw::speed();
  if (name == "power") return FitLaw::power(r.number_or(j, "exponent", path, 2.0));
  r.fail(path + ".law", "unknown law '" + name + "'");
  return std::nullopt;
}

inline CheckSpec read_check(Reader& r, const json& j, const std::string& path) {
  CheckSpec c;
  if (!j.is_object()) {
    r.fail(path, "expected an object");
    return c;
  }
  const auto kind = r.string(j, "kind", path);
  if (!kind) {
    r.fail(path + ".kind", "required");
    return c;
  }
  c.omega = r.number(j, "omega", path);
  auto window = [&] {
    if (auto w = r.numbers(j, "window", path)) {
      if (w->size() != 2 || !((*w)[1] > (*w)[0])) r.fail(path + ".window", "expected [t_lo, t_hi] with t_lo < t_hi");
      else c.window = std::make_pair((*w)[0], (*w)[1]);
    }
  };
  if (*kind == "asymptotic") {
    r.known_keys(j, path, {"kind", "omega", "law", "exponent", "edge", "expected", "tolerance", "window"});
    c.kind = CheckSpec::Kind::Asymptotic;
    if (auto law = read_law(r, j, path)) c.law = *law;
    const auto edge = r.string(j, "edge", path).value_or("min");
    if (edge == "min") c.edge = FrontEdge::Min;
    else if (edge == "max") c.edge = FrontEdge::Max;
    else r.fail(path + ".edge", "expected 'min' or 'max'");
    c.expected = r.number(j, "expected", path);
    c.tolerance = r.number_or(j, "tolerance", path, c.tolerance);
    if (!(c.tolerance > 0.0)) r.fail(path + ".tolerance", "must be > 0");
    window();
  } else if (*kind == "acceleration") {
    r.known_keys(j, path, {"kind", "omega", "window", "min_ratio"});
    c.kind = CheckSpec::Kind::Acceleration;
    window();
    c.min_ratio = r.number_or(j, "min_ratio", path, c.min_ratio);
  } else if (*kind == "containment") {
    r.known_keys(j, path, {"kind", "omega", "max_T"});
    c.kind = CheckSpec::Kind::Containment;
    c.max_T = r.number(j, "max_T", path);
  } else if (*kind == "stabilization") {
    r.known_keys(j, path, {"kind", "omega", "width", "bound"});
    c.kind = CheckSpec::Kind::Stabilization;
    c.width = r.number_or(j, "width", path, c.width);
    c.bound = r.number_or(j, "bound", path, c.bound);
    if (!(c.width > 0.0)) r.fail(path + ".width", "must be > 0");
    if (!(c.bound > 0.0)) r.fail(path + ".bound", "must be > 0");
  } else if (*kind == "residuals") {
    r.known_keys(j, path, {"kind", "omega", "times", "residual_h", "extent", "sandwich_horizon"});
    c.kind = CheckSpec::Kind::Residuals;
    if (auto ts = r.numbers(j, "times", path)) c.times = *ts;
    c.residual_h = r.number_or(j, "residual_h", path, c.residual_h);
    c.extent = r.number_or(j, "extent", path, c.extent);
    c.sandwich_horizon = r.number_or(j, "sandwich_horizon", path, c.sandwich_horizon);
    if (!(c.residual_h > 0.0)) r.fail(path + ".residual_h", "must be > 0");
    if (!(c.extent > 0.0)) r.fail(path + ".extent", "must be > 0");
    for (std::size_t i = 0; i < c.times.size(); ++i)
      if (!(c.times[i] >= 0.0)) r.fail(path + ".times[" + std::to_string(i) + "]", "must be >= 0");
  } else if (*kind == "comparison") {
    r.known_keys(j, path, {"kind", "omega", "alpha", "pairs", "horizon", "seed"});
    c.kind = CheckSpec::Kind::Comparison;
    c.alpha = r.number_or(j, "alpha", path, c.alpha);
    c.pairs = r.count(j, "pairs", path).value_or(c.pairs);
    c.horizon = r.number_or(j, "horizon", path, c.horizon);
    if (auto s = r.count(j, "seed", path)) c.seed = *s;
    if (!(c.alpha >= 0.0)) r.fail(path + ".alpha", "must be >= 0");
    if (c.pairs == 0) r.fail(path + ".pairs", "must be > 0");
    if (!(c.horizon > 0.0)) r.fail(path + ".horizon", "must be > 0");
  } else {
    r.fail(path + ".kind", "unknown check '" + *kind + "'");
  }
  return c;
}

/// "line L, column C" for a byte offset into text.
inline std::string line_column(const std::string& text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < std::min(byte, text.size()); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

}  // namespace detail

/// Builds and validates a config from parsed JSON. Throws ConfigError listing every violation.
[[nodiscard]] inline ExperimentConfig config_from_json(const json& j) {
  detail::Reader r;
  ExperimentConfig c;
  if (!j.is_object()) throw ConfigError("config: expected a JSON object");
  r.known_keys(j, "config",
               {"name", "params", "init", "start", "grid", "ctl", "t_end", "dt_obs", "omegas",
                "watch_level", "profile_times", "bounds", "checks", "output_dir"});
  c.name = r.string(j, "name", "config").value_or("");

  const auto& p = r.object(j, "params", "config");
  r.known_keys(p, "params", {"chi", "a", "b", "lambda", "mu"});
  c.params.chi = r.number_or(p, "chi", "params", 0.0);
  c.params.a = r.number_or(p, "a", "params", 1.0);
  c.params.b = r.number_or(p, "b", "params", 1.0);
  c.params.lambda = r.number_or(p, "lambda", "params", 1.0);
  c.params.mu = r.number_or(p, "mu", "params", 1.0);
  try {
    c.params.validate();
  } catch (const InvalidParameterError& e) {
    r.fail("params", e.what());
  }
  const bool params_ok = r.errors.empty();

  const auto& init = r.object(j, "init", "config");
  if (!j.contains("init")) r.fail("init", "required");
  else if (auto f = detail::read_family(r, init)) c.family = *f;
  c.plateau = r.number_or(init, "plateau", "init", params_ok ? c.params.equilibrium() : 1.0);
  c.xi0 = r.number_or(init, "xi0", "init", InitialData::default_xi0(c.family));
  c.glue_width = r.number_or(init, "glue_width", "init", 0.5);
  if (r.errors.empty()) {
    try {
      (void)c.initial_data();
    } catch (const InvalidParameterError& e) {
      r.fail("init", e.what());
    }
  }

  const auto start = r.string(j, "start", "config").value_or("initial_data");
  if (start == "initial_data") c.start = StartKind::InitialData;
  else if (start == "equilibrium") c.start = StartKind::Equilibrium;
  else r.fail("start", "expected 'initial_data' or 'equilibrium'");

  const auto& g = r.object(j, "grid", "config");
  r.known_keys(g, "grid", {"x_left", "x_right", "h", "n"});
  c.grid.x_left = r.number_or(g, "x_left", "grid", c.grid.x_left);
  c.grid.h = r.number_or(g, "h", "grid", c.grid.h);
  if (!(std::isfinite(c.grid.h) && c.grid.h > 0.0)) r.fail("grid.h", "must be > 0");
  const auto n = r.count(g, "n", "grid");
  const auto x_right = r.number(g, "x_right", "grid");
  if (n && x_right) r.fail("grid", "give either n or x_right, not both");
  if (n) c.grid.n = *n;
  else if (x_right && c.grid.h > 0.0) {
    if (!(*x_right > c.grid.x_left)) r.fail("grid.x_right", "must exceed x_left");
    else c.grid.n = GridWindow::covering(c.grid.x_left, *x_right, c.grid.h).n;
  }
  if (c.grid.n < 3) r.fail("grid.n", "must be >= 3");

  const auto& ctl = r.object(j, "ctl", "config");
  r.known_keys(ctl, "ctl",
               {"cfl_safety", "dt_max", "expand_margin", "expand_chunk", "node_cap",
                "wall_clock_budget"});
  c.ctl.cfl_safety = r.number_or(ctl, "cfl_safety", "ctl", c.ctl.cfl_safety);
  c.ctl.dt_max = r.number_or(ctl, "dt_max", "ctl", c.grid.h * c.grid.h);
  c.ctl.expand_margin = r.number_or(ctl, "expand_margin", "ctl", c.ctl.expand_margin);
  c.ctl.expand_chunk = r.count(ctl, "expand_chunk", "ctl").value_or(c.ctl.expand_chunk);
  c.ctl.node_cap = r.count(ctl, "node_cap", "ctl").value_or(c.ctl.node_cap);
  c.ctl.wall_clock_budget = r.number_or(ctl, "wall_clock_budget", "ctl", 0.0);
  try {
    c.ctl.validate();
  } catch (const InvalidParameterError& e) {
    r.fail("ctl", e.what());
  }
  if (c.grid.n > c.ctl.node_cap) r.fail("grid.n", "exceeds ctl.node_cap");
  if (c.ctl.wall_clock_budget < 0.0) r.fail("ctl.wall_clock_budget", "must be >= 0");

  c.t_end = r.number_or(j, "t_end", "config", c.t_end);
  if (!(c.t_end >= 0.0)) r.fail("t_end", "must be >= 0");
  c.dt_obs = r.number_or(j, "dt_obs", "config", c.dt_obs);
  if (!(c.dt_obs > 0.0)) r.fail("dt_obs", "must be > 0");

  if (auto om = r.numbers(j, "omegas", "config")) c.omegas = *om;
  if (c.omegas.empty()) r.fail("omegas", "at least one level is required");
  for (std::size_t i = 0; i < c.omegas.size(); ++i)
    if (!(c.omegas[i] > 0.0 && c.omegas[i] < c.params.equilibrium()))
      r.fail("omegas[" + std::to_string(i) + "]",
             "must lie in (0, a/b) = (0, " + detail::repr(c.params.equilibrium()) + ")");
  c.watch_level = r.number_or(j, "watch_level", "config", 1e-3 * c.params.equilibrium());
  if (!(c.watch_level > 0.0)) r.fail("watch_level", "must be > 0");
  if (auto pt = r.numbers(j, "profile_times", "config")) {
    c.profile_times = *pt;
  } else {
    for (int k = 0; k <= 4; ++k) c.profile_times.push_back(c.t_end * k / 4.0);
  }
  for (std::size_t i = 0; i < c.profile_times.size(); ++i)
    if (!(c.profile_times[i] >= 0.0 && c.profile_times[i] <= c.t_end))
      r.fail("profile_times[" + std::to_string(i) + "]", "must lie in [0, t_end]");

  if (j.contains("bounds")) {
    const auto& b = r.object(j, "bounds", "config");
    r.known_keys(b, "bounds", {"epsilon", "gamma1", "gamma2"});
    BoundsConfig bc;
    bc.epsilon = r.number_or(b, "epsilon", "bounds", bc.epsilon);
    bc.gamma1 = r.number_or(b, "gamma1", "bounds", bc.gamma1);
    bc.gamma2 = r.number_or(b, "gamma2", "bounds", bc.gamma2);
    if (!(bc.epsilon > 0.0 && bc.epsilon < c.params.a)) r.fail("bounds.epsilon", "must lie in (0, a)");
    if (!(bc.gamma1 > 0.0)) r.fail("bounds.gamma1", "must be > 0");
    if (!(bc.gamma2 > 0.0)) r.fail("bounds.gamma2", "must be > 0");
    c.bounds = bc;
  }

  if (j.contains("checks")) {
    const auto& cs = j.at("checks");
    if (!cs.is_array()) {
      r.fail("checks", "expected an array");
    } else {
      for (std::size_t i = 0; i < cs.size(); ++i) {
        const std::string path = "checks[" + std::to_string(i) + "]";
        auto ch = detail::read_check(r, cs[i], path);
        if (ch.omega && !(*ch.omega > 0.0 && *ch.omega < c.params.equilibrium()))
          r.fail(path + ".omega", "must lie in (0, a/b)");
        if ((ch.kind == CheckSpec::Kind::Containment || ch.kind == CheckSpec::Kind::Residuals) &&
            !c.bounds)
          r.fail(path, std::string(check_name(ch.kind)) + " needs a bounds block");
        c.checks.push_back(std::move(ch));
      }
    }
  }
  c.output_dir = r.string(j, "output_dir", "config").value_or(c.output_dir);

  if (!r.errors.empty()) {
    std::string msg = "invalid config (" + std::to_string(r.errors.size()) + " problem" +
                      (r.errors.size() > 1 ? "s" : "") + "):";
    for (const auto& e : r.errors) msg += "\n  " + e;
    throw ConfigError(msg);
  }
  if (!c.params.strong_damping()) {
    c.warnings.push_back("strong_damping=false: b <= 2 chi mu, checks that need it are disabled");
  }
  return c;
}

[[nodiscard]] inline ExperimentConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("parse error at " + detail::line_column(text, e.byte > 0 ? e.byte - 1 : 0) +
                      ": " + e.what());
  }
  return config_from_json(j);
}

/// Applies command-line overrides before validation so that derived defaults follow them.
struct ConfigOverrides {
  std::optional<double> h;
  std::optional<double> t_end;
  std::optional<std::string> output_dir;
};

[[nodiscard]] inline json apply_overrides(json j, const ConfigOverrides& o) {
  if (o.h) {
    auto& g = j["grid"];
    if (g.is_object() && g.contains("n") && g.contains("h") && g["h"].is_number() &&
        g["n"].is_number()) {
      const double x_left = g.value("x_left", GridSeed{}.x_left);
      g["x_right"] = x_left + (g["n"].get<double>() - 1.0) * g["h"].get<double>();
      g.erase("n");
    }
    g["h"] = *o.h;
    // A dt_max tied to the old h would break the CFL relation.
    if (j.contains("ctl") && j["ctl"].is_object()) j["ctl"].erase("dt_max");
  }
  if (o.t_end) {
    j["t_end"] = *o.t_end;
    j.erase("profile_times");
  }
  if (o.output_dir) j["output_dir"] = *o.output_dir;
  return j;
}

[[nodiscard]] inline ExperimentConfig load_config(const std::filesystem::path& path,
                                                  const ConfigOverrides& overrides = {}) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": parse error at " +
                      detail::line_column(text, e.byte > 0 ? e.byte - 1 : 0));
  }
  return config_from_json(apply_overrides(std::move(j), overrides));
}

}  // namespace chemofront
