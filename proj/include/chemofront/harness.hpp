#pragma once

/// \file
/// Orchestration behind the command-line tool: one simulation per config, artifact writers,
/// the check suites, and the parallel sweep.
///
/// Exit status: 0 pass, 2 check failure, 3 numerical failure, 4 config error.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "chemofront/config.hpp"
#include "chemofront/evolution.hpp"
#include "chemofront/io.hpp"
#include "chemofront/levelset.hpp"
#include "chemofront/theory.hpp"

namespace chemofront {

enum ExitCode : int { kExitPass = 0, kExitCheckFailure = 2, kExitNumerical = 3, kExitConfig = 4 };

struct SimulationResult {
  std::vector<LevelSetSeries> series;
  std::vector<Snapshot> profiles;
  /// Every observation up to the sandwich horizon (empty unless requested).
  std::vector<Snapshot> early;
  FieldState final_state;
  RunSummary summary;
};

[[nodiscard]] inline DomainBoundary boundary_for(const ExperimentConfig& cfg,
                                                 const InitialData& init) {
  if (cfg.start == StartKind::Equilibrium) return DomainBoundary::equilibrium(cfg.params, init);
  return DomainBoundary::for_data(cfg.params, init);
}

/// Runs the configured experiment. Level-set series are finalized non-strictly; stale records
/// are left for the checks to judge.
[[nodiscard]] inline SimulationResult simulate(const ExperimentConfig& cfg,
                                               double early_horizon = -1.0) {
  const auto init = cfg.initial_data();
  const auto boundary = boundary_for(cfg, init);
  const auto grid = cfg.grid.window();
  FieldState state = cfg.start == StartKind::Equilibrium
                         ? make_state(grid, std::vector<double>(grid.n, cfg.params.equilibrium()),
                                      cfg.params, boundary)
                         : initial_state(grid, init, cfg.params, boundary);

  LevelSetTracker tracker(cfg.omegas, cfg.ctl.expand_margin);
  SimulationResult res;
  auto profile_obs = [&](const FieldState& s) {
    for (double pt : cfg.profile_times)
      if (std::abs(s.t - pt) <= 1e-9 * std::max(1.0, pt)) {
        res.profiles.push_back(Snapshot::of(s));
        break;
      }
  };
  auto early_obs = [&](const FieldState& s) {
    if (s.t <= early_horizon + 1e-9) res.early.push_back(Snapshot::of(s));
  };
  std::vector<Observer> observers{tracker.observer(), profile_obs};
  if (early_horizon >= 0.0) observers.emplace_back(early_obs);

  RunOptions opts;
  opts.t_end = cfg.t_end;
  opts.dt_obs = cfg.dt_obs;
  if (cfg.start == StartKind::InitialData) opts.watch_levels = {cfg.watch_level};
  res.summary = run(state, cfg.params, boundary, cfg.ctl, opts, observers);
  res.series = tracker.series(false);
  res.final_state = std::move(state);
  return res;
}

// ---------------------------------------------------------------------------------------------
// Artifacts

/// Position law matching the tail family's predicted growth.
[[nodiscard]] inline FitLaw natural_law(const TailFamily& f) {
  return std::visit(
      [](const auto& v) -> FitLaw {
        using F = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<F, family::ExpOverLog>) return FitLaw::t_log_t();
        else if constexpr (std::is_same_v<F, family::StretchedExp>) return FitLaw::power(1.0 / v.q);
        else if constexpr (std::is_same_v<F, family::Algebraic>) return FitLaw::exp_rate();
        else if constexpr (std::is_same_v<F, family::LogPower>) return FitLaw::log_log_rate();
        else return FitLaw::speed();
      },
      f);
}

namespace detail {

inline std::vector<std::pair<double, double>> thin(std::span<const double> xs,
                                                   std::span<const double> ys,
                                                   std::size_t max_points = 4000) {
  const std::size_t n = xs.size();
  const std::size_t stride = std::max<std::size_t>(1, (n + max_points - 1) / max_points);
  std::vector<std::pair<double, double>> out;
  for (std::size_t i = 0; i < n; i += stride) out.emplace_back(xs[i], ys[i]);
  if (n > 0 && (n - 1) % stride != 0) out.emplace_back(xs[n - 1], ys[n - 1]);
  return out;
}

inline std::string time_tag(double t) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%010.4f", t);
  return buf;
}

}  // namespace detail

/// Profiles, level-set CSV (rows with a nonempty level set only), fit JSON and plots.
inline void write_run_artifacts(const ExperimentConfig& cfg, const SimulationResult& res,
                                const std::filesystem::path& out) {
  std::filesystem::create_directories(out);
  io::write_json(out / "config.resolved.json", to_json(cfg));
  for (const auto& p : res.profiles)
    io::write_profile_csv(out / "profiles" / ("profile_t" + detail::time_tag(p.t) + ".csv"), p);

  std::vector<LevelSetSeries> nonempty;
  for (const auto& s : res.series) {
    LevelSetSeries copy{s.omega, {}, s.t_omega};
    for (const auto& r : s.records)
      if (r.crossing_count > 0) copy.records.push_back(r);
    nonempty.push_back(std::move(copy));
  }
  io::write_series_csv(out / "levelsets.csv", nonempty);

  const auto law = natural_law(cfg.family);
  nlohmann::json fits = nlohmann::json::array();
  for (const auto& s : res.series) {
    nlohmann::json entry{{"omega", s.omega}};
    if (s.t_omega) entry["t_omega"] = *s.t_omega;
    const auto window = default_fit_window(s);
    try {
      if (!window) throw InvalidParameterError("fewer than two records past T_omega");
      const auto edge = law.kind == FitLaw::Kind::Speed ? FrontEdge::Max : FrontEdge::Min;
      entry["fit"] = io::fit_json(fit_asymptotic(s, law, window->first, window->second, edge), s.omega);
    } catch (const InvalidParameterError& e) {
      entry["fit"] = nullptr;
      entry["reason"] = e.what();
    }
    fits.push_back(entry);
  }
  io::write_json(out / "fits.json", fits);

  std::vector<io::Polyline> prof;
  for (const auto& p : res.profiles) {
    std::vector<double> xs(p.grid.n);
    for (std::size_t i = 0; i < p.grid.n; ++i) xs[i] = p.grid.x(i);
    prof.push_back({"t=" + detail::repr(p.t), detail::thin(xs, p.u)});
  }
  io::write_plot(out / "plot_profiles", "u(x,t)", "x", "u", prof);

  std::optional<BoundSpec> bounds;
  if (cfg.bounds && cfg.initial_data().has_invertible_tail())
    bounds = BoundSpec{cfg.bounds->epsilon, cfg.bounds->gamma1, cfg.bounds->gamma2,
                       cfg.initial_data(), cfg.params.a};
  std::vector<io::Polyline> front, speed;
  for (const auto& s : res.series) {
    io::Polyline lo{"min_x w=" + detail::repr(s.omega), {}}, hi{"max_x w=" + detail::repr(s.omega), {}};
    io::Polyline sp{"min_x/t w=" + detail::repr(s.omega), {}};
    for (const auto& r : s.records) {
      if (!r.min_x) continue;
      lo.points.emplace_back(r.t, *r.min_x);
      hi.points.emplace_back(r.t, *r.max_x);
      if (!r.pre_t_omega && r.t > 0.0) sp.points.emplace_back(r.t, *r.min_x / r.t);
    }
    front.push_back(std::move(lo));
    front.push_back(std::move(hi));
    speed.push_back(std::move(sp));
  }
  if (bounds && !res.series.empty()) {
    io::Polyline e{"eta", {}}, z{"zeta", {}};
    const double x_cap = res.final_state.grid.x_right();
    for (const auto& r : res.series.front().records) {
      try {
        const double ev = eta(*bounds, r.t);
        const double zv = zeta(*bounds, r.t);
        if (ev <= x_cap) e.points.emplace_back(r.t, ev);
        if (zv <= x_cap) z.points.emplace_back(r.t, zv);
      } catch (const OutOfRangeError&) {
      }
    }
    front.push_back(std::move(e));
    front.push_back(std::move(z));
  }
  io::write_plot(out / "plot_levelsets", "level-set extremes", "t", "x", front);
  io::write_plot(out / "plot_avg_speed", "average speed", "t", "min_x / t", speed);
}

// ---------------------------------------------------------------------------------------------
// Checks

struct CheckResult {
  std::string name;
  std::string status;  ///< pass, fail, skipped
  nlohmann::json details = nlohmann::json::object();

  [[nodiscard]] bool failed() const { return status == "fail"; }
};

namespace detail {

inline const LevelSetSeries& series_for(const SimulationResult& res, double omega) {
  for (const auto& s : res.series)
    if (s.omega == omega) return s;
  throw InvalidParameterError("level " + repr(omega) + " is not tracked (add it to omegas)");
}

inline bool any_stale(const LevelSetSeries& s) {
  return std::any_of(s.records.begin(), s.records.end(), [](const auto& r) { return r.stale; });
}

/// Random smooth nonnegative profile: one to three Gaussian bumps.
inline std::vector<double> random_profile(std::mt19937_64& rng, const GridWindow& grid) {
  std::uniform_int_distribution<int> count(1, 3);
  std::uniform_real_distribution<double> amp(0.05, 1.0), centre(-10.0, 10.0), width(0.5, 3.0);
  std::vector<double> w(grid.n, 0.0);
  const int k = count(rng);
  for (int j = 0; j < k; ++j) {
    const double A = amp(rng), c = centre(rng), s = width(rng);
    for (std::size_t i = 0; i < grid.n; ++i) {
      const double z = (grid.x(i) - c) / s;
      w[i] += A * std::exp(-z * z);
    }
  }
  return w;
}

/// Multiplies by a smooth factor in [0, 1]: the result stays below the input node-wise.
inline std::vector<double> random_below(std::mt19937_64& rng, const GridWindow& grid,
                                        std::span<const double> high) {
  std::uniform_real_distribution<double> freq(0.05, 1.0), phase(0.0, 2.0 * std::numbers::pi),
      depth(0.0, 1.0);
  const double f = freq(rng), ph = phase(rng), d = depth(rng);
  std::vector<double> low(high.begin(), high.end());
  for (std::size_t i = 0; i < grid.n; ++i)
    low[i] *= 1.0 - d * 0.5 * (1.0 + std::sin(f * grid.x(i) + ph));
  return low;
}

}  // namespace detail

/// Ordered random pairs under the +alpha logistic auxiliary equation.
[[nodiscard]] inline CheckResult comparison_check(const ModelParams& params, const CheckSpec& c) {
  CheckResult out{"comparison", "pass"};
  const double k = params.global_existence() ? params.effective_damping() : params.b;
  const AuxiliaryEq eq{c.alpha, +1, LogisticReaction{params.a, k}};
  const auto grid = GridWindow::covering(-20.0, 20.0, 0.1);
  StepControl ctl;
  ctl.dt_max = grid.h * grid.h;
  std::mt19937_64 rng(c.seed);
  double worst = 0.0;
  std::size_t failures = 0;
  for (std::size_t p = 0; p < c.pairs; ++p) {
    const auto high = detail::random_profile(rng, grid);
    const auto low = detail::random_below(rng, grid, high);
    const auto rep = comparison_test(eq, low, high, grid, c.horizon, ctl);
    worst = std::max(worst, rep.max_violation / rep.scale);
    if (!rep.pass) ++failures;
  }
  out.details = {{"alpha", c.alpha},   {"pairs", c.pairs},
                 {"horizon", c.horizon}, {"max_relative_violation", worst},
                 {"failing_pairs", failures}, {"tolerance", 1e-10}};
  if (failures > 0) out.status = "fail";
  return out;
}

/// Runs one check against a finished simulation.
[[nodiscard]] inline CheckResult run_check(const ExperimentConfig& cfg, const SimulationResult& res,
                                           const CheckSpec& c,
                                           const std::filesystem::path& out_dir) {
  CheckResult out{check_name(c.kind), "pass"};
  if (c.needs_strong_damping() && !cfg.theorem_checks_enabled()) {
    out.status = "skipped";
    out.details["reason"] = "strong_damping=false";
    return out;
  }
  const double omega = c.omega.value_or(cfg.omegas.front());
  out.details["omega"] = omega;
  try {
    switch (c.kind) {
      case CheckSpec::Kind::Asymptotic: {
        const auto& s = detail::series_for(res, omega);
        if (detail::any_stale(s)) throw StaleWindowError("tracked crossing entered the margin");
        const auto window = c.window ? c.window : default_fit_window(s);
        if (!window) throw InvalidParameterError("no records past T_omega");
        const auto fit = fit_asymptotic(s, c.law, window->first, window->second, c.edge);
        out.details["fit"] = io::fit_json(fit, omega);
        if (c.expected) {
          out.details["expected"] = *c.expected;
          out.details["tolerance"] = c.tolerance;
          const double rel = std::abs(fit.rate_estimate - *c.expected) / std::abs(*c.expected);
          out.details["relative_error"] = rel;
          if (!(rel <= c.tolerance)) out.status = "fail";
        } else if (fit.mismatch_warning) {
          out.status = "fail";
        }
        break;
      }
      case CheckSpec::Kind::Acceleration: {
        const auto& s = detail::series_for(res, omega);
        const auto window = c.window.value_or(std::make_pair(10.0, 30.0));
        const auto avg = average_speed(s, window);
        out.details["window"] = {window.first, window.second};
        out.details["min_ratio"] = c.min_ratio;
        if (!avg.window_ratio) throw InvalidParameterError("window holds fewer than two records");
        out.details["ratio"] = *avg.window_ratio;
        if (!(*avg.window_ratio >= c.min_ratio)) out.status = "fail";
        break;
      }
      case CheckSpec::Kind::Containment: {
        const auto& s = detail::series_for(res, omega);
        const BoundSpec spec{cfg.bounds->epsilon, cfg.bounds->gamma1, cfg.bounds->gamma2,
                             cfg.initial_data(), cfg.params.a};
        spec.validate();
        const auto rep = containment_report(s, spec);
        io::write_containment_csv(out_dir / ("containment_w" + detail::repr(omega) + ".csv"), rep);
        out.details["offending_times"] = rep.offending;
        out.details["stale"] = detail::any_stale(s);
        if (rep.T) out.details["T"] = *rep.T;
        else out.details["T"] = nullptr;
        if (c.max_T) out.details["max_T"] = *c.max_T;
        if (!rep.holds() || detail::any_stale(s) || (c.max_T && *rep.T > *c.max_T))
          out.status = "fail";
        break;
      }
      case CheckSpec::Kind::Stabilization: {
        const auto& st = res.final_state;
        double worst = 0.0;
        for (std::size_t i = 0; i < st.grid.n && st.grid.x(i) <= st.grid.x_left + c.width; ++i)
          worst = std::max(worst, std::abs(st.u[i] - cfg.params.equilibrium()));
        out.details = {{"t", st.t}, {"width", c.width}, {"sup_distance", worst}, {"bound", c.bound}};
        if (!(worst < c.bound)) out.status = "fail";
        break;
      }
      case CheckSpec::Kind::Residuals: {
        const auto init = cfg.initial_data();
        const double L = res.final_state.sup_u_running;
        const double eps = cfg.bounds->epsilon;
        const auto sup = make_supersolution(cfg.params, init, eps, L);
        const auto sub = make_subsolution(cfg.params, init, eps, L);
        out.details["L"] = L;
        out.details["xi1"] = sup.xi1;
        out.details["xi2"] = sub.xi2;
        out.details["subsolution"] = {{"rho", sub.rho}, {"delta", sub.delta}, {"M", sub.M},
                                      {"B", sub.B},     {"user_chosen", "delta, M"}};
        nlohmann::json rows = nlohmann::json::array();
        bool ok = true;
        for (double t : c.times) {
          const auto rs = supersolution_residual(
              sup, GridWindow::covering(sup.xi1, sup.xi1 + c.extent, c.residual_h), t);
          const auto rb = subsolution_residual(
              sub, GridWindow::covering(sub.xi2, sub.xi2 + c.extent, c.residual_h), t);
          io::write_residual_csv(out_dir / ("residual_super_t" + detail::time_tag(t) + ".csv"), rs);
          io::write_residual_csv(out_dir / ("residual_sub_t" + detail::time_tag(t) + ".csv"), rb);
          const double tail_min = rs.min_on(Branch::Tail);
          const double theta_max = rs.max_abs_on(Branch::Theta);
          const double sub_max = rb.max_on(Branch::Positive);
          const bool row_ok = tail_min >= -1e-6 * rs.scale && theta_max <= 1e-10 &&
                              sub_max <= 1e-6 * rb.scale;
          ok = ok && row_ok;
          auto finite_or_null = [](double v) -> nlohmann::json {
            return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
          };
          rows.push_back({{"t", t},
                          {"super_tail_min", finite_or_null(tail_min)},
                          {"super_scale", rs.scale},
                          {"super_theta_max_abs", theta_max},
                          {"sub_positive_max", finite_or_null(sub_max)},
                          {"sub_scale", rb.scale},
                          {"pass", row_ok}});
        }
        out.details["times"] = rows;
        double sandwich = -std::numeric_limits<double>::infinity();
        for (const auto& snap : res.early) sandwich = std::max(sandwich, sandwich_violation(snap, sup));
        out.details["sandwich_horizon"] = c.sandwich_horizon;
        out.details["sandwich_frames"] = res.early.size();
        out.details["sandwich_max_u_minus_wbar"] = std::isfinite(sandwich) ? nlohmann::json(sandwich)
                                                                           : nlohmann::json(nullptr);
        if (res.early.empty() || sandwich > 1e-12 * sup.theta0) ok = false;
        if (!ok) out.status = "fail";
        break;
      }
      case CheckSpec::Kind::Comparison:
        return comparison_check(cfg.params, c);
    }
  } catch (const NumericalError&) {
    throw;
  } catch (const Error& e) {
    out.status = "fail";
    out.details["error"] = e.what();
  }
  return out;
}

// ---------------------------------------------------------------------------------------------
// Commands

namespace detail {
inline int numerical_failure(const std::exception& e, std::ostream& log) {
  log << "numerical failure: " << e.what() << '\n';
  return kExitNumerical;
}
}  // namespace detail

inline int cmd_run(const ExperimentConfig& cfg, const std::filesystem::path& out, std::ostream& log) {
  for (const auto& w : cfg.warnings) log << "warning: " << w << '\n';
  try {
    const auto res = simulate(cfg);
    write_run_artifacts(cfg, res, out);
    log << cfg.name << ": " << res.summary.steps << " steps, " << res.final_state.grid.n
        << " nodes, " << res.summary.wall_seconds << " s\n";
  } catch (const NumericalError& e) {
    return detail::numerical_failure(e, log);
  } catch (const AllocationLimitError& e) {
    return detail::numerical_failure(e, log);
  } catch (const WallClockError& e) {
    return detail::numerical_failure(e, log);
  }
  return kExitPass;
}

inline int cmd_verify(const ExperimentConfig& cfg, const std::filesystem::path& out,
                      std::ostream& log) {
  for (const auto& w : cfg.warnings) log << "warning: " << w << '\n';
  std::filesystem::create_directories(out);
  double horizon = -1.0;
  for (const auto& c : cfg.checks)
    if (c.kind == CheckSpec::Kind::Residuals) horizon = std::max(horizon, c.sandwich_horizon);
  nlohmann::json summary{{"name", cfg.name}, {"warnings", cfg.warnings}};
  try {
    const auto res = simulate(cfg, horizon);
    write_run_artifacts(cfg, res, out);
    bool pass = true;
    summary["checks"] = nlohmann::json::array();
    for (const auto& c : cfg.checks) {
      const auto r = run_check(cfg, res, c, out);
      pass = pass && !r.failed();
      summary["checks"].push_back({{"check", r.name}, {"status", r.status}, {"details", r.details}});
      log << cfg.name << ": " << r.name << " " << r.status << '\n';
    }
    summary["pass"] = pass;
    io::write_json(out / "summary.json", summary);
    return pass ? kExitPass : kExitCheckFailure;
  } catch (const NumericalError& e) {
    summary["pass"] = false;
    summary["numerical_failure"] = e.what();
    io::write_json(out / "summary.json", summary);
    return detail::numerical_failure(e, log);
  } catch (const AllocationLimitError& e) {
    summary["pass"] = false;
    summary["numerical_failure"] = e.what();
    io::write_json(out / "summary.json", summary);
    return detail::numerical_failure(e, log);
  } catch (const WallClockError& e) {
    summary["pass"] = false;
    summary["numerical_failure"] = e.what();
    io::write_json(out / "summary.json", summary);
    return detail::numerical_failure(e, log);
  }
}

struct SweepEntry {
  std::filesystem::path config;
  std::filesystem::path out;
  int exit_code = 0;
  std::string log;
};

/// Every *.json in `dir` (sorted) is verified (or just run, if it lists no checks) into
/// out_root/<stem>, `threads` at a time. Returns the largest exit code.
inline int cmd_sweep(const std::filesystem::path& dir, const std::filesystem::path& out_root,
                     unsigned threads, std::ostream& log, const ConfigOverrides& overrides = {},
                     std::vector<SweepEntry>* entries_out = nullptr) {
  std::vector<SweepEntry> entries;
  if (!std::filesystem::is_directory(dir)) {
    log << "config error: " << dir.string() << " is not a directory\n";
    return kExitConfig;
  }
  for (const auto& e : std::filesystem::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".json")
      entries.push_back({e.path(), out_root / e.path().stem(), 0, {}});
  std::sort(entries.begin(), entries.end(),
            [](const auto& a, const auto& b) { return a.config < b.config; });

  auto work = [&](SweepEntry& e) {
    std::ostringstream os;
    try {
      const auto cfg = load_config(e.config, overrides);
      e.exit_code = cfg.checks.empty() ? cmd_run(cfg, e.out, os) : cmd_verify(cfg, e.out, os);
    } catch (const ConfigError& err) {
      os << "config error: " << err.what() << '\n';
      e.exit_code = kExitConfig;
    }
    e.log = os.str();
  };
  std::atomic<std::size_t> next{0};
  {
    std::vector<std::jthread> pool;
    const unsigned n = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(entries.size())));
    for (unsigned k = 0; k < n; ++k)
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < entries.size(); i = next++) work(entries[i]);
      });
  }
  int worst = kExitPass;
  nlohmann::json summary = nlohmann::json::array();
  for (const auto& e : entries) {
    log << e.log;
    worst = std::max(worst, e.exit_code);
    summary.push_back({{"config", e.config.filename().string()}, {"exit_code", e.exit_code}});
  }
  io::write_json(out_root / "sweep_summary.json", summary);
  if (entries_out) *entries_out = std::move(entries);
  return worst;
}

}  // namespace chemofront
