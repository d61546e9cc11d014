#pragma once

/// \file
/// IMEX time stepping of the full parabolic-elliptic system on an expanding window.
///
/// One step: donor-cell update of the chemotaxis flux chi u v_x, explicit logistic reaction,
/// Crank-Nicolson diffusion. The left node is pinned to a/b; the right node carries the Robin
/// row u_x = (u0'/u0)(x_right) u that keeps the tail in the shape of the initial data.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "chemofront/diffusion.hpp"
#include "chemofront/elliptic.hpp"
#include "chemofront/errors.hpp"
#include "chemofront/model.hpp"

namespace chemofront {

struct StepControl {
  double cfl_safety = 0.9;
  /// Upper bound on dt. Crank-Nicolson keeps u >= 0 only for dt <= h^2; configs default to that.
  double dt_max = 0.01;
  double expand_margin = 50.0;
  std::size_t expand_chunk = std::size_t{1} << 14;
  std::size_t node_cap = 4'000'000;
  /// Seconds; 0 disables the wall-clock check.
  double wall_clock_budget = 0.0;

  void validate() const {
    if (!(cfl_safety > 0.0 && cfl_safety <= 1.0))
      throw InvalidParameterError("cfl_safety must lie in (0, 1]");
    if (!(dt_max > 0.0)) throw InvalidParameterError("dt_max must be > 0");
    if (!(expand_margin > 0.0)) throw InvalidParameterError("expand_margin must be > 0");
    if (expand_chunk == 0) throw InvalidParameterError("expand_chunk must be > 0");
  }
};

/// Boundary treatment of the finite window.
struct DomainBoundary {
  enum class Right { TailRobin, Neumann };

  double left_value = 1.0;
  Right right = Right::Neumann;
  /// Tail shape for the Robin coefficient, the right convolution closure and domain growth.
  std::optional<InitialData> tail;

  /// Dirichlet a/b on the left; Robin with the tail's log-derivative on the right unless the
  /// data are compactly supported.
  static DomainBoundary for_data(const ModelParams& params, const InitialData& data) {
    DomainBoundary b;
    b.left_value = params.equilibrium();
    b.right = data.is_compact() ? Right::Neumann : Right::TailRobin;
    b.tail = data;
    return b;
  }
  /// Both ends at rest at a/b (equilibrium runs).
  static DomainBoundary equilibrium(const ModelParams& params,
                                    std::optional<InitialData> data = std::nullopt) {
    return {params.equilibrium(), Right::Neumann, std::move(data)};
  }

  [[nodiscard]] BoundaryClosure closure() const {
    if (right == Right::TailRobin && tail) return BoundaryClosure::tail_shape(*tail);
    return BoundaryClosure::constant();
  }
  [[nodiscard]] BoundaryRow right_row(double x_right) const {
    if (right == Right::TailRobin && tail) return BoundaryRow::robin(tail->log_derivative(x_right));
    return BoundaryRow::neumann();
  }
  /// u(x_right + dx) / u(x_right) implied by the right boundary model.
  [[nodiscard]] double tail_ratio(double x_right, double dx) const {
    if (!tail) return 1.0;
    if (right == Right::Neumann && !tail->is_compact()) return 1.0;
    const double ref = tail->log_value(x_right);
    if (!std::isfinite(ref)) return 0.0;
    return std::exp(tail->log_value(x_right + dx) - ref);
  }
};

struct FieldState {
  GridWindow grid;
  std::vector<double> u;
  double t = 0.0;
  ChemField chem;  ///< always consistent with u
  double sup_u_running = 0.0;
};

[[nodiscard]] inline FieldState make_state(const GridWindow& grid, std::vector<double> u,
                                           const ModelParams& params,
                                           const DomainBoundary& boundary, double t = 0.0) {
  grid.validate();
  FieldState s{grid, std::move(u), t, {}, 0.0};
  s.chem = solve_chemo_field(s.u, grid, params, boundary.closure());
  s.sup_u_running = s.chem.sup_u;
  return s;
}

/// Samples the initial data on the grid.
[[nodiscard]] inline FieldState initial_state(const GridWindow& grid, const InitialData& data,
                                              const ModelParams& params,
                                              const DomainBoundary& boundary) {
  std::vector<double> u(grid.n);
  for (std::size_t i = 0; i < grid.n; ++i) u[i] = data(grid.x(i));
  return make_state(grid, std::move(u), params, boundary);
}

/// dt = safety * min(h / (chi max|v_x|), 1 / (a + 2 b max u), dt_max).
[[nodiscard]] inline double cfl_dt(const FieldState& state, const ModelParams& params,
                                   const StepControl& ctl) {
  double max_vx = 0.0;
  for (double g : state.chem.vx) max_vx = std::max(max_vx, std::abs(g));
  const double max_u = *std::max_element(state.u.begin(), state.u.end());
  constexpr double tiny = 1e-300;
  const double advect = state.grid.h / (params.chi * max_vx + tiny);
  const double react = 1.0 / (params.a + 2.0 * params.b * std::max(max_u, 0.0));
  return ctl.cfl_safety * std::min({advect, react, ctl.dt_max});
}

namespace detail {

/// Rejects non-finite values and anything below -1e-12, clamps the rest at zero.
inline void enforce_positivity(std::span<double> u) {
  for (double& x : u) {
    if (!std::isfinite(x)) throw NumericalError("non-finite density after step");
    if (x < 0.0) {
      if (x < -1e-12) throw PositivityError("density fell below -1e-12: dt too large");
      x = 0.0;
    }
  }
}

/// u <- u - dt/h (F_{i+1/2} - F_{i-1/2}), F = chi u v_x, donor-cell in the face velocity.
inline void advect_chemotaxis(std::span<double> u, std::span<const double> vx, double chi,
                              double h, double dt, double right_ghost_ratio) {
  const std::size_t n = u.size();
  if (chi == 0.0) return;
  std::vector<double> flux(n + 1, 0.0);  // flux[k] sits between nodes k-1 and k
  for (std::size_t k = 1; k < n; ++k) {
    const double vel = 0.5 * (vx[k - 1] + vx[k]);
    flux[k] = chi * vel * (vel > 0.0 ? u[k - 1] : u[k]);
  }
  const double vel_out = vx[n - 1];
  flux[n] = chi * vel_out * (vel_out > 0.0 ? u[n - 1] : u[n - 1] * right_ghost_ratio);
  const double c = dt / h;
  // Node 0 is Dirichlet and is reset by the diffusion solve.
  for (std::size_t i = 1; i < n; ++i) u[i] -= c * (flux[i + 1] - flux[i]);
}

inline void logistic_reaction(std::span<double> u, double a, double b, double dt) {
  for (double& x : u) x += dt * x * (a - b * x);
}

}  // namespace detail

/// Advances the state in place by dt.
inline void step_inplace(FieldState& state, const ModelParams& params,
                         const DomainBoundary& boundary, double dt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidParameterError("dt must be > 0");
  const auto& grid = state.grid;
  auto& u = state.u;
  if (state.chem.vx.size() != grid.n)
    state.chem = solve_chemo_field(u, grid, params, boundary.closure());
  detail::advect_chemotaxis(u, state.chem.vx, params.chi, grid.h, dt,
                            boundary.tail_ratio(grid.x_right(), grid.h));
  detail::logistic_reaction(u, params.a, params.b, dt);
  crank_nicolson_diffusion(u, grid.h, dt, BoundaryRow::dirichlet(boundary.left_value),
                           boundary.right_row(grid.x_right()));
  detail::enforce_positivity(u);
  state.t += dt;
  state.chem = solve_chemo_field(u, grid, params, boundary.closure());
  state.sup_u_running = std::max(state.sup_u_running, state.chem.sup_u);
}

[[nodiscard]] inline FieldState step(FieldState state, const ModelParams& params,
                                     const DomainBoundary& boundary, double dt) {
  step_inplace(state, params, boundary, dt);
  return state;
}

/// Appends expand_chunk nodes on the right when `watch` is within expand_margin of the edge.
/// New values continue the tail shape: u[n-1] u0(x) / u0(x_right). Returns true if it grew.
inline bool adapt_domain_inplace(FieldState& state, const ModelParams& params,
                                 const DomainBoundary& boundary, const StepControl& ctl,
                                 double watch) {
  if (!std::isfinite(watch)) throw InvalidParameterError("watch position must be finite");
  const double x_r = state.grid.x_right();
  if (watch <= x_r - ctl.expand_margin) return false;
  // Keep appending until the watch point clears the margin.
  std::size_t grow = 0;
  while (state.grid.x(state.grid.n - 1 + grow) <= watch + ctl.expand_margin) grow += ctl.expand_chunk;
  if (state.grid.n + grow > ctl.node_cap)
    throw AllocationLimitError("grid would exceed the node cap of " + std::to_string(ctl.node_cap));
  const double edge = state.u.back();
  state.u.reserve(state.grid.n + grow);
  for (std::size_t k = 1; k <= grow; ++k)
    state.u.push_back(edge * boundary.tail_ratio(x_r, static_cast<double>(k) * state.grid.h));
  state.grid.n += grow;
  state.chem = solve_chemo_field(state.u, state.grid, params, boundary.closure());
  return true;
}

using Observer = std::function<void(const FieldState&)>;

struct RunOptions {
  double t_end = 0.0;
  /// Observer lattice spacing; observers fire at t = 0, dt_obs, 2 dt_obs, ... and at t_end.
  double dt_obs = 1.0;
  /// Levels whose rightmost crossing drives domain growth; the lowest one is used.
  std::vector<double> watch_levels;
};

struct RunSummary {
  std::size_t steps = 0;
  std::size_t observations = 0;
  double wall_seconds = 0.0;
};

/// Rightmost position where u >= level, or x_left if none.
[[nodiscard]] inline double rightmost_at_or_above(const FieldState& state, double level) {
  for (std::size_t i = state.grid.n; i-- > 0;)
    if (state.u[i] >= level) return state.grid.x(i);
  return state.grid.x_left;
}

/// cfl_dt -> step -> adapt_domain until t_end, observers on the lattice. Deterministic.
inline RunSummary run(FieldState& state, const ModelParams& params, const DomainBoundary& boundary,
                      const StepControl& ctl, const RunOptions& opts,
                      std::span<const Observer> observers) {
  if (!(opts.t_end >= 0.0)) throw InvalidParameterError("t_end must be >= 0");
  if (!(opts.dt_obs > 0.0)) throw InvalidParameterError("dt_obs must be > 0");
  ctl.validate();
  const auto start = std::chrono::steady_clock::now();
  RunSummary summary;
  auto notify = [&] {
    for (const auto& obs : observers) obs(state);
    ++summary.observations;
  };
  const double t0 = state.t;
  std::size_t k_obs = 0;
  notify();
  const double watch_level =
      opts.watch_levels.empty()
          ? std::numeric_limits<double>::quiet_NaN()
          : *std::min_element(opts.watch_levels.begin(), opts.watch_levels.end());
  const double t_stop = t0 + opts.t_end;
  while (state.t < t_stop) {
    const double next_obs = std::min(t0 + static_cast<double>(k_obs + 1) * opts.dt_obs, t_stop);
    double dt = cfl_dt(state, params, ctl);
    bool hits = false;
    if (state.t + dt >= next_obs - 1e-12 * std::max(1.0, next_obs)) {
      dt = next_obs - state.t;
      hits = true;
    }
    step_inplace(state, params, boundary, dt);
    if (hits) state.t = next_obs;
    ++summary.steps;
    if (!std::isnan(watch_level))
      adapt_domain_inplace(state, params, boundary, ctl, rightmost_at_or_above(state, watch_level));
    if (hits) {
      ++k_obs;
      notify();
    }
    if (ctl.wall_clock_budget > 0.0) {
      const std::chrono::duration<double> el = std::chrono::steady_clock::now() - start;
      if (el.count() > ctl.wall_clock_budget) throw WallClockError("wall-clock budget exhausted");
    }
  }
  summary.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return summary;
}

/// Full record of a state at an observation time.
struct Snapshot {
  double t = 0.0;
  GridWindow grid;
  std::vector<double> u, v, vx;
  double sup_u_running = 0.0;

  static Snapshot of(const FieldState& s) {
    return {s.t, s.grid, s.u, s.chem.v, s.chem.vx, s.sup_u_running};
  }
};

/// Observer that keeps every `stride`-th observation.
class SnapshotRecorder {
 public:
  explicit SnapshotRecorder(std::size_t stride = 1) : stride_(std::max<std::size_t>(stride, 1)) {}
  SnapshotRecorder(const SnapshotRecorder&) = delete;
  SnapshotRecorder& operator=(const SnapshotRecorder&) = delete;
  void operator()(const FieldState& s) {
    if (count_++ % stride_ == 0) snapshots_.push_back(Snapshot::of(s));
  }
  [[nodiscard]] const std::vector<Snapshot>& snapshots() const { return snapshots_; }
  /// Observer bound to this recorder (which must outlive the run).
  [[nodiscard]] Observer observer() {
    return [this](const FieldState& s) { (*this)(s); };
  }

 private:
  std::size_t stride_;
  std::size_t count_ = 0;
  std::vector<Snapshot> snapshots_;
};

}  // namespace chemofront
