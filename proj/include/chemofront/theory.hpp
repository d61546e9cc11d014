#pragma once

/// \file
/// Theory-side objects: level-set bounds zeta/eta, the logistic majorant theta, the explicit
/// super- and subsolutions with residual checkers, the auxiliary |w_x| equations with a monotone
/// scheme, and the comparison and containment checks built on them.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "chemofront/diffusion.hpp"
#include "chemofront/elliptic.hpp"
#include "chemofront/errors.hpp"
#include "chemofront/evolution.hpp"
#include "chemofront/levelset.hpp"
#include "chemofront/model.hpp"

namespace chemofront {

// ---------------------------------------------------------------------------------------------
// Level-set bounds

/// zeta solves u0(zeta) = gamma1 e^{-(a+eps)t}; eta solves u0(eta) = gamma2 e^{-(a-eps)t}.
struct BoundSpec {
  double epsilon = 0.5;
  double gamma1 = 1.0;
  double gamma2 = 1.0;
  InitialData init;
  double a = 1.0;

  void validate() const {
    if (!(epsilon > 0.0 && epsilon < a)) throw InvalidParameterError("epsilon must lie in (0, a)");
    if (!(gamma1 > 0.0)) throw InvalidParameterError("gamma1 must be > 0");
    if (!(gamma2 > 0.0)) throw InvalidParameterError("gamma2 must be > 0");
  }
};

namespace detail {
inline double invert_log_level(const InitialData& init, double log_level) {
  if (log_level < -745.0) throw OutOfRangeError("bound level underflows a double");
  return invert_tail(init, std::exp(log_level));
}
}  // namespace detail

[[nodiscard]] inline double zeta(const BoundSpec& spec, double t) {
  return detail::invert_log_level(spec.init, std::log(spec.gamma1) - (spec.a + spec.epsilon) * t);
}

[[nodiscard]] inline double eta(const BoundSpec& spec, double t) {
  return detail::invert_log_level(spec.init, std::log(spec.gamma2) - (spec.a - spec.epsilon) * t);
}

// ---------------------------------------------------------------------------------------------
// theta' = theta (a - k theta), theta(0) = theta0

struct LogisticMajorant {
  double a = 1.0;
  double k = 1.0;  ///< b - chi mu
  double theta0 = 1.0;

  [[nodiscard]] double carrying() const { return a / k; }
  [[nodiscard]] double value(double t) const { return theta0 / denom(t); }
  /// Derivative of the closed form (not the right-hand side).
  [[nodiscard]] double derivative(double t) const {
    const double e = std::exp(-a * t);
    const double d = denom(t);
    return -theta0 * e * (theta0 * k - a) / (d * d);
  }

 private:
  [[nodiscard]] double denom(double t) const {
    const double e = std::exp(-a * t);
    return e + theta0 * k * (-std::expm1(-a * t)) / a;
  }
};

[[nodiscard]] inline double theta(const LogisticMajorant& m, double t) {
  if (t < 0.0) throw InvalidParameterError("theta needs t >= 0");
  return m.value(t);
}

// ---------------------------------------------------------------------------------------------
// Supersolution  w(x,t) = min{ C u0(x) e^{rho t}, theta(t) }

struct ScanOptions {
  double x_max = 1e7;
  std::size_t samples = 40000;
};

struct SupersolutionSpec {
  ModelParams params;
  InitialData init;
  double epsilon = 0.5;
  double L = 1.0;
  double rho = 0.0;     ///< a + eps/2
  double theta0 = 0.0;  ///< max(sup u0, a/(b - chi mu))
  double xi1 = 0.0;
  double C = 1.0;  ///< theta0 / u0(xi1)

  [[nodiscard]] double alpha() const { return params.chi * params.mu * L / params.sqrt_lambda(); }
  [[nodiscard]] LogisticMajorant majorant() const {
    return {params.a, params.effective_damping(), theta0};
  }
};

struct SupersolutionOptions {
  ScanOptions scan;
  /// Use this xi1 instead of the scanned one (e.g. to exhibit a violation).
  std::optional<double> xi1;
};

/// Builds the supersolution: xi1 is twice the first abscissa past which |u0''| <= (eps/4) u0
/// and alpha |u0'| <= (eps/4) u0.
[[nodiscard]] inline SupersolutionSpec make_supersolution(const ModelParams& params,
                                                          const InitialData& init, double epsilon,
                                                          double L,
                                                          const SupersolutionOptions& opts = {}) {
  params.validate();
  if (!params.global_existence()) throw InvalidParameterError("supersolution needs b > chi mu");
  if (!(epsilon > 0.0)) throw InvalidParameterError("epsilon must be > 0");
  if (!(L > 0.0)) throw InvalidParameterError("L must be > 0");
  SupersolutionSpec s{params, init, epsilon, L};
  s.rho = params.a + 0.5 * epsilon;
  s.theta0 = std::max(init.sup(), params.a / params.effective_damping());
  if (opts.xi1) {
    s.xi1 = *opts.xi1;
  } else {
    const auto rep = slow_decay_report(init, opts.scan.x_max, opts.scan.samples, 0.25 * epsilon,
                                       s.alpha());
    if (!rep.threshold) throw CertificationWindowError("no xi1 found within the scan window");
    s.xi1 = 2.0 * *rep.threshold;
  }
  if (s.xi1 < init.xi0()) throw InvalidParameterError("xi1 must be >= xi0");
  if (!(init(s.xi1) < init.inf_left()))
    throw InvalidParameterError("u0(xi1) must lie below inf of u0 on (-inf, xi0]");
  s.C = s.theta0 / init(s.xi1);
  return s;
}

namespace detail {
/// ln(C u0(x) e^{rho t})
inline double super_tail_log(const SupersolutionSpec& s, double x, double t) {
  return std::log(s.C) + s.init.log_value(x) + s.rho * t;
}
}  // namespace detail

[[nodiscard]] inline double supersolution_eval(const SupersolutionSpec& s, double x, double t) {
  const double th = s.majorant().value(t);
  const double lg = detail::super_tail_log(s, x, t);
  return lg >= std::log(th) ? th : std::exp(lg);
}

enum class Branch { Theta, Tail, Positive, Zero, Kink };

[[nodiscard]] inline const char* branch_name(Branch b) {
  switch (b) {
    case Branch::Theta: return "theta";
    case Branch::Tail: return "tail";
    case Branch::Positive: return "positive";
    case Branch::Zero: return "zero";
    case Branch::Kink: return "kink";
  }
  return "?";
}

struct ResidualRow {
  double x;
  Branch branch;
  double residual;
  bool included;
};

struct ResidualReport {
  double t = 0.0;
  double scale = 0.0;  ///< max |w| on the grid
  std::vector<ResidualRow> rows;

  /// Most negative included residual on `branch` (+inf if none).
  [[nodiscard]] double min_on(Branch branch) const {
    double m = std::numeric_limits<double>::infinity();
    for (const auto& r : rows)
      if (r.included && r.branch == branch) m = std::min(m, r.residual);
    return m;
  }
  [[nodiscard]] double max_on(Branch branch) const {
    double m = -std::numeric_limits<double>::infinity();
    for (const auto& r : rows)
      if (r.included && r.branch == branch) m = std::max(m, r.residual);
    return m;
  }
  [[nodiscard]] double max_abs_on(Branch branch) const {
    double m = 0.0;
    for (const auto& r : rows)
      if (r.included && r.branch == branch) m = std::max(m, std::abs(r.residual));
    return m;
  }
  [[nodiscard]] std::size_t count(Branch branch, bool included_only = true) const {
    return static_cast<std::size_t>(std::count_if(rows.begin(), rows.end(), [&](const auto& r) {
      return r.branch == branch && (r.included || !included_only);
    }));
  }
};

namespace detail {

/// Marks node i as a kink when a node within two cells lies on a different branch.
inline void mark_collars(std::vector<Branch>& branch, Branch kink) {
  const std::size_t n = branch.size();
  std::vector<Branch> out = branch;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lo = i >= 2 ? i - 2 : 0;
    const std::size_t hi = std::min(n - 1, i + 2);
    for (std::size_t j = lo; j <= hi; ++j)
      if (branch[j] != branch[i]) out[i] = kink;
  }
  branch = std::move(out);
}

}  // namespace detail

/// w_t - w_xx - alpha |w_x| - w (a - (b - chi mu) w) for the supersolution on the grid. Time
/// derivative analytic per branch, space derivatives centred differences. Nodes within 2h of the
/// branch switch are flagged Kink and excluded, as are the two end nodes.
[[nodiscard]] inline ResidualReport supersolution_residual(const SupersolutionSpec& s,
                                                           const GridWindow& grid, double t) {
  grid.validate();
  const auto maj = s.majorant();
  const double th = maj.value(t);
  const double log_th = std::log(th);
  const double alpha = s.alpha();
  const double k = s.params.effective_damping();
  const std::size_t n = grid.n;
  std::vector<double> w(n);
  std::vector<Branch> br(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double lg = detail::super_tail_log(s, grid.x(i), t);
    br[i] = lg >= log_th ? Branch::Theta : Branch::Tail;
    w[i] = br[i] == Branch::Theta ? th : std::exp(lg);
  }
  detail::mark_collars(br, Branch::Kink);
  ResidualReport rep;
  rep.t = t;
  rep.scale = *std::max_element(w.begin(), w.end());
  const double h = grid.h;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double wxx = (w[i + 1] - 2.0 * w[i] + w[i - 1]) / (h * h);
    const double wx = (w[i + 1] - w[i - 1]) / (2.0 * h);
    double wt = 0.0;
    if (br[i] == Branch::Theta) wt = maj.derivative(t);
    else wt = s.rho * w[i];
    const double res = wt - wxx - alpha * std::abs(wx) - w[i] * (s.params.a - k * w[i]);
    rep.rows.push_back({grid.x(i), br[i], res, br[i] != Branch::Kink});
  }
  return rep;
}

// ---------------------------------------------------------------------------------------------
// Subsolution  w(x,t) = max{ F(u0(x) e^{rho t}), 0 },  F(s) = s - B s^{1+delta}

struct SubsolutionSpec {
  ModelParams params;
  InitialData init;
  double epsilon = 0.5;
  double L = 1.0;
  double delta = 0.5;
  double M = 1.0;
  double rho = 0.0;
  double xi2 = 0.0;
  double B = 1.0;
  double s0 = 0.0;  ///< B^{-1/delta}: F(s) <= 0 beyond
  double s1 = 0.0;  ///< argmax of F
  double F0 = 0.0;  ///< max of F

  [[nodiscard]] double alpha() const { return params.chi * params.mu * L / params.sqrt_lambda(); }
  /// a - eps/2, the linear growth rate of the minorant equation.
  [[nodiscard]] double growth() const { return params.a - 0.5 * epsilon; }
  [[nodiscard]] std::pair<double, double> rho_interval() const {
    return {std::max(params.a - epsilon, growth() / (1.0 + delta)), growth()};
  }
  [[nodiscard]] double F(double s) const { return s - B * std::pow(s, 1.0 + delta); }
};

struct SubsolutionOptions {
  double delta = 0.5;
  /// Damping coefficient; by default chosen so the second branch of B is active.
  std::optional<double> M;
  /// Defaults to the midpoint of the admissible interval.
  std::optional<double> rho;
  ScanOptions scan;
  std::optional<double> xi2;
};

namespace detail {
/// G1 = |u0''/u0| + alpha |u0'/u0|
inline double sub_g1(double r1, double r2, double alpha) { return r2 + alpha * r1; }
/// G2 = (1+d)[|u0''/u0| + d (u0'/u0)^2] + alpha (1+d) |u0'/u0|
inline double sub_g2(double r1, double r2, double alpha, double d) {
  return (1.0 + d) * (r2 + d * r1 * r1) + alpha * (1.0 + d) * r1;
}
}  // namespace detail

/// Constants of F: s0 = B^{-1/d}, s1 = (1+d)^{-1/d} s0, F0 = d B^{-1/d} / (1+d)^{1+1/d}.
inline void set_profile_constants(SubsolutionSpec& s) {
  s.s0 = std::pow(s.B, -1.0 / s.delta);
  s.s1 = std::pow(1.0 + s.delta, -1.0 / s.delta) * s.s0;
  s.F0 = s.delta * s.s0 / std::pow(1.0 + s.delta, 1.0 + 1.0 / s.delta);
}

[[nodiscard]] inline SubsolutionSpec make_subsolution(const ModelParams& params,
                                                      const InitialData& init, double epsilon,
                                                      double L,
                                                      const SubsolutionOptions& opts = {}) {
  params.validate();
  if (!(epsilon > 0.0 && epsilon < params.a))
    throw InvalidParameterError("epsilon must lie in (0, a)");
  if (!(opts.delta > 0.0 && opts.delta <= 1.0))
    throw InvalidParameterError("delta must lie in (0, 1]");
  if (!(L > 0.0)) throw InvalidParameterError("L must be > 0");
  SubsolutionSpec s{params, init, epsilon, L, opts.delta};
  const auto [lo, hi] = s.rho_interval();
  s.rho = opts.rho.value_or(0.5 * (lo + hi));
  if (!(s.rho > lo && s.rho < hi))
    throw InvalidParameterError("rho = " + std::to_string(s.rho) + " outside (" +
                                std::to_string(lo) + ", " + std::to_string(hi) + ")");
  const double gap1 = s.growth() - s.rho;
  const double gap2 = s.rho * (1.0 + s.delta) - s.growth();
  if (opts.xi2) {
    s.xi2 = *opts.xi2;
  } else {
    const auto rep = slow_decay_report(init, opts.scan.x_max, opts.scan.samples, 1.0);
    const double alpha = s.alpha();
    const auto thr = rep.threshold_where([&](double r1, double r2) {
      return detail::sub_g1(r1, r2, alpha) <= gap1 &&
             detail::sub_g2(r1, r2, alpha, s.delta) <= 0.5 * gap2;
    });
    if (!thr) throw CertificationWindowError("no xi2 found within the scan window");
    s.xi2 = 2.0 * *thr;
  }
  if (s.xi2 < init.xi0()) throw InvalidParameterError("xi2 must be >= xi0");
  const double u_xi2 = init(s.xi2);
  if (!(u_xi2 < init.inf_left()))
    throw InvalidParameterError("u0(xi2) must lie below inf of u0 on (-inf, xi0]");
  s.M = opts.M.value_or(gap2 * std::pow(u_xi2, -s.delta));
  if (!(s.M > 0.0)) throw InvalidParameterError("M must be > 0");
  s.B = std::max(std::pow(u_xi2, -s.delta), 2.0 * s.M / gap2);
  set_profile_constants(s);
  return s;
}

[[nodiscard]] inline double subsolution_eval(const SubsolutionSpec& s, double x, double t) {
  const double lg = s.init.log_value(x) + s.rho * t;
  if (lg >= std::log(s.s0)) return 0.0;
  return std::max(s.F(std::exp(lg)), 0.0);
}

/// Upper bound of the minorant residual from the explicit inequality chain:
/// u0 e^{rho t}[rho + G1 - (a - eps/2)] + B u0^{1+d} e^{rho(1+d)t}[-rho(1+d) + G2 + (a - eps/2) + M/B].
[[nodiscard]] inline double subsolution_chain_bound(const SubsolutionSpec& s, double x, double t) {
  const double r1 = std::abs(s.init.log_derivative(x));
  const double r2 = std::abs(s.init.curvature_ratio(x));
  const double alpha = s.alpha();
  const double se = std::exp(s.init.log_value(x) + s.rho * t);
  const double d = s.delta;
  return se * (s.rho + detail::sub_g1(r1, r2, alpha) - s.growth()) +
         s.B * std::pow(se, 1.0 + d) *
             (-s.rho * (1.0 + d) + detail::sub_g2(r1, r2, alpha, d) + s.growth() + s.M / s.B);
}

/// w_t - w_xx + alpha |w_x| - (a - eps/2) w + M w^{1+d} on the grid. Positive-set nodes more
/// than 2h from the free boundary are included; zero-branch rows carry residual 0.
[[nodiscard]] inline ResidualReport subsolution_residual(const SubsolutionSpec& s,
                                                         const GridWindow& grid, double t) {
  grid.validate();
  const std::size_t n = grid.n;
  const double log_s0 = std::log(s.s0);
  std::vector<double> w(n), se(n);
  std::vector<Branch> br(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double lg = s.init.log_value(grid.x(i)) + s.rho * t;
    if (lg >= log_s0) {
      br[i] = Branch::Zero;
      w[i] = 0.0;
      se[i] = 0.0;
    } else {
      se[i] = std::exp(lg);
      w[i] = std::max(s.F(se[i]), 0.0);
      br[i] = w[i] > 0.0 ? Branch::Positive : Branch::Zero;
    }
  }
  detail::mark_collars(br, Branch::Kink);
  ResidualReport rep;
  rep.t = t;
  rep.scale = *std::max_element(w.begin(), w.end());
  const double h = grid.h;
  const double alpha = s.alpha();
  const double d = s.delta;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    double res = 0.0;
    if (br[i] != Branch::Zero) {
      const double wxx = (w[i + 1] - 2.0 * w[i] + w[i - 1]) / (h * h);
      const double wx = (w[i + 1] - w[i - 1]) / (2.0 * h);
      const double wt = s.rho * (se[i] - s.B * (1.0 + d) * std::pow(se[i], 1.0 + d));
      res = wt - wxx + alpha * std::abs(wx) - s.growth() * w[i] + s.M * std::pow(w[i], 1.0 + d);
    }
    rep.rows.push_back({grid.x(i), br[i], res, br[i] != Branch::Kink});
  }
  return rep;
}

// ---------------------------------------------------------------------------------------------
// Auxiliary equations  w_t = w_xx + sign alpha |w_x| + g(w)

struct LogisticReaction {
  double a = 1.0;
  double k = 1.0;  ///< g(w) = w (a - k w)
};
struct DampedPowerReaction {
  double r = 1.0;
  double M = 1.0;
  double delta = 0.5;  ///< g(w) = r w - M w^{1+delta}
};
struct NoReaction {};

using AuxReaction = std::variant<LogisticReaction, DampedPowerReaction, NoReaction>;

struct AuxiliaryEq {
  double alpha = 0.0;
  int sign = +1;
  AuxReaction reaction = LogisticReaction{};

  /// w_t = w_xx + (chi mu L / sqrt lambda)|w_x| + w(a - (b - chi mu) w): the full system's u is
  /// a lower solution.
  static AuxiliaryEq majorant(const ModelParams& p, double L) {
    return {p.chi * p.mu * L / p.sqrt_lambda(), +1, LogisticReaction{p.a, p.effective_damping()}};
  }
  /// w_t = w_xx - (chi mu L / sqrt lambda)|w_x| + (a - eps/2) w - M w^{1+d}.
  static AuxiliaryEq minorant(const ModelParams& p, double L, double epsilon, double M,
                              double delta) {
    return {p.chi * p.mu * L / p.sqrt_lambda(), -1,
            DampedPowerReaction{p.a - 0.5 * epsilon, M, delta}};
  }

  void validate() const {
    if (!(alpha >= 0.0)) throw InvalidParameterError("alpha must be >= 0");
    if (sign != 1 && sign != -1) throw InvalidParameterError("sign must be +1 or -1");
  }

  [[nodiscard]] double g(double w) const {
    return std::visit(
        [w](const auto& r) -> double {
          using R = std::decay_t<decltype(r)>;
          if constexpr (std::is_same_v<R, LogisticReaction>) return w * (r.a - r.k * w);
          else if constexpr (std::is_same_v<R, DampedPowerReaction>)
            return r.r * w - r.M * std::pow(w, 1.0 + r.delta);
          else return 0.0;
        },
        reaction);
  }
  /// Bound on |g'| over [0, w_max].
  [[nodiscard]] double lipschitz(double w_max) const {
    return std::visit(
        [w_max](const auto& r) -> double {
          using R = std::decay_t<decltype(r)>;
          if constexpr (std::is_same_v<R, LogisticReaction>) return r.a + 2.0 * r.k * w_max;
          else if constexpr (std::is_same_v<R, DampedPowerReaction>)
            return r.r + r.M * (1.0 + r.delta) * std::pow(w_max, r.delta);
          else return 0.0;
        },
        reaction);
  }
};

struct AuxBoundary {
  BoundaryRow left = BoundaryRow::neumann();
  BoundaryRow right = BoundaryRow::neumann();
};

/// safety * min(h / alpha, 1 / Lip(g), dt_max)
[[nodiscard]] inline double auxiliary_dt(std::span<const double> w, const AuxiliaryEq& eq, double h,
                                         const StepControl& ctl) {
  const double w_max = std::max(0.0, *std::max_element(w.begin(), w.end()));
  constexpr double tiny = 1e-300;
  return ctl.cfl_safety *
         std::min({h / (eq.alpha + tiny), 1.0 / (eq.lipschitz(w_max) + tiny), ctl.dt_max});
}

namespace detail {

/// Monotone one-sided gradient magnitude at node i given left/right neighbours.
/// +alpha: max(D+ w, -D- w, 0).  -alpha: max(D- w, -D+ w, 0).
inline double upwind_abs_gradient(double wl, double wc, double wr, double h, int sign) {
  const double dm = (wc - wl) / h;
  const double dp = (wr - wc) / h;
  return sign > 0 ? std::max({dp, -dm, 0.0}) : std::max({dm, -dp, 0.0});
}

}  // namespace detail

/// One IMEX step: explicit |w_x| term, explicit reaction, Crank-Nicolson diffusion.
inline void auxiliary_step(std::vector<double>& w, const AuxiliaryEq& eq, double h, double dt,
                           const AuxBoundary& bc) {
  const std::size_t n = w.size();
  if (n < 3) throw InvalidParameterError("auxiliary grid needs at least 3 nodes");
  if (eq.alpha > 0.0) {
    std::vector<double> out(w);
    for (std::size_t i = 0; i < n; ++i) {
      if ((i == 0 && bc.left.kind == BoundaryRow::Kind::Dirichlet) ||
          (i == n - 1 && bc.right.kind == BoundaryRow::Kind::Dirichlet))
        continue;
      const double wl = i > 0 ? w[i - 1] : bc.left.ghost(w[0], w[1], h, false);
      const double wr = i + 1 < n ? w[i + 1] : bc.right.ghost(w[n - 1], w[n - 2], h, true);
      out[i] = w[i] + dt * eq.sign * eq.alpha * detail::upwind_abs_gradient(wl, w[i], wr, h, eq.sign);
    }
    w.swap(out);
  }
  for (double& x : w) x += dt * eq.g(x);
  crank_nicolson_diffusion(w, h, dt, bc.left, bc.right);
  detail::enforce_positivity(w);
}

struct AuxSnapshot {
  double t;
  std::vector<double> w;
};

/// Evolves w0 to t_end; snapshots at multiples of dt_obs and at t_end.
[[nodiscard]] inline std::vector<AuxSnapshot> simulate_auxiliary(const AuxiliaryEq& eq,
                                                                 std::vector<double> w0,
                                                                 const GridWindow& grid,
                                                                 double t_end,
                                                                 const StepControl& ctl,
                                                                 const AuxBoundary& bc = {},
                                                                 double dt_obs = 1.0) {
  eq.validate();
  grid.validate();
  if (w0.size() != grid.n) throw InvalidParameterError("w0 length does not match grid");
  for (double x : w0)
    if (!(std::isfinite(x) && x >= 0.0)) throw InvalidParameterError("w0 must be >= 0 and finite");
  std::vector<AuxSnapshot> out{{0.0, w0}};
  double t = 0.0;
  std::size_t k = 0;
  auto& w = w0;
  while (t < t_end) {
    const double next = std::min(static_cast<double>(k + 1) * dt_obs, t_end);
    double dt = auxiliary_dt(w, eq, grid.h, ctl);
    bool hits = false;
    if (t + dt >= next - 1e-12 * std::max(1.0, next)) {
      dt = next - t;
      hits = true;
    }
    auxiliary_step(w, eq, grid.h, dt, bc);
    t = hits ? next : t + dt;
    if (hits) {
      ++k;
      out.push_back({t, w});
    }
  }
  return out;
}

struct ComparisonReport {
  double max_violation = 0.0;  ///< max over time and nodes of (w_low - w_high)
  double scale = 0.0;
  std::size_t steps = 0;
  bool pass = false;
};

/// Co-evolves an ordered pair with a shared dt and records the worst ordering violation.
/// Passes when the violation stays below 1e-10 * scale.
[[nodiscard]] inline ComparisonReport comparison_test(const AuxiliaryEq& eq,
                                                      std::vector<double> low,
                                                      std::vector<double> high,
                                                      const GridWindow& grid, double t_end,
                                                      const StepControl& ctl,
                                                      const AuxBoundary& bc = {}) {
  eq.validate();
  grid.validate();
  if (low.size() != grid.n || high.size() != grid.n)
    throw InvalidParameterError("profile length does not match grid");
  for (std::size_t i = 0; i < grid.n; ++i)
    if (low[i] > high[i]) throw InvalidParameterError("initial data are not ordered");
  ComparisonReport rep;
  rep.scale = std::max(*std::max_element(high.begin(), high.end()), 1e-300);
  auto violation = [&] {
    double m = 0.0;
    for (std::size_t i = 0; i < grid.n; ++i) m = std::max(m, low[i] - high[i]);
    return m;
  };
  double t = 0.0;
  while (t < t_end) {
    double dt = std::min(auxiliary_dt(low, eq, grid.h, ctl), auxiliary_dt(high, eq, grid.h, ctl));
    dt = std::min(dt, t_end - t);
    auxiliary_step(low, eq, grid.h, dt, bc);
    auxiliary_step(high, eq, grid.h, dt, bc);
    t += dt;
    ++rep.steps;
    rep.max_violation = std::max(rep.max_violation, violation());
  }
  rep.pass = rep.max_violation <= 1e-10 * rep.scale;
  return rep;
}

// ---------------------------------------------------------------------------------------------
// Containment of E_omega(t) in [eta(t), zeta(t)]

struct ContainmentRow {
  double t = 0.0;
  std::optional<double> eta, zeta;
  std::optional<double> min_x, max_x;
  bool applicable = false;  ///< both bounds defined at t
  bool pass = false;        ///< vacuous when E_omega(t) is empty
};

struct ContainmentReport {
  std::vector<ContainmentRow> rows;
  /// First observation from which containment holds at every later observation.
  std::optional<double> T;
  std::vector<double> offending;  ///< failing times after the first applicable row
  [[nodiscard]] bool holds() const { return T.has_value(); }
};

[[nodiscard]] inline ContainmentReport containment_report(const LevelSetSeries& series,
                                                          const BoundSpec& spec) {
  ContainmentReport rep;
  for (const auto& r : series.records) {
    ContainmentRow row;
    row.t = r.t;
    row.min_x = r.min_x;
    row.max_x = r.max_x;
    try {
      row.eta = eta(spec, r.t);
      row.zeta = zeta(spec, r.t);
      row.applicable = true;
    } catch (const OutOfRangeError&) {
      row.applicable = false;
    }
    if (r.crossing_count == 0) row.pass = true;
    else if (row.applicable) row.pass = *row.eta <= *r.min_x && *r.max_x <= *row.zeta;
    rep.rows.push_back(row);
  }
  for (std::size_t i = rep.rows.size(); i-- > 0;) {
    if (!rep.rows[i].pass) break;
    rep.T = rep.rows[i].t;
  }
  bool seen_applicable = false;
  for (const auto& row : rep.rows) {
    seen_applicable = seen_applicable || row.applicable;
    if (seen_applicable && !row.pass) rep.offending.push_back(row.t);
  }
  return rep;
}

/// max_i (u_i - wbar(x_i, t)) for a recorded state; <= 0 means u sits below the supersolution.
[[nodiscard]] inline double sandwich_violation(const Snapshot& snap, const SupersolutionSpec& s) {
  double m = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < snap.grid.n; ++i)
    m = std::max(m, snap.u[i] - supersolution_eval(s, snap.grid.x(i), snap.t));
  return m;
}

}  // namespace chemofront
