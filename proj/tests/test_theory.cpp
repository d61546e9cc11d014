#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "chemofront/levelset.hpp"
#include "chemofront/theory.hpp"
#include "oracles/generators.hpp"

using namespace chemofront;
namespace fam = chemofront::family;

namespace {

const ModelParams kParams{0.1, 1.0, 1.0, 1.0, 1.0};
const InitialData kStretched(fam::StretchedExp{1.0, 0.5, 1.0}, 1.0);

/// Fits the max-edge speed of the omega = 0.5 level for a Fisher-type auxiliary equation.
double auxiliary_speed(double alpha) {
  const AuxiliaryEq eq{alpha, +1, LogisticReaction{1.0, 1.0}};
  const double h = 0.1;
  const auto g = GridWindow::covering(-50.0, 300.0, h);
  std::vector<double> w(g.n);
  for (std::size_t i = 0; i < g.n; ++i) w[i] = std::clamp(1.0 - g.x(i) / 5.0, 0.0, 1.0);
  StepControl ctl;
  ctl.dt_max = h * h;
  const auto traj = simulate_auxiliary(eq, w, g, 40.0, ctl,
                                       {BoundaryRow::dirichlet(1.0), BoundaryRow::neumann()}, 0.5);
  LevelSetSeries s{0.5, {}, std::nullopt};
  for (const auto& snap : traj) s.records.push_back(level_set_record(snap.t, snap.w, g, 0.5, 100.0));
  finalize_series(s, true);
  return fit_asymptotic(s, FitLaw::speed(), 20.0, 40.0, FrontEdge::Max).rate_estimate;
}

LevelSetSeries series_at(const std::function<double(double)>& pos, double t0, double t1) {
  LevelSetSeries s{0.5, {}, std::nullopt};
  for (double t = t0; t <= t1 + 1e-9; t += 1.0) {
    LevelSetRecord r;
    r.t = t;
    r.min_x = r.max_x = pos(t);
    r.crossing_count = 1;
    s.records.push_back(r);
  }
  finalize_series(s, false);
  return s;
}

}  // namespace

TEST(Bounds, ClosedForms) {
  const BoundSpec spec{0.5, 1.0, 1.0, kStretched, 1.0};
  EXPECT_NEAR(zeta(spec, 10.0), 225.0, 1e-9);
  EXPECT_NEAR(eta(spec, 10.0), 25.0, 1e-9);
  const BoundSpec alg{0.5, 1.0, 1.0, InitialData(fam::Algebraic{2.0, 1.0}, 1.0), 1.0};
  EXPECT_NEAR(eta(alg, 10.0), std::exp(2.5), 1e-9);
  EXPECT_THROW((void)zeta(spec, 1e4), OutOfRangeError);
  EXPECT_THROW((BoundSpec{1.5, 1.0, 1.0, kStretched, 1.0}.validate()), InvalidParameterError);
}

TEST(Bounds, GapWidens) {
  const BoundSpec spec{0.3, 1.0, 1.0, kStretched, 1.0};
  double prev = 0.0;
  for (double t = 3.0; t <= 40.0; t += 1.0) {
    const double gap = zeta(spec, t) - eta(spec, t);
    EXPECT_GT(gap, prev);
    prev = gap;
  }
}

TEST(Majorant, Examples) {
  const LogisticMajorant m{1.0, 1.0, 2.0};
  EXPECT_NEAR(theta(m, 1.0), 1.225399, 1e-6);
  EXPECT_NEAR(theta(m, 40.0), 1.0, 1e-8);
  const LogisticMajorant rest{2.0, 0.5, 4.0};
  for (double t : {0.0, 0.3, 7.0, 100.0}) EXPECT_NEAR(theta(rest, t), 4.0, 1e-14);
  EXPECT_THROW((void)theta(m, -1.0), InvalidParameterError);
}

TEST(Majorant, DerivativeSolvesTheOde) {
  for (const LogisticMajorant m : {LogisticMajorant{1.0, 1.0, 2.0}, LogisticMajorant{1.5, 0.8, 0.3}}) {
    for (double t : {0.0, 0.5, 2.0, 10.0}) {
      const double th = m.value(t);
      EXPECT_NEAR(m.derivative(t), th * (m.a - m.k * th), 1e-13);
    }
  }
}

TEST(Profile, Identities) {
  SubsolutionSpec s{kParams, kStretched};
  s.delta = 1.0;
  s.B = 1.0;
  set_profile_constants(s);
  EXPECT_DOUBLE_EQ(s.s0, 1.0);
  EXPECT_DOUBLE_EQ(s.s1, 0.5);
  EXPECT_DOUBLE_EQ(s.F0, 0.25);
  s.delta = 0.5;
  s.B = 3.0;
  set_profile_constants(s);
  EXPECT_NEAR(s.F(s.s0), 0.0, 1e-15);
  EXPECT_NEAR(s.F(s.s1), s.F0, 1e-15);
  EXPECT_LT(s.F(0.9 * s.s1), s.F0);
  EXPECT_LT(s.F(1.1 * s.s1), s.F0);
}

TEST(Supersolution, ResidualIsNonnegative) {
  const auto sp = make_supersolution(kParams, kStretched, 0.4, 1.1);
  EXPECT_DOUBLE_EQ(sp.rho, 1.2);
  EXPECT_DOUBLE_EQ(sp.theta0, 1.0 / 0.9);
  EXPECT_NEAR(sp.C * kStretched(sp.xi1), sp.theta0, 1e-12);
  for (double t : {0.0, 5.0}) {
    const auto g = GridWindow::covering(sp.xi1, sp.xi1 + 3000.0, 0.05);
    const auto r = supersolution_residual(sp, g, t);
    EXPECT_GT(r.count(Branch::Tail), 0u);
    EXPECT_GE(r.min_on(Branch::Tail), -1e-6 * r.scale) << t;
    if (r.count(Branch::Theta) > 0) {
      EXPECT_LE(r.max_abs_on(Branch::Theta), 1e-10) << t;
    }
  }
}

TEST(Supersolution, ResidualDetectsAnInvalidStart) {
  SupersolutionOptions opts;
  opts.xi1 = 5.0;
  const auto bad = make_supersolution(kParams, kStretched, 0.005, 1.1, opts);
  const auto r = supersolution_residual(bad, GridWindow::covering(5.0, 205.0, 0.05), 0.0);
  EXPECT_LT(r.min_on(Branch::Tail), -1e-6 * r.scale);
}

TEST(Supersolution, CollarsAreExcluded) {
  const auto sp = make_supersolution(kParams, kStretched, 0.4, 1.1);
  const auto g = GridWindow::covering(0.0, 2000.0, 0.05);
  const auto r = supersolution_residual(sp, g, 5.0);
  ASSERT_EQ(r.rows.size(), g.n - 2);
  const auto kinks = std::count_if(r.rows.begin(), r.rows.end(),
                                   [](const ResidualRow& row) { return row.branch == Branch::Kink; });
  EXPECT_GE(kinks, 2);
  for (const auto& row : r.rows) EXPECT_EQ(row.included, row.branch != Branch::Kink);
}

TEST(Supersolution, Preconditions) {
  EXPECT_THROW((void)make_supersolution({0.6, 1.0, 0.5, 1.0, 1.0}, kStretched, 0.4, 1.0),
               InvalidParameterError);
  SupersolutionOptions opts;
  opts.xi1 = 0.5;
  EXPECT_THROW((void)make_supersolution(kParams, kStretched, 0.4, 1.0, opts), InvalidParameterError);
  SupersolutionOptions small;
  small.scan = {2.0, 100};  // |u0''/u0| <= 0.1 needs x > 3
  EXPECT_THROW((void)make_supersolution(kParams, kStretched, 0.4, 1.0, small),
               CertificationWindowError);
  EXPECT_THROW((void)make_supersolution(kParams, InitialData(fam::Exponential{1.0, 1.0}, 1.0), 0.4, 1.0),
               FamilyNotSlowError);
}

TEST(Subsolution, DefaultsAndResidual) {
  const auto sb = make_subsolution(kParams, kStretched, 0.4, 1.1);
  const auto [lo, hi] = sb.rho_interval();
  EXPECT_NEAR(sb.rho, 0.5 * (lo + hi), 1e-15);
  EXPECT_DOUBLE_EQ(hi, 0.8);
  EXPECT_GE(sb.B, std::pow(kStretched(sb.xi2), -sb.delta));
  for (double t : {0.0, 5.0}) {
    const auto g = GridWindow::covering(sb.xi2, sb.xi2 + 3000.0, 0.05);
    const auto r = subsolution_residual(sb, g, t);
    EXPECT_GT(r.count(Branch::Positive), 0u);
    EXPECT_LE(r.max_on(Branch::Positive), 1e-6 * r.scale) << t;
    for (const auto& row : r.rows)
      if (row.branch == Branch::Zero) {
        EXPECT_EQ(row.residual, 0.0);
      }
  }
}

TEST(Subsolution, ResidualBelowChainBound) {
  const auto sb = make_subsolution(kParams, kStretched, 0.4, 1.1);
  const double t = 2.0;
  const auto g = GridWindow::covering(sb.xi2, sb.xi2 + 3000.0, 0.05);
  const auto r = subsolution_residual(sb, g, t);
  std::vector<ResidualRow> pos;
  for (const auto& row : r.rows)
    if (row.included && row.branch == Branch::Positive) pos.push_back(row);
  ASSERT_GE(pos.size(), 20u);
  std::mt19937_64 rng(9);
  std::uniform_int_distribution<std::size_t> pick(0, pos.size() - 1);
  for (int k = 0; k < 20; ++k) {
    const auto& row = pos[pick(rng)];
    EXPECT_LE(row.residual, subsolution_chain_bound(sb, row.x, t) + 1e-6 * r.scale) << row.x;
    EXPECT_LE(subsolution_chain_bound(sb, row.x, t), 0.0) << row.x;
  }
}

TEST(Subsolution, ProfileRange) {
  const auto sb = make_subsolution(kParams, kStretched, 0.4, 1.1);
  for (double x = sb.xi2; x < sb.xi2 + 500.0; x += 7.3) {
    const double w = subsolution_eval(sb, x, 3.0);
    EXPECT_GE(w, 0.0);
    EXPECT_LE(w, sb.F0 * (1.0 + 1e-12));
  }
  EXPECT_EQ(subsolution_eval(sb, sb.xi2, 200.0), 0.0);
}

TEST(Subsolution, RhoOutsideIntervalRejected) {
  SubsolutionOptions opts;
  opts.rho = 0.9;
  EXPECT_THROW((void)make_subsolution(kParams, kStretched, 0.4, 1.1, opts), InvalidParameterError);
  opts.rho = 0.1;
  EXPECT_THROW((void)make_subsolution(kParams, kStretched, 0.4, 1.1, opts), InvalidParameterError);
  SubsolutionOptions delta;
  delta.delta = 1.5;
  EXPECT_THROW((void)make_subsolution(kParams, kStretched, 0.4, 1.1, delta), InvalidParameterError);
}

TEST(Auxiliary, FisherSpeed) { EXPECT_NEAR(auxiliary_speed(0.0), 2.0, 0.1); }

TEST(Auxiliary, GradientTermAddsAlpha) { EXPECT_NEAR(auxiliary_speed(0.5), 2.5, 0.125); }

TEST(Auxiliary, ConstantsStayConstantWithoutReaction) {
  const AuxiliaryEq eq{0.4, +1, NoReaction{}};
  const GridWindow g{0.0, 0.1, 101};
  StepControl ctl;
  ctl.dt_max = 0.01;
  const auto traj = simulate_auxiliary(eq, std::vector<double>(g.n, 0.7), g, 2.0, ctl);
  ASSERT_EQ(traj.size(), 3u);
  for (double w : traj.back().w) EXPECT_NEAR(w, 0.7, 1e-14);
}

TEST(Auxiliary, UpwindGradient) {
  // Increasing data: D- = 1, D+ = 2.
  EXPECT_DOUBLE_EQ(detail::upwind_abs_gradient(0.0, 1.0, 3.0, 1.0, +1), 2.0);
  EXPECT_DOUBLE_EQ(detail::upwind_abs_gradient(0.0, 1.0, 3.0, 1.0, -1), 1.0);
  // Local maximum: only the -alpha form sees a slope.
  EXPECT_DOUBLE_EQ(detail::upwind_abs_gradient(0.0, 1.0, 0.0, 1.0, +1), 0.0);
  EXPECT_DOUBLE_EQ(detail::upwind_abs_gradient(0.0, 1.0, 0.0, 1.0, -1), 1.0);
  EXPECT_DOUBLE_EQ(detail::upwind_abs_gradient(1.0, 0.0, 1.0, 1.0, +1), 1.0);
}

TEST(Comparison, IdenticalAndOrderedData) {
  const auto g = GridWindow::covering(-20.0, 20.0, 0.1);
  StepControl ctl;
  ctl.dt_max = g.h * g.h;
  const auto eq = AuxiliaryEq::majorant(kParams, 1.0);
  std::vector<double> high(g.n), low(g.n);
  for (std::size_t i = 0; i < g.n; ++i) {
    high[i] = 0.6 * std::exp(-g.x(i) * g.x(i));
    low[i] = 0.3 * std::exp(-g.x(i) * g.x(i));
  }
  const auto same = comparison_test(eq, high, high, g, 1.0, ctl);
  EXPECT_EQ(same.max_violation, 0.0);
  EXPECT_TRUE(same.pass);
  const auto ordered = comparison_test(eq, low, high, g, 1.0, ctl);
  EXPECT_TRUE(ordered.pass);
  EXPECT_GT(ordered.steps, 0u);
  EXPECT_THROW((void)comparison_test(eq, high, low, g, 1.0, ctl), InvalidParameterError);
}

TEST(Comparison, StepJacobianIsNonnegative) {
  oracle::Gen gen(17);
  for (int trial = 0; trial < 20; ++trial) {
    const auto g = GridWindow::covering(-5.0, 5.0, gen.uniform(0.1, 0.4));
    const int sign = trial % 2 ? -1 : +1;
    const AuxiliaryEq eq{gen.uniform(0.0, 1.0), sign,
                         sign > 0 ? AuxReaction{LogisticReaction{1.0, 0.9}}
                                  : AuxReaction{DampedPowerReaction{0.8, 1.0, 0.5}}};
    const AuxBoundary bc = trial % 3 ? AuxBoundary{} : AuxBoundary{BoundaryRow::dirichlet(0.5), BoundaryRow::robin(-0.5)};
    const auto base = gen.smooth_profile(g, 0.05);
    StepControl ctl;
    ctl.dt_max = g.h * g.h;
    const double dt = auxiliary_dt(base, eq, g.h, ctl);
    auto ref = base;
    auxiliary_step(ref, eq, g.h, dt, bc);
    const double pert = 1e-7;
    for (std::size_t j = 0; j < g.n; ++j) {
      auto w = base;
      w[j] += pert;
      auxiliary_step(w, eq, g.h, dt, bc);
      for (std::size_t i = 0; i < g.n; ++i) ASSERT_GE((w[i] - ref[i]) / pert, -1e-6) << trial;
    }
  }
}

TEST(Comparison, SingleStepPreservesOrder) {
  oracle::Gen gen(23);
  for (int pair = 0; pair < 100; ++pair) {
    const auto g = GridWindow::covering(-20.0, 20.0, gen.uniform(0.05, 0.3));
    const int sign = pair % 2 ? -1 : +1;
    const double alpha = gen.uniform(0.0, 1.0);
    const auto eq = sign > 0 ? AuxiliaryEq::majorant(kParams, alpha / 0.1)
                             : AuxiliaryEq::minorant(kParams, alpha / 0.1, 0.4, 1.5, 0.5);
    auto high = gen.smooth_profile(g);
    auto low = gen.below(g, high);
    StepControl ctl;
    ctl.dt_max = g.h * g.h;
    const double dt = std::min(auxiliary_dt(low, eq, g.h, ctl), auxiliary_dt(high, eq, g.h, ctl));
    auxiliary_step(low, eq, g.h, dt, {});
    auxiliary_step(high, eq, g.h, dt, {});
    for (std::size_t i = 0; i < g.n; ++i) ASSERT_LE(low[i], high[i] + 1e-15) << pair;
  }
}

TEST(Sandwich, FullSystemStaysBelowSupersolution) {
  const double h = 0.25;
  const auto boundary = DomainBoundary::for_data(kParams, kStretched);
  auto state = initial_state(GridWindow::covering(-50.0, 1500.0, h), kStretched, kParams, boundary);
  StepControl ctl;
  ctl.dt_max = h * h;
  SnapshotRecorder rec;
  const Observer obs = rec.observer();
  (void)run(state, kParams, boundary, ctl, {20.0, 1.0, {}}, std::span(&obs, 1));
  const double L = state.sup_u_running;
  const auto sp = make_supersolution(kParams, kStretched, 0.4, L);
  double worst = -1.0;
  for (const auto& snap : rec.snapshots()) worst = std::max(worst, sandwich_violation(snap, sp));
  EXPECT_LE(worst, 1e-12 * sp.theta0);

  // The majorant equation started from the supersolution also stays above u.
  const auto& g = state.grid;
  std::vector<double> w0(g.n);
  for (std::size_t i = 0; i < g.n; ++i) w0[i] = supersolution_eval(sp, g.x(i), 0.0);
  const AuxBoundary bc{BoundaryRow::neumann(), BoundaryRow::robin(kStretched.log_derivative(g.x_right()))};
  const auto traj = simulate_auxiliary(AuxiliaryEq::majorant(kParams, L), w0, g, 20.0, ctl, bc, 1.0);
  ASSERT_EQ(traj.size(), rec.snapshots().size());
  double gap = -1.0;
  for (std::size_t k = 0; k < traj.size(); ++k)
    for (std::size_t i = 0; i < g.n; ++i) gap = std::max(gap, rec.snapshots()[k].u[i] - traj[k].w[i]);
  EXPECT_LE(gap, 1e-12);
}

TEST(Containment, VacuousWithoutCrossings) {
  LevelSetSeries s{0.5, {}, std::nullopt};
  for (double t = 0.0; t <= 5.0; t += 1.0) {
    LevelSetRecord r;
    r.t = t;
    s.records.push_back(r);
  }
  const auto rep = containment_report(s, {0.4, 1.0, 1.0, kStretched, 1.0});
  ASSERT_TRUE(rep.holds());
  EXPECT_EQ(*rep.T, 0.0);
  EXPECT_TRUE(rep.offending.empty());
}

TEST(Containment, FindsTheEntryTime) {
  const BoundSpec spec{0.4, 1.0, 1.0, kStretched, 1.0};
  // u0(x) = e^{-sqrt x}, so the a-rate level sits at x = t^2, between eta = (0.6t)^2 and zeta = (1.4t)^2.
  const auto inside = containment_report(series_at([](double t) { return t * t; }, 2.0, 20.0), spec);
  ASSERT_TRUE(inside.holds());
  EXPECT_EQ(*inside.T, 2.0);
  const auto late = containment_report(
      series_at([](double t) { return t < 6.0 ? 4.0 * t * t : t * t; }, 2.0, 20.0), spec);
  ASSERT_TRUE(late.holds());
  EXPECT_EQ(*late.T, 6.0);
  EXPECT_EQ(late.offending, (std::vector<double>{2.0, 3.0, 4.0, 5.0}));
}

TEST(Containment, WrongRateFails) {
  // A front moving at the (a + 2 eps) rate escapes zeta.
  const BoundSpec spec{0.4, 1.0, 1.0, kStretched, 1.0};
  const auto rep = containment_report(series_at([](double t) { return 1.8 * 1.8 * t * t; }, 2.0, 20.0), spec);
  EXPECT_FALSE(rep.holds());
  EXPECT_EQ(rep.offending.size(), rep.rows.size());
}
