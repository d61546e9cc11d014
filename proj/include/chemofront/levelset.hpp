#pragma once

/// \file
/// Level sets E_omega(t) = {x : u(x,t) = omega}: crossings, time series, speeds and fits of the
/// asymptotic position laws.

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "chemofront/elliptic.hpp"
#include "chemofront/errors.hpp"
#include "chemofront/evolution.hpp"

namespace chemofront {

/// Linear-interpolation positions where u - omega changes sign; nodes hit exactly appear once.
[[nodiscard]] inline std::vector<double> level_crossings(std::span<const double> u,
                                                         const GridWindow& grid, double omega) {
  std::vector<double> out;
  const std::size_t n = std::min(u.size(), grid.n);
  for (std::size_t i = 0; i < n; ++i) {
    const double d0 = u[i] - omega;
    if (d0 == 0.0) {
      out.push_back(grid.x(i));
      continue;
    }
    if (i + 1 < n) {
      const double d1 = u[i + 1] - omega;
      if ((d0 < 0.0 && d1 > 0.0) || (d0 > 0.0 && d1 < 0.0))
        out.push_back(grid.x(i) + grid.h * d0 / (d0 - d1));
    }
  }
  return out;
}

struct LevelSetRecord {
  double t = 0.0;
  double omega = 0.0;
  std::optional<double> min_x;
  std::optional<double> max_x;
  std::size_t crossing_count = 0;
  /// A crossing lies within half the expansion margin of the right edge.
  bool stale = false;
  /// Observation precedes the detected T_omega.
  bool pre_t_omega = true;
};

struct LevelSetSeries {
  double omega = 0.0;
  std::vector<LevelSetRecord> records;
  std::optional<double> t_omega;
};

[[nodiscard]] inline LevelSetRecord level_set_record(double t, std::span<const double> u,
                                                     const GridWindow& grid, double omega,
                                                     double expand_margin) {
  const auto xs = level_crossings(u, grid, omega);
  LevelSetRecord rec;
  rec.t = t;
  rec.omega = omega;
  rec.crossing_count = xs.size();
  if (!xs.empty()) {
    rec.min_x = xs.front();
    rec.max_x = xs.back();
    rec.stale = *rec.max_x > grid.x_right() - 0.5 * expand_margin;
  }
  return rec;
}

/// Number of consecutive good observations required before T_omega is declared.
inline constexpr std::size_t kTOmegaPersistence = 3;

/// Marks pre-T_omega rows and finds T_omega: the first observation with nonempty, non-stale
/// crossings that stays so for kTOmegaPersistence consecutive observations.
inline void finalize_series(LevelSetSeries& series, bool strict) {
  auto good = [](const LevelSetRecord& r) { return r.crossing_count > 0 && !r.stale; };
  const auto& recs = series.records;
  series.t_omega.reset();
  for (std::size_t i = 0; i + kTOmegaPersistence <= recs.size(); ++i) {
    bool ok = true;
    for (std::size_t j = i; j < i + kTOmegaPersistence; ++j) ok = ok && good(recs[j]);
    if (ok) {
      series.t_omega = recs[i].t;
      break;
    }
  }
  for (auto& r : series.records) r.pre_t_omega = !series.t_omega || r.t < *series.t_omega;
  if (strict) {
    for (const auto& r : series.records)
      if (r.stale)
        throw StaleWindowError("level " + std::to_string(series.omega) +
                               " crossing entered the right margin at t=" + std::to_string(r.t));
  }
}

/// Level-set series from recorded snapshots.
[[nodiscard]] inline LevelSetSeries track(std::span<const Snapshot> trajectory, double omega,
                                          double expand_margin, bool strict = true) {
  if (trajectory.empty()) throw InvalidParameterError("trajectory is empty");
  if (!(omega > 0.0)) throw InvalidParameterError("omega must be > 0");
  LevelSetSeries series{omega, {}, std::nullopt};
  for (const auto& s : trajectory)
    series.records.push_back(level_set_record(s.t, s.u, s.grid, omega, expand_margin));
  finalize_series(series, strict);
  return series;
}

/// Streaming version of track(): builds the records as a run observer.
class LevelSetTracker {
 public:
  LevelSetTracker(std::vector<double> omegas, double expand_margin)
      : margin_(expand_margin) {
    for (double w : omegas) series_.push_back({w, {}, std::nullopt});
  }
  LevelSetTracker(const LevelSetTracker&) = delete;
  LevelSetTracker& operator=(const LevelSetTracker&) = delete;
  void operator()(const FieldState& s) {
    for (auto& ser : series_)
      ser.records.push_back(level_set_record(s.t, s.u, s.grid, ser.omega, margin_));
  }
  [[nodiscard]] Observer observer() {
    return [this](const FieldState& s) { (*this)(s); };
  }
  /// Finalized series, one per level.
  [[nodiscard]] std::vector<LevelSetSeries> series(bool strict = true) const {
    auto out = series_;
    for (auto& s : out) finalize_series(s, strict);
    return out;
  }

 private:
  double margin_;
  std::vector<LevelSetSeries> series_;
};

struct SpeedPoint {
  double t;
  double speed;
};

struct AverageSpeed {
  std::vector<SpeedPoint> points;  ///< inf E_omega(t) / t past T_omega
  std::optional<double> window_ratio;
};

/// Pointwise min_x / t for rows past T_omega with t > 0; window_ratio = last / first over [t_lo, t_hi].
[[nodiscard]] inline AverageSpeed average_speed(const LevelSetSeries& series,
                                                std::optional<std::pair<double, double>> window =
                                                    std::nullopt) {
  AverageSpeed out;
  for (const auto& r : series.records) {
    // t = 0 has no average speed.
    if (r.pre_t_omega || !r.min_x || !(r.t > 0.0)) continue;
    out.points.push_back({r.t, *r.min_x / r.t});
  }
  if (out.points.empty()) throw InvalidParameterError("no records past T_omega");
  if (window) {
    const SpeedPoint* first = nullptr;
    const SpeedPoint* last = nullptr;
    constexpr double slack = 1e-9;
    for (const auto& p : out.points) {
      if (p.t < window->first - slack || p.t > window->second + slack) continue;
      if (!first) first = &p;
      last = &p;
    }
    if (first && last && first != last && first->speed != 0.0)
      out.window_ratio = last->speed / first->speed;
  }
  return out;
}

/// Position laws. For Power the transform is x / t^exponent; Speed fits the slope of x(t).
struct FitLaw {
  enum class Kind { TLogT, Power, ExpRate, LogLogRate, Speed };
  Kind kind = Kind::Power;
  double exponent = 1.0;

  static FitLaw t_log_t() { return {Kind::TLogT, 1.0}; }
  static FitLaw power(double e) { return {Kind::Power, e}; }
  static FitLaw exp_rate() { return {Kind::ExpRate, 1.0}; }
  static FitLaw log_log_rate() { return {Kind::LogLogRate, 1.0}; }
  static FitLaw speed() { return {Kind::Speed, 1.0}; }

  [[nodiscard]] std::string name() const {
    switch (kind) {
      case Kind::TLogT: return "t_log_t";
      case Kind::Power: return "power";
      case Kind::ExpRate: return "exp_rate";
      case Kind::LogLogRate: return "log_log_rate";
      case Kind::Speed: return "speed";
    }
    return "?";
  }
};

struct AsymptoticFit {
  FitLaw law;
  double rate_estimate = 0.0;
  double t_lo = 0.0, t_hi = 0.0;
  double residual = 0.0;  ///< relative RMS of the transformed series about the fitted constant
  std::size_t samples = 0;
  bool mismatch_warning = false;  ///< residual > 0.2
};

enum class FrontEdge { Min, Max };

/// Least-squares constant fit of the transformed positions over [t_lo, t_hi]; for Speed, the
/// least-squares slope. Needs at least 10 records in the window.
[[nodiscard]] inline AsymptoticFit fit_asymptotic(const LevelSetSeries& series, FitLaw law,
                                                  double t_lo, double t_hi,
                                                  FrontEdge edge = FrontEdge::Min) {
  if (!(t_hi > t_lo)) throw InvalidParameterError("fit window is empty");
  std::vector<double> ts, ys, xs;
  constexpr double slack = 1e-9;
  for (const auto& r : series.records) {
    if (r.t < t_lo - slack || r.t > t_hi + slack) continue;
    const auto& pos = edge == FrontEdge::Min ? r.min_x : r.max_x;
    if (!pos || r.pre_t_omega) continue;
    const double t = r.t;
    const double x = *pos;
    double y = 0.0;
    switch (law.kind) {
      case FitLaw::Kind::TLogT: y = x / (t * std::log(t)); break;
      case FitLaw::Kind::Power: y = x / std::pow(t, law.exponent); break;
      case FitLaw::Kind::ExpRate: y = std::log(x) / t; break;
      case FitLaw::Kind::LogLogRate: y = std::log(std::log(x)) / t; break;
      case FitLaw::Kind::Speed: y = x; break;
    }
    if (!std::isfinite(y)) throw InvalidParameterError("law transform undefined for a record");
    ts.push_back(t);
    xs.push_back(x);
    ys.push_back(y);
  }
  if (ys.size() < 10)
    throw InvalidParameterError("fit window holds " + std::to_string(ys.size()) +
                                " records, need at least 10");
  const auto m = static_cast<double>(ys.size());
  AsymptoticFit fit{law, 0.0, t_lo, t_hi, 0.0, ys.size(), false};
  double ss = 0.0;
  if (law.kind == FitLaw::Kind::Speed) {
    double tm = 0.0, xm = 0.0;
    for (std::size_t i = 0; i < ts.size(); ++i) {
      tm += ts[i];
      xm += xs[i];
    }
    tm /= m;
    xm /= m;
    double stt = 0.0, stx = 0.0;
    for (std::size_t i = 0; i < ts.size(); ++i) {
      stt += (ts[i] - tm) * (ts[i] - tm);
      stx += (ts[i] - tm) * (xs[i] - xm);
    }
    fit.rate_estimate = stx / stt;
    const double icpt = xm - fit.rate_estimate * tm;
    double scale = 0.0;
    for (std::size_t i = 0; i < ts.size(); ++i) {
      const double e = xs[i] - (icpt + fit.rate_estimate * ts[i]);
      ss += e * e;
      scale += xs[i] * xs[i];
    }
    fit.residual = std::sqrt(ss / std::max(scale, 1e-300));
  } else {
    double mean = 0.0;
    for (double y : ys) mean += y;
    mean /= m;
    for (double y : ys) ss += (y - mean) * (y - mean);
    fit.rate_estimate = mean;
    fit.residual = std::sqrt(ss / m) / std::max(std::abs(mean), 1e-300);
  }
  fit.mismatch_warning = fit.residual > 0.2;
  return fit;
}

/// Default fit window: drops the first 20% of the post-T_omega records.
[[nodiscard]] inline std::optional<std::pair<double, double>> default_fit_window(
    const LevelSetSeries& series) {
  std::vector<double> ts;
  for (const auto& r : series.records)
    if (!r.pre_t_omega && r.min_x) ts.push_back(r.t);
  if (ts.size() < 2) return std::nullopt;
  const auto skip = static_cast<std::size_t>(0.2 * static_cast<double>(ts.size()));
  return std::make_pair(ts[std::min(skip, ts.size() - 2)], ts.back());
}

}  // namespace chemofront
