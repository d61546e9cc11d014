#pragma once

/// \file
/// Model coefficients and the catalogue of initial data: a constant plateau on
/// the left glued to a monotone decaying tail on the right.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "chemofront/errors.hpp"

namespace chemofront {

/// Coefficients of u_t = u_xx - chi (u v_x)_x + u (a - b u),  0 = v_xx - lambda v + mu u.
struct ModelParams {
  double chi = 0.0;
  double a = 1.0;
  double b = 1.0;
  double lambda = 1.0;
  double mu = 1.0;

  /// b > 2 chi mu: the regime where the acceleration bounds are known to hold.
  [[nodiscard]] bool strong_damping() const { return b > 2.0 * chi * mu; }
  /// b > chi mu: bounded global solutions.
  [[nodiscard]] bool global_existence() const { return b > chi * mu; }
  [[nodiscard]] double equilibrium() const { return a / b; }
  [[nodiscard]] double chem_equilibrium() const { return a * mu / (b * lambda); }
  /// b - chi mu, the effective damping of the logistic majorant.
  [[nodiscard]] double effective_damping() const { return b - chi * mu; }
  [[nodiscard]] double sqrt_lambda() const { return std::sqrt(lambda); }

  void validate() const {
    auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
    if (!(std::isfinite(chi) && chi >= 0.0)) throw InvalidParameterError("chi must be >= 0");
    if (!positive(a)) throw InvalidParameterError("a must be > 0");
    if (!positive(b)) throw InvalidParameterError("b must be > 0");
    if (!positive(lambda)) throw InvalidParameterError("lambda must be > 0");
    if (!positive(mu)) throw InvalidParameterError("mu must be > 0");
  }
};

namespace family {

/// C exp(-p x / ln x)
struct ExpOverLog {
  double p = 1.0;
  double C = 1.0;
};
/// C exp(-p x^q), 0 < q < 1
struct StretchedExp {
  double p = 1.0;
  double q = 0.5;
  double C = 1.0;
};
/// C x^-p
struct Algebraic {
  double p = 1.0;
  double C = 1.0;
};
/// C (ln x)^-p
struct LogPower {
  double p = 1.0;
  double C = 1.0;
};
/// C exp(-beta x): fast decaying.
struct Exponential {
  double beta = 1.0;
  double C = 1.0;
};
/// Plateau value smoothly brought down to zero over `width`, zero beyond.
struct CompactBump {
  double width = 1.0;
};

}  // namespace family

using TailFamily = std::variant<family::ExpOverLog, family::StretchedExp, family::Algebraic,
                                family::LogPower, family::Exponential, family::CompactBump>;

[[nodiscard]] inline std::string family_name(const TailFamily& f) {
  constexpr const char* names[] = {"ExpOverLog", "StretchedExp", "Algebraic",
                                   "LogPower",   "Exponential",  "CompactBump"};
  return names[f.index()];
}

namespace detail {

/// Quintic smoothstep: S(0)=0, S(1)=1, S' and S'' vanish at both ends.
struct Smoothstep {
  double value, d1, d2;
};

inline Smoothstep smoothstep(double s) {
  if (s <= 0.0) return {0.0, 0.0, 0.0};
  if (s >= 1.0) return {1.0, 0.0, 0.0};
  const double s2 = s * s;
  const double s3 = s2 * s;
  return {s3 * (10.0 - 15.0 * s + 6.0 * s2), 30.0 * s2 * (1.0 - s) * (1.0 - s),
          60.0 * s * (1.0 - s) * (1.0 - 2.0 * s)};
}

/// Log of a ratio-family tail and its log-derivative ratios u'/u, u''/u.
struct RatioTail {
  double log_value, r1, r2;
};

}  // namespace detail

/// Carrier for a u0^{-1} query.
struct TailQuery {
  double value = 0.0;
  std::optional<std::pair<double, double>> bracket;
};

/// Sampled sup-envelopes of |u0'/u0| and |u0''/u0| beyond each threshold.
struct SlowDecayReport {
  std::vector<double> x;
  std::vector<double> first_envelope;   // sup_{y >= x} |u0'(y)/u0(y)|
  std::vector<double> second_envelope;  // sup_{y >= x} |u0''(y)/u0(y)|
  /// Smallest sample where gradient_weight * first <= bound and second <= bound.
  std::optional<double> threshold;

  /// Smallest sampled abscissa from which pred(first_env, second_env) holds at every later sample.
  template <class Pred>
  [[nodiscard]] std::optional<double> threshold_where(Pred pred) const {
    std::optional<double> found;
    for (std::size_t k = x.size(); k-- > 0;) {
      if (!pred(first_envelope[k], second_envelope[k])) break;
      found = x[k];
    }
    return found;
  }
};

/// Initial density: plateau on the left, tail family on [xi0, inf), C^2 quintic blend between.
class InitialData {
 public:
  InitialData(TailFamily family, double plateau_value, std::optional<double> xi0 = std::nullopt,
              double glue_width = 0.5)
      : family_(family),
        plateau_(plateau_value),
        xi0_(xi0.value_or(default_xi0(family))),
        glue_(glue_width) {
    validate();
    compute_extremes();
  }

  [[nodiscard]] const TailFamily& family() const { return family_; }
  [[nodiscard]] double plateau_value() const { return plateau_; }
  [[nodiscard]] double xi0() const { return xi0_; }
  [[nodiscard]] double glue_width() const { return glue_; }

  /// Slowly decaying families: u0''/u0 -> 0 with u0' <= 0 on the tail.
  [[nodiscard]] bool is_slow() const { return family_.index() <= 3; }
  [[nodiscard]] bool is_compact() const {
    return std::holds_alternative<family::CompactBump>(family_);
  }
  [[nodiscard]] bool has_invertible_tail() const { return !is_compact(); }

  /// Default tail start: families built on ln x need room for x / ln x or ln x to behave.
  static double default_xi0(const TailFamily& f) {
    if (std::holds_alternative<family::ExpOverLog>(f) || std::holds_alternative<family::LogPower>(f))
      return std::exp(2.0);
    return 1.0;
  }

  [[nodiscard]] double operator()(double x) const { return eval(x).value; }
  [[nodiscard]] double derivative(double x) const { return eval(x).d1; }
  [[nodiscard]] double second_derivative(double x) const { return eval(x).d2; }

  /// ln u0(x); -inf where a compact bump has vanished.
  [[nodiscard]] double log_value(double x) const {
    if (x >= xi0_ && !is_compact()) return ratio_tail(x).log_value;
    const double v = (*this)(x);
    return v > 0.0 ? std::log(v) : -std::numeric_limits<double>::infinity();
  }

  /// u0'/u0 on the tail, analytic (no underflow at large x).
  [[nodiscard]] double log_derivative(double x) const {
    if (x >= xi0_ && !is_compact()) return ratio_tail(x).r1;
    const auto p = eval(x);
    return p.d1 / p.value;
  }
  /// u0''/u0 on the tail.
  [[nodiscard]] double curvature_ratio(double x) const {
    if (x >= xi0_ && !is_compact()) return ratio_tail(x).r2;
    const auto p = eval(x);
    return p.d2 / p.value;
  }

  [[nodiscard]] double sup() const { return sup_; }
  /// inf over (-inf, xi0] (the reference level in the super/subsolution thresholds).
  [[nodiscard]] double inf_left() const { return inf_left_; }

  /// Value, first and second derivative at x.
  struct Point {
    double value, d1, d2;
  };

  [[nodiscard]] Point eval(double x) const {
    const double x_start = xi0_ - glue_;
    if (x <= x_start) return {plateau_, 0.0, 0.0};
    const Point tail = tail_point(x);
    if (x >= xi0_) return tail;
    const auto s = detail::smoothstep((x - x_start) / glue_);
    const double sx = s.d1 / glue_;
    const double sxx = s.d2 / (glue_ * glue_);
    const double diff = tail.value - plateau_;
    return {plateau_ + s.value * diff, sx * diff + s.value * tail.d1,
            sxx * diff + 2.0 * sx * tail.d1 + s.value * tail.d2};
  }

 private:
  void validate() const {
    if (!(std::isfinite(plateau_) && plateau_ > 0.0))
      throw InvalidParameterError("plateau_value must be > 0");
    if (!(std::isfinite(glue_) && glue_ > 0.0))
      throw InvalidParameterError("glue_width must be > 0");
    if (!std::isfinite(xi0_)) throw InvalidParameterError("xi0 must be finite");
    auto pos = [](double v, const char* what) {
      if (!(std::isfinite(v) && v > 0.0)) throw InvalidParameterError(std::string(what) + " must be > 0");
    };
    const double x_start = xi0_ - glue_;
    std::visit(
        [&](const auto& f) {
          using F = std::decay_t<decltype(f)>;
          if constexpr (std::is_same_v<F, family::ExpOverLog>) {
            pos(f.p, "p");
            pos(f.C, "C");
            if (xi0_ <= std::numbers::e) throw InvalidParameterError("ExpOverLog needs xi0 > e");
            if (x_start <= 1.0) throw InvalidParameterError("ExpOverLog glue must stay in x > 1");
          } else if constexpr (std::is_same_v<F, family::StretchedExp>) {
            pos(f.p, "p");
            pos(f.C, "C");
            if (!(f.q > 0.0 && f.q < 1.0)) throw InvalidParameterError("q must lie in (0,1)");
            if (x_start < 0.0) throw InvalidParameterError("StretchedExp glue must stay in x >= 0");
          } else if constexpr (std::is_same_v<F, family::Algebraic>) {
            pos(f.p, "p");
            pos(f.C, "C");
            if (x_start <= 0.0) throw InvalidParameterError("Algebraic glue must stay in x > 0");
          } else if constexpr (std::is_same_v<F, family::LogPower>) {
            pos(f.p, "p");
            pos(f.C, "C");
            if (x_start <= 1.0) throw InvalidParameterError("LogPower glue must stay in x > 1");
          } else if constexpr (std::is_same_v<F, family::Exponential>) {
            pos(f.beta, "beta");
            pos(f.C, "C");
          } else {
            pos(f.width, "width");
          }
        },
        family_);
    if (!is_compact() && !(tail_point(xi0_).value < plateau_ * 1e300))
      throw InvalidParameterError("tail value at xi0 is not finite");
  }

  void compute_extremes() {
    // The blend is the only place u0 may leave [u0(xi0), plateau]; sample it densely.
    double hi = plateau_;
    double lo = plateau_;
    constexpr int kSamples = 2000;
    for (int k = 0; k <= kSamples; ++k) {
      const double v = (*this)(xi0_ - glue_ + glue_ * k / kSamples);
      hi = std::max(hi, v);
      lo = std::min(lo, v);
    }
    sup_ = hi;
    inf_left_ = lo;
  }

  [[nodiscard]] detail::RatioTail ratio_tail(double x) const {
    return std::visit(
        [x](const auto& f) -> detail::RatioTail {
          using F = std::decay_t<decltype(f)>;
          if constexpr (std::is_same_v<F, family::ExpOverLog>) {
            const double L = std::log(x);
            const double phi = x / L;
            const double phi1 = 1.0 / L - 1.0 / (L * L);
            const double phi2 = (-1.0 / (L * L) + 2.0 / (L * L * L)) / x;
            const double r1 = -f.p * phi1;
            return {std::log(f.C) - f.p * phi, r1, r1 * r1 - f.p * phi2};
          } else if constexpr (std::is_same_v<F, family::StretchedExp>) {
            const double xq = std::pow(x, f.q);
            const double r1 = -f.p * f.q * xq / x;
            return {std::log(f.C) - f.p * xq, r1, r1 * r1 - f.p * f.q * (f.q - 1.0) * xq / (x * x)};
          } else if constexpr (std::is_same_v<F, family::Algebraic>) {
            return {std::log(f.C) - f.p * std::log(x), -f.p / x, f.p * (f.p + 1.0) / (x * x)};
          } else if constexpr (std::is_same_v<F, family::LogPower>) {
            const double L = std::log(x);
            return {std::log(f.C) - f.p * std::log(L), -f.p / (x * L),
                    f.p * ((f.p + 1.0) / (L * L) + 1.0 / L) / (x * x)};
          } else if constexpr (std::is_same_v<F, family::Exponential>) {
            return {std::log(f.C) - f.beta * x, -f.beta, f.beta * f.beta};
          } else {
            return {0.0, 0.0, 0.0};  // unused for the compact bump
          }
        },
        family_);
  }

  [[nodiscard]] Point tail_point(double x) const {
    if (const auto* bump = std::get_if<family::CompactBump>(&family_)) {
      if (x <= xi0_) return {plateau_, 0.0, 0.0};
      const auto s = detail::smoothstep((x - xi0_) / bump->width);
      const double w = bump->width;
      return {plateau_ * (1.0 - s.value), -plateau_ * s.d1 / w, -plateau_ * s.d2 / (w * w)};
    }
    const auto r = ratio_tail(x);
    const double v = std::exp(r.log_value);
    return {v, r.r1 * v, r.r2 * v};
  }

  TailFamily family_;
  double plateau_;
  double xi0_;
  double glue_;
  double sup_ = 0.0;
  double inf_left_ = 0.0;
};

/// u0(x) with the tail derivatives available through InitialData::eval.
[[nodiscard]] inline double eval_initial(const InitialData& data, double x) { return data(x); }

/// Unique x >= xi0 with u0(x) = q.value. Closed form where the family has one, bisection otherwise.
[[nodiscard]] inline double invert_tail(const InitialData& data, const TailQuery& q) {
  if (!data.has_invertible_tail())
    throw OutOfRangeError("the compact bump has no strictly decreasing tail to invert");
  const double top = data(data.xi0());
  if (!(q.value > 0.0) || !(q.value < top) || !std::isfinite(q.value))
    throw OutOfRangeError("tail level " + std::to_string(q.value) + " outside (0, u0(xi0)=" +
                          std::to_string(top) + ")");
  const double log_v = std::log(q.value);
  double x = std::numeric_limits<double>::quiet_NaN();
  std::visit(
      [&](const auto& f) {
        using F = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<F, family::StretchedExp>) {
          x = std::pow((std::log(f.C) - log_v) / f.p, 1.0 / f.q);
        } else if constexpr (std::is_same_v<F, family::Algebraic>) {
          x = std::exp((std::log(f.C) - log_v) / f.p);
        } else if constexpr (std::is_same_v<F, family::LogPower>) {
          x = std::exp(std::exp((std::log(f.C) - log_v) / f.p));
        } else if constexpr (std::is_same_v<F, family::Exponential>) {
          x = (std::log(f.C) - log_v) / f.beta;
        }
      },
      data.family());
  if (std::isnan(x)) {
    // Bisection on ln u0, strictly decreasing on [xi0, inf).
    double lo = data.xi0();
    double hi = q.bracket ? std::max(q.bracket->second, lo) : std::max(2.0 * lo, lo + 1.0);
    while (data.log_value(hi) > log_v) {
      lo = hi;
      hi *= 2.0;
      if (!std::isfinite(hi)) throw OutOfRangeError("tail inverse overflows");
    }
    if (q.bracket) lo = std::max(lo, std::min(q.bracket->first, hi));
    if (data.log_value(lo) < log_v) lo = data.xi0();
    for (int it = 0; it < 2000; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (mid <= lo || mid >= hi) break;
      (data.log_value(mid) > log_v ? lo : hi) = mid;
    }
    x = 0.5 * (lo + hi);
  }
  if (!std::isfinite(x)) throw OutOfRangeError("tail inverse overflows");
  return std::max(x, data.xi0());
}

[[nodiscard]] inline double invert_tail(const InitialData& data, double value) {
  return invert_tail(data, TailQuery{value, std::nullopt});
}

/// Sample points in [x_lo, x_hi], geometric in the offset from x_lo so the far tail gets reached.
[[nodiscard]] inline std::vector<double> tail_samples(double x_lo, double x_hi, std::size_t count) {
  std::vector<double> xs(std::max<std::size_t>(count, 2));
  const double span = std::log1p(x_hi - x_lo);
  for (std::size_t k = 0; k < xs.size(); ++k)
    xs[k] = x_lo + std::expm1(span * static_cast<double>(k) / static_cast<double>(xs.size() - 1));
  xs.back() = x_hi;
  return xs;
}

/// Envelopes of |u0'/u0| and |u0''/u0| on [xi0, x_max]; `threshold` is the first sample where
/// gradient_weight * |u0'/u0| <= bound and |u0''/u0| <= bound from there on.
[[nodiscard]] inline SlowDecayReport slow_decay_report(const InitialData& data, double x_max,
                                                       std::size_t samples, double bound,
                                                       double gradient_weight = 1.0) {
  if (!data.is_slow())
    throw FamilyNotSlowError(family_name(data.family()) +
                             " is not slowly decaying: u0''/u0 does not vanish");
  if (!(x_max > data.xi0())) throw InvalidParameterError("x_max must exceed xi0");
  SlowDecayReport rep;
  rep.x = tail_samples(data.xi0(), x_max, samples);
  const std::size_t n = rep.x.size();
  rep.first_envelope.resize(n);
  rep.second_envelope.resize(n);
  double e1 = 0.0;
  double e2 = 0.0;
  for (std::size_t k = n; k-- > 0;) {
    e1 = std::max(e1, std::abs(data.log_derivative(rep.x[k])));
    e2 = std::max(e2, std::abs(data.curvature_ratio(rep.x[k])));
    rep.first_envelope[k] = e1;
    rep.second_envelope[k] = e2;
  }
  rep.threshold = rep.threshold_where(
      [&](double r1, double r2) { return gradient_weight * r1 <= bound && r2 <= bound; });
  return rep;
}

/// Threshold x_kappa with u0(x) >= exp(-kappa x) on [x_kappa, inf), certified by sampling up to
/// `window` and by the monotone decay of |u0'/u0| beyond it.
[[nodiscard]] inline double kappa_threshold(const InitialData& data, double kappa, double window,
                                            std::size_t samples = 20000) {
  if (!data.is_slow())
    throw FamilyNotSlowError(family_name(data.family()) + " decays exponentially or faster");
  if (!(kappa > 0.0)) throw InvalidParameterError("kappa must be > 0");
  if (!(window > data.xi0())) throw CertificationWindowError("window must extend past xi0");
  auto margin = [&](double x) { return data.log_value(x) + kappa * x; };
  const auto xs = tail_samples(data.xi0(), window, samples);
  // Beyond the window: the margin keeps growing if it is positive there and ln u0 falls slower than kappa.
  const double tail_slope = data.log_derivative(window) + kappa;
  if (margin(window) < 0.0 || tail_slope <= 0.0)
    throw CertificationWindowError("u0 >= exp(-kappa x) has not stabilised within the window");
  std::size_t first_ok = xs.size() - 1;
  while (first_ok > 0 && margin(xs[first_ok - 1]) >= 0.0) --first_ok;
  if (first_ok == 0) return xs.front();
  // Refine the crossing between the last failing and first passing sample.
  double lo = xs[first_ok - 1];
  double hi = xs[first_ok];
  for (int it = 0; it < 200 && hi - lo > 1e-13 * std::abs(hi); ++it) {
    const double mid = 0.5 * (lo + hi);
    (margin(mid) >= 0.0 ? hi : lo) = mid;
  }
  return hi;
}

}  // namespace chemofront
