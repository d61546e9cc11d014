#pragma once

/// \file
/// O(n) solver for 0 = v_xx - lambda v + mu u on the whole line.
///
/// v is the exponential-kernel convolution (mu / 2 sqrt(lambda)) * int exp(-sqrt(lambda)|x-z|) u(z) dz.
/// Splitting the integral at x gives two one-sided integrals
///   I_l(x) = int_{-inf}^x exp(-s(x-z)) u(z) dz,   I_r(x) = int_x^inf exp(-s(z-x)) u(z) dz,
/// each of which obeys a first-order recursion across a cell. With u linear inside every cell the
/// cell contribution is integrated exactly, so constants are reproduced to rounding and the scheme
/// is second order. v = mu/(2s) (I_l + I_r) and v_x = mu/2 (I_r - I_l), so |v_x| <= s v holds
/// exactly whenever u >= 0.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include <boost/math/quadrature/exp_sinh.hpp>

#include "chemofront/errors.hpp"
#include "chemofront/model.hpp"

namespace chemofront {

/// Uniform node-centred window: x_i = x_left + i h, i = 0..n-1.
struct GridWindow {
  double x_left = 0.0;
  double h = 1.0;
  std::size_t n = 3;

  [[nodiscard]] double x(std::size_t i) const { return x_left + static_cast<double>(i) * h; }
  [[nodiscard]] double x_right() const { return x(n - 1); }

  void validate() const {
    if (!(std::isfinite(h) && h > 0.0)) throw InvalidParameterError("grid spacing h must be > 0");
    if (n < 3) throw InvalidParameterError("grid needs at least 3 nodes");
    if (!std::isfinite(x_left)) throw InvalidParameterError("x_left must be finite");
  }

  /// Smallest window with spacing h covering [lo, hi].
  static GridWindow covering(double lo, double hi, double h) {
    const auto n = static_cast<std::size_t>(std::ceil((hi - lo) / h - 1e-9)) + 1;
    return {lo, h, std::max<std::size_t>(n, 3)};
  }
};

struct ChemField {
  std::vector<double> v;
  std::vector<double> vx;
  double sup_u = 0.0;  ///< max of u on the window, the bound L for this call
};

/// How u is continued outside the window when convolving.
struct BoundaryClosure {
  enum class Left { Constant, Zero };
  enum class Right { Constant, Zero, TailShape };

  Left left = Left::Constant;
  Right right = Right::Constant;
  /// Shape for Right::TailShape: u(x) = u[n-1] u0(x) / u0(x_right) beyond the window.
  std::optional<InitialData> tail;

  static BoundaryClosure constant() { return {}; }
  static BoundaryClosure zero() { return {Left::Zero, Right::Zero, std::nullopt}; }
  static BoundaryClosure tail_shape(const InitialData& data) {
    return {Left::Constant, Right::TailShape, data};
  }
};

namespace detail {

/// Exact weights of a linear cell profile against exp(-s r), r in [0, h].
struct CellWeights {
  double decay;  ///< exp(-s h)
  double far;    ///< weight of the node one cell away
  double near;   ///< weight of the node at the evaluation point
};

inline CellWeights cell_weights(double s, double h) {
  const double d = s * h;
  const double one_minus_e = -std::expm1(-d);
  // 1 - e^{-d}(1+d), cancellation-free for small d.
  double g;
  if (d < 0.05) {
    const double d2 = d * d;
    g = d2 * (0.5 - d / 3.0 + d2 / 8.0 - d2 * d / 30.0 + d2 * d2 / 144.0 - d2 * d2 * d / 840.0 +
              d2 * d2 * d2 / 5760.0);
  } else {
    g = one_minus_e - d * std::exp(-d);
  }
  const double far = g / (s * d);
  return {std::exp(-d), far, one_minus_e / s - far};
}

/// int_0^inf exp(-s y) u0(x_r + y) / u0(x_r) dy
inline double tail_closure_factor(const InitialData& shape, double x_r, double s) {
  const double log_ref = shape.log_value(x_r);
  if (!std::isfinite(log_ref)) return 0.0;
  thread_local boost::math::quadrature::exp_sinh<double> integrator;
  auto f = [&](double y) {
    const double e = shape.log_value(x_r + y) - log_ref - s * y;
    return e < -745.0 ? 0.0 : std::exp(e);
  };
  return integrator.integrate(f, 1e-12);  // over (0, inf)
}

inline void check_density(std::span<const double> u, const GridWindow& grid) {
  if (u.size() != grid.n) throw InvalidParameterError("density length does not match grid");
  for (double x : u) {
    if (!std::isfinite(x)) throw NumericalError("non-finite density");
    if (x < -1e-12) throw NumericalError("negative density passed to the elliptic solver");
  }
}

struct OneSided {
  std::vector<double> left, right;
};

/// The two recursive sweeps.
inline OneSided one_sided_integrals(std::span<const double> u, const GridWindow& grid, double s,
                                    const BoundaryClosure& closure) {
  const std::size_t n = grid.n;
  const auto w = cell_weights(s, grid.h);
  OneSided acc{std::vector<double>(n), std::vector<double>(n)};
  acc.left[0] = closure.left == BoundaryClosure::Left::Constant ? u[0] / s : 0.0;
  for (std::size_t i = 1; i < n; ++i)
    acc.left[i] = w.decay * acc.left[i - 1] + w.far * u[i - 1] + w.near * u[i];
  switch (closure.right) {
    case BoundaryClosure::Right::Constant:
      acc.right[n - 1] = u[n - 1] / s;
      break;
    case BoundaryClosure::Right::Zero:
      acc.right[n - 1] = 0.0;
      break;
    case BoundaryClosure::Right::TailShape:
      if (!closure.tail) throw InvalidParameterError("tail-shape closure needs initial data");
      acc.right[n - 1] = u[n - 1] * tail_closure_factor(*closure.tail, grid.x_right(), s);
      break;
  }
  for (std::size_t i = n - 1; i-- > 0;)
    acc.right[i] = w.decay * acc.right[i + 1] + w.near * u[i] + w.far * u[i + 1];
  return acc;
}

}  // namespace detail

/// v and v_x for the density u on the window.
[[nodiscard]] inline ChemField solve_chemo_field(std::span<const double> u, const GridWindow& grid,
                                                 const ModelParams& params,
                                                 const BoundaryClosure& closure = {}) {
  grid.validate();
  detail::check_density(u, grid);
  const double s = params.sqrt_lambda();
  const auto acc = detail::one_sided_integrals(u, grid, s, closure);
  ChemField out;
  out.v.resize(grid.n);
  out.vx.resize(grid.n);
  const double cv = params.mu / (2.0 * s);
  const double cx = 0.5 * params.mu;
  for (std::size_t i = 0; i < grid.n; ++i) {
    out.v[i] = cv * (acc.left[i] + acc.right[i]);
    out.vx[i] = cx * (acc.right[i] - acc.left[i]);
  }
  out.sup_u = *std::max_element(u.begin(), u.end());
  return out;
}

/// (K * u) with K(x) = -chi mu / 2 sign(x) exp(-sqrt(lambda)|x|): the nonlocal advection
/// velocity of the scalar reformulation. Equals chi v_x.
[[nodiscard]] inline std::vector<double> kernel_velocity(std::span<const double> u,
                                                         const GridWindow& grid,
                                                         const ModelParams& params,
                                                         const BoundaryClosure& closure = {}) {
  grid.validate();
  detail::check_density(u, grid);
  const auto acc = detail::one_sided_integrals(u, grid, params.sqrt_lambda(), closure);
  std::vector<double> out(grid.n);
  const double c = -0.5 * params.chi * params.mu;
  // z < x contributes sign(x - z) = +1, z > x contributes -1.
  for (std::size_t i = 0; i < grid.n; ++i) out[i] = c * (acc.left[i] - acc.right[i]);
  return out;
}

}  // namespace chemofront
