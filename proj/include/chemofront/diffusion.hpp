#pragma once

/// \file
/// Crank-Nicolson diffusion on a uniform grid, shared by the full system and the auxiliary
/// |w_x| equations.

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "chemofront/errors.hpp"

namespace chemofront {

/// One boundary row of the discrete Laplacian.
struct BoundaryRow {
  enum class Kind { Dirichlet, Robin };
  Kind kind = Kind::Robin;
  /// Dirichlet value.
  double value = 0.0;
  /// Robin coefficient c in u_x = c u (outward x direction is +x at both ends); 0 is Neumann.
  double coef = 0.0;

  static BoundaryRow dirichlet(double v) { return {Kind::Dirichlet, v, 0.0}; }
  static BoundaryRow neumann() { return {Kind::Robin, 0.0, 0.0}; }
  static BoundaryRow robin(double c) { return {Kind::Robin, 0.0, c}; }

  /// Ghost value beyond the boundary node for the Robin row; `inner` is the first interior node.
  /// Left: u_{-1} = u_1 - 2 h c u_0.  Right: u_n = u_{n-2} + 2 h c u_{n-1}.
  [[nodiscard]] double ghost(double boundary, double inner, double h, bool right) const {
    return right ? inner + 2.0 * h * coef * boundary : inner - 2.0 * h * coef * boundary;
  }
};

/// Thomas algorithm. sub[0] and sup[n-1] are ignored; rhs is overwritten with the solution.
inline void solve_tridiagonal(std::span<const double> sub, std::span<double> diag,
                              std::span<const double> sup, std::span<double> rhs) {
  const std::size_t n = diag.size();
  for (std::size_t i = 1; i < n; ++i) {
    const double m = sub[i] / diag[i - 1];
    diag[i] -= m * sup[i - 1];
    rhs[i] -= m * rhs[i - 1];
  }
  rhs[n - 1] /= diag[n - 1];
  for (std::size_t i = n - 1; i-- > 0;) rhs[i] = (rhs[i] - sup[i] * rhs[i + 1]) / diag[i];
}

/// Advances u_t = u_xx by dt with the trapezoidal rule. Unconditionally stable; the explicit
/// half keeps nonnegative data nonnegative (and ordered data ordered) when dt <= h^2.
inline void crank_nicolson_diffusion(std::span<double> u, double h, double dt,
                                     const BoundaryRow& left, const BoundaryRow& right) {
  const std::size_t n = u.size();
  if (n < 3) throw InvalidParameterError("diffusion needs at least 3 nodes");
  const double r = 0.5 * dt / (h * h);
  std::vector<double> sub(n, -r), diag(n, 1.0 + 2.0 * r), sup(n, -r), rhs(n);

  for (std::size_t i = 1; i + 1 < n; ++i) rhs[i] = r * u[i - 1] + (1.0 - 2.0 * r) * u[i] + r * u[i + 1];

  if (left.kind == BoundaryRow::Kind::Dirichlet) {
    diag[0] = 1.0;
    sup[0] = 0.0;
    rhs[0] = left.value;
  } else {
    // Ghost u_{-1} = u_1 - 2 h c u_0 folded into the row.
    const double k = 2.0 + 2.0 * h * left.coef;
    diag[0] = 1.0 + r * k;
    sup[0] = -2.0 * r;
    rhs[0] = (1.0 - r * k) * u[0] + 2.0 * r * u[1];
  }
  if (right.kind == BoundaryRow::Kind::Dirichlet) {
    diag[n - 1] = 1.0;
    sub[n - 1] = 0.0;
    rhs[n - 1] = right.value;
  } else {
    const double k = 2.0 - 2.0 * h * right.coef;
    diag[n - 1] = 1.0 + r * k;
    sub[n - 1] = -2.0 * r;
    rhs[n - 1] = (1.0 - r * k) * u[n - 1] + 2.0 * r * u[n - 2];
  }
  solve_tridiagonal(sub, diag, sup, rhs);
  std::copy(rhs.begin(), rhs.end(), u.begin());
}

}  // namespace chemofront
