#pragma once

// Fisher-KPP reference stepper written independently of the library: explicit logistic
// reaction followed by Crank-Nicolson diffusion, Dirichlet left, Robin right.

#include <vector>

namespace oracle {

inline void fisher_step(std::vector<double>& u, double h, double dt, double a, double b,
                        double left_value, double right_coef) {
  const std::size_t n = u.size();
  for (double& x : u) x = x + dt * x * (a - b * x);
  const double r = dt / (2.0 * h * h);
  std::vector<double> lower(n, -r), mid(n, 1.0 + 2.0 * r), upper(n, -r), rhs(n);
  mid[0] = 1.0;
  upper[0] = 0.0;
  rhs[0] = left_value;
  for (std::size_t i = 1; i + 1 < n; ++i) rhs[i] = u[i] + r * (u[i - 1] - 2.0 * u[i] + u[i + 1]);
  // Ghost node u_n = u_{n-2} + 2 h c u_{n-1}.
  const double k = 2.0 - 2.0 * h * right_coef;
  mid[n - 1] = 1.0 + r * k;
  lower[n - 1] = -2.0 * r;
  rhs[n - 1] = u[n - 1] + r * (2.0 * u[n - 2] - k * u[n - 1]);
  for (std::size_t i = 1; i < n; ++i) {
    const double m = lower[i] / mid[i - 1];
    mid[i] -= m * upper[i - 1];
    rhs[i] -= m * rhs[i - 1];
  }
  u[n - 1] = rhs[n - 1] / mid[n - 1];
  for (std::size_t i = n - 1; i-- > 0;) u[i] = (rhs[i] - upper[i] * u[i + 1]) / mid[i];
}

}  // namespace oracle
