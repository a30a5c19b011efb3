#pragma once

// Brute-force radial oracle: second-order finite differences for
//
//   -1/2 (R'' + R'/rho) + [m^2/(2 rho^2) + (1+nu^2/4) rho^2/2 + b/rho - m nu/2] R = E R
//
// on the staggered grid rho_i = (i - 1/2) h, i = 1..N, with the flux form
// (rho R')' so that no boundary condition is needed at the origin and
// R(rho_max) = 0. The symmetrized tridiagonal matrix is diagonalized by
// Sturm-sequence bisection. Independent of the Rayleigh-Ritz machinery.

#include <algorithm>
#include <cmath>
#include <vector>

namespace oracles {

struct Tridiagonal {
  std::vector<double> diag;
  std::vector<double> off;  // off[i] couples i and i+1
};

inline Tridiagonal radial_fd_matrix(double nu, double b, int m, double rho_max, int points) {
  const double h = rho_max / points;
  Tridiagonal t;
  t.diag.resize(points);
  t.off.resize(points - 1);
  auto rho = [&](double i) { return (i - 0.5) * h; };  // i is 1-based
  for (int i = 1; i <= points; ++i) {
    const double r = rho(i);
    const double r_lo = rho(i - 0.5);  // 0 for i = 1
    const double r_hi = rho(i + 0.5);
    const double v = 0.5 * m * m / (r * r) + 0.5 * (1 + 0.25 * nu * nu) * r * r + b / r - 0.5 * m * nu;
    t.diag[i - 1] = (r_lo + r_hi) / (2 * h * h * r) + v;
    if (i < points) t.off[i - 1] = -r_hi / (2 * h * h * std::sqrt(r * rho(i + 1)));
  }
  return t;
}

// Number of eigenvalues strictly below x.
inline int sturm_count(const Tridiagonal& t, double x) {
  int count = 0;
  double q = t.diag[0] - x;
  if (q < 0) ++count;
  for (std::size_t i = 1; i < t.diag.size(); ++i) {
    const double denom = q == 0.0 ? 1e-300 : q;
    q = t.diag[i] - x - t.off[i - 1] * t.off[i - 1] / denom;
    if (q < 0) ++count;
  }
  return count;
}

// k-th smallest eigenvalue (0-based).
inline double tridiagonal_eigenvalue(const Tridiagonal& t, int k) {
  double lo = 1e300, hi = -1e300;
  for (std::size_t i = 0; i < t.diag.size(); ++i) {
    const double r = (i > 0 ? std::abs(t.off[i - 1]) : 0.0) +
                     (i + 1 < t.diag.size() ? std::abs(t.off[i]) : 0.0);
    lo = std::min(lo, t.diag[i] - r);
    hi = std::max(hi, t.diag[i] + r);
  }
  for (int it = 0; it < 200 && hi - lo > 1e-13 * std::max(1.0, std::abs(hi)); ++it) {
    const double mid = 0.5 * (lo + hi);
    if (sturm_count(t, mid) > k) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return 0.5 * (lo + hi);
}

inline double radial_fd_energy(double nu, double b, int m, int level = 0, double rho_max = 12.0,
                               int points = 10000) {
  return tridiagonal_eigenvalue(radial_fd_matrix(nu, b, m, rho_max, points), level);
}

}  // namespace oracles
