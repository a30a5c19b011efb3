#pragma once

// Quadrature oracle for the raw-basis matrices. Works with R_k = u_k / sqrt(rho)
// in the two-dimensional weak form
//
//   S_jk = int R_j R_k rho drho
//   H_jk = int [ 1/2 (R_j' R_k' + m^2 R_j R_k / rho^2)
//              + (1/2 (1 + nu^2/4) rho^2 + b / rho - m nu / 2) R_j R_k ] rho drho
//
// which uses only first derivatives and never touches Gamma functions.

#include <boost/math/quadrature/exp_sinh.hpp>
#include <cmath>
#include <utility>

namespace oracles {

struct QuadEntry {
  long double value;
  long double error;
};

template <class F>
QuadEntry half_line(F f) {
  boost::math::quadrature::exp_sinh<long double> integrator;
  long double err = 0, l1 = 0;
  const long double v = integrator.integrate(f, 0.0L, std::numeric_limits<long double>::infinity(),
                                             1e-17L, &err, &l1);
  return {v, err};
}

inline std::pair<QuadEntry, QuadEntry> matrix_entry(int m, double alpha, double nu, double b, int j,
                                                    int k) {
  const int am = std::abs(m);
  const long double a = alpha;
  auto R = [&](int n, long double r) {
    if (r > 60) return 0.0L;
    return std::pow(r, (long double)(am + n)) * std::exp(-a * r * r);
  };
  auto dR = [&](int n, long double r) {
    if (r > 60) return 0.0L;
    const long double p = am + n;
    const long double lead = p == 0 ? 0.0L : p * std::pow(r, p - 1);
    return (lead - 2 * a * std::pow(r, p + 1)) * std::exp(-a * r * r);
  };
  const QuadEntry s = half_line([&](long double r) { return R(j, r) * R(k, r) * r; });
  const QuadEntry h = half_line([&](long double r) {
    const long double rr = R(j, r) * R(k, r);
    const long double pot = 0.5L * (1 + 0.25L * nu * nu) * r * r + b / r - 0.5L * m * nu;
    long double kin = 0.5L * dR(j, r) * dR(k, r) * r;
    if (m != 0) kin += 0.5L * m * m * rr / r;
    return kin + pot * rr * r;
  });
  return {s, h};
}

}  // namespace oracles
