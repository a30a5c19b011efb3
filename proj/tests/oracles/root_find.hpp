#pragma once

// Test-only bracketing root finder.

#include <cmath>
#include <stdexcept>

namespace oracles {

template <class F>
double bisect(F f, double lo, double hi, double tol) {
  double flo = f(lo);
  if ((flo > 0) == (f(hi) > 0)) throw std::runtime_error("bisect: no sign change");
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if ((fm > 0) == (flo > 0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace oracles
