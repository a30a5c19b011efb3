#include "ringtrap/params.hpp"

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "ringtrap/error.hpp"

namespace ringtrap {

namespace {

void require_finite(double v, const char* name) {
  if (!std::isfinite(v)) {
    throw ConfigError(std::string(name) + " must be finite");
  }
}

}  // namespace

TrapParams TrapParams::make(double nu, double b) {
  require_finite(nu, "nu");
  require_finite(b, "b");
  if (b < 0.0) {
    throw ConfigError("b must be non-negative (repulsive Coulomb interaction)");
  }
  TrapParams tp;
  tp.nu = std::abs(nu);
  tp.b = b;
  tp.field_sign = std::signbit(nu) && nu != 0.0 ? -1 : +1;
  return tp;
}

TrapParams from_physical(const PhysicalParams& p) {
  require_finite(p.reduced_mass, "reduced_mass");
  require_finite(p.charge, "charge");
  require_finite(p.trap_frequency, "trap_frequency");
  require_finite(p.magnetic_induction, "magnetic_induction");
  if (p.reduced_mass <= 0.0) throw ConfigError("reduced_mass must be positive");
  if (p.trap_frequency <= 0.0) throw ConfigError("trap_frequency must be positive");
  if (p.charge == 0.0) throw ConfigError("charge must be non-zero");

  using namespace constants;
  const double cyclotron = p.charge * p.magnetic_induction / p.reduced_mass;
  const double nu_signed = cyclotron / p.trap_frequency;
  const double b = coulomb_constant * p.charge * p.charge / hbar *
                   std::sqrt(p.reduced_mass / (hbar * p.trap_frequency));
  return TrapParams::make(nu_signed, b);
}

UnitScales unit_scales(const PhysicalParams& p) {
  using constants::hbar;
  const double mw = p.reduced_mass * p.trap_frequency;
  UnitScales u{};
  u.length = std::sqrt(hbar / mw);
  u.energy = hbar * p.trap_frequency;
  u.time = 1.0 / p.trap_frequency;
  u.velocity = std::sqrt(hbar * p.trap_frequency / p.reduced_mass);
  u.current = std::sqrt(mw / hbar) * p.trap_frequency;
  return u;
}

double effective_potential(const TrapParams& tp, int m, double rho) {
  if (!(rho > 0.0)) {
    throw ConfigError("effective_potential: rho must be positive");
  }
  const double md = m;
  return -md * tp.nu + (1.0 + 0.25 * tp.nu * tp.nu) * rho * rho +
         (md * md - 0.25) / (rho * rho) + 2.0 * tp.b / rho;
}

double effective_potential_slope(const TrapParams& tp, int m, double rho) {
  if (!(rho > 0.0)) {
    throw ConfigError("effective_potential_slope: rho must be positive");
  }
  const double md = m;
  return 2.0 * (1.0 + 0.25 * tp.nu * tp.nu) * rho -
         2.0 * (md * md - 0.25) / (rho * rho * rho) - 2.0 * tp.b / (rho * rho);
}

double effective_potential_minimum(const TrapParams& tp, int m) {
  // Geometric scan for the lowest interior local minimum, then golden section
  // inside the bracketing cells.
  constexpr int samples = 4000;
  const double lo = 1e-4;
  const double hi = 1e2;
  const double ratio = std::pow(hi / lo, 1.0 / (samples - 1));
  std::vector<double> rho(samples), v(samples);
  for (int i = 0; i < samples; ++i) {
    rho[i] = lo * std::pow(ratio, i);
    v[i] = effective_potential(tp, m, rho[i]);
  }
  int best = -1;
  for (int i = 1; i + 1 < samples; ++i) {
    if (v[i] <= v[i - 1] && v[i] <= v[i + 1] && (best < 0 || v[i] < v[best])) {
      best = i;
    }
  }
  if (best < 0) {
    throw NumericalError("effective potential has no interior minimum for m = " +
                         std::to_string(m));
  }

  double a = rho[best - 1];
  double c = rho[best + 1];
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = c - inv_phi * (c - a);
  double x2 = a + inv_phi * (c - a);
  double f1 = effective_potential(tp, m, x1);
  double f2 = effective_potential(tp, m, x2);
  while (c - a > 1e-13 * (1.0 + c)) {
    if (f1 < f2) {
      c = x2;
      x2 = x1;
      f2 = f1;
      x1 = c - inv_phi * (c - a);
      f1 = effective_potential(tp, m, x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + inv_phi * (c - a);
      f2 = effective_potential(tp, m, x2);
    }
  }
  return 0.5 * (a + c);
}

double fock_darwin_energy(const TrapParams& tp, const QuantumNumbers& q) {
  return tp.gauss_width() * (2.0 * q.n + std::abs(q.m) + 1.0) - 0.5 * q.m * tp.nu;
}

}  // namespace ringtrap
