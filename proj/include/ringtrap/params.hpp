#pragma once

// Parameterization of two identical charges in an isotropic 2D harmonic trap
// with a homogeneous magnetic field along z, reduced to relative coordinates.
//
// Lengths are measured in sqrt(hbar / (mu w_t)), energies in hbar w_t and
// times in 1 / w_t. The dimensionless Hamiltonian is
//
//   h = -1/2 lap + 1/2 (1 + nu^2/4) rho^2 + b / rho - (nu/2) L_z
//
// and the radial reduction psi = chi(rho) e^{i m phi} / sqrt(rho) gives
//
//   h' = 1/2 ( -d^2/drho^2 + V(rho) ),
//   V  = -m nu + (1 + nu^2/4) rho^2 + (m^2 - 1/4) / rho^2 + 2 b / rho.

#include <cmath>

namespace ringtrap {

namespace constants {
// CODATA 2018.
inline constexpr double hbar = 1.054571817e-34;             // J s
inline constexpr double elementary_charge = 1.602176634e-19;  // C
inline constexpr double vacuum_permittivity = 8.8541878128e-12;  // F / m
inline constexpr double proton_mass = 1.67262192369e-27;     // kg
inline constexpr double pi = 3.14159265358979323846;
inline constexpr double coulomb_constant = 1.0 / (4.0 * pi * vacuum_permittivity);
}  // namespace constants

struct PhysicalParams {
  double reduced_mass = 0.0;        // kg
  double charge = 0.0;              // C, charge of each particle
  double trap_frequency = 0.0;      // rad / s
  double magnetic_induction = 0.0;  // T, sign sets the field direction
};

/// Dimensionless control parameters.
///
/// `nu` is stored non-negative; a field pointing along -z is represented by
/// `field_sign = -1` and is physically equivalent to the +z problem with every
/// angular momentum quantum number flipped, m -> -m.
struct TrapParams {
  double nu = 0.0;
  double b = 0.0;
  int field_sign = +1;

  /// Builds a validated parameter set. A negative `nu` is folded into
  /// `field_sign`.
  static TrapParams make(double nu, double b);

  double b_prime() const { return 2.0 * b; }
  /// a = sqrt(1 + nu^2/4), inverse width of the b = 0 ground state.
  double gauss_width() const { return std::sqrt(1.0 + 0.25 * nu * nu); }

  /// Maps a lab-frame quantum number onto the canonical (nu >= 0) problem.
  int canonical_m(int m) const { return field_sign * m; }

  bool operator==(const TrapParams&) const = default;
};

struct QuantumNumbers {
  int m = 0;
  int n = 0;
};

/// Natural units attached to a physical configuration.
struct UnitScales {
  double length;    // m,   sqrt(hbar / (mu w_t))
  double energy;    // J,   hbar w_t
  double time;      // s,   1 / w_t
  double velocity;  // m/s, sqrt(hbar w_t / mu)
  double current;   // 1/(m s), current density unit sqrt(mu w_t / hbar) w_t
};

/// nu = |e B_z| / (mu w_t), b = (k e^2 / hbar) sqrt(mu / (hbar w_t)).
/// The reduced mass is used wherever a mass enters.
TrapParams from_physical(const PhysicalParams& p);

UnitScales unit_scales(const PhysicalParams& p);

/// V(rho) of the radial equation; throws ConfigError for rho <= 0.
double effective_potential(const TrapParams& tp, int m, double rho);

/// dV/drho.
double effective_potential_slope(const TrapParams& tp, int m, double rho);

/// Position of the lowest interior local minimum of V(rho), refined by
/// golden-section search. Throws NumericalError if V has no interior minimum
/// (e.g. m = 0, b = 0 where the Langer term makes V monotone).
double effective_potential_minimum(const TrapParams& tp, int m);

/// Exact b = 0 levels E / (hbar w_t) = a (2n + |m| + 1) - m nu / 2.
double fock_darwin_energy(const TrapParams& tp, const QuantumNumbers& q);

}  // namespace ringtrap
