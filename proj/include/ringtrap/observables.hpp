#pragma once

// Densities, azimuthal currents and velocity expectation values of the
// stationary states psi = chi(rho) exp(i m phi) / sqrt(rho).
//
// chi is normalized to 1/(2 pi) so that plane integrals carry no extra 2 pi.
// Current and velocity use the kinetic momentum p - A in the symmetric gauge,
// A = (nu/2)(-eta, xi), which leaves the azimuthal component m/rho - nu rho/2.
// Units: velocity sqrt(hbar w_t / mu), current density sqrt(mu w_t / hbar) w_t.

#include <functional>
#include <memory>
#include <vector>

#include "ringtrap/params.hpp"
#include "ringtrap/radial.hpp"

namespace ringtrap {

class RadialWavefunction {
 public:
  static RadialWavefunction from_solution(const RadialEigenSolution& sol, int level = 0);

  int m() const { return m_; }
  double chi(double rho) const;
  /// Radius beyond which chi^2 < 1e-16 max chi^2.
  double rho_max() const { return rho_max_; }

  /// 2 pi int chi^2 f(rho) drho over (0, rho_max] by adaptive Gauss-Kronrod.
  /// Throws NumericalError when the error estimate exceeds 1e-12.
  template <class F>
  double expectation(F&& f) const;

 private:
  double integrate(const std::function<double(double)>& f) const;

  int m_ = 0;
  std::shared_ptr<const ReducedSector> sector_;
  Eigen::VectorXd coeffs_;  // orthonormal-basis coefficients / sqrt(2 pi)
  double rho_max_ = 0.0;
};

template <class F>
double RadialWavefunction::expectation(F&& f) const {
  return integrate([&](double r) { return f(r); });
}

/// 2 pi int chi^2 drho; 1 for a normalized state.
double total_probability(const RadialWavefunction& wf);

struct CurrentField {
  std::vector<double> rho;
  std::vector<double> j_phi;  // J(rho) = (m/rho - nu rho/2) chi^2 / rho
};

/// Throws ConfigError for rho <= 0.
CurrentField current_density(const RadialWavefunction& wf, const TrapParams& tp,
                             const std::vector<double>& rho_grid);

struct CurrentVector {
  double x, y, jx, jy;
};

/// Cartesian samples of J on a (points x points) grid over [-extent, extent]^2
/// with a half-cell offset so the origin is never sampled.
std::vector<CurrentVector> current_vector_field(const RadialWavefunction& wf, const TrapParams& tp,
                                                double extent, int points);

/// <v_phi> = 2 pi int (m/rho - nu rho/2) chi^2 drho = <m/rho> - (nu/2)<rho>.
double velocity_expectation(const RadialWavefunction& wf, const TrapParams& tp);

/// <rho^p>.
double radial_moment(const RadialWavefunction& wf, double p);

struct DensityProfile {
  std::vector<double> rho;
  std::vector<double> density;  // 2 pi rho |psi|^2 = 2 pi chi^2
  double mean_rho = 0.0;
  double peak_rho = 0.0;
};

DensityProfile density_profile(const RadialWavefunction& wf, const std::vector<double>& rho_grid);

struct VelocitySweepRow {
  double nu = 0.0;
  int m_star = 0;
  double energy = 0.0;
  double velocity = 0.0;
};

/// Ground-state velocity for every nu in the ascending grid. Points are
/// evaluated on a small thread pool; rows come back in grid order.
std::vector<VelocitySweepRow> ground_velocity_sweep(double b, const std::vector<double>& nu_grid,
                                                    int basis_size = kDefaultBasisSize,
                                                    MRange range = {});

struct VelocityJump {
  std::size_t index = 0;  // rows[index] and rows[index + 1] straddle the jump
  int m_before = 0, m_after = 0;
  double jump = 0.0;      // velocity after minus before
};

/// Places where m_star changes between consecutive rows.
std::vector<VelocityJump> velocity_jumps(const std::vector<VelocitySweepRow>& rows);

/// Ground-state velocity of sector m at field tp.
double sector_velocity(const TrapParams& tp, int m, int basis_size = kDefaultBasisSize);

}  // namespace ringtrap
