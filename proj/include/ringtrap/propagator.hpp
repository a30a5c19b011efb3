#pragma once

// Strang split-operator propagation of the relative-coordinate wave function.
//
// The lab-frame Hamiltonian is h = h2 - (nu/2) L_z with
// h2 = -lap/2 + (1 + nu^2/4) rho^2 / 2 + b / rho. Since L_z commutes with h2,
// psi_lab = exp(i theta L_z) phi with d theta / d tau = nu / 2 removes the
// rotation term, and phi evolves under h2 alone. States are stepped in that
// rotating frame and rotated back only when observed.

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ringtrap/grid.hpp"
#include "ringtrap/params.hpp"
#include "ringtrap/radial.hpp"

namespace ringtrap {

enum class TimeMode { Real, Imaginary };

enum class RampKind { Step, Linear, Smooth };

const char* to_string(RampKind k);
RampKind ramp_from_string(const std::string& s);

/// Field switch-on profile nu(tau), non-decreasing towards nu_final >= 0.
struct RampProtocol {
  RampKind kind = RampKind::Step;
  double nu_final = 0.0;
  double tau_ramp = 0.0;

  static RampProtocol make(RampKind kind, double nu_final, double tau_ramp);

  double nu(double tau) const;
  /// Integral of nu from 0 to tau, in closed form.
  double integral(double tau) const;
};

/// Precomputed grid operators for one GridSpec and Coulomb model.
class SplitOperator {
 public:
  explicit SplitOperator(const GridSpec& spec, CoulombModel coulomb = CoulombModel::CellAverage);

  const GridSpec& spec() const { return spec_; }
  const Fft2d& fft() const { return fft_; }
  CoulombModel coulomb() const { return coulomb_; }

  /// One Strang step of h2(nu, b) on rotating-frame amplitudes. Imaginary
  /// mode does not renormalize. Returns max |V2| dtau.
  double step(Field& f, double nu, double b, double dtau, TimeMode mode);

  /// <f|h2|f> / <f|f> with a spectral kinetic term.
  double h2_expectation(const Field& f, double nu, double b) const;

  double potential_at(std::size_t index, double nu, double b) const;

 private:
  void prepare(double nu, double b, double dtau, TimeMode mode);

  GridSpec spec_;
  Fft2d fft_;
  CoulombModel coulomb_;
  std::vector<double> r2_, inv_r_, k2_;
  // Cached half-kick and kinetic factors.
  std::vector<Complex> half_kick_, kinetic_;
  double cached_nu_ = -1.0, cached_b_ = -1.0, cached_dtau_ = -1.0;
  TimeMode cached_mode_ = TimeMode::Real;
  double max_phase_ = 0.0;
  bool cache_valid_ = false;
};

/// Single step with constant tp. A lab-frame state receives the rotation
/// exp(i (nu/2) dtau L_z) explicitly; a rotating-frame state only advances
/// theta. Imaginary mode evolves under h2 alone and renormalizes.
GridState strang_step(const GridState& state, const TrapParams& tp, double dtau, TimeMode mode,
                      CoulombModel coulomb = CoulombModel::CellAverage,
                      std::vector<std::string>* warnings = nullptr);

struct ObservableRecord {
  double tau = 0.0;
  double nu = 0.0;
  double norm = 0.0;
  double energy = 0.0;    // <h> in the lab frame
  double lz = 0.0;
  double vx = 0.0, vy = 0.0;  // kinetic momentum <p - A>, lab frame
  double autocorr = 0.0;      // |<psi(0)|psi(tau)>|
  double cx = 0.0, cy = 0.0;  // <xi>, <eta>, lab frame
};

struct Snapshot {
  double nu = 0.0;
  GridState state;
};

struct EvolveOptions {
  double dtau = 1e-3;
  double tau_end = 1.0;
  std::optional<RampProtocol> ramp;  // constant tp.nu when absent
  int observe_every = 10;
  std::vector<double> snapshot_times;
  Frame snapshot_frame = Frame::Lab;
  CoulombModel coulomb = CoulombModel::CellAverage;
  double norm_tolerance = 1e-6;
  // Abort when the probability within 2 cells of the edge exceeds
  // max(boundary_tolerance, 2 x its initial value).
  double boundary_tolerance = 1e-8;
};

struct EvolveResult {
  std::vector<ObservableRecord> records;
  std::vector<Snapshot> snapshots;
  GridState final_state;  // rotating frame
  std::vector<std::string> warnings;
};

using Observer = std::function<void(const ObservableRecord&)>;

/// Real-time propagation from a lab-frame state. tau_end must be an integer
/// multiple of dtau. Throws NumericalError on norm drift or boundary contact.
EvolveResult evolve(const GridState& initial, const TrapParams& tp, const EvolveOptions& opts,
                    const std::vector<Observer>& observers = {});

struct SeriesJumpReport {
  std::string series;
  bool finite = true;     // no NaN or infinity anywhere in the series
  double std_dev = 0.0;   // over the window, floored at 1e-9 (1 + |mean|)
  double max_jump = 0.0;  // largest change between consecutive records in the window
  bool ok() const { return finite && max_jump <= 10.0 * std_dev; }
};

/// Per-observable check of the records with tau > tau_from: finiteness over
/// the whole series, and the largest consecutive-record jump against the
/// standard deviation of the window. The floor keeps conserved quantities,
/// whose scatter is pure roundoff, from failing on noise.
std::vector<SeriesJumpReport> post_ramp_jumps(const std::vector<ObservableRecord>& records, double tau_from);

/// Observables of a rotating-frame state at field nu.
ObservableRecord observe(const SplitOperator& op, const GridState& state, double nu, double b,
                         const GridState* initial_lab = nullptr);

struct ImagTimeOptions {
  double dtau = 0.05;        // first rung of the step ladder
  double final_dtau = 5e-4;
  double tol = 1e-6;         // energy decrease per unit tau at convergence
  int block = 10;            // steps between energy checks
  int max_steps = 200000;
  double leakage_tolerance = 1e-6;
  // Project back onto the requested sector whenever |<L_z> - m| exceeds
  // leakage_tolerance / 10. Without it, sectors that share m mod 4 relax into
  // each other on the Cartesian grid.
  bool project_sector = true;
  CoulombModel coulomb = CoulombModel::CellAverage;
};

struct ImagTimeResult {
  double energy = 0.0;     // <h2> - (nu/2) <L_z>
  double h2_energy = 0.0;
  double lz = 0.0;
  GridState state;         // rotating frame, normalized
  int steps = 0;
  int rejected_blocks = 0;
  int projections = 0;
};

/// Imaginary-time relaxation under h2 from an arbitrary start. When `sector`
/// is given, <L_z> must stay within leakage_tolerance of it.
ImagTimeResult imaginary_time_relax(const GridState& start, const TrapParams& tp,
                                    const ImagTimeOptions& opts = {},
                                    std::optional<int> sector = std::nullopt);

/// Seed rho^|m| exp(i m phi) exp(-rho^2/2), normalized, with m the L_z
/// eigenvalue in the lab (field_sign applied by the caller if needed).
GridState sector_seed(const GridSpec& spec, int m);

/// Lowest state of the m_seed sector.
ImagTimeResult imaginary_time_ground(const GridSpec& spec, const TrapParams& tp, int m_seed,
                                     const ImagTimeOptions& opts = {});

struct ImagTimeScan {
  int m_star = 0;
  std::vector<std::pair<int, double>> sector_energies;
};

/// imaginary_time_ground for every m in range, with the same tie rule as
/// ground_state_scan.
ImagTimeScan imaginary_time_scan(const GridSpec& spec, const TrapParams& tp, MRange range,
                                 const ImagTimeOptions& opts = {});

}  // namespace ringtrap
