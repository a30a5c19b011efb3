#pragma once

// Rayleigh-Ritz solution of the radial problem h' chi = E chi in the basis
//
//   u_k(rho) = rho^(1/2 + |m| + k) exp(-alpha rho^2),   k = 0 .. K-1.
//
// The Gram matrix of this basis is Hankel-like and its condition number grows
// roughly as 10^(1.1 K) (about 1e33 at K = 30), far beyond double precision.
// The Cholesky reduction S = L L^T and the transformation of every operator to
// the Gram-Schmidt orthonormalized basis phi = L^{-1} u are therefore carried
// out in 120-digit arithmetic once per (m, K, alpha). The reduced operators are
// well conditioned and are rounded to double; the per-parameter eigenproblem
// is then an ordinary dense symmetric one.
//
// The orthonormal functions are phi_j(rho) = rho^(1/2+|m|) exp(-alpha rho^2)
// q_j(rho), with q_j orthonormal polynomials for the weight
// rho^(2|m|+1) exp(-2 alpha rho^2). They are evaluated through their
// three-term recurrence, which is stable in double precision.

#include <Eigen/Dense>
#include <memory>
#include <optional>
#include <utility>
#include <vector>

#include "ringtrap/params.hpp"

namespace ringtrap {

enum class BasisExponent {
  Half,     // alpha = 1/2
  Matched,  // alpha = a/2, the exact b = 0 ground-state decay
};

struct RadialBasis {
  int m = 0;
  int size = 30;
  double alpha = 0.5;

  static RadialBasis make(int m, int size, double alpha = 0.5);
  static RadialBasis make(int m, int size, BasisExponent kind, const TrapParams& tp);

  /// Power of rho carried by u_k.
  double power(int k) const { return 0.5 + std::abs(m) + k; }
  /// Raw (unnormalized) basis function u_k(rho).
  double eval(int k, double rho) const;
};

/// Basis operators reduced to the orthonormalized basis. Shared between all
/// solutions with the same (m, K, alpha).
struct ReducedSector {
  RadialBasis basis;
  Eigen::MatrixXd kinetic;      // -d2/drho2 + (m^2 - 1/4) / rho^2
  Eigen::MatrixXd rho_squared;  // rho^2
  Eigen::MatrixXd inv_rho;      // 1 / rho
  Eigen::MatrixXd rho;          // rho, tridiagonal (Jacobi matrix)
  double log_norm0 = 0.0;       // log q_0 = -1/2 log S_00

  /// Values phi_j(rho) for j = 0 .. K-1.
  Eigen::VectorXd orthonormal_functions(double rho) const;
};

/// Cached, thread-safe access to the reduced operators.
std::shared_ptr<const ReducedSector> reduced_sector(const RadialBasis& basis);

struct RadialEigenSolution {
  int m = 0;
  TrapParams params;
  RadialBasis basis;
  std::vector<double> energies;  // E / (hbar w_t), ascending
  /// Column j holds state j expanded in the orthonormalized basis
  /// phi = L^{-1} u; see `monomial_coefficients` for the raw-basis form.
  Eigen::MatrixXd coefficients;
  std::shared_ptr<const ReducedSector> sector;
  /// |E_0(K + 10) - E_0(K)| when the convergence sentinel ran, NaN otherwise.
  double convergence_shift = std::numeric_limits<double>::quiet_NaN();

  double ground_energy() const { return energies.front(); }
};

struct SolveOptions {
  BasisExponent exponent = BasisExponent::Half;
  bool sentinel = false;
  double sentinel_tolerance = 1e-7;
};

inline constexpr int kDefaultBasisSize = 30;

/// Overlap S_jk = <u_j|u_k> and Hamiltonian H_jk = <u_j|h'|u_k> in the raw
/// basis, from closed-form Gamma-function moments. H is symmetrized.
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> overlap_and_hamiltonian_matrices(
    const RadialBasis& basis, const TrapParams& tp);

/// All K eigenpairs of H c = E S c for the canonical quantum number m
/// (nu >= 0 convention of TrapParams).
RadialEigenSolution solve_sector(const TrapParams& tp, int m, int basis_size = kDefaultBasisSize,
                                 const SolveOptions& opts = {});

/// Raw-basis coefficient vectors c = L^{-T} y of the requested state, rounded
/// to double. Individual entries are large and alternate in sign.
Eigen::VectorXd monomial_coefficients(const RadialEigenSolution& sol, int level);

/// max_ij |c_i^T S c_j - delta_ij| over the returned eigenvectors, evaluated
/// with the raw Gram matrix in extended precision.
double s_orthonormality_defect(const RadialEigenSolution& sol);

/// <chi|h'|chi>/<chi|chi> for chi = rho^(|m|+1/2) exp(-a rho^2 / 2).
double crude_variational_energy(const TrapParams& tp, int m);

struct MRange {
  int lo = -3;
  int hi = 6;
  bool contains(int m) const { return m >= lo && m <= hi; }
};

struct GroundStateRecord {
  double nu = 0.0;
  int m_star = 0;
  double energy = 0.0;
  RadialEigenSolution solution;
  std::vector<std::pair<int, double>> sector_energies;  // (m, E_0(m)), ascending m
};

/// Ground state across m sectors. Ties (|dE| <= 1e-12 (1 + |E|)) go to the
/// smaller |m|, then to positive m.
GroundStateRecord ground_state_scan(const TrapParams& tp, MRange range = {},
                                    int basis_size = kDefaultBasisSize,
                                    const SolveOptions& opts = {});

struct CrossingRecord {
  double b = 0.0;
  int m1 = 0;
  int m2 = 0;
  double nu_star = 0.0;
  double energy = 0.0;
};

/// Bisection for E_0(m1, nu) = E_0(m2, nu) inside `nu_bracket` to
/// |dE| < 1e-10. Throws BracketError when the difference does not change sign.
CrossingRecord find_crossing(const TrapParams& tp_template, int m1, int m2,
                             std::pair<double, double> nu_bracket,
                             int basis_size = kDefaultBasisSize);

/// Ground-state crossings on [nu_lo, nu_hi]: m_star is tracked on a grid of
/// spacing `step` and every change of m_star is refined with find_crossing.
std::vector<CrossingRecord> find_ground_crossings(double b, double nu_lo, double nu_hi,
                                                  double step, MRange range = {},
                                                  int basis_size = kDefaultBasisSize);

}  // namespace ringtrap
