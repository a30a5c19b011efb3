#include "ringtrap/radial.hpp"

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <boost/multiprecision/eigen.hpp>
#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <string>
#include <tuple>

#include "ringtrap/error.hpp"

namespace ringtrap {

namespace {

using Real = boost::multiprecision::number<boost::multiprecision::cpp_bin_float<120>,
                                           boost::multiprecision::et_off>;
using RealMatrix = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic>;
using RealVector = Eigen::Matrix<Real, Eigen::Dynamic, 1>;

// Relative Cholesky pivot below which the equilibrated Gram matrix is treated
// as singular. Leaves ~20 of the 120 digits as guard.
const Real kPivotFloor = Real("1e-100");

// log of M(p) = int_0^inf rho^p exp(-2 alpha rho^2) drho
//             = 1/2 Gamma((p+1)/2) (2 alpha)^(-(p+1)/2).
Real log_moment(const Real& p, const Real& two_alpha_log) {
  const Real half_p1 = (p + 1) / 2;
  return boost::multiprecision::lgamma(half_p1) - half_p1 * two_alpha_log -
         boost::multiprecision::log(Real(2));
}

// Raw-basis operator matrices in extended precision, equilibrated by the
// overlap diagonal. Moments are formed from log-Gamma values.
struct ExtendedSector {
  RadialBasis basis;
  RealVector log_diag;  // log S_kk
  RealMatrix overlap;   // equilibrated: D S D with D = diag(S_kk^-1/2)
  RealMatrix kinetic;
  RealMatrix rho_squared;
  RealMatrix inv_rho;
  RealMatrix rho;
  RealMatrix chol;  // lower factor of the equilibrated overlap
};

ExtendedSector build_extended(const RadialBasis& basis) {
  const int K = basis.size;
  const int am = std::abs(basis.m);
  const Real alpha = Real(basis.alpha);
  const Real two_alpha_log = boost::multiprecision::log(2 * alpha);
  auto s = [&](int k) { return Real(1) / 2 + am + k; };

  ExtendedSector ex;
  ex.basis = basis;
  ex.log_diag.resize(K);
  for (int k = 0; k < K; ++k) ex.log_diag(k) = log_moment(2 * s(k), two_alpha_log);

  ex.overlap.resize(K, K);
  ex.kinetic.resize(K, K);
  ex.rho_squared.resize(K, K);
  ex.inv_rho.resize(K, K);
  ex.rho.resize(K, K);

  // Every entry is a moment M(p) with p = 2|m| + 1 + j + k + shift, shift in
  // [-2, 2]; tabulate those once and equilibrate with D = diag(S_kk^-1/2).
  const int offset = 2;
  std::vector<Real> moment(2 * K + 3);
  for (int i = 0; i < static_cast<int>(moment.size()); ++i) {
    const int p = 2 * am + 1 + i - offset;
    moment[i] = p < 0 ? Real(0) : boost::multiprecision::exp(log_moment(Real(p), two_alpha_log));
  }
  RealVector d(K);
  for (int k = 0; k < K; ++k) d(k) = boost::multiprecision::exp(-ex.log_diag(k) / 2);
  auto M = [&](int j, int k, int shift) { return moment[j + k + shift + offset]; };

  for (int j = 0; j < K; ++j) {
    for (int k = 0; k < K; ++k) {
      const Real scale = d(j) * d(k);
      ex.overlap(j, k) = M(j, k, 0) * scale;
      ex.rho_squared(j, k) = M(j, k, 2) * scale;
      ex.inv_rho(j, k) = M(j, k, -1) * scale;
      ex.rho(j, k) = M(j, k, 1) * scale;

      // u_k'' = [s(s-1) rho^(s-2) - 2 alpha (2s+1) rho^s + 4 alpha^2 rho^(s+2)] e^(-alpha rho^2)
      // and s(s-1) = (|m|+k)^2 - 1/4, so the rho^(s-2) coefficient of
      // -u_k'' + (m^2 - 1/4) rho^-2 u_k is -k (2|m| + k).
      Real t = 2 * alpha * (2 * s(k) + 1) * M(j, k, 0) - 4 * alpha * alpha * M(j, k, 2);
      if (k > 0) t -= Real(k) * (2 * am + k) * M(j, k, -2);
      ex.kinetic(j, k) = t * scale;
    }
  }
  ex.kinetic = ((ex.kinetic + ex.kinetic.transpose()) / 2).eval();

  // Cholesky with an explicit pivot test; silent regularization would break
  // the variational bound.
  RealMatrix L = RealMatrix::Zero(K, K);
  for (int j = 0; j < K; ++j) {
    Real pivot = ex.overlap(j, j);
    for (int k = 0; k < j; ++k) pivot -= L(j, k) * L(j, k);
    if (!(pivot > kPivotFloor)) {
      throw ConditioningError("radial basis overlap matrix is not numerically positive definite "
                              "at basis size K = " +
                                  std::to_string(K) + " (m = " + std::to_string(basis.m) +
                                  "); reduce K",
                              K);
    }
    L(j, j) = boost::multiprecision::sqrt(pivot);
    for (int i = j + 1; i < K; ++i) {
      Real v = ex.overlap(i, j);
      for (int k = 0; k < j; ++k) v -= L(i, k) * L(j, k);
      L(i, j) = v / L(j, j);
    }
  }
  ex.chol = std::move(L);
  return ex;
}

Eigen::MatrixXd reduce(const RealMatrix& chol, const RealMatrix& op) {
  const auto L = chol.triangularView<Eigen::Lower>();
  RealMatrix y = L.solve(op);
  RealMatrix z = L.solve(RealMatrix(y.transpose()));
  const int K = static_cast<int>(op.rows());
  Eigen::MatrixXd out(K, K);
  for (int i = 0; i < K; ++i) {
    for (int j = 0; j < K; ++j) {
      out(i, j) = static_cast<double>((z(i, j) + z(j, i)) / 2);
    }
  }
  return out;
}

struct CacheKey {
  int m;
  int size;
  double alpha;
  bool operator<(const CacheKey& o) const {
    return std::tie(m, size, alpha) < std::tie(o.m, o.size, o.alpha);
  }
};

std::mutex& cache_mutex() {
  static std::mutex mu;
  return mu;
}

std::map<CacheKey, std::shared_ptr<const ReducedSector>>& cache() {
  static std::map<CacheKey, std::shared_ptr<const ReducedSector>> c;
  return c;
}

constexpr std::size_t kMaxCacheEntries = 512;

}  // namespace

RadialBasis RadialBasis::make(int m, int size, double alpha) {
  if (size < 1) throw ConfigError("radial basis size must be >= 1");
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    throw ConfigError("radial basis exponent must be positive");
  }
  return RadialBasis{m, size, alpha};
}

RadialBasis RadialBasis::make(int m, int size, BasisExponent kind, const TrapParams& tp) {
  return make(m, size, kind == BasisExponent::Half ? 0.5 : 0.5 * tp.gauss_width());
}

double RadialBasis::eval(int k, double rho) const {
  return std::pow(rho, power(k)) * std::exp(-alpha * rho * rho);
}

Eigen::VectorXd ReducedSector::orthonormal_functions(double rho_value) const {
  const int K = basis.size;
  Eigen::VectorXd phi(K);
  if (rho_value <= 0.0) {
    phi.setZero();
    return phi;
  }
  phi(0) = std::exp((0.5 + std::abs(basis.m)) * std::log(rho_value) -
                    basis.alpha * rho_value * rho_value + log_norm0);
  if (K > 1) {
    phi(1) = (rho_value - rho(0, 0)) * phi(0) / rho(0, 1);
  }
  for (int j = 1; j + 1 < K; ++j) {
    phi(j + 1) = ((rho_value - rho(j, j)) * phi(j) - rho(j - 1, j) * phi(j - 1)) / rho(j, j + 1);
  }
  return phi;
}

std::shared_ptr<const ReducedSector> reduced_sector(const RadialBasis& basis) {
  const CacheKey key{basis.m, basis.size, basis.alpha};
  {
    std::lock_guard lock(cache_mutex());
    auto it = cache().find(key);
    if (it != cache().end()) return it->second;
  }

  const ExtendedSector ex = build_extended(basis);
  auto sector = std::make_shared<ReducedSector>();
  sector->basis = basis;
  sector->kinetic = reduce(ex.chol, ex.kinetic);
  sector->rho_squared = reduce(ex.chol, ex.rho_squared);
  sector->inv_rho = reduce(ex.chol, ex.inv_rho);
  sector->rho = reduce(ex.chol, ex.rho);
  sector->log_norm0 = static_cast<double>(-ex.log_diag(0) / 2);

  std::lock_guard lock(cache_mutex());
  if (cache().size() >= kMaxCacheEntries) cache().clear();
  auto [it, inserted] = cache().emplace(key, std::move(sector));
  return it->second;
}

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> overlap_and_hamiltonian_matrices(
    const RadialBasis& basis, const TrapParams& tp) {
  const int K = basis.size;
  const int am = std::abs(basis.m);
  const Real alpha = Real(basis.alpha);
  const Real two_alpha_log = boost::multiprecision::log(2 * alpha);
  const Real confinement = 1 + Real(tp.nu) * Real(tp.nu) / 4;
  auto s = [&](int k) { return Real(1) / 2 + am + k; };
  auto moment = [&](const Real& p) { return boost::multiprecision::exp(log_moment(p, two_alpha_log)); };

  RealMatrix S(K, K), H(K, K);
  for (int j = 0; j < K; ++j) {
    for (int k = 0; k < K; ++k) {
      const Real p = s(j) + s(k);
      Real kin = 2 * alpha * (2 * s(k) + 1) * moment(p) - 4 * alpha * alpha * moment(p + 2);
      if (k > 0) kin -= Real(k) * (2 * am + k) * moment(p - 2);
      S(j, k) = moment(p);
      H(j, k) = (kin + confinement * moment(p + 2) + 2 * Real(tp.b) * moment(p - 1) -
                 Real(basis.m) * Real(tp.nu) * moment(p)) /
                2;
    }
  }
  H = ((H + H.transpose()) / 2).eval();
  Eigen::MatrixXd Sd(K, K), Hd(K, K);
  for (int j = 0; j < K; ++j) {
    for (int k = 0; k < K; ++k) {
      Sd(j, k) = static_cast<double>(S(j, k));
      Hd(j, k) = static_cast<double>(H(j, k));
    }
  }
  return {Sd, Hd};
}

namespace {

RadialEigenSolution solve_with_basis(const TrapParams& tp, const RadialBasis& basis) {
  auto sector = reduced_sector(basis);
  const int K = basis.size;
  Eigen::MatrixXd h = 0.5 * (sector->kinetic + (1.0 + 0.25 * tp.nu * tp.nu) * sector->rho_squared +
                             2.0 * tp.b * sector->inv_rho);
  h.diagonal().array() -= 0.5 * basis.m * tp.nu;

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
  if (es.info() != Eigen::Success) {
    throw NumericalError("dense symmetric eigensolver failed for m = " + std::to_string(basis.m));
  }

  RadialEigenSolution sol;
  sol.m = basis.m;
  sol.params = tp;
  sol.basis = basis;
  sol.sector = sector;
  sol.energies.assign(es.eigenvalues().data(), es.eigenvalues().data() + K);
  sol.coefficients = es.eigenvectors();
  // Sign convention: chi > 0 next to the origin, i.e. first non-negligible
  // orthonormal coefficient positive.
  for (int j = 0; j < K; ++j) {
    auto col = sol.coefficients.col(j);
    for (int i = 0; i < K; ++i) {
      if (std::abs(col(i)) > 1e-12) {
        if (col(i) < 0.0) col = -col;
        break;
      }
    }
  }
  for (double e : sol.energies) {
    if (!std::isfinite(e)) throw NumericalError("non-finite radial eigenvalue");
  }
  return sol;
}

}  // namespace

RadialEigenSolution solve_sector(const TrapParams& tp, int m, int basis_size,
                                 const SolveOptions& opts) {
  const RadialBasis basis = RadialBasis::make(m, basis_size, opts.exponent, tp);
  RadialEigenSolution sol = solve_with_basis(tp, basis);
  if (opts.sentinel) {
    const RadialBasis bigger = RadialBasis::make(m, basis_size + 10, opts.exponent, tp);
    const RadialEigenSolution check = solve_with_basis(tp, bigger);
    sol.convergence_shift = std::abs(check.ground_energy() - sol.ground_energy());
  }
  return sol;
}

Eigen::VectorXd monomial_coefficients(const RadialEigenSolution& sol, int level) {
  const ExtendedSector ex = build_extended(sol.basis);
  const int K = sol.basis.size;
  RealVector y(K);
  for (int i = 0; i < K; ++i) y(i) = Real(sol.coefficients(i, level));
  RealVector z = ex.chol.transpose().triangularView<Eigen::Upper>().solve(y);
  Eigen::VectorXd c(K);
  for (int i = 0; i < K; ++i) {
    c(i) = static_cast<double>(z(i) * boost::multiprecision::exp(-ex.log_diag(i) / 2));
  }
  return c;
}

double s_orthonormality_defect(const RadialEigenSolution& sol) {
  const ExtendedSector ex = build_extended(sol.basis);
  const int K = sol.basis.size;
  // Raw Gram matrix and raw coefficients, both in extended precision.
  RealMatrix S(K, K);
  for (int i = 0; i < K; ++i) {
    for (int j = 0; j < K; ++j) {
      S(i, j) = ex.overlap(i, j) *
                boost::multiprecision::exp((ex.log_diag(i) + ex.log_diag(j)) / 2);
    }
  }
  RealMatrix Y(K, K);
  for (int i = 0; i < K; ++i)
    for (int j = 0; j < K; ++j) Y(i, j) = Real(sol.coefficients(i, j));
  RealMatrix C = ex.chol.transpose().triangularView<Eigen::Upper>().solve(Y);
  for (int i = 0; i < K; ++i) C.row(i) *= boost::multiprecision::exp(-ex.log_diag(i) / 2);
  const RealMatrix G = C.transpose() * S * C;
  double worst = 0.0;
  for (int i = 0; i < K; ++i) {
    for (int j = 0; j < K; ++j) {
      const Real d = G(i, j) - (i == j ? Real(1) : Real(0));
      worst = std::max(worst, static_cast<double>(boost::multiprecision::abs(d)));
    }
  }
  return worst;
}

double crude_variational_energy(const TrapParams& tp, int m) {
  const double a = tp.gauss_width();
  const int am = std::abs(m);
  const double coulomb =
      tp.b * std::sqrt(a) * std::exp(std::lgamma(am + 0.5) - std::lgamma(am + 1.0));
  return a * (am + 1.0) - 0.5 * m * tp.nu + coulomb;
}

GroundStateRecord ground_state_scan(const TrapParams& tp, MRange range, int basis_size,
                                    const SolveOptions& opts) {
  if (range.lo > -2 || range.hi < 4) {
    throw ConfigError("ground_state_scan: m range must include [-2, 4]");
  }
  GroundStateRecord rec;
  rec.nu = tp.nu;
  std::optional<RadialEigenSolution> best;
  for (int m = range.lo; m <= range.hi; ++m) {
    RadialEigenSolution sol = solve_sector(tp, m, basis_size, opts);
    const double e = sol.ground_energy();
    rec.sector_energies.emplace_back(m, e);
    bool take = !best.has_value();
    if (best) {
      const double eb = best->ground_energy();
      const double tie = 1e-12 * (1.0 + std::abs(eb));
      if (e < eb - tie) {
        take = true;
      } else if (std::abs(e - eb) <= tie) {
        const int ma = std::abs(m);
        const int mb = std::abs(best->m);
        take = ma < mb || (ma == mb && m > best->m);
      }
    }
    if (take) best = std::move(sol);
  }
  rec.m_star = best->m;
  rec.energy = best->ground_energy();
  rec.solution = std::move(*best);
  return rec;
}

CrossingRecord find_crossing(const TrapParams& tp_template, int m1, int m2,
                             std::pair<double, double> nu_bracket, int basis_size) {
  auto [lo, hi] = nu_bracket;
  if (!(lo < hi) || lo < 0.0) throw ConfigError("find_crossing: invalid nu bracket");
  auto energies = [&](double nu) {
    TrapParams tp = tp_template;
    tp.nu = nu;
    return std::pair{solve_sector(tp, m1, basis_size).ground_energy(),
                     solve_sector(tp, m2, basis_size).ground_energy()};
  };
  auto [a1, a2] = energies(lo);
  auto [c1, c2] = energies(hi);
  double f_lo = a1 - a2;
  const double f_hi = c1 - c2;
  CrossingRecord rec{tp_template.b, m1, m2, lo, 0.5 * (a1 + a2)};
  if (f_lo == 0.0) return rec;
  if (f_hi == 0.0) {
    rec.nu_star = hi;
    rec.energy = 0.5 * (c1 + c2);
    return rec;
  }
  if ((f_lo > 0.0) == (f_hi > 0.0)) {
    throw BracketError("find_crossing: E(m=" + std::to_string(m1) + ") - E(m=" +
                       std::to_string(m2) + ") does not change sign on [" + std::to_string(lo) +
                       ", " + std::to_string(hi) + "]");
  }
  for (int iter = 0; iter < 200; ++iter) {
    const double mid = 0.5 * (lo + hi);
    auto [e1, e2] = energies(mid);
    const double f = e1 - e2;
    rec.nu_star = mid;
    rec.energy = 0.5 * (e1 + e2);
    if (std::abs(f) < 1e-10 || hi - lo < 1e-15 * std::max(1.0, hi)) break;
    if ((f > 0.0) == (f_lo > 0.0)) {
      lo = mid;
      f_lo = f;
    } else {
      hi = mid;
    }
  }
  return rec;
}

std::vector<CrossingRecord> find_ground_crossings(double b, double nu_lo, double nu_hi,
                                                  double step, MRange range, int basis_size) {
  if (!(step > 0.0) || !(nu_hi > nu_lo)) throw ConfigError("find_ground_crossings: invalid grid");
  const TrapParams base = TrapParams::make(nu_lo, b);
  std::vector<CrossingRecord> out;
  const int n = static_cast<int>(std::floor((nu_hi - nu_lo) / step + 1e-9));
  double prev_nu = nu_lo;
  int prev_m = ground_state_scan(base, range, basis_size).m_star;
  for (int i = 1; i <= n; ++i) {
    TrapParams tp = base;
    tp.nu = nu_lo + i * step;
    const int m = ground_state_scan(tp, range, basis_size).m_star;
    if (m != prev_m) {
      out.push_back(find_crossing(base, prev_m, m, {prev_nu, tp.nu}, basis_size));
    }
    prev_m = m;
    prev_nu = tp.nu;
  }
  return out;
}

}  // namespace ringtrap
