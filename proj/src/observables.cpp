#include "ringtrap/observables.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/minima.hpp>
#include <cmath>
#include <exception>
#include <mutex>
#include <sstream>
#include <thread>

#include "ringtrap/error.hpp"

namespace ringtrap {

RadialWavefunction RadialWavefunction::from_solution(const RadialEigenSolution& sol, int level) {
  if (level < 0 || level >= static_cast<int>(sol.energies.size())) {
    throw ConfigError("level index outside the computed spectrum");
  }
  RadialWavefunction wf;
  wf.m_ = sol.m;
  wf.sector_ = sol.sector;
  wf.coeffs_ = sol.coefficients.col(level) / std::sqrt(2.0 * constants::pi);

  // Walk outwards past the last point where chi^2 is relevant.
  const double step = 0.05;
  double peak = 0.0, last = step;
  for (double r = step; r < 60.0; r += step) {
    const double c2 = wf.chi(r) * wf.chi(r);
    peak = std::max(peak, c2);
    if (c2 >= 1e-16 * peak) last = r;
    else if (r > 2.0 * last + 1.0) break;
  }
  wf.rho_max_ = last + step;
  return wf;
}

double RadialWavefunction::chi(double rho) const {
  if (rho <= 0.0) return 0.0;
  return sector_->orthonormal_functions(rho).dot(coeffs_);
}

double RadialWavefunction::integrate(const std::function<double(double)>& f) const {
  double err = 0.0, l1 = 0.0;
  auto integrand = [&](double r) {
    const double c = chi(r);
    return 2.0 * constants::pi * c * c * f(r);
  };
  const double value =
      boost::math::quadrature::gauss_kronrod<double, 61>::integrate(integrand, 0.0, rho_max_, 15, 1e-14, &err, &l1);
  if (!std::isfinite(value) || err > 1e-12 * std::max(1.0, l1)) {
    std::ostringstream os;
    os << "radial quadrature did not converge (estimate " << value << ", error " << err << ")";
    throw NumericalError(os.str());
  }
  return value;
}

double total_probability(const RadialWavefunction& wf) {
  return wf.expectation([](double) { return 1.0; });
}

CurrentField current_density(const RadialWavefunction& wf, const TrapParams& tp,
                             const std::vector<double>& rho_grid) {
  CurrentField out;
  out.rho = rho_grid;
  out.j_phi.reserve(rho_grid.size());
  for (double r : rho_grid) {
    if (!(r > 0.0)) throw ConfigError("current density needs rho > 0");
    const double c = wf.chi(r);
    out.j_phi.push_back((wf.m() / r - 0.5 * tp.nu * r) * c * c / r);
  }
  return out;
}

std::vector<CurrentVector> current_vector_field(const RadialWavefunction& wf, const TrapParams& tp,
                                                double extent, int points) {
  if (!(extent > 0.0) || points < 2) throw ConfigError("vector field needs extent > 0 and points >= 2");
  std::vector<CurrentVector> out;
  out.reserve(static_cast<std::size_t>(points) * points);
  const double h = 2.0 * extent / points;
  for (int i = 0; i < points; ++i) {
    const double x = -extent + (i + 0.5) * h;
    for (int j = 0; j < points; ++j) {
      const double y = -extent + (j + 0.5) * h;
      const double r = std::hypot(x, y);
      const double c = wf.chi(r);
      const double J = (wf.m() / r - 0.5 * tp.nu * r) * c * c / r;
      out.push_back({x, y, -J * y / r, J * x / r});
    }
  }
  return out;
}

double velocity_expectation(const RadialWavefunction& wf, const TrapParams& tp) {
  const int m = wf.m();
  const double nu = tp.nu;
  return wf.expectation([&](double r) { return m / r - 0.5 * nu * r; });
}

double radial_moment(const RadialWavefunction& wf, double p) {
  return wf.expectation([&](double r) { return std::pow(r, p); });
}

DensityProfile density_profile(const RadialWavefunction& wf, const std::vector<double>& rho_grid) {
  DensityProfile out;
  out.rho = rho_grid;
  out.density.reserve(rho_grid.size());
  for (double r : rho_grid) {
    const double c = wf.chi(r);
    out.density.push_back(2.0 * constants::pi * c * c);
  }
  out.mean_rho = radial_moment(wf, 1.0);

  // Coarse scan for the mode, then Brent refinement.
  const double hi = wf.rho_max();
  const int n = 2000;
  double best = -1.0, arg = hi / n;
  for (int i = 1; i <= n; ++i) {
    const double r = hi * i / n;
    const double c = wf.chi(r);
    if (c * c > best) best = c * c, arg = r;
  }
  const double lo_b = std::max(arg - hi / n, 1e-12), hi_b = std::min(arg + hi / n, hi);
  const auto res = boost::math::tools::brent_find_minima(
      [&](double r) {
        const double c = wf.chi(r);
        return -c * c;
      },
      lo_b, hi_b, 40);
  out.peak_rho = res.first;
  return out;
}

double sector_velocity(const TrapParams& tp, int m, int basis_size) {
  const RadialEigenSolution sol = solve_sector(tp, m, basis_size);
  return velocity_expectation(RadialWavefunction::from_solution(sol), tp);
}

std::vector<VelocitySweepRow> ground_velocity_sweep(double b, const std::vector<double>& nu_grid, int basis_size,
                                                    MRange range) {
  if (!std::is_sorted(nu_grid.begin(), nu_grid.end())) throw ConfigError("nu grid must be ascending");
  std::vector<VelocitySweepRow> rows(nu_grid.size());
  auto work = [&](std::size_t i) {
    const TrapParams tp = TrapParams::make(nu_grid[i], b);
    const GroundStateRecord g = ground_state_scan(tp, range, basis_size);
    rows[i] = {nu_grid[i], g.m_star, g.energy,
               velocity_expectation(RadialWavefunction::from_solution(g.solution), tp)};
  };

  const std::size_t threads =
      std::min<std::size_t>(std::max(1u, std::thread::hardware_concurrency()), nu_grid.size());
  if (threads <= 1) {
    for (std::size_t i = 0; i < nu_grid.size(); ++i) work(i);
    return rows;
  }
  std::exception_ptr failure;
  std::mutex failure_mu;
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      try {
        for (std::size_t i = t; i < nu_grid.size(); i += threads) work(i);
      } catch (...) {
        std::lock_guard lock(failure_mu);
        if (!failure) failure = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
  return rows;
}

std::vector<VelocityJump> velocity_jumps(const std::vector<VelocitySweepRow>& rows) {
  std::vector<VelocityJump> out;
  for (std::size_t i = 0; i + 1 < rows.size(); ++i) {
    if (rows[i].m_star != rows[i + 1].m_star) {
      out.push_back({i, rows[i].m_star, rows[i + 1].m_star, rows[i + 1].velocity - rows[i].velocity});
    }
  }
  return out;
}

}  // namespace ringtrap
