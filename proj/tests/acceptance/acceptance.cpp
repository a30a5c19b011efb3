// End-to-end acceptance checks. Each check prints one PASS/FAIL line with the
// measured quantity next to its tolerance; the exit status is the number of
// failures. Pass check names as arguments to run a subset.

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "oracles/fd_radial.hpp"
#include "oracles/quadrature.hpp"
#include "ringtrap/error.hpp"
#include "ringtrap/observables.hpp"
#include "ringtrap/propagator.hpp"
#include "ringtrap/radial.hpp"

using namespace ringtrap;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// ---------------------------------------------------------------- spectra

Verdict fock_darwin_levels() {
  double worst = 0.0;
  for (double nu : {0.0, 0.5, 1.0, 2.0}) {
    const TrapParams tp = TrapParams::make(nu, 0.0);
    for (int m = -2; m <= 2; ++m) {
      const auto sol = solve_sector(tp, m, 30);
      for (int n = 0; n <= 2; ++n) {
        const double exact = tp.gauss_width() * (2 * n + std::abs(m) + 1) - m * nu / 2;
        worst = std::max(worst, std::abs(sol.energies[n] - exact));
      }
    }
  }
  return {worst < 1e-6, fmt("max |E - E_exact| = %.2e over 60 levels (tol 1e-6)", worst)};
}

Verdict finite_difference_cross_check() {
  std::mt19937 rng(20260101);
  std::uniform_real_distribution<double> nu_d(0.0, 3.0), b_d(0.0, 10.0);
  std::uniform_int_distribution<int> m_d(-2, 2);
  double worst = 0.0;
  for (int draw = 0; draw < 10; ++draw) {
    const double nu = nu_d(rng), b = b_d(rng);
    const int m = m_d(rng);
    const double rr = solve_sector(TrapParams::make(nu, b), m, 30).ground_energy();
    const double fd = oracles::radial_fd_energy(nu, b, m, 0, 12.0, 10000);
    worst = std::max(worst, std::abs(rr - fd));
  }
  return {worst < 1e-4, fmt("max |E_ritz - E_fd| = %.2e over 10 draws, 1e4 points (tol 1e-4)", worst)};
}

Verdict matrix_elements_vs_quadrature() {
  double worst = 0.0;
  int entries = 0;
  for (int m : {0, 1, 2}) {
    for (double nu : {0.0, 1.0}) {
      for (double b : {0.0, 1.0, 5.0}) {
        const auto [S, H] = overlap_and_hamiltonian_matrices(RadialBasis::make(m, 6), TrapParams::make(nu, b));
        for (int j = 0; j < 6; ++j) {
          for (int k = 0; k < 6; ++k) {
            const auto [s, h] = oracles::matrix_entry(m, 0.5, nu, b, j, k);
            worst = std::max(worst, double(std::abs(S(j, k) - s.value) / std::abs(s.value)));
            worst = std::max(worst, double(std::abs(H(j, k) - h.value) / std::abs(h.value)));
            entries += 2;
          }
        }
      }
    }
  }
  return {worst < 1e-12, fmt("max relative deviation %.2e over %d entries (tol 1e-12)", worst, entries)};
}

Verdict linear_level_crossing() {
  const auto crossings = find_ground_crossings(1.0, 0.0, 5.0, 0.05);
  const CrossingRecord* c = nullptr;
  for (const auto& x : crossings) {
    if ((x.m1 == 0 && x.m2 == 1) || (x.m1 == 1 && x.m2 == 0)) c = &x;
    if (c) break;
  }
  if (!c) return {false, "no m = 0 / m = 1 ground-state crossing on (0, 5)"};
  auto e = [](int m, double nu) { return solve_sector(TrapParams::make(nu, 1.0), m).ground_energy(); };
  const double ns = c->nu_star, d = 1e-4;
  const double gap = std::abs(e(0, ns) - e(1, ns));
  const double below = e(0, ns - d) - e(1, ns - d), above = e(0, ns + d) - e(1, ns + d);
  const double s0 = (e(0, ns + d) - e(0, ns - d)) / (2 * d), s1 = (e(1, ns + d) - e(1, ns - d)) / (2 * d);
  const bool sign_change = (below > 0) != (above > 0);
  const bool pass = ns > 0 && ns < 5 && gap < 1e-9 && sign_change && std::abs(s0 - s1) > 1e-3;
  return {pass, fmt("nu* = %.10f, |dE| = %.1e (tol 1e-9), dE(nu* -/+ 1e-4) = %.2e / %.2e, slopes %.6f vs %.6f",
                    ns, gap, below, above, s0, s1)};
}

Verdict ring_ground_state_has_m1() {
  const auto rec = ground_state_scan(TrapParams::make(1.0, 5.0));
  return {rec.m_star == 1, fmt("m_star = %d, E = %.10f", rec.m_star, rec.energy)};
}

// ---------------------------------------------------------------- currents

Verdict current_sign_change() {
  bool pass = true;
  double weakest_flux = 1e300, worst_offset = 0.0;
  boost::math::quadrature::tanh_sinh<double> ts;
  for (double b : {0.0, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0}) {
    const TrapParams tp = TrapParams::make(1.0, b);
    const auto wf = RadialWavefunction::from_solution(solve_sector(tp, 1, 30));
    const double h = 1e-3;
    std::vector<double> grid;
    for (double r = h; r < wf.rho_max(); r += h) grid.push_back(r);
    const auto cf = current_density(wf, tp, grid);
    int changes = 0, prev = 0;
    double where = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const int s = (cf.j_phi[i] > 0) - (cf.j_phi[i] < 0);
      if (s == 0) continue;
      if (prev != 0 && s != prev) ++changes, where = grid[i];
      prev = s;
    }
    const double offset = std::abs(where - std::sqrt(2.0));
    const double flux = 2 * M_PI * ts.integrate([&](double r) { return current_density(wf, tp, {r}).j_phi[0]; },
                                                 0.0, wf.rho_max());
    pass = pass && changes == 1 && offset <= h * (1 + 1e-9) && std::abs(flux) > 1e-6;
    worst_offset = std::max(worst_offset, offset);
    weakest_flux = std::min(weakest_flux, std::abs(flux));
  }
  return {pass, fmt("b in {0..20}: one sign change each, max |rho_0 - sqrt 2| = %.1e (tol 1e-3), "
                    "min |2 pi int J drho| = %.3e",
                    worst_offset, weakest_flux)};
}

// Three-point extrapolation of (x_i, y_i) to x.
double extrapolate(const double* x, const double* y, double at) {
  double v = 0.0;
  for (int i = 0; i < 3; ++i) {
    double w = 1.0;
    for (int j = 0; j < 3; ++j) {
      if (j != i) w *= (at - x[j]) / (x[i] - x[j]);
    }
    v += w * y[i];
  }
  return v;
}

Verdict velocity_claims() {
  // m = 0: velocity from the flux integral of J, <rho> from the Jacobi matrix.
  boost::math::quadrature::tanh_sinh<double> ts;
  double worst = 0.0;
  bool negative = true;
  for (double nu : {0.25, 0.5, 1.0, 2.0, 3.0}) {
    for (double b : {0.0, 1.0, 5.0}) {
      const TrapParams tp = TrapParams::make(nu, b);
      const auto sol = solve_sector(tp, 0, 30);
      const auto wf = RadialWavefunction::from_solution(sol);
      const double v = 2 * M_PI * ts.integrate([&](double r) { return r * current_density(wf, tp, {r}).j_phi[0]; },
                                               0.0, wf.rho_max());
      const Eigen::VectorXd y = sol.coefficients.col(0);
      const double mean_rho = y.dot(sol.sector->rho * y);
      worst = std::max(worst, std::abs(v + 0.5 * nu * mean_rho));
      negative = negative && v < 0;
    }
  }

  // b = 1 sweep: the jump sits at the crossing and matches the branch difference.
  const double step = 0.01;
  std::vector<double> grid;
  for (int i = 0; i <= 500; ++i) grid.push_back(step * i);
  const auto rows = ground_velocity_sweep(1.0, grid);
  const auto jumps = velocity_jumps(rows);
  const auto cross = find_ground_crossings(1.0, 0.0, 5.0, 0.05);
  if (jumps.empty() || cross.empty()) return {false, "sweep shows no jump or no crossing found"};
  const auto& j = jumps.front();
  const double ns = cross.front().nu_star;
  const double located = std::max(std::abs(rows[j.index].nu - ns), std::abs(rows[j.index + 1].nu - ns));
  if (j.index < 2 || j.index + 3 >= rows.size()) return {false, "jump too close to the sweep ends"};
  double xb[3], yb[3], xa[3], ya[3];
  for (int k = 0; k < 3; ++k) {
    xb[k] = rows[j.index - k].nu, yb[k] = rows[j.index - k].velocity;
    xa[k] = rows[j.index + 1 + k].nu, ya[k] = rows[j.index + 1 + k].velocity;
  }
  const double sweep_jump = extrapolate(xa, ya, ns) - extrapolate(xb, yb, ns);
  const TrapParams at = TrapParams::make(ns, 1.0);
  const double branch_jump = sector_velocity(at, j.m_after) - sector_velocity(at, j.m_before);
  const double mismatch = std::abs(sweep_jump - branch_jump);
  const bool pass = worst < 1e-10 && negative && located <= step && mismatch < 1e-6;
  return {pass, fmt("m = 0: max |<v> + nu <rho>/2| = %.1e (tol 1e-10), all negative: %s; sweep jump %d->%d at "
                    "nu in [%.2f, %.2f], nu* = %.6f, jump %.8f vs branch difference %.8f (|diff| %.1e, tol 1e-6)",
                    worst, negative ? "yes" : "no", j.m_before, j.m_after, rows[j.index].nu, rows[j.index + 1].nu, ns,
                    sweep_jump, branch_jump, mismatch)};
}

// ---------------------------------------------------------------- dynamics

const GridSpec kGrid = GridSpec::make(256, 8.0);

double l2_distance(const GridSpec& g, const Field& a, const Field& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::norm(a[i] - b[i]);
  return std::sqrt(s) * g.spacing();
}

Verdict strang_order_and_conservation() {
  const TrapParams tp = TrapParams::make(1.0, 1.0);
  const GridState start = gaussian_packet(kGrid, 4.0, 0.5);
  auto final_lab = [&](double dt, double tau) {
    EvolveOptions o;
    o.dtau = dt;
    o.tau_end = tau;
    o.observe_every = 1 << 30;
    return to_lab(evolve(start, tp, o).final_state).amplitudes;
  };
  const double T = 0.5;
  const Field ref = final_lab(T / 4000, T);
  const double e_coarse = l2_distance(kGrid, final_lab(2e-3, T), ref);
  const double e_fine = l2_distance(kGrid, final_lab(1e-3, T), ref);
  const double ratio = e_coarse / e_fine;

  EvolveOptions o;
  o.dtau = 1e-3;
  o.tau_end = 10.0;
  o.observe_every = 100;
  const auto res = evolve(start, tp, o);
  double norm_drift = 0.0, lz_drift = 0.0;
  for (const auto& r : res.records) {
    norm_drift = std::max(norm_drift, std::abs(r.norm - res.records.front().norm));
    lz_drift = std::max(lz_drift, std::abs(r.lz - res.records.front().lz));
  }
  const bool pass = ratio >= 3.5 && ratio <= 4.5 && norm_drift < 1e-6 && lz_drift < 1e-8;
  return {pass, fmt("error ratio %.3f for dtau 2e-3 -> 1e-3 (range [3.5, 4.5]); over tau = 10: norm drift %.1e "
                    "(tol 1e-6), L_z drift %.1e (tol 1e-8)",
                    ratio, norm_drift, lz_drift)};
}

Verdict harmonic_revival() {
  const TrapParams tp = TrapParams::make(0.0, 0.0);
  EvolveOptions o;
  o.dtau = 2 * M_PI / 6000;
  o.tau_end = 2 * M_PI;
  o.observe_every = 1000;
  const auto res = evolve(gaussian_packet(kGrid, 4.0, 0.5), tp, o);
  const double overlap = res.records.back().autocorr;
  return {overlap > 1 - 1e-4, fmt("|<psi(0)|psi(2 pi)>| = 1 - %.2e (tol 1e-4)", 1 - overlap)};
}

Verdict imaginary_time_cross_check() {
  const GridSpec fine = GridSpec::make(512, 5.0);
  std::ostringstream os;
  double worst = 0.0;
  struct Case {
    double b, nu;
    int m;
  };
  for (const Case c : {Case{0, 0, 0}, Case{5, 1, 1}, Case{1, 0.5, 0}}) {
    const TrapParams tp = TrapParams::make(c.nu, c.b);
    const double e = imaginary_time_ground(fine, tp, c.m).energy;
    const double ref = solve_sector(tp, c.m).ground_energy();
    worst = std::max(worst, std::abs(e - ref));
    os << fmt("(%g, %g, %d): %.1e; ", c.b, c.nu, c.m, e - ref);
  }
  bool same_m = true;
  const GridSpec coarse = GridSpec::make(128, 7.0);
  const MRange range{-2, 4};
  for (const Case c : {Case{0, 0, 0}, Case{5, 1, 1}, Case{1, 0.5, 0}}) {
    const TrapParams tp = TrapParams::make(c.nu, c.b);
    const int grid_m = imaginary_time_scan(coarse, tp, range).m_star;
    const int ritz_m = ground_state_scan(tp, range).m_star;
    same_m = same_m && grid_m == ritz_m;
    os << fmt("m_star(%g, %g) grid %d ritz %d; ", c.b, c.nu, grid_m, ritz_m);
  }
  return {worst < 1e-4 && same_m, fmt("E_grid - E_ritz: %s max %.1e (tol 1e-4)", os.str().c_str(), worst)};
}

Verdict packet_diffraction() {
  const TrapParams tp = TrapParams::make(1.0, 1.0);
  const GridState start = gaussian_packet(kGrid, 4.0, 0.5);
  EvolveOptions o;
  o.dtau = 2 * M_PI / 6000;
  o.tau_end = 2 * M_PI;
  o.observe_every = 60;
  o.snapshot_times = {o.tau_end};
  const auto res = evolve(start, tp, o);
  const Field& end = res.snapshots.back().state.amplitudes;
  const double cv0 = circular_variance(kGrid, start.amplitudes);
  const double spread = circular_variance(kGrid, end) / cv0;
  const int maxima = count_local_maxima(angular_histogram(kGrid, end, 72), 0.05);
  double norm_drift = 0.0;
  for (const auto& r : res.records) norm_drift = std::max(norm_drift, std::abs(r.norm - 1.0));
  const bool pass = spread >= 5.0 && maxima >= 3 && norm_drift < 1e-6;
  return {pass, fmt("at tau = 2 pi: circular variance x%.1f of initial (need >= 5), %d angular maxima (need >= 3), "
                    "norm drift %.1e (tol 1e-6)",
                    spread, maxima, norm_drift)};
}

Verdict switching_protocols() {
  const GridState start = gaussian_packet(kGrid, 4.0, 0.5);
  const double tau_ramp = 2.0;
  std::ostringstream os;
  bool pass = true;
  for (RampKind kind : {RampKind::Step, RampKind::Smooth}) {
    EvolveOptions o;
    o.dtau = 1e-3;
    o.tau_end = 5.0;
    o.observe_every = 1;
    const double ramp_end = kind == RampKind::Step ? 0.0 : tau_ramp;
    o.ramp = RampProtocol::make(kind, 1.0, ramp_end);
    const auto res = evolve(start, TrapParams::make(0.0, 1.0), o);
    double norm_drift = 0.0;
    for (const auto& r : res.records) norm_drift = std::max(norm_drift, std::abs(r.norm - 1.0));
    bool ok = norm_drift < 1e-6;
    double worst_ratio = 0.0;
    std::string worst_series;
    for (const auto& rep : post_ramp_jumps(res.records, ramp_end)) {
      ok = ok && rep.ok();
      const double ratio = rep.max_jump / rep.std_dev;
      if (ratio > worst_ratio) worst_ratio = ratio, worst_series = rep.series;
    }
    pass = pass && ok;
    os << fmt("%s: norm drift %.1e, largest jump/std %.2f (%s); ", to_string(kind), norm_drift, worst_ratio,
              worst_series.c_str());
  }
  return {pass, os.str() + "limits 1e-6 and 10"};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Verdict()>>> checks{
      {"fock-darwin-levels", fock_darwin_levels},
      {"finite-difference-cross-check", finite_difference_cross_check},
      {"matrix-elements-vs-quadrature", matrix_elements_vs_quadrature},
      {"linear-level-crossing", linear_level_crossing},
      {"ring-ground-state-m1", ring_ground_state_has_m1},
      {"current-sign-change", current_sign_change},
      {"velocity-claims", velocity_claims},
      {"strang-order-and-conservation", strang_order_and_conservation},
      {"harmonic-revival", harmonic_revival},
      {"imaginary-time-cross-check", imaginary_time_cross_check},
      {"packet-diffraction", packet_diffraction},
      {"switching-protocols", switching_protocols},
  };
  const std::set<std::string> only(argv + 1, argv + argc);
  int failures = 0;
  for (const auto& [name, check] : checks) {
    if (!only.empty() && !only.count(name)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = check();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s  %-30s %s [%.1fs]\n", v.pass ? "PASS" : "FAIL", name.c_str(), v.detail.c_str(), secs);
    std::fflush(stdout);
    failures += !v.pass;
  }
  return failures;
}
