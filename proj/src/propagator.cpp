#include "ringtrap/propagator.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ringtrap/error.hpp"

namespace ringtrap {

namespace {

// log(cosh(x)) without overflow.
double log_cosh(double x) {
  const double ax = std::abs(x);
  return ax + std::log1p(std::exp(-2.0 * ax)) - std::log(2.0);
}

double signed_nu(const TrapParams& tp) { return tp.field_sign * tp.nu; }

// (R(angle) applied to a vector) with R counter-clockwise.
std::pair<double, double> rotate_vec(double x, double y, double angle) {
  const double c = std::cos(angle), s = std::sin(angle);
  return {c * x - s * y, s * x + c * y};
}

}  // namespace

const char* to_string(RampKind k) {
  switch (k) {
    case RampKind::Step: return "step";
    case RampKind::Linear: return "linear";
    case RampKind::Smooth: return "smooth";
  }
  return "?";
}

RampKind ramp_from_string(const std::string& s) {
  if (s == "step") return RampKind::Step;
  if (s == "linear") return RampKind::Linear;
  if (s == "smooth") return RampKind::Smooth;
  throw ConfigError("unknown ramp '" + s + "' (expected step|linear|smooth)");
}

RampProtocol RampProtocol::make(RampKind kind, double nu_final, double tau_ramp) {
  if (!std::isfinite(nu_final) || nu_final < 0.0) throw ConfigError("ramp nu_final must be >= 0");
  if (!std::isfinite(tau_ramp) || tau_ramp < 0.0) throw ConfigError("ramp duration must be >= 0");
  if (kind != RampKind::Step && tau_ramp == 0.0) {
    throw ConfigError("linear and smooth ramps need tau_ramp > 0");
  }
  return RampProtocol{kind, nu_final, kind == RampKind::Step ? 0.0 : tau_ramp};
}

double RampProtocol::nu(double tau) const {
  switch (kind) {
    case RampKind::Step: return tau > 0.0 ? nu_final : 0.0;
    case RampKind::Linear: return nu_final * std::clamp(tau / tau_ramp, 0.0, 1.0);
    case RampKind::Smooth:
      return 0.5 * nu_final * (1.0 + std::tanh(4.0 * (2.0 * tau / tau_ramp - 1.0)));
  }
  return 0.0;
}

double RampProtocol::integral(double tau) const {
  switch (kind) {
    case RampKind::Step: return nu_final * std::max(tau, 0.0);
    case RampKind::Linear:
      if (tau <= 0.0) return 0.0;
      if (tau < tau_ramp) return 0.5 * nu_final * tau * tau / tau_ramp;
      return nu_final * (tau - 0.5 * tau_ramp);
    case RampKind::Smooth: {
      auto F = [&](double s) {
        return s + tau_ramp / 8.0 * log_cosh(4.0 * (2.0 * s / tau_ramp - 1.0));
      };
      return 0.5 * nu_final * (F(tau) - F(0.0));
    }
  }
  return 0.0;
}

SplitOperator::SplitOperator(const GridSpec& spec, CoulombModel coulomb)
    : spec_(spec), fft_(spec.N), coulomb_(coulomb) {
  const int N = spec.N;
  r2_.resize(spec.size());
  k2_.resize(spec.size());
  for (int i = 0; i < N; ++i) {
    const double x = spec.coordinate(i), kx = spec.wavenumber(i);
    for (int j = 0; j < N; ++j) {
      const double y = spec.coordinate(j), ky = spec.wavenumber(j);
      r2_[i * N + j] = x * x + y * y;
      k2_[i * N + j] = kx * kx + ky * ky;
    }
  }
  inv_r_ = regularized_inverse_radius(spec, coulomb);
}

double SplitOperator::potential_at(std::size_t index, double nu, double b) const {
  return 0.5 * (1.0 + 0.25 * nu * nu) * r2_[index] + b * inv_r_[index];
}

void SplitOperator::prepare(double nu, double b, double dtau, TimeMode mode) {
  const bool same_kinetic = cache_valid_ && dtau == cached_dtau_ && mode == cached_mode_;
  const bool same_potential = same_kinetic && nu * nu == cached_nu_ * cached_nu_ && b == cached_b_;
  if (same_potential) return;
  const std::size_t n = spec_.size();
  if (!same_kinetic) {
    kinetic_.resize(n);
    const double scale = 1.0 / static_cast<double>(n);  // unnormalized inverse FFT
    for (std::size_t k = 0; k < n; ++k) {
      const double arg = 0.5 * k2_[k] * dtau;
      kinetic_[k] = mode == TimeMode::Real ? std::polar(scale, -arg) : Complex(scale * std::exp(-arg));
    }
  }
  half_kick_.resize(n);
  double vmax = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double v = potential_at(k, nu, b);
    vmax = std::max(vmax, std::abs(v));
    const double arg = 0.5 * v * dtau;
    half_kick_[k] = mode == TimeMode::Real ? std::polar(1.0, -arg) : Complex(std::exp(-arg));
  }
  max_phase_ = vmax * dtau;
  cached_nu_ = nu;
  cached_b_ = b;
  cached_dtau_ = dtau;
  cached_mode_ = mode;
  cache_valid_ = true;
}

double SplitOperator::step(Field& f, double nu, double b, double dtau, TimeMode mode) {
  if (!(dtau > 0.0)) throw ConfigError("time step must be positive");
  prepare(nu, b, dtau, mode);
  const std::size_t n = f.size();
  for (std::size_t k = 0; k < n; ++k) f[k] *= half_kick_[k];
  fft_.forward(f);
  for (std::size_t k = 0; k < n; ++k) f[k] *= kinetic_[k];
  fft_.backward(f);
  for (std::size_t k = 0; k < n; ++k) f[k] *= half_kick_[k];
  return max_phase_;
}

double SplitOperator::h2_expectation(const Field& f, double nu, double b) const {
  double w = 0.0, pot = 0.0;
  for (std::size_t k = 0; k < f.size(); ++k) {
    const double p = std::norm(f[k]);
    w += p;
    pot += p * potential_at(k, nu, b);
  }
  Field hat = f;
  fft_.forward(hat);
  double wk = 0.0, kin = 0.0;
  for (std::size_t k = 0; k < hat.size(); ++k) {
    const double p = std::norm(hat[k]);
    wk += p;
    kin += 0.5 * p * k2_[k];
  }
  return pot / w + kin / wk;
}

namespace {

void note_phase_wrap(double max_phase, double tau, std::vector<std::string>* warnings) {
  if (max_phase <= constants::pi || !warnings) return;
  std::ostringstream os;
  os << "max|V2| dtau = " << max_phase << " exceeds pi at tau = " << tau << " (phase wrapping)";
  if (std::find(warnings->begin(), warnings->end(), os.str()) == warnings->end() && warnings->size() < 16) {
    warnings->push_back(os.str());
  }
}

}  // namespace

GridState strang_step(const GridState& state, const TrapParams& tp, double dtau, TimeMode mode,
                      CoulombModel coulomb, std::vector<std::string>* warnings) {
  SplitOperator op(state.spec, coulomb);
  GridState out = state;
  const double nu = signed_nu(tp);
  note_phase_wrap(op.step(out.amplitudes, nu, tp.b, dtau, mode), state.tau, warnings);
  out.tau += dtau;
  if (mode == TimeMode::Imaginary) {
    normalize(out.spec, out.amplitudes);
    return out;
  }
  const double dtheta = 0.5 * nu * dtau;
  if (out.frame == Frame::Lab) {
    out.amplitudes = rotate_field(out.spec, out.amplitudes, dtheta);
  } else {
    out.theta += dtheta;
  }
  return out;
}

ObservableRecord observe(const SplitOperator& op, const GridState& state, double nu, double b,
                         const GridState* initial_lab) {
  const GridSpec& spec = op.spec();
  const GridMoments mo = grid_moments(spec, state.amplitudes, op.fft());
  ObservableRecord r;
  r.tau = state.tau;
  r.nu = nu;
  r.norm = mo.norm;
  r.lz = mo.lz;
  r.energy = op.h2_expectation(state.amplitudes, nu, b) - 0.5 * nu * mo.lz;
  // Moments of phi map to the lab frame through R(-theta).
  const double theta = state.frame == Frame::Rotating ? state.theta : 0.0;
  const auto [cx, cy] = rotate_vec(mo.x, mo.y, -theta);
  const auto [px, py] = rotate_vec(mo.px, mo.py, -theta);
  r.cx = cx;
  r.cy = cy;
  // Symmetric-gauge vector potential A = (nu/2)(-eta, xi).
  r.vx = px + 0.5 * nu * cy;
  r.vy = py - 0.5 * nu * cx;
  if (initial_lab) {
    const Field back = rotate_field(spec, initial_lab->amplitudes, -theta);
    r.autocorr = std::abs(grid_inner(spec, back, state.amplitudes));
  } else {
    r.autocorr = std::numeric_limits<double>::quiet_NaN();
  }
  return r;
}

EvolveResult evolve(const GridState& initial, const TrapParams& tp, const EvolveOptions& opts,
                    const std::vector<Observer>& observers) {
  if (!(opts.dtau > 0.0) || !(opts.tau_end >= 0.0)) throw ConfigError("need dtau > 0 and tau_end >= 0");
  if (opts.observe_every < 1) throw ConfigError("observe_every must be >= 1");
  const double ratio = opts.tau_end / opts.dtau;
  const long steps = std::lround(ratio);
  if (std::abs(ratio - steps) > 1e-9 * std::max(1.0, ratio)) {
    throw ConfigError("tau_end must be an integer multiple of dtau");
  }
  if (initial.spec.size() != initial.amplitudes.size()) throw ConfigError("state size does not match its grid");

  const GridSpec& spec = initial.spec;
  const double sign = tp.field_sign;
  auto nu_at = [&](double tau) { return opts.ramp ? sign * opts.ramp->nu(tau) : signed_nu(tp); };
  auto theta_at = [&](double tau) {
    return 0.5 * (opts.ramp ? sign * opts.ramp->integral(tau) : signed_nu(tp) * tau);
  };

  std::vector<long> snapshot_steps;
  for (double t : opts.snapshot_times) {
    const long k = std::lround(t / opts.dtau);
    if (k < 0 || k > steps) throw ConfigError("snapshot time outside [0, tau_end]");
    snapshot_steps.push_back(k);
  }

  SplitOperator op(spec, opts.coulomb);
  EvolveResult result;
  GridState lab0 = to_lab(initial);
  lab0.tau = initial.tau;
  GridState state = lab0;
  state.frame = Frame::Rotating;
  state.theta = 0.0;
  const double tau0 = initial.tau;

  const double norm0 = grid_norm(spec, state.amplitudes);
  // Packets that start with tails in the edge cells only fail once those grow.
  const double edge_limit =
      std::max(opts.boundary_tolerance, 2.0 * boundary_probability(spec, state.amplitudes, 2));

  auto record = [&]() {
    const double nu = nu_at(state.tau - tau0);
    ObservableRecord r = observe(op, state, nu, tp.b, &lab0);
    result.records.push_back(r);
    for (const auto& obs : observers) obs(r);
  };
  auto take_snapshots = [&](long k) {
    for (long s : snapshot_steps) {
      if (s != k) continue;
      Snapshot snap{nu_at(state.tau - tau0), opts.snapshot_frame == Frame::Lab ? to_lab(state) : state};
      result.snapshots.push_back(std::move(snap));
    }
  };
  auto check = [&](long k) {
    const double norm = grid_norm(spec, state.amplitudes);
    if (!std::isfinite(norm) || std::abs(norm - norm0) > opts.norm_tolerance) {
      std::ostringstream os;
      os << "norm drift " << (norm - norm0) << " exceeds " << opts.norm_tolerance << " at tau = " << state.tau
         << " (step " << k << ")";
      throw NumericalError(os.str());
    }
    const double edge = boundary_probability(spec, state.amplitudes, 2);
    if (edge > edge_limit) {
      std::ostringstream os;
      os << "probability " << edge << " within 2 cells of the box edge at tau = " << state.tau
         << "; enlarge L";
      throw NumericalError(os.str());
    }
  };

  check(0);
  record();
  take_snapshots(0);
  for (long k = 1; k <= steps; ++k) {
    const double t_prev = (k - 1) * opts.dtau;
    const double nu_mid = nu_at(t_prev + 0.5 * opts.dtau);
    note_phase_wrap(op.step(state.amplitudes, nu_mid, tp.b, opts.dtau, TimeMode::Real), t_prev + tau0,
                    &result.warnings);
    state.tau = tau0 + k * opts.dtau;
    state.theta = theta_at(k * opts.dtau);
    if (k % opts.observe_every == 0 || k == steps) {
      check(k);
      record();
    }
    take_snapshots(k);
  }
  result.final_state = state;
  return result;
}

std::vector<SeriesJumpReport> post_ramp_jumps(const std::vector<ObservableRecord>& records, double tau_from) {
  using Member = double ObservableRecord::*;
  const std::pair<const char*, Member> series[] = {
      {"norm", &ObservableRecord::norm}, {"energy", &ObservableRecord::energy}, {"lz", &ObservableRecord::lz},
      {"vx", &ObservableRecord::vx},     {"vy", &ObservableRecord::vy},         {"autocorr", &ObservableRecord::autocorr},
      {"cx", &ObservableRecord::cx},     {"cy", &ObservableRecord::cy}};
  std::vector<SeriesJumpReport> out;
  for (const auto& [name, member] : series) {
    SeriesJumpReport rep;
    rep.series = name;
    std::vector<double> window;
    for (const auto& r : records) {
      const double v = r.*member;
      if (!std::isfinite(v)) rep.finite = false;
      if (r.tau > tau_from) window.push_back(v);
    }
    if (window.size() >= 2) {
      double mean = 0.0;
      for (double v : window) mean += v;
      mean /= window.size();
      double var = 0.0;
      for (double v : window) var += (v - mean) * (v - mean);
      rep.std_dev = std::max(std::sqrt(var / (window.size() - 1)), 1e-9 * (1.0 + std::abs(mean)));
      for (std::size_t i = 1; i < window.size(); ++i) {
        rep.max_jump = std::max(rep.max_jump, std::abs(window[i] - window[i - 1]));
      }
    }
    out.push_back(std::move(rep));
  }
  return out;
}

GridState sector_seed(const GridSpec& spec, int m) {
  GridState s;
  s.spec = spec;
  s.amplitudes.resize(spec.size());
  const int N = spec.N;
  const int am = std::abs(m);
  for (int i = 0; i < N; ++i) {
    const double x = spec.coordinate(i);
    for (int j = 0; j < N; ++j) {
      const double y = spec.coordinate(j);
      const Complex z(x, m >= 0 ? y : -y);
      s.amplitudes[i * N + j] = std::pow(z, am) * std::exp(-0.5 * (x * x + y * y));
    }
  }
  normalize(spec, s.amplitudes);
  s.frame = Frame::Rotating;
  return s;
}

ImagTimeResult imaginary_time_relax(const GridState& start, const TrapParams& tp, const ImagTimeOptions& opts,
                                    std::optional<int> sector) {
  if (!(opts.dtau > 0.0) || !(opts.final_dtau > 0.0) || opts.final_dtau > opts.dtau) {
    throw ConfigError("imaginary time needs 0 < final_dtau <= dtau");
  }
  if (!(opts.tol > 0.0) || opts.block < 1) throw ConfigError("imaginary time needs tol > 0 and block >= 1");
  const GridSpec& spec = start.spec;
  const double nu = signed_nu(tp);
  SplitOperator op(spec, opts.coulomb);

  Field psi = start.amplitudes;
  normalize(spec, psi);
  double energy = op.h2_expectation(psi, nu, tp.b);
  double dtau = opts.dtau;
  ImagTimeResult res;

  auto check_sector = [&](const Field& f) {
    if (!sector) return;
    const double lz = grid_moments(spec, f, op.fft()).lz;
    if (std::abs(lz - *sector) > opts.leakage_tolerance) {
      std::ostringstream os;
      os << "angular momentum leaked from sector " << *sector << ": <L_z> = " << lz;
      throw NumericalError(os.str());
    }
  };
  check_sector(psi);

  while (true) {
    if (res.steps >= opts.max_steps) {
      throw NumericalError("imaginary time did not converge within max_steps");
    }
    Field trial = psi;
    for (int k = 0; k < opts.block; ++k) {
      op.step(trial, nu, tp.b, dtau, TimeMode::Imaginary);
      normalize(spec, trial);
    }
    res.steps += opts.block;
    const double e = op.h2_expectation(trial, nu, tp.b);
    if (!std::isfinite(e)) throw NumericalError("non-finite energy in imaginary time");
    const double drop = energy - e;
    if (drop < -1e-13 * std::max(1.0, std::abs(energy))) {
      // Energy rose: the step is too coarse for the mixed estimator.
      ++res.rejected_blocks;
      dtau *= 0.5;
      if (dtau < 1e-3 * opts.final_dtau) throw NumericalError("imaginary-time step underflow");
      continue;
    }
    psi = std::move(trial);
    energy = e;
    if (sector && opts.project_sector &&
        std::abs(grid_moments(spec, psi, op.fft()).lz - *sector) > 0.1 * opts.leakage_tolerance) {
      // The rotation average is not an exact projector on the grid; its
      // small energy change restarts the convergence test.
      psi = project_angular_momentum(spec, psi, *sector);
      normalize(spec, psi);
      energy = op.h2_expectation(psi, nu, tp.b);
      ++res.projections;
      continue;
    }
    if (drop / (opts.block * dtau) < opts.tol) {
      if (dtau <= opts.final_dtau) break;
      dtau = std::max(0.5 * dtau, opts.final_dtau);
    }
  }
  check_sector(psi);

  res.lz = grid_moments(spec, psi, op.fft()).lz;
  res.h2_energy = energy;
  res.energy = energy - 0.5 * nu * (sector ? static_cast<double>(*sector) : res.lz);
  res.state = start;
  res.state.amplitudes = std::move(psi);
  res.state.frame = Frame::Rotating;
  res.state.tau = 0.0;
  res.state.theta = 0.0;
  return res;
}

ImagTimeResult imaginary_time_ground(const GridSpec& spec, const TrapParams& tp, int m_seed,
                                     const ImagTimeOptions& opts) {
  return imaginary_time_relax(sector_seed(spec, m_seed), tp, opts, m_seed);
}

ImagTimeScan imaginary_time_scan(const GridSpec& spec, const TrapParams& tp, MRange range,
                                 const ImagTimeOptions& opts) {
  if (range.lo > range.hi) throw ConfigError("empty m range");
  ImagTimeScan scan;
  double best = std::numeric_limits<double>::infinity();
  for (int m = range.lo; m <= range.hi; ++m) {
    const double e = imaginary_time_ground(spec, tp, m, opts).energy;
    scan.sector_energies.emplace_back(m, e);
    const double tie = 1e-12 * (1.0 + std::abs(e));
    const bool better = e < best - tie;
    const bool tied_preferred =
        std::abs(e - best) <= tie &&
        (std::abs(m) < std::abs(scan.m_star) || (std::abs(m) == std::abs(scan.m_star) && m > scan.m_star));
    if (better || tied_preferred) {
      best = std::min(best, e);
      scan.m_star = m;
    }
  }
  return scan;
}

}  // namespace ringtrap
