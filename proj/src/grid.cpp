#include "ringtrap/grid.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>

#include "ringtrap/error.hpp"

namespace ringtrap {

namespace {

constexpr double kPi = constants::pi;

fftw_complex* as_fftw(Field& f) { return reinterpret_cast<fftw_complex*>(f.data()); }

// FFTW's planner is not re-entrant.
std::mutex& planner_mutex() {
  static std::mutex mu;
  return mu;
}

}  // namespace

GridSpec GridSpec::make(int N, double L, bool offset) {
  if (N < 8 || (N & (N - 1)) != 0) throw ConfigError("grid size N must be a power of two >= 8");
  if (!(L > 0.0) || !std::isfinite(L)) throw ConfigError("grid half-extent L must be positive");
  return GridSpec{N, L, offset};
}

double GridSpec::wavenumber(int i) const {
  const int n = i < N / 2 ? i : i - N;
  return 2.0 * kPi * n / (2.0 * L);
}

const char* to_string(Frame f) { return f == Frame::Lab ? "lab" : "rotating"; }

Frame frame_from_string(const std::string& s) {
  if (s == "lab") return Frame::Lab;
  if (s == "rotating") return Frame::Rotating;
  throw ConfigError("unknown frame '" + s + "' (expected lab|rotating)");
}

const char* to_string(CoulombModel c) {
  return c == CoulombModel::CellAverage ? "cell-average" : "soft-core";
}

CoulombModel coulomb_from_string(const std::string& s) {
  if (s == "cell-average") return CoulombModel::CellAverage;
  if (s == "soft-core") return CoulombModel::SoftCore;
  throw ConfigError("unknown Coulomb model '" + s + "' (expected cell-average|soft-core)");
}

double coulomb_epsilon(const GridSpec& spec, CoulombModel model) {
  return model == CoulombModel::SoftCore ? 0.5 * spec.spacing() : 0.0;
}

std::vector<double> regularized_inverse_radius(const GridSpec& spec, CoulombModel model) {
  const int N = spec.N;
  const double h = spec.spacing();
  std::vector<double> out(spec.size());
  if (model == CoulombModel::SoftCore) {
    const double eps2 = 0.25 * h * h;
    for (int i = 0; i < N; ++i) {
      const double x = spec.coordinate(i);
      for (int j = 0; j < N; ++j) {
        const double y = spec.coordinate(j);
        out[i * N + j] = 1.0 / std::sqrt(x * x + y * y + eps2);
      }
    }
    return out;
  }
  // Antiderivative of 1/r up to terms depending on x or y alone, which cancel
  // in the rectangle difference.
  auto F = [](double x, double y) {
    const double tx = x == 0.0 ? 0.0 : x * std::asinh(y / std::abs(x));
    const double ty = y == 0.0 ? 0.0 : y * std::asinh(x / std::abs(y));
    return tx + ty;
  };
  for (int i = 0; i < N; ++i) {
    const double x = spec.coordinate(i);
    for (int j = 0; j < N; ++j) {
      const double y = spec.coordinate(j);
      const double x0 = x - 0.5 * h, x1 = x + 0.5 * h;
      const double y0 = y - 0.5 * h, y1 = y + 0.5 * h;
      out[i * N + j] = (F(x1, y1) - F(x0, y1) - F(x1, y0) + F(x0, y0)) / (h * h);
    }
  }
  return out;
}

struct Fft2d::Plans {
  fftw_plan fwd2 = nullptr, bwd2 = nullptr;
  fftw_plan fwd_lines[2] = {nullptr, nullptr};
  fftw_plan bwd_lines[2] = {nullptr, nullptr};
  ~Plans() {
    std::lock_guard lock(planner_mutex());
    for (fftw_plan p : {fwd2, bwd2, fwd_lines[0], fwd_lines[1], bwd_lines[0], bwd_lines[1]}) {
      if (p) fftw_destroy_plan(p);
    }
  }
};

Fft2d::Fft2d(int N) : N_(N) {
  static std::mutex cache_mu;
  static std::map<int, std::shared_ptr<const Plans>> cache;
  std::lock_guard cache_lock(cache_mu);
  if (auto it = cache.find(N); it != cache.end()) {
    plans_ = it->second;
    return;
  }
  auto plans = std::make_shared<Plans>();
  {
    std::lock_guard lock(planner_mutex());
    Field scratch(static_cast<std::size_t>(N) * N);
    fftw_complex* buf = as_fftw(scratch);
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    plans->fwd2 = fftw_plan_dft_2d(N, N, buf, buf, FFTW_FORWARD, flags);
    plans->bwd2 = fftw_plan_dft_2d(N, N, buf, buf, FFTW_BACKWARD, flags);
    int n[1] = {N};
    // axis 0: lines along i (stride N), one per j.
    plans->fwd_lines[0] = fftw_plan_many_dft(1, n, N, buf, nullptr, N, 1, buf, nullptr, N, 1,
                                             FFTW_FORWARD, flags);
    plans->bwd_lines[0] = fftw_plan_many_dft(1, n, N, buf, nullptr, N, 1, buf, nullptr, N, 1,
                                             FFTW_BACKWARD, flags);
    plans->fwd_lines[1] = fftw_plan_many_dft(1, n, N, buf, nullptr, 1, N, buf, nullptr, 1, N,
                                             FFTW_FORWARD, flags);
    plans->bwd_lines[1] = fftw_plan_many_dft(1, n, N, buf, nullptr, 1, N, buf, nullptr, 1, N,
                                             FFTW_BACKWARD, flags);
  }
  plans_ = plans;
  cache.emplace(N, plans_);
}

void Fft2d::forward(Field& f) const { fftw_execute_dft(plans_->fwd2, as_fftw(f), as_fftw(f)); }
void Fft2d::backward(Field& f) const { fftw_execute_dft(plans_->bwd2, as_fftw(f), as_fftw(f)); }
void Fft2d::forward_lines(Field& f, int axis) const {
  fftw_execute_dft(plans_->fwd_lines[axis], as_fftw(f), as_fftw(f));
}
void Fft2d::backward_lines(Field& f, int axis) const {
  fftw_execute_dft(plans_->bwd_lines[axis], as_fftw(f), as_fftw(f));
}

namespace {

// g(x, y) = f(x + s y, y) for axis 0, g(x, y) = f(x, y + s x) for axis 1.
void shear(const GridSpec& spec, const Fft2d& fft, Field& f, int axis, double s) {
  const int N = spec.N;
  fft.forward_lines(f, axis);
  const double inv_n = 1.0 / N;
  for (int i = 0; i < N; ++i) {
    for (int j = 0; j < N; ++j) {
      // Along axis 0 the line index is j and the transformed index is i.
      const int k_index = axis == 0 ? i : j;
      const int line = axis == 0 ? j : i;
      const double shift = s * spec.coordinate(line);
      const double phase = spec.wavenumber(k_index) * shift;
      f[i * N + j] *= std::polar(inv_n, phase);
    }
  }
  fft.backward_lines(f, axis);
}

// g(x, y) = f(R(pi/2) (x, y)) = f(-y, x).
Field quarter_turn(const GridSpec& spec, const Field& f) {
  const int N = spec.N;
  Field g(f.size());
  for (int i = 0; i < N; ++i) {
    for (int j = 0; j < N; ++j) g[i * N + j] = f[spec.mirror(j) * N + i];
  }
  return g;
}

}  // namespace

Field rotate_field(const GridSpec& spec, const Field& f, double angle) {
  const double quarter = kPi / 2;
  const long turns = std::lround(angle / quarter);
  const double rest = angle - turns * quarter;
  Field g = f;
  for (long t = 0; t < ((turns % 4) + 4) % 4; ++t) g = quarter_turn(spec, g);
  if (rest == 0.0) return g;
  // R(b) = Sx(-tan(b/2)) Sy(sin b) Sx(-tan(b/2)).
  const Fft2d fft(spec.N);
  const double t = -std::tan(0.5 * rest);
  shear(spec, fft, g, 0, t);
  shear(spec, fft, g, 1, std::sin(rest));
  shear(spec, fft, g, 0, t);
  return g;
}

GridState rotate_frame(const GridState& state, double theta) {
  GridState out = state;
  out.amplitudes = rotate_field(state.spec, state.amplitudes, theta);
  return out;
}

GridState to_lab(const GridState& state) {
  if (state.frame == Frame::Lab) return state;
  GridState out = rotate_frame(state, state.theta);
  out.frame = Frame::Lab;
  out.theta = 0.0;
  return out;
}

GridState to_rotating(const GridState& lab_state, double theta) {
  const GridState lab = to_lab(lab_state);
  GridState out = rotate_frame(lab, -theta);
  out.frame = Frame::Rotating;
  out.theta = theta;
  return out;
}

Field project_angular_momentum(const GridSpec& spec, const Field& f, int m, int copies) {
  if (copies < 1) throw ConfigError("projection needs at least one copy");
  Field out(f.size(), Complex(0.0));
  for (int k = 0; k < copies; ++k) {
    const double angle = 2.0 * kPi * k / copies;
    const Field r = k == 0 ? f : rotate_field(spec, f, angle);
    const Complex w = std::polar(1.0 / copies, -m * angle);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += w * r[i];
  }
  return out;
}

double grid_norm(const GridSpec& spec, const Field& f) {
  double s = 0.0;
  for (const Complex& c : f) s += std::norm(c);
  const double h = spec.spacing();
  return s * h * h;
}

void normalize(const GridSpec& spec, Field& f) {
  const double n = grid_norm(spec, f);
  if (!(n > 0.0) || !std::isfinite(n)) throw NumericalError("cannot normalize a zero or non-finite field");
  const double scale = 1.0 / std::sqrt(n);
  for (Complex& c : f) c *= scale;
}

Complex grid_inner(const GridSpec& spec, const Field& a, const Field& b) {
  Complex s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::conj(a[i]) * b[i];
  const double h = spec.spacing();
  return s * (h * h);
}

GridMoments grid_moments(const GridSpec& spec, const Field& f, const Fft2d& fft) {
  const int N = spec.N;
  GridMoments m{};
  double w = 0.0;
  for (int i = 0; i < N; ++i) {
    const double x = spec.coordinate(i);
    for (int j = 0; j < N; ++j) {
      const double y = spec.coordinate(j);
      const double p = std::norm(f[i * N + j]);
      w += p;
      m.x += p * x;
      m.y += p * y;
      m.x2 += p * x * x;
      m.y2 += p * y * y;
    }
  }
  const double h = spec.spacing();
  m.norm = w * h * h;
  m.x /= w;
  m.y /= w;
  m.x2 /= w;
  m.y2 /= w;

  Field hat = f;
  fft.forward(hat);
  double wk = 0.0;
  for (int i = 0; i < N; ++i) {
    const double kx = spec.wavenumber(i);
    const double kx1 = i == N / 2 ? 0.0 : kx;
    for (int j = 0; j < N; ++j) {
      const double ky = spec.wavenumber(j);
      const double ky1 = j == N / 2 ? 0.0 : ky;
      const double p = std::norm(hat[i * N + j]);
      wk += p;
      m.px += p * kx1;
      m.py += p * ky1;
      m.kinetic += 0.5 * p * (kx * kx + ky * ky);
    }
  }
  m.px /= wk;
  m.py /= wk;
  m.kinetic /= wk;

  // L_z = -i (xi d_eta - eta d_xi) with spectral first derivatives.
  Field dx(hat), dy(hat);
  const double inv = 1.0 / (static_cast<double>(N) * N);
  for (int i = 0; i < N; ++i) {
    const double kx = i == N / 2 ? 0.0 : spec.wavenumber(i);
    for (int j = 0; j < N; ++j) {
      const double ky = j == N / 2 ? 0.0 : spec.wavenumber(j);
      dx[i * N + j] *= Complex(0.0, kx * inv);
      dy[i * N + j] *= Complex(0.0, ky * inv);
    }
  }
  fft.backward(dx);
  fft.backward(dy);
  Complex lz = 0.0;
  for (int i = 0; i < N; ++i) {
    const double x = spec.coordinate(i);
    for (int j = 0; j < N; ++j) {
      const double y = spec.coordinate(j);
      const std::size_t k = static_cast<std::size_t>(i) * N + j;
      lz += std::conj(f[k]) * Complex(0.0, -1.0) * (x * dy[k] - y * dx[k]);
    }
  }
  m.lz = lz.real() / w;
  return m;
}

double boundary_probability(const GridSpec& spec, const Field& f, int cells) {
  const int N = spec.N;
  double s = 0.0;
  for (int i = 0; i < N; ++i) {
    for (int j = 0; j < N; ++j) {
      if (i < cells || i >= N - cells || j < cells || j >= N - cells) s += std::norm(f[i * N + j]);
    }
  }
  const double h = spec.spacing();
  return s * h * h;
}

std::vector<double> angular_histogram(const GridSpec& spec, const Field& f, int bins) {
  const int N = spec.N;
  std::vector<double> hist(bins, 0.0);
  const double h = spec.spacing();
  for (int i = 0; i < N; ++i) {
    const double x = spec.coordinate(i);
    for (int j = 0; j < N; ++j) {
      const double y = spec.coordinate(j);
      if (x == 0.0 && y == 0.0) continue;
      const double phi = std::atan2(y, x);
      int b = static_cast<int>(std::floor((phi + kPi) / (2 * kPi) * bins));
      b = std::clamp(b, 0, bins - 1);
      hist[b] += std::norm(f[i * N + j]) * h * h;
    }
  }
  return hist;
}

double circular_variance(const GridSpec& spec, const Field& f) {
  const int N = spec.N;
  Complex s = 0.0;
  double w = 0.0;
  for (int i = 0; i < N; ++i) {
    const double x = spec.coordinate(i);
    for (int j = 0; j < N; ++j) {
      const double y = spec.coordinate(j);
      const double r = std::hypot(x, y);
      if (r == 0.0) continue;
      const double p = std::norm(f[i * N + j]);
      s += p * Complex(x / r, y / r);
      w += p;
    }
  }
  return 1.0 - std::abs(s) / w;
}

int count_local_maxima(std::span<const double> hist, double rel_height) {
  const int n = static_cast<int>(hist.size());
  if (n < 3) return 0;
  const double top = *std::max_element(hist.begin(), hist.end());
  int count = 0;
  for (int i = 0; i < n; ++i) {
    const double prev = hist[(i + n - 1) % n];
    const double next = hist[(i + 1) % n];
    if (hist[i] > prev && hist[i] > next && hist[i] >= rel_height * top) ++count;
  }
  return count;
}

GridState gaussian_packet(const GridSpec& spec, double xi0, double width) {
  if (!(width > 0.0)) throw ConfigError("packet width must be positive");
  if (std::abs(xi0) + 3.0 / std::sqrt(2.0 * width) >= spec.L) {
    throw ConfigError("Gaussian packet does not fit in the box (|xi0| + 3/sqrt(2a) >= L)");
  }
  GridState s;
  s.spec = spec;
  s.amplitudes.resize(spec.size());
  const int N = spec.N;
  for (int i = 0; i < N; ++i) {
    const double x = spec.coordinate(i) - xi0;
    for (int j = 0; j < N; ++j) {
      const double y = spec.coordinate(j);
      s.amplitudes[i * N + j] = std::exp(-width * (x * x + y * y));
    }
  }
  normalize(spec, s.amplitudes);
  return s;
}

}  // namespace ringtrap
