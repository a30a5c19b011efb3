#pragma once

// Cartesian (xi, eta) grids, complex amplitude fields on them and the
// spectral operations the propagator needs: FFTs, frame rotations and
// expectation values.

#include <complex>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "ringtrap/params.hpp"

namespace ringtrap {

using Complex = std::complex<double>;
using Field = std::vector<Complex>;  // row-major, index i * N + j, i along xi

struct GridSpec {
  int N = 256;
  double L = 8.0;
  bool offset = true;  // half-cell shift: no sample at the origin

  static GridSpec make(int N, double L, bool offset = true);

  double spacing() const { return 2.0 * L / N; }
  double coordinate(int i) const { return -L + (i + (offset ? 0.5 : 0.0)) * spacing(); }
  /// Angular wave number of FFT bin i.
  double wavenumber(int i) const;
  /// Index of the sample at -coordinate(i).
  int mirror(int i) const { return offset ? N - 1 - i : (N - i) % N; }
  std::size_t size() const { return static_cast<std::size_t>(N) * N; }

  bool operator==(const GridSpec&) const = default;
};

enum class Frame { Lab, Rotating };

const char* to_string(Frame f);
Frame frame_from_string(const std::string& s);

struct GridState {
  GridSpec spec;
  Field amplitudes;
  Frame frame = Frame::Lab;
  double tau = 0.0;
  double theta = 0.0;  // rotation angle of the frame; 0 in the lab frame
};

/// Regularization of b / rho on the grid.
enum class CoulombModel {
  CellAverage,  // mean of 1/rho over each grid cell (exact integral)
  SoftCore,     // 1 / sqrt(rho^2 + eps^2), eps = h / 2
};

const char* to_string(CoulombModel c);
CoulombModel coulomb_from_string(const std::string& s);

/// Softening length reported with a grid potential (0 for cell averaging).
double coulomb_epsilon(const GridSpec& spec, CoulombModel model);

/// Sampled 1 / rho under the chosen regularization.
std::vector<double> regularized_inverse_radius(const GridSpec& spec, CoulombModel model);

/// Thread-safe cached 2D and batched 1D FFTW plans for an N x N grid.
class Fft2d {
 public:
  explicit Fft2d(int N);
  void forward(Field& f) const;
  void backward(Field& f) const;  // unnormalized inverse
  /// 1D transforms of every line along axis 0 (xi) or axis 1 (eta).
  void forward_lines(Field& f, int axis) const;
  void backward_lines(Field& f, int axis) const;
  int size() const { return N_; }

 private:
  struct Plans;
  int N_;
  std::shared_ptr<const Plans> plans_;
};

/// f_out(r) = f_in(R(angle) r) with R the counter-clockwise rotation, i.e.
/// exp(i angle L_z) f_in. Quarter turns are exact index permutations; the
/// remainder uses three Fourier shears, which is unitary on the grid.
Field rotate_field(const GridSpec& spec, const Field& f, double angle);

/// Resamples the state on coordinates rotated by theta:
/// xi = xi' cos(theta) + eta' sin(theta), eta = -xi' sin(theta) + eta' cos(theta).
/// Metadata is copied unchanged.
GridState rotate_frame(const GridState& state, double theta);

GridState to_lab(const GridState& state);
GridState to_rotating(const GridState& lab_state, double theta);

/// Average of exp(-i m angle) exp(i angle L_z) f over `copies` equally spaced
/// angles: removes every angular momentum component m' with m' != m
/// (mod copies). The grid itself only conserves m mod 4.
Field project_angular_momentum(const GridSpec& spec, const Field& f, int m, int copies = 16);

/// h^2 sum |psi|^2.
double grid_norm(const GridSpec& spec, const Field& f);
void normalize(const GridSpec& spec, Field& f);
/// h^2 sum conj(a) b.
Complex grid_inner(const GridSpec& spec, const Field& a, const Field& b);

/// Expectation values of a (not necessarily normalized) state.
struct GridMoments {
  double norm;
  double x, y;        // <xi>, <eta>
  double x2, y2;      // <xi^2>, <eta^2>
  double px, py;      // canonical momentum
  double kinetic;     // <-lap/2>
  double lz;          // <-i (xi d_eta - eta d_xi)>
};

GridMoments grid_moments(const GridSpec& spec, const Field& f, const Fft2d& fft);

/// Probability within `cells` cells of the box edge.
double boundary_probability(const GridSpec& spec, const Field& f, int cells = 2);

/// Angular marginal P(phi) of |psi|^2 in `bins` equal bins on [-pi, pi).
std::vector<double> angular_histogram(const GridSpec& spec, const Field& f, int bins = 72);

/// 1 - |<exp(i phi)>| of the angular marginal.
double circular_variance(const GridSpec& spec, const Field& f);

/// Bins of a circular histogram strictly above both neighbours and at least
/// `rel_height` of the global maximum.
int count_local_maxima(std::span<const double> hist, double rel_height = 0.05);

/// N x N normalized Gaussian exp(-a ((xi - xi0)^2 + eta^2)) in the lab frame.
/// Throws ConfigError when xi0 + 3 / sqrt(2 a) reaches the box edge.
GridState gaussian_packet(const GridSpec& spec, double xi0, double width);

}  // namespace ringtrap
