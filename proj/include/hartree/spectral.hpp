#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hartree/parallel.hpp"

namespace hartree {

class InteractionPotential;

using cd = std::complex<double>;
using CMatrix = Eigen::Matrix<cd, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using CVector = Eigen::Matrix<cd, Eigen::Dynamic, 1>;
using Mode = std::array<int, 3>;
using Vec3 = std::array<double, 3>;

constexpr std::size_t kMaxMatrixSide = 4096;

struct TimeGrid {
  int n_steps = 2;
  double dt = 1.0;
  TimeGrid() = default;
  TimeGrid(int n, double step);
  double t_final() const { return n_steps * dt; }
  double t(std::size_t i) const { return static_cast<double>(i) * dt; }
  std::size_t samples() const { return static_cast<std::size_t>(n_steps) + 1; }
  bool operator==(const TimeGrid&) const = default;
};

// Periodic box [0,L)^d, N modes per axis, k = 2 pi n / L with n in [-N/2, N/2).
// Flat indices follow FFT order, row-major with the first axis slowest; the
// -N/2 mode is kept as is and never symmetrized.
class TorusGrid {
 public:
  TorusGrid() = default;
  TorusGrid(int d, int n, double length);

  int dim() const { return d_; }
  int n() const { return n_; }
  double length() const { return L_; }
  std::size_t size() const { return size_; }
  double volume() const;
  double cell_volume() const;
  double dk() const;

  Mode mode(std::size_t flat) const;
  bool contains(const Mode& m) const;
  std::size_t flat(const Mode& m) const;  // m must be in range
  Vec3 momentum(std::size_t flat) const;
  double k2(std::size_t flat) const;
  double bracket(std::size_t flat) const { return std::sqrt(1.0 + k2(flat)); }
  Vec3 position(std::size_t flat) const;

  TorusGrid doubled() const { return TorusGrid(d_, 2 * n_, L_); }
  bool operator==(const TorusGrid& o) const { return d_ == o.d_ && n_ == o.n_ && L_ == o.L_; }

 private:
  int d_ = 1, n_ = 4;
  double L_ = 1.0;
  std::size_t size_ = 4;
};

// Unnormalized in-place transforms with sign -1 (forward) or +1 (backward).
void fft_inplace(const TorusGrid& g, cd* data, int sign);
// Fourier-series coefficients f_q of the samples f(x_j) = sum_q f_q e^{iq.x_j}.
std::vector<cd> to_coefficients(const TorusGrid& g, std::span<const cd> values);
std::vector<cd> to_values(const TorusGrid& g, std::span<const cd> coeffs);

// Same trigonometric polynomial on another grid of the same box: zero padding
// when the target is finer, exact sampling (folding) when it is coarser by an
// integer factor.
std::vector<cd> resample_coefficients(const TorusGrid& from, std::span<const cd> c, const TorusGrid& to);

enum class Side { left, right, both };

// Row and column transforms of an N^d x N^d matrix.
void matrix_fft(const TorusGrid& g, CMatrix& Q, Side side, int sign);
// Q -> F Q F* and back, with F_{jk} = e^{ik.x_j} / sqrt(N^d).
void to_position_basis(const TorusGrid& g, CMatrix& Q);
void to_momentum_basis(const TorusGrid& g, CMatrix& Q);

struct SpatialField {
  TorusGrid grid;
  std::vector<cd> coeffs;
  SpatialField() = default;
  SpatialField(const TorusGrid& g) : grid(g), coeffs(g.size()) {}
  std::vector<cd> values() const { return to_values(grid, coeffs); }
  double reality_defect() const;
};

// Scalar field on TimeGrid x TorusGrid stored as Fourier-series coefficients,
// sample-major: coeffs[i * size + q].
class SpaceTimeField {
 public:
  SpaceTimeField() = default;
  SpaceTimeField(const TimeGrid& t, const TorusGrid& g, bool real = true);

  const TimeGrid& time() const { return time_; }
  const TorusGrid& grid() const { return grid_; }
  bool real() const { return real_; }
  void set_real(bool r) { real_ = r; }
  std::size_t samples() const { return time_.samples(); }
  std::size_t modes() const { return grid_.size(); }

  std::span<cd> at(std::size_t i) { return {data_.data() + i * modes(), modes()}; }
  std::span<const cd> at(std::size_t i) const { return {data_.data() + i * modes(), modes()}; }
  std::vector<cd> mode_series(std::size_t q) const;
  void set_mode_series(std::size_t q, std::span<const cd> s);
  std::vector<cd> values(std::size_t i) const { return to_values(grid_, at(i)); }
  void set_values(std::size_t i, std::span<const cd> v);
  std::vector<cd>& data() { return data_; }
  const std::vector<cd>& data() const { return data_; }

  double reality_defect() const;
  SpaceTimeField& operator+=(const SpaceTimeField& o);
  SpaceTimeField& operator-=(const SpaceTimeField& o);
  SpaceTimeField& operator*=(double a);
  friend SpaceTimeField operator+(SpaceTimeField a, const SpaceTimeField& b) { return a += b; }
  friend SpaceTimeField operator-(SpaceTimeField a, const SpaceTimeField& b) { return a -= b; }
  friend SpaceTimeField operator*(double a, SpaceTimeField f) { return f *= a; }

 private:
  void check_compatible(const SpaceTimeField& o) const;
  TimeGrid time_;
  TorusGrid grid_;
  bool real_ = true;
  std::vector<cd> data_;
};

// A potential together with the density it was generated from, when known.
struct PotentialField {
  SpaceTimeField V;
  std::shared_ptr<const SpaceTimeField> source;
};

struct DensityMatrixState {
  TorusGrid grid;
  CMatrix Q;
  std::string label = "perturbation";

  DensityMatrixState() = default;
  DensityMatrixState(const TorusGrid& g, std::string label = "perturbation");
  DensityMatrixState(const TorusGrid& g, CMatrix q, std::string label = "perturbation");
  void hermitize();
  double herm_defect() const;
  cd trace() const { return Q.trace(); }
};

void hermitize(CMatrix& Q);
double herm_defect(const CMatrix& Q);

// rho^_q = L^{-d} sum_k Q_{k+q,k} on the doubled lattice, which holds every
// difference of operator modes, so nothing is dropped or folded.
SpatialField rho_from_matrix(const TorusGrid& g, const CMatrix& Q);
inline SpatialField rho_from_matrix(const DensityMatrixState& s) { return rho_from_matrix(s.grid, s.Q); }
void rho_coefficients(const TorusGrid& g, const CMatrix& Q, std::span<cd> out);  // out on g.doubled()

// V^_q = (2 pi)^{d/2} w^(q) rho^_q.
SpatialField convolve_potential(const InteractionPotential& w, const SpatialField& rho);
PotentialField convolve_potential(const InteractionPotential& w, const SpaceTimeField& rho);
void convolve_coefficients(const InteractionPotential& w, const TorusGrid& g, std::span<const cd> rho, std::span<cd> out);

// (sum_t dt sum_q <q>^{2s} |f_q(t)|^2 L^d)^{1/2}
double sobolev_norm(const SpaceTimeField& f, double s);
double sobolev_norm(const SpatialField& f, double s);

// Singular values of D_s Q D_s, D_s = diag(<k>^s).
std::vector<double> weighted_singular_values(const TorusGrid& g, const CMatrix& Q, double s);
double schatten_from_singular(std::span<const double> sv, double alpha);
double weighted_schatten_norm(const TorusGrid& g, const CMatrix& Q, double s, double alpha);
// Same norm for Q = A B* without forming Q (QR of both factors, then a small SVD).
double weighted_schatten_norm_factored(const TorusGrid& g, const CMatrix& A, const CMatrix& B, double s, double alpha);

using MomentumFunction = std::function<double(const Vec3& k)>;
void apply_multiplier(SpatialField& f, const MomentumFunction& m);
void apply_multiplier(const TorusGrid& g, CMatrix& Q, const MomentumFunction& m, Side side);

}  // namespace hartree
