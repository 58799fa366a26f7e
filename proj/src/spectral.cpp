#include "hartree/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <tuple>

#include <Eigen/Eigenvalues>
#include <fftw3.h>

#include "hartree/errors.hpp"
#include "hartree/profiles.hpp"

namespace hartree {

TimeGrid::TimeGrid(int n, double step) : n_steps(n), dt(step) {
  if (n < 2) throw InvalidArgument("time grid needs n_steps >= 2");
  if (!(step > 0)) throw InvalidArgument("time step must be positive");
}

// ---------------------------------------------------------------- grid

TorusGrid::TorusGrid(int d, int n, double length) : d_(d), n_(n), L_(length) {
  if (d < 1 || d > 3) throw DimensionError("torus dimension must be 1, 2 or 3");
  if (n < 4 || n % 2) throw InvalidArgument("modes per axis must be even and >= 4");
  if (!(length > 0)) throw InvalidArgument("box length must be positive");
  size_ = 1;
  for (int a = 0; a < d; ++a) size_ *= static_cast<std::size_t>(n);
}

double TorusGrid::volume() const { return std::pow(L_, d_); }
double TorusGrid::cell_volume() const { return std::pow(L_ / n_, d_); }
double TorusGrid::dk() const { return 2.0 * kPi / L_; }

Mode TorusGrid::mode(std::size_t flat) const {
  Mode m{0, 0, 0};
  for (int a = d_ - 1; a >= 0; --a) {
    int j = static_cast<int>(flat % n_);
    flat /= n_;
    m[a] = j < n_ / 2 ? j : j - n_;
  }
  return m;
}

bool TorusGrid::contains(const Mode& m) const {
  for (int a = 0; a < d_; ++a)
    if (m[a] < -n_ / 2 || m[a] >= n_ / 2) return false;
  for (int a = d_; a < 3; ++a)
    if (m[a] != 0) return false;
  return true;
}

std::size_t TorusGrid::flat(const Mode& m) const {
  std::size_t f = 0;
  for (int a = 0; a < d_; ++a) f = f * n_ + static_cast<std::size_t>((m[a] + n_) % n_);
  return f;
}

Vec3 TorusGrid::momentum(std::size_t flat) const {
  Mode m = mode(flat);
  return {dk() * m[0], dk() * m[1], dk() * m[2]};
}

double TorusGrid::k2(std::size_t flat) const {
  Vec3 k = momentum(flat);
  return k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
}

Vec3 TorusGrid::position(std::size_t flat) const {
  Vec3 x{0, 0, 0};
  for (int a = d_ - 1; a >= 0; --a) {
    x[a] = L_ * static_cast<double>(flat % n_) / n_;
    flat /= n_;
  }
  return x;
}

// ---------------------------------------------------------------- fft

namespace {

struct PlanKey {
  int d, n, howmany, stride, dist, sign;
  auto tie() const { return std::tie(d, n, howmany, stride, dist, sign); }
  bool operator<(const PlanKey& o) const { return tie() < o.tie(); }
};

// Plans are created under a lock (FFTW's planner is not thread safe) and
// executed concurrently through the new-array interface.
fftw_plan get_plan(const PlanKey& k) {
  static std::mutex mu;
  static std::map<PlanKey, fftw_plan> plans;
  std::lock_guard<std::mutex> lock(mu);
  auto it = plans.find(k);
  if (it != plans.end()) return it->second;
  int total = 1;
  for (int a = 0; a < k.d; ++a) total *= k.n;
  const std::size_t len = static_cast<std::size_t>(total - 1) * k.stride + static_cast<std::size_t>(k.howmany - 1) * k.dist + 1;
  auto* buf = fftw_alloc_complex(len);
  int dims[3] = {k.n, k.n, k.n};
  fftw_plan p = fftw_plan_many_dft(k.d, dims, k.howmany, buf, nullptr, k.stride, k.dist, buf, nullptr, k.stride, k.dist,
                                   k.sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
  fftw_free(buf);
  if (!p) throw Error("FFTW planning failed");
  plans.emplace(k, p);
  return p;
}

void run(const PlanKey& k, cd* data) {
  auto* p = reinterpret_cast<fftw_complex*>(data);
  fftw_execute_dft(get_plan(k), p, p);
}

}  // namespace

void fft_inplace(const TorusGrid& g, cd* data, int sign) {
  run({g.dim(), g.n(), 1, 1, 0, sign < 0 ? FFTW_FORWARD : FFTW_BACKWARD}, data);
}

std::vector<cd> to_coefficients(const TorusGrid& g, std::span<const cd> values) {
  std::vector<cd> c(values.begin(), values.end());
  fft_inplace(g, c.data(), -1);
  const double s = 1.0 / static_cast<double>(g.size());
  for (auto& x : c) x *= s;
  return c;
}

std::vector<cd> to_values(const TorusGrid& g, std::span<const cd> coeffs) {
  std::vector<cd> v(coeffs.begin(), coeffs.end());
  fft_inplace(g, v.data(), +1);
  return v;
}

std::vector<cd> resample_coefficients(const TorusGrid& from, std::span<const cd> c, const TorusGrid& to) {
  if (from.dim() != to.dim() || from.length() != to.length())
    throw InvalidArgument("resampling needs the same box and dimension");
  std::vector<cd> out(to.size(), 0.0);
  if (to.n() >= from.n()) {
    for (std::size_t i = 0; i < from.size(); ++i) out[to.flat(from.mode(i))] += c[i];
  } else {
    if (from.n() % to.n()) throw InvalidArgument("coarse grid must divide the fine grid");
    const int n = to.n();
    for (std::size_t i = 0; i < from.size(); ++i) {
      Mode m = from.mode(i);
      for (int a = 0; a < from.dim(); ++a) m[a] = ((m[a] % n) + n + n / 2) % n - n / 2;
      out[to.flat(m)] += c[i];
    }
  }
  return out;
}

void matrix_fft(const TorusGrid& g, CMatrix& Q, Side side, int sign) {
  const int M = static_cast<int>(g.size());
  if (Q.rows() != M || Q.cols() != M) throw InvalidArgument("matrix does not match the grid");
  const int s = sign < 0 ? FFTW_FORWARD : FFTW_BACKWARD;
  if (side == Side::right || side == Side::both) run({g.dim(), g.n(), M, 1, M, s}, Q.data());  // each row
  if (side == Side::left || side == Side::both) run({g.dim(), g.n(), M, M, 1, s}, Q.data());   // each column
}

void to_position_basis(const TorusGrid& g, CMatrix& Q) {
  const int M = static_cast<int>(g.size());
  run({g.dim(), g.n(), M, M, 1, FFTW_BACKWARD}, Q.data());
  run({g.dim(), g.n(), M, 1, M, FFTW_FORWARD}, Q.data());
  Q *= 1.0 / M;
}

void to_momentum_basis(const TorusGrid& g, CMatrix& Q) {
  const int M = static_cast<int>(g.size());
  run({g.dim(), g.n(), M, M, 1, FFTW_FORWARD}, Q.data());
  run({g.dim(), g.n(), M, 1, M, FFTW_BACKWARD}, Q.data());
  Q *= 1.0 / M;
}

// ---------------------------------------------------------------- fields

double SpatialField::reality_defect() const {
  double m = 0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    Mode k = grid.mode(i);
    Mode mk{-k[0], -k[1], -k[2]};
    if (!grid.contains(mk)) continue;  // Nyquist partner lies outside
    m = std::max(m, std::abs(coeffs[i] - std::conj(coeffs[grid.flat(mk)])));
  }
  return m;
}

SpaceTimeField::SpaceTimeField(const TimeGrid& t, const TorusGrid& g, bool real)
    : time_(t), grid_(g), real_(real), data_(t.samples() * g.size(), 0.0) {}

std::vector<cd> SpaceTimeField::mode_series(std::size_t q) const {
  std::vector<cd> s(samples());
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = data_[i * modes() + q];
  return s;
}

void SpaceTimeField::set_mode_series(std::size_t q, std::span<const cd> s) {
  for (std::size_t i = 0; i < samples(); ++i) data_[i * modes() + q] = s[i];
}

void SpaceTimeField::set_values(std::size_t i, std::span<const cd> v) {
  auto c = to_coefficients(grid_, v);
  std::copy(c.begin(), c.end(), at(i).begin());
}

double SpaceTimeField::reality_defect() const {
  double m = 0;
  SpatialField f(grid_);
  for (std::size_t i = 0; i < samples(); ++i) {
    std::copy(at(i).begin(), at(i).end(), f.coeffs.begin());
    m = std::max(m, f.reality_defect());
  }
  return m;
}

void SpaceTimeField::check_compatible(const SpaceTimeField& o) const {
  if (!(time_ == o.time_) || !(grid_ == o.grid_)) throw InvalidArgument("fields live on different grids");
}

SpaceTimeField& SpaceTimeField::operator+=(const SpaceTimeField& o) {
  check_compatible(o);
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
  real_ = real_ && o.real_;
  return *this;
}

SpaceTimeField& SpaceTimeField::operator-=(const SpaceTimeField& o) {
  check_compatible(o);
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
  real_ = real_ && o.real_;
  return *this;
}

SpaceTimeField& SpaceTimeField::operator*=(double a) {
  for (auto& x : data_) x *= a;
  return *this;
}

// ---------------------------------------------------------------- matrices

DensityMatrixState::DensityMatrixState(const TorusGrid& g, std::string l)
    : DensityMatrixState(g, CMatrix::Zero(g.size(), g.size()), std::move(l)) {}

DensityMatrixState::DensityMatrixState(const TorusGrid& g, CMatrix q, std::string l)
    : grid(g), Q(std::move(q)), label(std::move(l)) {
  if (g.size() > kMaxMatrixSide) throw InvalidArgument("N^d exceeds the dense-matrix limit of 4096");
  if (Q.rows() != static_cast<long>(g.size()) || Q.cols() != static_cast<long>(g.size()))
    throw InvalidArgument("matrix does not match the grid");
  hermitize();
}

void DensityMatrixState::hermitize() { hartree::hermitize(Q); }
double DensityMatrixState::herm_defect() const { return hartree::herm_defect(Q); }

void hermitize(CMatrix& Q) {
  const long n = Q.rows();
  for (long i = 0; i < n; ++i) {
    Q(i, i) = Q(i, i).real();
    for (long j = i + 1; j < n; ++j) {
      cd a = 0.5 * (Q(i, j) + std::conj(Q(j, i)));
      Q(i, j) = a;
      Q(j, i) = std::conj(a);
    }
  }
}

double herm_defect(const CMatrix& Q) {
  double m = 0;
  for (long i = 0; i < Q.rows(); ++i)
    for (long j = i; j < Q.cols(); ++j) m = std::max(m, std::abs(Q(i, j) - std::conj(Q(j, i))));
  return m;
}

void rho_coefficients(const TorusGrid& g, const CMatrix& Q, std::span<cd> out) {
  const TorusGrid D = g.doubled();
  const std::size_t M = g.size();
  std::fill(out.begin(), out.end(), cd(0.0));
  // per-axis offsets of each operator mode inside the doubled lattice
  std::vector<Mode> modes(M);
  for (std::size_t a = 0; a < M; ++a) modes[a] = g.mode(a);
  const int n2 = D.n();
  for (std::size_t a = 0; a < M; ++a) {
    const Mode& ma = modes[a];
    for (std::size_t b = 0; b < M; ++b) {
      const Mode& mb = modes[b];
      std::size_t f = 0;
      for (int ax = 0; ax < g.dim(); ++ax) f = f * n2 + static_cast<std::size_t>((ma[ax] - mb[ax] + n2) % n2);
      out[f] += Q(a, b);
    }
  }
  const double s = 1.0 / g.volume();
  for (auto& x : out) x *= s;
}

SpatialField rho_from_matrix(const TorusGrid& g, const CMatrix& Q) {
  SpatialField f(g.doubled());
  rho_coefficients(g, Q, f.coeffs);
  return f;
}

void convolve_coefficients(const InteractionPotential& w, const TorusGrid& g, std::span<const cd> rho, std::span<cd> out) {
  const double c = std::pow(2.0 * kPi, 0.5 * g.dim());
  for (std::size_t q = 0; q < g.size(); ++q) out[q] = c * w.fourier_radial(std::sqrt(g.k2(q))) * rho[q];
}

SpatialField convolve_potential(const InteractionPotential& w, const SpatialField& rho) {
  SpatialField V(rho.grid);
  convolve_coefficients(w, rho.grid, rho.coeffs, V.coeffs);
  return V;
}

PotentialField convolve_potential(const InteractionPotential& w, const SpaceTimeField& rho) {
  PotentialField out{SpaceTimeField(rho.time(), rho.grid(), rho.real()), std::make_shared<SpaceTimeField>(rho)};
  for (std::size_t i = 0; i < rho.samples(); ++i) convolve_coefficients(w, rho.grid(), rho.at(i), out.V.at(i));
  return out;
}

double sobolev_norm(const SpaceTimeField& f, double s) {
  const auto& g = f.grid();
  std::vector<double> wt(g.size());
  for (std::size_t q = 0; q < g.size(); ++q) wt[q] = std::pow(1.0 + g.k2(q), s);
  double sum = 0;
  for (std::size_t i = 0; i < f.samples(); ++i) {
    auto c = f.at(i);
    double inner = 0;
    for (std::size_t q = 0; q < g.size(); ++q) inner += wt[q] * std::norm(c[q]);
    sum += f.time().dt * inner * g.volume();
  }
  return std::sqrt(sum);
}

double sobolev_norm(const SpatialField& f, double s) {
  double inner = 0;
  for (std::size_t q = 0; q < f.grid.size(); ++q) inner += std::pow(1.0 + f.grid.k2(q), s) * std::norm(f.coeffs[q]);
  return std::sqrt(inner * f.grid.volume());
}

std::vector<double> weighted_singular_values(const TorusGrid& g, const CMatrix& Q, double s) {
  const long M = static_cast<long>(g.size());
  if (Q.rows() != M || Q.cols() != M) throw InvalidArgument("matrix does not match the grid");
  Eigen::VectorXd D(M);
  for (long i = 0; i < M; ++i) D(i) = std::pow(1.0 + g.k2(i), 0.5 * s);
  CMatrix W = D.asDiagonal() * Q * D.asDiagonal();
  // Hermitian input: |eigenvalues| are the singular values, at a fraction of the cost
  const double scale = W.norm();
  if (scale > 0 && (W - W.adjoint()).norm() <= 1e-13 * scale) {
    Eigen::SelfAdjointEigenSolver<CMatrix> es(W, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw SvdFailure("Hermitian eigenvalue solver failed");
    std::vector<double> sv(static_cast<std::size_t>(M));
    for (long i = 0; i < M; ++i) sv[static_cast<std::size_t>(i)] = std::abs(es.eigenvalues()(i));
    std::sort(sv.begin(), sv.end(), std::greater<>());
    return sv;
  }
  Eigen::BDCSVD<CMatrix> svd(W);
  if (svd.info() != Eigen::Success) throw SvdFailure("singular value decomposition failed");
  const auto& sv = svd.singularValues();
  return {sv.data(), sv.data() + sv.size()};
}

double schatten_from_singular(std::span<const double> sv, double alpha) {
  if (!(alpha >= 1.0)) throw InvalidArgument("Schatten exponent must be >= 1");
  double mx = 0;
  for (double x : sv) mx = std::max(mx, x);
  if (mx == 0.0 || std::isinf(alpha)) return mx;
  double sum = 0;
  for (double x : sv) sum += std::pow(x / mx, alpha);
  return mx * std::pow(sum, 1.0 / alpha);
}

double weighted_schatten_norm(const TorusGrid& g, const CMatrix& Q, double s, double alpha) {
  return schatten_from_singular(weighted_singular_values(g, Q, s), alpha);
}

double weighted_schatten_norm_factored(const TorusGrid& g, const CMatrix& A, const CMatrix& B, double s, double alpha) {
  const long M = static_cast<long>(g.size());
  if (A.rows() != M || B.rows() != M || A.cols() != B.cols()) throw InvalidArgument("factor shapes do not match");
  Eigen::VectorXd D(M);
  for (long i = 0; i < M; ++i) D(i) = std::pow(1.0 + g.k2(i), 0.5 * s);
  using Dense = Eigen::Matrix<cd, Eigen::Dynamic, Eigen::Dynamic>;
  Dense DA = D.asDiagonal() * A, DB = D.asDiagonal() * B;
  Eigen::HouseholderQR<Dense> qa(DA), qb(DB);
  const long r = A.cols(), ka = std::min(M, r);
  Dense Ra = qa.matrixQR().topRows(ka).template triangularView<Eigen::Upper>();
  Dense Rb = qb.matrixQR().topRows(ka).template triangularView<Eigen::Upper>();
  // D A B* D = Qa Ra Rb* Qb*, so the singular values are those of Ra Rb*
  Dense core = Ra * Rb.adjoint();
  Eigen::BDCSVD<Dense> svd(core);
  if (svd.info() != Eigen::Success) throw SvdFailure("singular value decomposition failed");
  const auto& sv = svd.singularValues();
  return schatten_from_singular(std::span<const double>(sv.data(), sv.size()), alpha);
}

void apply_multiplier(SpatialField& f, const MomentumFunction& m) {
  for (std::size_t q = 0; q < f.grid.size(); ++q) f.coeffs[q] *= m(f.grid.momentum(q));
}

void apply_multiplier(const TorusGrid& g, CMatrix& Q, const MomentumFunction& m, Side side) {
  const long M = static_cast<long>(g.size());
  Eigen::VectorXd v(M);
  for (long i = 0; i < M; ++i) v(i) = m(g.momentum(i));
  if (side == Side::left || side == Side::both) Q = v.asDiagonal() * Q;
  if (side == Side::right || side == Side::both) Q = Q * v.asDiagonal();
}

}  // namespace hartree
