#include "hartree/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include <Eigen/SVD>

#include "hartree/errors.hpp"

namespace hartree {

namespace {

constexpr cd I{0.0, 1.0};

std::vector<cd> phases(const TorusGrid& g, double t) {
  std::vector<cd> p(g.size());
  for (std::size_t a = 0; a < g.size(); ++a) p[a] = std::polar(1.0, -t * g.k2(a));
  return p;
}

// rows only: X <- e^{it Delta} X
void free_left(const TorusGrid& g, CMatrix& X, double t) {
  const auto p = phases(g, t);
  for (Eigen::Index a = 0; a < X.rows(); ++a) X.row(a) *= p[static_cast<std::size_t>(a)];
}

// column transforms of an M x r block
void left_fft(const TorusGrid& g, CMatrix& X, int sign) {
  if (X.rows() == X.cols()) {
    matrix_fft(g, X, Side::left, sign);
    return;
  }
  if (X.rows() != static_cast<Eigen::Index>(g.size())) throw InvalidArgument("block does not match the grid");
  std::vector<cd> col(g.size());
  for (Eigen::Index c = 0; c < X.cols(); ++c) {
    for (Eigen::Index r = 0; r < X.rows(); ++r) col[static_cast<std::size_t>(r)] = X(r, c);
    fft_inplace(g, col.data(), sign);
    for (Eigen::Index r = 0; r < X.rows(); ++r) X(r, c) = col[static_cast<std::size_t>(r)];
  }
}

bool constant(std::span<const double> V) {
  if (V.empty()) return true;
  const auto [lo, hi] = std::minmax_element(V.begin(), V.end());
  return *lo == *hi;
}

double op_norm(const CMatrix& A) {
  Eigen::BDCSVD<Eigen::MatrixXcd> svd(A);
  return svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
}

void check_box(const TorusGrid& a, const TorusGrid& b) {
  if (a.dim() != b.dim() || a.length() != b.length()) throw InvalidArgument("potential and state live in different boxes");
}

// Shared march: the step callback advances Q by one step.
template <class Step>
Trajectory march(const DensityMatrixState& Q0, const TimeGrid& tg, const PropagateOptions& opt, Step&& step) {
  const TorusGrid& G = Q0.grid;
  Trajectory tr;
  tr.time = tg;
  tr.grid = G;
  tr.rho = SpaceTimeField(tg, G.doubled(), true);
  CMatrix Q = Q0.Q;
  const cd tr0 = Q.trace();
  const int stride = std::max(1, opt.store_stride);

  auto record = [&](int n, double defect) {
    auto slot = tr.rho.at(static_cast<std::size_t>(n));
    rho_coefficients(G, Q, slot);
    SpatialField f(G.doubled());
    std::copy(slot.begin(), slot.end(), f.coeffs.begin());
    LedgerRow row{n, tg.t(static_cast<std::size_t>(n)), Q.trace(), defect, sobolev_norm(f, 0.0),
                  sobolev_norm(f, opt.hs_index)};
    tr.ledger.push_back(row);
    if (n % stride == 0 || n == tg.n_steps) {
      tr.snapshot_steps.push_back(static_cast<std::size_t>(n));
      tr.snapshots.emplace_back(G, Q, Q0.label);
    }
    const double drift = std::abs(row.trace - tr0);
    if (drift > opt.breach_tol * (1.0 + std::abs(tr0)) || defect > opt.breach_tol) {
      char buf[160];
      std::snprintf(buf, sizeof buf, "diagnostic breach at step %d: trace drift %.3e, hermiticity defect %.3e", n,
                    drift, defect);
      throw DiagnosticBreach(buf, tr.ledger_csv());
    }
  };

  record(0, herm_defect(Q));
  for (int n = 0; n < tg.n_steps; ++n) {
    step(Q, n);
    const double defect = herm_defect(Q);
    hermitize(Q);
    record(n + 1, defect);
  }
  return tr;
}

}  // namespace

void free_conjugate_inplace(const TorusGrid& g, CMatrix& Q, double t) {
  if (t == 0.0) return;
  // |k|^2 = dk^2 n with integer n: one phase per difference, exactly 1 on the diagonal
  const auto M = static_cast<Eigen::Index>(g.size());
  std::vector<long> n(g.size());
  long top = 0;
  for (std::size_t a = 0; a < g.size(); ++a) {
    const Mode m = g.mode(a);
    n[a] = 0;
    for (int ax = 0; ax < g.dim(); ++ax) n[a] += static_cast<long>(m[ax]) * m[ax];
    top = std::max(top, n[a]);
  }
  const double u = g.dk() * g.dk();
  std::vector<cd> ph(static_cast<std::size_t>(2 * top + 1));
  for (long j = -top; j <= top; ++j) ph[static_cast<std::size_t>(j + top)] = std::polar(1.0, -t * u * static_cast<double>(j));
  for (Eigen::Index a = 0; a < M; ++a)
    for (Eigen::Index b = 0; b < M; ++b)
      Q(a, b) *= ph[static_cast<std::size_t>(n[static_cast<std::size_t>(a)] - n[static_cast<std::size_t>(b)] + top)];
}

DensityMatrixState free_conjugate(const DensityMatrixState& Q, double t) {
  DensityMatrixState out = Q;
  free_conjugate_inplace(Q.grid, out.Q, t);
  return out;
}

std::vector<double> potential_samples(const TorusGrid& op, const TorusGrid& field, std::span<const cd> coeffs) {
  check_box(op, field);
  const auto c = field == op ? std::vector<cd>(coeffs.begin(), coeffs.end()) : resample_coefficients(field, coeffs, op);
  const auto v = to_values(op, c);
  std::vector<double> out(v.size());
  for (std::size_t j = 0; j < v.size(); ++j) out[j] = v[j].real();
  return out;
}

// ---------------------------------------------------------------- propagator

Propagator::Propagator(const TorusGrid& g, const VelocityProfile* background) : grid_(g) {
  if (background && !background->is_zero()) {
    if (background->dim() != g.dim()) throw DimensionError("background and grid dimensions differ");
    const auto M = static_cast<Eigen::Index>(g.size());
    G_ = CMatrix::Zero(M, M);
    for (Eigen::Index a = 0; a < M; ++a) {
      const auto k = g.momentum(static_cast<std::size_t>(a));
      G_(a, a) = background->eval(std::span<const double>(k.data(), g.dim()));
    }
    to_position_basis(g, G_);
  }
}

void Propagator::kinetic(CMatrix& Q, double h) const { free_conjugate_inplace(grid_, Q, h); }

void Propagator::potential(CMatrix& Q, std::span<const double> V, double h) const {
  if (V.size() != grid_.size()) throw InvalidArgument("potential samples do not match the grid");
  if (constant(V)) return;  // a global phase
  std::vector<cd> p(V.size());
  for (std::size_t j = 0; j < V.size(); ++j) p[j] = std::polar(1.0, -h * V[j]);
  to_position_basis(grid_, Q);
  const auto M = static_cast<Eigen::Index>(grid_.size());
  const bool bg = has_background();
  for (Eigen::Index j = 0; j < M; ++j) {
    for (Eigen::Index l = 0; l < M; ++l) {
      const cd ph = p[static_cast<std::size_t>(j)] * std::conj(p[static_cast<std::size_t>(l)]);
      Q(j, l) *= ph;
      // gamma = g + Q: P g P^* - g lands in the perturbation
      if (bg) Q(j, l) += G_(j, l) * (ph - 1.0);
    }
  }
  to_momentum_basis(grid_, Q);
}

void Propagator::step(CMatrix& Q, std::span<const double> V, double h) const {
  if (constant(V)) {
    kinetic(Q, h);
    return;
  }
  kinetic(Q, 0.5 * h);
  potential(Q, V, h);
  kinetic(Q, 0.5 * h);
}

void Propagator::kinetic_left(CMatrix& X, double h) const { free_left(grid_, X, h); }

void Propagator::potential_left(CMatrix& X, std::span<const double> V, double h) const {
  if (V.size() != grid_.size()) throw InvalidArgument("potential samples do not match the grid");
  if (constant(V) && V.size()) {
    X *= std::polar(1.0, -h * V[0]);
    return;
  }
  left_fft(grid_, X, +1);
  for (Eigen::Index j = 0; j < X.rows(); ++j) X.row(j) *= std::polar(1.0, -h * V[static_cast<std::size_t>(j)]);
  left_fft(grid_, X, -1);
  X *= 1.0 / static_cast<double>(grid_.size());
}

void Propagator::step_left(CMatrix& X, std::span<const double> V, double h) const {
  kinetic_left(X, 0.5 * h);
  potential_left(X, V, h);
  kinetic_left(X, 0.5 * h);
}

void Propagator::multiply_left(CMatrix& X, std::span<const double> V) const {
  left_fft(grid_, X, +1);
  for (Eigen::Index j = 0; j < X.rows(); ++j) X.row(j) *= V[static_cast<std::size_t>(j)];
  left_fft(grid_, X, -1);
  X *= 1.0 / static_cast<double>(grid_.size());
}

DensityMatrixState strang_step(const DensityMatrixState& Q, std::span<const double> V, double h) {
  DensityMatrixState out = Q;
  Propagator(Q.grid).step(out.Q, V, h);
  out.hermitize();
  return out;
}

// ---------------------------------------------------------------- trajectories

std::string Trajectory::ledger_csv() const {
  std::ostringstream os;
  os << "step,time,trace_re,trace_im,herm_defect,rho_l2,rho_hs\n";
  char buf[256];
  for (const auto& r : ledger) {
    std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.step, r.time, r.trace.real(),
                  r.trace.imag(), r.herm_defect, r.rho_l2, r.rho_hs);
    os << buf;
  }
  return os.str();
}

Trajectory propagate_UV(const DensityMatrixState& Q0, const SpaceTimeField& V, const VelocityProfile* background,
                        const PropagateOptions& opt) {
  check_box(Q0.grid, V.grid());
  const TimeGrid& tg = V.time();
  const Propagator P(Q0.grid, background);
  std::vector<std::vector<double>> samples(tg.samples());
  for (std::size_t i = 0; i < tg.samples(); ++i) samples[i] = potential_samples(Q0.grid, V.grid(), V.at(i));
  std::vector<double> avg(Q0.grid.size());
  return march(Q0, tg, opt, [&](CMatrix& Q, int n) {
    const auto& a = samples[static_cast<std::size_t>(n)];
    const auto& b = samples[static_cast<std::size_t>(n) + 1];
    for (std::size_t j = 0; j < avg.size(); ++j) avg[j] = opt.left_endpoint ? a[j] : 0.5 * (a[j] + b[j]);
    P.step(Q, avg, tg.dt);
  });
}

Trajectory propagate_UV(const DensityMatrixState& Q0, const VelocityProfile& g, const InteractionPotential& w,
                        const TimeGrid& tg, const PropagateOptions& opt) {
  const TorusGrid& G = Q0.grid;
  const TorusGrid D = G.doubled();
  const Propagator P(G, &g);
  std::vector<cd> rho(D.size()), v(D.size());
  auto tr = march(Q0, tg, opt, [&](CMatrix& Q, int) {
    P.kinetic(Q, 0.5 * tg.dt);
    rho_coefficients(G, Q, rho);
    convolve_coefficients(w, D, rho, v);
    P.potential(Q, potential_samples(G, D, v), tg.dt);
    P.kinetic(Q, 0.5 * tg.dt);
  });
  return tr;
}

DuhamelReport duhamel_defect(const SpaceTimeField& V, const DensityMatrixState& probe, const PropagateOptions& opt) {
  const TorusGrid& G = probe.grid;
  check_box(G, V.grid());
  const TimeGrid& tg = V.time();
  const double h = tg.dt;
  const Propagator P(G);
  std::vector<std::vector<double>> s(tg.samples());
  for (std::size_t i = 0; i < tg.samples(); ++i) s[i] = potential_samples(G, V.grid(), V.at(i));

  // interaction picture: e^{-it Delta} V(t) X(t), summed by prefix
  auto pulled = [&](const CMatrix& X, std::size_t i) {
    CMatrix Y = X;
    P.multiply_left(Y, s[i]);
    free_left(G, Y, -tg.t(i));
    return Y;
  };
  DuhamelReport rep;
  rep.per_step.push_back(0.0);
  CMatrix X = probe.Q;
  const CMatrix Y0 = pulled(X, 0);
  CMatrix sum = Y0;
  std::vector<double> avg(G.size());
  for (int n = 0; n < tg.n_steps; ++n) {
    const auto i = static_cast<std::size_t>(n);
    for (std::size_t j = 0; j < avg.size(); ++j) avg[j] = opt.left_endpoint ? s[i][j] : 0.5 * (s[i][j] + s[i + 1][j]);
    P.step_left(X, avg, h);
    const CMatrix Yn = pulled(X, i + 1);
    sum += Yn;
    CMatrix A = X;
    free_left(G, A, -tg.t(i + 1));
    A -= probe.Q;
    const CMatrix B = -I * h * (sum - 0.5 * (Y0 + Yn));
    rep.per_step.push_back(op_norm(A - B));
  }
  rep.defect = *std::max_element(rep.per_step.begin(), rep.per_step.end());
  return rep;
}

ReactionTerms reaction_terms(const TorusGrid& op, const PotentialField& V, const ResponseKernel& k,
                             const Executor& ex) {
  if (!V.source) throw MissingProvenance("reaction terms need the density that generated V");
  if (!(V.source->grid() == op.doubled()) || !(V.source->time() == V.V.time()))
    throw InvalidArgument("source density must live on the doubled operator grid and share V's time grid");
  const DensityMatrixState zero(op);
  ReactionTerms out;
  out.full = propagate_UV(zero, V.V, &k.profile()).rho;
  out.linear = apply_response(k, *V.source, ex);
  out.linear *= -1.0;
  out.higher = out.full - out.linear;
  return out;
}

SpaceTimeField linear_reaction_quadrature(const TorusGrid& op, const SpaceTimeField& V, const VelocityProfile& g) {
  check_box(op, V.grid());
  const TimeGrid& tg = V.time();
  const auto M = static_cast<Eigen::Index>(op.size());
  std::vector<double> gk(op.size());
  for (std::size_t a = 0; a < op.size(); ++a) {
    const auto k = op.momentum(a);
    gk[a] = g.eval(std::span<const double>(k.data(), op.dim()));
  }
  // collocated multiplication in the momentum basis: folded coefficient of k - k'
  auto commutator = [&](std::size_t i) {
    const auto c = V.grid() == op ? std::vector<cd>(V.at(i).begin(), V.at(i).end())
                                  : resample_coefficients(V.grid(), V.at(i), op);
    CMatrix C(M, M);
    const int n = op.n();
    for (Eigen::Index a = 0; a < M; ++a) {
      const Mode ma = op.mode(static_cast<std::size_t>(a));
      for (Eigen::Index b = 0; b < M; ++b) {
        const Mode mb = op.mode(static_cast<std::size_t>(b));
        Mode m{0, 0, 0};
        for (int ax = 0; ax < op.dim(); ++ax) m[ax] = ((ma[ax] - mb[ax]) % n + n + n / 2) % n - n / 2;
        C(a, b) = c[op.flat(m)] * (gk[static_cast<std::size_t>(b)] - gk[static_cast<std::size_t>(a)]);
      }
    }
    if (V.real()) {
      // real V: keep the commutator exactly anti-Hermitian
      const CMatrix Ca = C;
      C = 0.5 * (Ca - Ca.adjoint());
    }
    free_conjugate_inplace(op, C, -tg.t(i));
    return C;
  };
  SpaceTimeField rho(tg, op.doubled(), V.real());
  const CMatrix Z0 = commutator(0);
  CMatrix sum = Z0;
  for (std::size_t i = 1; i < tg.samples(); ++i) {
    const CMatrix Zi = commutator(i);
    sum += Zi;
    CMatrix Q = -I * tg.dt * (sum - 0.5 * (Z0 + Zi));
    free_conjugate_inplace(op, Q, tg.t(i));
    rho_coefficients(op, Q, rho.at(i));
  }
  return rho;
}

}  // namespace hartree
