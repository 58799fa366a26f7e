#include "hartree/solver.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include <nlohmann/json.hpp>

#include "hartree/dispersion.hpp"
#include "hartree/errors.hpp"

namespace hartree {

namespace {

constexpr cd I{0.0, 1.0};

void check_rho(const SpaceTimeField& rho, const DensityMatrixState& Q_in) {
  if (!(rho.grid() == Q_in.grid.doubled())) throw InvalidArgument("density must live on the doubled operator grid");
}

std::string fmt(const char* f, double a, double b = 0.0) {
  char buf[200];
  std::snprintf(buf, sizeof buf, f, a, b);
  return buf;
}

}  // namespace

double default_sobolev_index(int d) { return d >= 3 ? 0.5 * d - 1.0 : 0.0; }

double input_norm(const DensityMatrixState& Q_in, double s) {
  const int d = Q_in.grid.dim();
  return weighted_schatten_norm(Q_in.grid, Q_in.Q, s, 2.0 * d / (d + 1.0));
}

DirectResult solve_direct(const DensityMatrixState& Q_in, const VelocityProfile& g, const InteractionPotential& w,
                          const TimeGrid& tg, const PropagateOptions& opt) {
  DirectResult r;
  const int d = Q_in.grid.dim();
  r.s = default_sobolev_index(d);
  r.input_norm = input_norm(Q_in, r.s);
  r.trajectory = propagate_UV(Q_in, g, w, tg, opt);
  if (d < 3) r.trajectory.notes.push_back("outside-theorem regime: d < 3");
  r.trajectory.notes.push_back(fmt("input norm %.6e at s = %g", r.input_norm, r.s));
  return r;
}

SpaceTimeField phi_apply(const SpaceTimeField& rho, const DensityMatrixState& Q_in, const ResponseKernel& k,
                         const Executor& ex) {
  check_rho(rho, Q_in);
  const auto V = convolve_potential(k.potential(), rho);
  auto R = propagate_UV(Q_in, V.V, &k.profile()).rho;
  R += apply_response(k, rho, ex);
  return invert_response(k, R, ex);
}

SpaceTimeField phi_four_term(const SpaceTimeField& rho, const DensityMatrixState& Q_in, const ResponseKernel& k,
                             const Executor& ex) {
  check_rho(rho, Q_in);
  const TorusGrid& G = Q_in.grid;
  const TimeGrid& tg = rho.time();
  const auto M = static_cast<Eigen::Index>(G.size());
  const Propagator P(G);
  const auto V = convolve_potential(k.potential(), rho);

  std::vector<std::vector<double>> s(tg.samples());
  for (std::size_t i = 0; i < tg.samples(); ++i) s[i] = potential_samples(G, V.V.grid(), V.V.at(i));

  // U_n = U_V(t_n, 0) on wave functions, same Strang steps as the march
  std::vector<CMatrix> U(tg.samples());
  U[0] = CMatrix::Identity(M, M);
  std::vector<double> avg(G.size());
  for (int n = 0; n < tg.n_steps; ++n) {
    const auto i = static_cast<std::size_t>(n);
    for (std::size_t j = 0; j < avg.size(); ++j) avg[j] = 0.5 * (s[i][j] + s[i + 1][j]);
    U[i + 1] = U[i];
    P.step_left(U[i + 1], avg, tg.dt);
  }

  // C_j = [V(t_j), g] in the momentum basis
  CMatrix Gm = CMatrix::Zero(M, M);
  for (Eigen::Index a = 0; a < M; ++a) {
    const auto km = G.momentum(static_cast<std::size_t>(a));
    Gm(a, a) = k.profile().eval(std::span<const double>(km.data(), G.dim()));
  }
  std::vector<CMatrix> C(tg.samples());
  for (std::size_t j = 0; j < tg.samples(); ++j) {
    CMatrix A = Gm;
    P.multiply_left(A, s[j]);
    C[j] = A - A.adjoint();
  }

  SpaceTimeField X(tg, G.doubled(), true);
  ex.for_each(tg.samples(), [&](std::size_t n) {
    CMatrix S = U[n] * Q_in.Q * U[n].adjoint();
    for (std::size_t j = 0; j <= n && n > 0; ++j) {
      const double wj = tg.dt * ((j == 0 || j == n) ? 0.5 : 1.0);
      CMatrix E = CMatrix::Zero(M, M);
      for (Eigen::Index a = 0; a < M; ++a)
        E(a, a) = std::polar(1.0, -(tg.t(n) - tg.t(j)) * G.k2(static_cast<std::size_t>(a)));
      const CMatrix D = U[n] * U[j].adjoint() - E;
      const CMatrix DC = D * C[j];
      const CMatrix EC = E * C[j];
      S += (-I * wj) * (EC * D.adjoint() + DC * E.adjoint() + DC * D.adjoint());
    }
    rho_coefficients(G, S, X.at(n));
  });
  return invert_response(k, X, ex);
}

FixedPointResult solve_fixed_point(const DensityMatrixState& Q_in, const ResponseKernel& k, const TimeGrid& tg,
                                   const FixedPointConfig& cfg, const Executor& ex) {
  if (!(cfg.tol > 0.0)) throw InvalidArgument("tolerance must be positive");
  if (cfg.max_iter < 1) throw InvalidArgument("max_iter must be at least 1");
  if (!(cfg.damping > 0.0 && cfg.damping <= 1.0)) throw InvalidArgument("damping must lie in (0, 1]");
  if (k.profile().dim() != Q_in.grid.dim()) throw DimensionError("profile and state dimensions differ");

  FixedPointResult r;
  const int d = Q_in.grid.dim();
  r.s = cfg.s.value_or(default_sobolev_index(d));
  if (d < 3) r.notes.push_back("outside-theorem regime: d < 3");
  try {
    if (!penrose_sufficient_check(k.profile(), k.potential()).cond1)
      r.notes.push_back("stability not certified by the sufficient condition");
  } catch (const Error&) {
    r.notes.push_back("stability check unavailable");
  }

  r.rho = SpaceTimeField(tg, Q_in.grid.doubled(), true);
  if (cfg.keep_iterates) r.iterates.push_back(r.rho);
  for (int it = 1; it <= cfg.max_iter; ++it) {
    const auto phi = phi_apply(r.rho, Q_in, k, ex);
    const auto diff = phi - r.rho;
    const double res = sobolev_norm(diff, r.s);
    r.residuals.push_back(res);
    if (r.residuals.size() > 1) {
      const double prev = r.residuals[r.residuals.size() - 2];
      r.factors.push_back(prev > 0 ? res / prev : 0.0);
    }
    r.iterations = it;
    if (res <= cfg.tol * sobolev_norm(phi, r.s)) {
      r.rho = phi;
      if (cfg.keep_iterates) r.iterates.push_back(r.rho);
      return r;
    }
    r.rho += cfg.damping * diff;
    if (cfg.keep_iterates) r.iterates.push_back(r.rho);
  }
  throw NotConverged(fmt("fixed point not reached in %g iterations, last residual %.3e", cfg.max_iter,
                         r.residuals.back()),
                     r.residuals, r.factors);
}

std::string ScatteringReport::to_json() const {
  nlohmann::json j{{"times", times},
                   {"quartile", quartile},
                   {"s", s},
                   {"tail_first", tail_first},
                   {"tail_last", tail_last},
                   {"verdict", verdict},
                   {"notes", notes}};
  j["alpha"] = std::isfinite(alpha) ? nlohmann::json(alpha) : nlohmann::json("inf");
  // partial tables would read as zero distances
  j["distance"] = full_table ? nlohmann::json(distance) : nlohmann::json(nullptr);
  return j.dump(2);
}

ScatteringReport scattering_diagnostic(const Trajectory& traj, double t0, double t1) {
  if (!(t1 > t0)) throw InvalidArgument("empty window");
  const TorusGrid& G = traj.grid;
  const int d = G.dim();
  ScatteringReport r;
  r.s = 0.5 * d - 1.0;
  r.alpha = d == 1 ? INFINITY : 2.0 * d / (d - 1.0);
  if (d < 3) r.notes.push_back("outside-theorem regime: d < 3");

  std::vector<CMatrix> W;
  for (std::size_t i = 0; i < traj.snapshots.size(); ++i) {
    const double t = traj.time.t(traj.snapshot_steps[i]);
    if (t < t0 - 1e-12 || t > t1 + 1e-12) continue;
    CMatrix Q = traj.snapshots[i].Q;
    free_conjugate_inplace(G, Q, -t);
    r.times.push_back(t);
    W.push_back(std::move(Q));
  }
  const std::size_t K = W.size();
  if (K < 4) throw InvalidArgument("need at least 4 snapshots in the window");
  r.distance.assign(K, std::vector<double>(K, 0.0));
  const std::size_t q = std::max<std::size_t>(2, K / 4);
  r.quartile = q;
  r.full_table = K <= 24;
  auto table = [&](std::size_t lo, std::size_t hi) {
    double m = 0;
    for (std::size_t i = lo; i < hi; ++i)
      for (std::size_t j = i + 1; j < hi; ++j) {
        if (r.distance[i][j] == 0.0) {
          const double v = weighted_schatten_norm(G, W[i] - W[j], r.s, r.alpha);
          r.distance[i][j] = r.distance[j][i] = v;
        }
        m = std::max(m, r.distance[i][j]);
      }
    return m;
  };
  // full table only for small windows; the tails need the quartiles alone
  if (r.full_table) table(0, K);
  r.tail_first = table(0, q);
  r.tail_last = table(K - q, K);
  r.verdict = r.tail_last < r.tail_first ? "scattering" : "no-scattering";
  return r;
}

}  // namespace hartree
