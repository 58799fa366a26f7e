#include "hartree/verify.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include <Eigen/QR>
#include <Eigen/SVD>
#include <nlohmann/json.hpp>

#include "hartree/errors.hpp"
#include "hartree/quadrature.hpp"

namespace hartree {

namespace {

nlohmann::json num(double x) { return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(x > 0 ? "inf" : "nan"); }

nlohmann::json params_json(const StrichartzParams& p) {
  return {{"d", p.d}, {"p", num(p.p)}, {"q", num(p.q)}, {"alpha", num(p.alpha)}, {"sigma1", p.sigma1},
          {"sigma2", p.sigma2}};
}

double max_k2(const TorusGrid& g) {
  double m = 0;
  for (std::size_t a = 0; a < g.size(); ++a) m = std::max(m, g.k2(a));
  return m;
}

int steps_for(const TorusGrid& g, const StrichartzWindow& win) {
  if (win.n_steps > 0) return win.n_steps;
  return std::max(8, static_cast<int>(std::ceil(2.0 * win.t_final * max_k2(g))));
}

// e^{-it|k|^2} on each row, then the columns on the doubled grid as values
void evolve_values(const TorusGrid& g, const TorusGrid& D, const CMatrix& X, double t, std::vector<cd>& out) {
  const std::size_t MD = D.size();
  const auto r = static_cast<std::size_t>(X.cols());
  out.assign(MD * r, cd(0.0));
  const double scale = std::pow(g.length(), -0.5 * g.dim());
  for (std::size_t c = 0; c < r; ++c) {
    cd* col = out.data() + c * MD;
    for (std::size_t a = 0; a < g.size(); ++a)
      col[D.flat(g.mode(a))] = scale * std::polar(1.0, -t * g.k2(a)) * X(static_cast<Eigen::Index>(a),
                                                                          static_cast<Eigen::Index>(c));
    fft_inplace(D, col, +1);
  }
}

// x^{-2a} with x = <u, s>
double bracket_pow(double u, double s, double a) { return std::pow(1.0 + u * u + s * s, -a); }

}  // namespace

// ---------------------------------------------------------------- strichartz

std::vector<std::string> admissibility_violations(const StrichartzParams& prm) {
  std::vector<std::string> v;
  const double d = prm.d, p = prm.p, q = prm.q, a = prm.alpha;
  auto open = [&](double x, const char* name) {
    if (!(x > 1.0 && std::isfinite(x))) v.push_back(std::string(name) + " must lie in (1, inf)");
  };
  open(p, "p");
  open(q, "q");
  open(a, "alpha");
  if (!v.empty()) return v;
  if (!(a < p)) v.push_back("alpha < p fails");
  if (1.0 / a < 1.0 / (d * p) + 1.0 / q - 1e-12) v.push_back("1/alpha >= 1/(d p) + 1/q fails");
  if (prm.sigma1 < 0 || prm.sigma2 < 0) v.push_back("sigma1, sigma2 must be nonnegative");
  const double target = d - 2.0 / p - d / q;
  if (std::abs(prm.sigma1 + prm.sigma2 - target) > 1e-12) v.push_back("sigma1 + sigma2 = d - 2/p - d/q fails");
  const double cap = std::min(d / 2.0, d / 2.0 - 2.0 / p + 1.0);
  if (!(prm.sigma1 < cap && prm.sigma2 < cap)) v.push_back("sigma1, sigma2 < min(d/2, d/2 - 2/p + 1) fails");
  return v;
}

double strichartz_lhs(const TorusGrid& g, const StrichartzWindow& win, double p, double q, const CMatrix& A,
                      const CMatrix& B) {
  if (A.rows() != static_cast<Eigen::Index>(g.size()) || B.rows() != A.rows() || B.cols() != A.cols())
    throw InvalidArgument("factors do not match the grid");
  if (!(win.t_final > 0)) throw InvalidArgument("t_final must be positive");
  const TorusGrid D = g.doubled();
  const int n = steps_for(g, win);
  const double dt = win.t_final / n, cell = D.cell_volume();
  const std::size_t MD = D.size(), r = static_cast<std::size_t>(A.cols());
  std::vector<cd> a, b;
  double sum = 0.0;
  for (int j = 0; j <= n; ++j) {
    const double t = j * dt;
    evolve_values(g, D, A, t, a);
    evolve_values(g, D, B, t, b);
    double nq = 0.0;
    for (std::size_t x = 0; x < MD; ++x) {
      cd rho = 0.0;
      for (std::size_t c = 0; c < r; ++c) rho += a[c * MD + x] * std::conj(b[c * MD + x]);
      nq += std::pow(std::abs(rho), q);
    }
    const double w = (j == 0 || j == n) ? 0.5 * dt : dt;
    sum += w * std::pow(nq * cell, p / q);
  }
  return std::pow(sum, 1.0 / p);
}

double strichartz_rhs(const TorusGrid& g, const StrichartzParams& prm, const CMatrix& A, const CMatrix& B) {
  Eigen::MatrixXcd X = A, Y = B;
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    const double br = g.bracket(static_cast<std::size_t>(i));
    X.row(i) *= std::pow(br, prm.sigma1);
    Y.row(i) *= std::pow(br, prm.sigma2);
  }
  const Eigen::Index r = X.cols();
  Eigen::HouseholderQR<Eigen::MatrixXcd> qx(X), qy(Y);
  const Eigen::MatrixXcd Rx = qx.matrixQR().topRows(r).triangularView<Eigen::Upper>();
  const Eigen::MatrixXcd Ry = qy.matrixQR().topRows(r).triangularView<Eigen::Upper>();
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(Rx * Ry.adjoint());
  std::vector<double> sv(svd.singularValues().data(), svd.singularValues().data() + svd.singularValues().size());
  return schatten_from_singular(sv, prm.alpha);
}

std::string EstimateSample::to_json() const {
  nlohmann::json j{{"params", params_json(params)},
                   {"grid", {{"d", grid.dim()}, {"n", grid.n()}, {"length", grid.length()}}},
                   {"time", {{"t_final", t_final}, {"dt", dt}, {"n_steps", n_steps}}},
                   {"seed", seed},
                   {"admissible", admissible},
                   {"samples", ratios.size()},
                   {"max", max},
                   {"mean", mean},
                   {"notes", notes}};
  return j.dump(2);
}

std::string EstimateSample::ratios_csv() const {
  std::ostringstream os;
  os << "sample,rank,ratio\n";
  char buf[96];
  for (std::size_t i = 0; i < ratios.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%zu,%d,%.17g\n", i, ranks[i], ratios[i]);
    os << buf;
  }
  return os.str();
}

EstimateSample strichartz_sample(const TorusGrid& g, const StrichartzWindow& win, const StrichartzParams& prm,
                                 int n_samples, std::uint64_t seed, bool probe_sharpness, const Executor& ex) {
  if (prm.d != g.dim()) throw DimensionError("parameters and grid dimensions differ");
  if (n_samples < 1) throw InvalidArgument("need at least one sample");
  EstimateSample s;
  s.params = prm;
  s.grid = g;
  s.seed = seed;
  s.t_final = win.t_final;
  s.n_steps = steps_for(g, win);
  s.dt = win.t_final / s.n_steps;
  const auto bad = admissibility_violations(prm);
  s.admissible = bad.empty();
  if (!s.admissible) {
    if (!probe_sharpness) throw InvalidArgument("non-admissible exponents: " + bad.front());
    s.notes.push_back("sharpness probe: ratios are a trend, not a bound");
    for (const auto& b : bad) s.notes.push_back(b);
  }
  static constexpr int kRanks[] = {1, 2, 4, 8};
  const auto M = static_cast<Eigen::Index>(g.size());
  s.ratios.assign(static_cast<std::size_t>(n_samples), 0.0);
  s.ranks.assign(static_cast<std::size_t>(n_samples), 0);
  ex.for_each(static_cast<std::size_t>(n_samples), [&](std::size_t i) {
    std::seed_seq sq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                     static_cast<std::uint32_t>(i)};
    std::mt19937_64 rng(sq);
    std::normal_distribution<double> nd(0.0, std::sqrt(0.5));
    const int r = static_cast<int>(std::min<Eigen::Index>(kRanks[i % 4], M));
    for (;;) {
      CMatrix A(M, r), B(M, r);
      for (Eigen::Index a = 0; a < M; ++a)
        for (int c = 0; c < r; ++c) {
          A(a, c) = cd(nd(rng), nd(rng));
          B(a, c) = cd(nd(rng), nd(rng));
        }
      const double rhs = strichartz_rhs(g, prm, A, B);
      if (!(rhs > 0) || !std::isfinite(rhs)) continue;
      // normalize so the right side is 1
      const double f = 1.0 / std::sqrt(rhs);
      A *= f;
      B *= f;
      s.ratios[i] = strichartz_lhs(g, win, prm.p, prm.q, A, B) / strichartz_rhs(g, prm, A, B);
      s.ranks[i] = r;
      return;
    }
  });
  for (double x : s.ratios) {
    s.max = std::max(s.max, x);
    s.mean += x;
  }
  s.mean /= n_samples;
  return s;
}

std::string LadderResult::to_json() const {
  nlohmann::json j{{"coarse", nlohmann::json::parse(coarse.to_json())},
                   {"fine", nlohmann::json::parse(fine.to_json())},
                   {"growth", growth},
                   {"stable", stable}};
  return j.dump(2);
}

LadderResult strichartz_ladder(const TorusGrid& g, const StrichartzWindow& win, const StrichartzParams& prm,
                               int n_samples, std::uint64_t seed, bool probe_sharpness, const Executor& ex) {
  LadderResult r;
  r.coarse = strichartz_sample(g, win, prm, n_samples, seed, probe_sharpness, ex);
  r.fine = strichartz_sample(g.doubled(), win, prm, n_samples, seed, probe_sharpness, ex);
  r.growth = r.fine.max / r.coarse.max;
  r.stable = r.growth <= 2.0 && r.growth >= 0.5;
  return r;
}

// ---------------------------------------------------------------- hilbert-schmidt

std::string HsIdentity::to_json() const {
  return nlohmann::json{{"lhs", lhs}, {"rhs", rhs}, {"rel_err", rel_err}}.dump(2);
}

HsIdentity hs_identity_check(const SpaceTimeField& V, double alpha1, double alpha2) {
  const TorusGrid& g = V.grid();
  const TimeGrid& tg = V.time();
  const auto M = static_cast<Eigen::Index>(g.size());
  const double dt = tg.dt;

  CMatrix S = CMatrix::Zero(M, M);
  for (int n = 0; n < tg.n_steps; ++n) {
    const auto i = static_cast<std::size_t>(n);
    const auto v = V.values(i);
    CMatrix X = CMatrix::Zero(M, M);
    for (Eigen::Index j = 0; j < M; ++j) X(j, j) = v[static_cast<std::size_t>(j)];
    to_momentum_basis(g, X);
    const double t = tg.t(i);
    for (Eigen::Index a = 0; a < M; ++a)
      for (Eigen::Index b = 0; b < M; ++b)
        S(a, b) += dt * std::polar(1.0, t * (g.k2(static_cast<std::size_t>(a)) - g.k2(static_cast<std::size_t>(b)))) *
                   X(a, b);
  }
  HsIdentity h;
  for (Eigen::Index a = 0; a < M; ++a)
    for (Eigen::Index b = 0; b < M; ++b)
      h.lhs += std::norm(S(a, b) * std::pow(g.bracket(static_cast<std::size_t>(a)), -alpha1) *
                         std::pow(g.bracket(static_cast<std::size_t>(b)), -alpha2));

  const int N = g.n();
  for (std::size_t a = 0; a < g.size(); ++a) {
    const Mode ma = g.mode(a);
    for (std::size_t b = 0; b < g.size(); ++b) {
      const Mode mb = g.mode(b);
      Mode m{0, 0, 0};
      for (int ax = 0; ax < g.dim(); ++ax) m[ax] = ((ma[ax] - mb[ax]) % N + N + N / 2) % N - N / 2;
      const std::size_t f = g.flat(m);
      cd acc = 0.0;
      for (int n = 0; n < tg.n_steps; ++n) {
        const auto i = static_cast<std::size_t>(n);
        acc += dt * std::polar(1.0, tg.t(i) * (g.k2(a) - g.k2(b))) * V.at(i)[f];
      }
      h.rhs += std::norm(acc) * std::pow(g.bracket(a), -2 * alpha1) * std::pow(g.bracket(b), -2 * alpha2);
    }
  }
  const double scale = std::max(h.lhs, h.rhs);
  h.rel_err = scale > 0 ? std::abs(h.lhs - h.rhs) / scale : 0.0;
  return h;
}

// ---------------------------------------------------------------- weight integral

WeightIntegral weight_integral(int d, double alpha1, double alpha2, double rho_p, double r) {
  if (d < 2) throw DimensionError("the angular reduction needs d >= 2");
  if (!(r > 0) || rho_p < 0) throw InvalidArgument("need r > 0 and rho' >= 0");
  const double a = rho_p / r;
  auto f = [&](double s) {
    return std::pow(s, d - 2) * bracket_pow(a + r, s, alpha1) * bracket_pow(a - r, s, alpha2);
  };
  WeightIntegral w;
  // [0, S0] with S0 past the bulk, then decades
  const double S0 = 1.0 + std::abs(a) + r;
  w.value = integrate_gk(f, 0.0, S0, 1e-13).value;
  std::vector<double> inc;
  double lo = S0;
  constexpr int kMaxDecades = 14;
  for (int k = 0; k < kMaxDecades; ++k) {
    const double hi = 10 * lo;
    // logarithmic substitution s = e^u keeps each decade well resolved
    const double v = integrate_gk([&](double u) { return f(std::exp(u)) * std::exp(u); }, std::log(lo), std::log(hi),
                                  1e-13)
                         .value;
    w.value += v;
    inc.push_back(v);
    w.decades = k + 1;
    lo = hi;
    if (v <= 1e-15 * w.value) return w;
    if (inc.size() >= 4) {
      const double q1 = inc[inc.size() - 1] / inc[inc.size() - 2], q0 = inc[inc.size() - 2] / inc[inc.size() - 3];
      if (q1 < 0.5 && q0 < 0.5) {
        // geometric tail
        w.value += v * q1 / (1 - q1);
        return w;
      }
    }
  }
  const double q = inc.back() / inc[inc.size() - 2];
  if (q >= 0.97) {
    w.diverges = true;
    w.divergence = q <= 1.03 ? "logarithmic" : "power";
    w.value = INFINITY;
  } else {
    w.value += inc.back() * q / (1 - q);
  }
  return w;
}

std::string WeightBoundReport::to_json() const {
  nlohmann::json j{{"d", d},
                   {"alpha1", alpha1},
                   {"alpha2", alpha2},
                   {"alpha0", alpha0},
                   {"regime", regime},
                   {"rho_grid", rho_grid},
                   {"r_grid", r_grid},
                   {"row_max", nlohmann::json::array()},
                   {"C", num(C)},
                   {"argmax", {{"rho", argmax_rho}, {"r", argmax_r}}},
                   {"diverges", diverges},
                   {"divergence", divergence},
                   {"notes", notes}};
  for (double x : row_max) j["row_max"].push_back(num(x));
  return j.dump(2);
}

WeightBoundReport weight_sum_bound(int d, double alpha1, double alpha2, const std::vector<double>& rho_grid,
                                   const std::vector<double>& r_grid, double epsilon) {
  if (alpha1 < 0 || alpha2 < 0) throw InvalidArgument("weights must be nonnegative");
  if (rho_grid.empty() || r_grid.empty()) throw InvalidArgument("empty probe grid");
  WeightBoundReport rep;
  rep.d = d;
  rep.alpha1 = alpha1;
  rep.alpha2 = alpha2;
  rep.rho_grid = rho_grid;
  rep.r_grid = r_grid;
  const double h = 0.5 * (d - 1), mx = std::max(alpha1, alpha2), mn = std::min(alpha1, alpha2);
  if (alpha1 + alpha2 <= h) rep.notes.push_back("alpha1 + alpha2 <= (d-1)/2: the integral is not expected to converge");
  if (std::abs(mx - h) <= 1e-12) {
    rep.regime = "borderline";
    rep.alpha0 = std::max(0.0, mn - epsilon);
  } else if (mx < h) {
    rep.regime = "below";
    rep.alpha0 = std::max(0.0, alpha1 + alpha2 - h);
  } else {
    rep.regime = "above";
    rep.alpha0 = mn;
  }
  for (double r : r_grid) {
    double row = 0;
    for (double rp : rho_grid) {
      const auto w = weight_integral(d, alpha1, alpha2, rp, r);
      if (w.diverges) {
        rep.diverges = true;
        rep.divergence = w.divergence;
        rep.C = INFINITY;
        rep.row_max.push_back(INFINITY);
        return rep;
      }
      const double v = std::pow(1.0 + r * r, rep.alpha0) * w.value;
      row = std::max(row, v);
      if (v > rep.C) {
        rep.C = v;
        rep.argmax_rho = rp;
        rep.argmax_r = r;
      }
    }
    rep.row_max.push_back(row);
  }
  return rep;
}

}  // namespace hartree
