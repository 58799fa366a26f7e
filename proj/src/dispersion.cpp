#include "hartree/dispersion.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include <nlohmann/json.hpp>

#include "hartree/errors.hpp"
#include "hartree/quadrature.hpp"

namespace hartree {

namespace {

constexpr cplx I{0.0, 1.0};

double norm_of(std::span<const double> xi) {
  double s = 0;
  for (double v : xi) s += v * v;
  return std::sqrt(s);
}

// Marches panels until `window` quiet panels covering at least two units of t.
template <class F>
cplx march(F&& f, double panel, double quiet_tol) {
  PanelMarch m;
  m.panel = panel;
  m.tail_tol = quiet_tol;
  m.window = std::max(6, static_cast<int>(std::ceil(2.0 / panel)));
  m.max_panels = 40000 + static_cast<int>(std::min(1e7, 100.0 / panel));
  m.rel_tol = 1e-13;
  // panels are at most half a period, so GK21 is already converged; deep
  // bisection only chases rounding once the profile has decayed
  m.depth = 3;
  return integrate_to_infinity(f, 0.0, m).value;
}

// I_n = int_0^3 x^n e^{-s x} dx, n = 0..3
std::array<cplx, 4> moments(cplx s) {
  std::array<cplx, 4> out;
  const cplx x = 3.0 * s;
  const cplx e = std::exp(-x);
  if (std::abs(x) <= 3.0) {
    // n! 3^{n+1} e^{-x} sum_j x^j / (n+1+j)!
    for (int n = 0; n < 4; ++n) {
      cplx term = 1.0, sum = 0.0;
      double fact = 1.0;
      for (int k = 1; k <= n + 1; ++k) fact *= k;
      term = 1.0 / fact;
      for (int j = 0; j < 60; ++j) {
        sum += term;
        term *= x / double(n + 2 + j);
        if (std::abs(term) < 1e-18 * std::abs(sum)) break;
      }
      double nf = 1.0;
      for (int k = 2; k <= n; ++k) nf *= k;
      out[n] = nf * std::pow(3.0, n + 1) * e * sum;
    }
  } else {
    cplx poly = 0.0, xp = 1.0;
    double nf = 1.0;
    for (int n = 0; n < 4; ++n) {
      if (n > 0) nf *= n;
      poly += xp / nf;
      xp *= x;
      out[n] = nf / std::pow(s, n + 1) * (1.0 - e * poly);
    }
  }
  return out;
}

std::array<cplx, 4> panel_weights(cplx s) {
  auto m = moments(s);
  // Lagrange basis on 0,1,2,3 in monomial form
  return {(-m[3] + 6.0 * m[2] - 11.0 * m[1] + 6.0 * m[0]) / 6.0, (m[3] - 5.0 * m[2] + 6.0 * m[1]) / 2.0,
          (-m[3] + 4.0 * m[2] - 3.0 * m[1]) / 2.0, (m[3] - 3.0 * m[2] + 2.0 * m[1]) / 6.0};
}

double potential_tail(const InteractionPotential& w, double k) {
  if (w.family() == PotentialFamily::tabulated_radial) return w.sup_norm();
  return std::abs(w.fourier_radial(k));
}

}  // namespace

cplx dispersion_m(const VelocityProfile& p, double tau, double omega, double k) {
  if (tau < 0) throw InvalidArgument("dispersion_m needs tau >= 0");
  k = std::abs(k);
  if (k == 0.0 || p.is_zero()) return 0.0;
  const cplx lam = cplx(tau, omega) / k;
  auto f = [&](double t) { return std::exp(-t * lam) * std::sin(t * k) * p.fourier_radial(2.0 * t); };
  const double panel = kPi / (std::abs(omega / k) + k + 1.0);
  return march(f, panel, 1e-12 * k * panel) / k;
}

cplx dispersion_m(const VelocityProfile& p, double tau, double omega, std::span<const double> xi) {
  return dispersion_m(p, tau, omega, norm_of(xi));
}

cplx reduced_m(const VelocityProfile& p, double tau, double omega, double k) {
  if (tau < 0) throw InvalidArgument("reduced_m needs tau >= 0");
  k = std::abs(k);
  if (p.is_zero()) return 0.0;
  // phi^(t) = (2 pi)^{(d-1)/2} g^(t) for the marginal phi of a radial g
  const double lift = std::pow(2.0 * kPi, 0.5 * (p.dim() - 1));
  const cplx lam(tau, omega);
  auto f = [&](double t) {
    const double s = k == 0.0 ? t : std::sin(t * k) / k;
    return std::exp(-t * lam) * s * p.fourier_radial(t);
  };
  const double panel = kPi / (std::abs(omega) + k + 1.0);
  return lift * march(f, panel, 1e-13 * panel);
}

double im_m_boundary(const VelocityProfile& p, double omega, double k) {
  if (p.dim() != 1) throw DimensionError("im_m_boundary needs a one-dimensional profile (take the marginal first)");
  if (!(omega > 0)) throw InvalidArgument("im_m_boundary needs omega > 0");
  k = std::abs(k);
  if (k == 0.0) return std::sqrt(kPi / 2.0) * p.derivative(omega);
  return std::sqrt(kPi) / (2.0 * k * std::sqrt(2.0)) * (p.radial(omega + k) - p.radial(std::abs(omega - k)));
}

// ---------------------------------------------------------------------------

LaplaceTable::LaplaceTable(const VelocityProfile& p, double h) {
  if (p.is_zero()) {
    h_ = 1.0;
    G_.assign(4, 0.0);
    return;
  }
  h_ = h > 0 ? h : 0.1 / std::max(1.0, p.support_radius());
  const int block = 192;
  const std::size_t cap = 3 * 65536;
  double peak = 0.0;
  // transforms computed by quadrature carry a relative noise floor near 1e-13
  const double floor = p.has_closed_form_fourier() ? 1e-16 : 1e-12;
  G_.clear();
  for (;;) {
    double blockmax = 0.0;
    for (int i = 0; i < block; ++i) {
      const double v = p.fourier_radial(h_ * static_cast<double>(G_.size()));
      G_.push_back(v);
      peak = std::max(peak, std::abs(v));
      blockmax = std::max(blockmax, std::abs(v));
    }
    if (blockmax <= floor * peak) break;
    if (G_.size() >= cap) {
      truncated_ = true;
      break;
    }
  }
  while (G_.size() % 3 != 1) G_.push_back(0.0);
  l1_ = 0.0;
  for (std::size_t i = 0; i + 1 < G_.size(); ++i) l1_ += 0.5 * h_ * (std::abs(G_[i]) + std::abs(G_[i + 1]));
}

LaplaceTable::LaplaceTable(std::vector<double> samples, double h) : h_(h), G_(std::move(samples)) {
  if (!(h > 0)) throw InvalidArgument("LaplaceTable step must be positive");
  if (G_.empty()) G_.push_back(0.0);
  while (G_.size() % 3 != 1) G_.push_back(0.0);
  for (std::size_t i = 0; i + 1 < G_.size(); ++i) l1_ += 0.5 * h_ * (std::abs(G_[i]) + std::abs(G_[i + 1]));
}

cplx LaplaceTable::operator()(cplx z) const {
  const cplx s = z * h_;
  const auto w = panel_weights(s);
  const cplx step = std::exp(-3.0 * s);
  const double decay = 3.0 * s.real();
  cplx E = 1.0, acc = 0.0;
  const std::size_t panels = (G_.size() - 1) / 3;
  for (std::size_t m = 0; m < panels; ++m) {
    const double* g = &G_[3 * m];
    acc += E * (w[0] * g[0] + w[1] * g[1] + w[2] * g[2] + w[3] * g[3]);
    E *= step;
    if (decay * static_cast<double>(m) > 45.0) break;
  }
  return h_ * acc;
}

cplx LaplaceTable::dispersion(double tau, double omega, double k) const {
  k = std::abs(k);
  if (k == 0.0) return 0.0;
  const cplx s = cplx(tau, omega) / (2.0 * k);
  return ((*this)(s - 0.5 * I * k) - (*this)(s + 0.5 * I * k)) / (4.0 * I * k);
}

// ---------------------------------------------------------------------------

namespace {

struct ShellResult {
  double min = INFINITY, tau = 0, omega = 0;
  double boundary = INFINITY, interior = INFINITY;
  std::vector<DispersionSample> samples;
};

struct Pass {
  PenroseReport rep;
  std::vector<std::array<double, 4>> dips;  // (|1+2wM|, tau, omega, xi) starts for Newton
};

bool before(double m, double t, double o, double x, double m2, double t2, double o2, double x2) {
  if (m != m2) return m < m2;
  if (t != t2) return t < t2;
  if (o != o2) return o < o2;
  return x < x2;
}

}  // namespace

PenroseReport penrose_margin(const VelocityProfile& p, const InteractionPotential& w, const ScanConfig& scan,
                             const Executor& ex) {
  if (scan.n_omega < 3 || scan.n_omega % 2 == 0) throw InvalidArgument("scan.n_omega must be odd and >= 3");
  if (scan.n_xi < 1 || scan.n_tau < 1) throw InvalidArgument("scan needs n_xi >= 1 and n_tau >= 1");
  PenroseReport rep;
  rep.warnings = p.warnings();
  if (p.moment_hypothesis_fails()) {
    if (!scan.force)
      throw InvalidArgument("profile fails the moment hypothesis of the Penrose criterion; rerun with --force");
    rep.warnings.push_back("moment hypothesis fails; scan forced");
  }
  std::vector<double> taus{0.0};
  for (int i = 0; i < scan.n_tau; ++i) {
    const double f = scan.n_tau == 1 ? 0.0 : double(i) / (scan.n_tau - 1);
    taus.push_back(scan.tau_min * std::pow(scan.tau_max / scan.tau_min, f));
  }
  rep.n_tau = static_cast<int>(taus.size());
  const bool trivial = p.is_zero() || w.is_zero();
  const LaplaceTable table = trivial ? LaplaceTable(VelocityProfile::zero(p.dim())) : LaplaceTable(p);
  rep.v_max = trivial ? 1.0 : p.momentum_radius(0.99);
  if (table.truncated()) rep.warnings.push_back("Fourier profile truncated before decaying; scan values are approximate");

  // tail certificate: |w^(xi)| sup|M| <= |w^(xi)| int|G| / (2|xi|)
  auto tail = [&](double k) { return potential_tail(w, k) * table.l1() / (2.0 * k); };
  double Xi = scan.xi_max;
  if (Xi <= 0) {
    if (trivial) {
      Xi = 1.0;
    } else {
      double hi = 1.0;
      while (tail(hi) >= scan.tail_target && hi < 1e8) hi *= 2;
      double lo = hi / 2;
      if (tail(lo) < scan.tail_target) lo = 0.0;
      for (int i = 0; i < 60; ++i) {
        const double mid = 0.5 * (lo + hi);
        (tail(mid) < scan.tail_target ? hi : lo) = mid;
      }
      Xi = hi;
    }
  }
  rep.xi_max = Xi;
  rep.tail_bound = trivial ? 0.0 : tail(Xi);
  if (rep.tail_bound >= scan.tail_target) rep.warnings.push_back("tail certificate above target at xi_max");

  const double core = std::min(Xi, 2.0 * rep.v_max + 2.0);
  rep.xi_core = core;

  std::vector<double> uG = table.samples();
  for (std::size_t i = 0; i < uG.size(); ++i) uG[i] *= table.step() * double(i);
  const LaplaceTable first_moment(std::move(uG), table.step());

  auto run = [&](int n_omega, int n_xi, bool keep) {
    // shell 0 is the xi -> 0 limit; a second uniform grid covers the core
    // band (0, Xc] when the certified Xi lies far beyond it
    std::vector<double> ks{0.0};
    if (core < Xi)
      for (int j = 1; j <= n_xi; ++j) ks.push_back(core * j / n_xi);
    for (int j = 1; j <= n_xi; ++j) {
      const double k = Xi * j / n_xi;
      if (k > ks.back()) ks.push_back(k);
    }
    std::sort(ks.begin(), ks.end());
    std::vector<ShellResult> shells(ks.size());
    const int half = (n_omega - 1) / 2;
    ex.for_each(ks.size(), [&](std::size_t j) {
      ShellResult& r = shells[j];
      const double k = ks[j];
      const double Om = j == 0 ? scan.omega_scale * rep.v_max : scan.omega_scale * (k * k + k * rep.v_max);
      const double wk = w.fourier_radial(k);
      for (double tau : taus)
        for (int i = 0; i <= half; ++i) {
          const double om = Om * i / half;
          cplx M = 0.0;
          if (!trivial) M = j == 0 ? 0.25 * first_moment(0.5 * cplx(tau, om)) : table.dispersion(tau, om, k);
          const cplx pv = 1.0 + 2.0 * wk * M;
          const double a = std::abs(pv);
          if (before(a, tau, om, k, r.min, r.tau, r.omega, k)) {
            r.min = a;
            r.tau = tau;
            r.omega = om;
          }
          (tau == 0.0 ? r.boundary : r.interior) = std::min(tau == 0.0 ? r.boundary : r.interior, a);
          if (keep) {
            r.samples.push_back({tau, om, k, M, pv});
            if (i > 0) r.samples.push_back({tau, -om, k, std::conj(M), std::conj(pv)});
          }
        }
    });
    Pass pass;
    PenroseReport& out = pass.rep;
    out.n_xi = n_xi;
    out.margin = INFINITY;
    out.boundary_margin = out.interior_margin = INFINITY;
    for (std::size_t j = 0; j < ks.size(); ++j) {
      const ShellResult& r = shells[j];
      const double k = ks[j];
      if (before(r.min, r.tau, r.omega, k, out.margin, out.argmin_tau, out.argmin_omega, out.argmin_xi)) {
        out.margin = r.min;
        out.argmin_tau = r.tau;
        out.argmin_omega = r.omega;
        out.argmin_xi = k;
      }
      out.boundary_margin = std::min(out.boundary_margin, r.boundary);
      out.interior_margin = std::min(out.interior_margin, r.interior);
      if (r.tau != 0.0 && r.interior < r.boundary) out.interior_minimum_xi.push_back(k);
      if (keep) out.grid.insert(out.grid.end(), r.samples.begin(), r.samples.end());
      if (r.min < scan.polish_below) {
        const double s = j == 0 ? ks[1] : 1.0;
        pass.dips.push_back({r.min, r.tau * s, r.omega * s, j == 0 ? ks[1] : k});
      }
    }
    std::sort(pass.dips.begin(), pass.dips.end());
    if (pass.dips.size() > 4) pass.dips.resize(4);
    return pass;
  };

  // a zero inside the half-plane only shows on the grid as a dip whose depth
  // depends on the spacing, so dips are chased with Newton from the grid minimum
  auto polish = [&](Pass& pass) {
    if (trivial) return;
    PenroseReport& r = pass.rep;
    for (const auto& d : pass.dips) {
      try {
        Root z = dispersion_root(p, w, d[3], std::max(d[1], 1e-2), d[2]);
        r.margin = z.residual;
        r.argmin_tau = z.tau;
        r.argmin_omega = z.omega;
        r.argmin_xi = d[3];
        (z.tau == 0.0 ? r.boundary_margin : r.interior_margin) = z.residual;
        rep.warnings.push_back("dispersion root located at tau=" + std::to_string(z.tau) +
                               " omega=" + std::to_string(z.omega) + " xi=" + std::to_string(d[3]));
        return;
      } catch (const NoRoot&) {
      } catch (const JacobianSingular&) {
      }
    }
  };

  int n_omega = scan.n_omega, n_xi = scan.n_xi;
  Pass first = run(n_omega, n_xi, scan.keep_grid && (trivial || scan.max_refinements == 0));
  polish(first);
  PenroseReport cur = std::move(first.rep);
  rep.margin_history.push_back(cur.margin);
  int refinements = 0;
  bool settled = trivial;
  while (!settled && cur.margin > scan.threshold) {
    if (refinements >= scan.max_refinements) break;
    n_omega = 2 * (n_omega - 1) + 1;
    n_xi *= 2;
    ++refinements;
    Pass pass = run(n_omega, n_xi, false);
    polish(pass);
    PenroseReport next = std::move(pass.rep);
    rep.margin_history.push_back(next.margin);
    const double change = std::abs(next.margin - cur.margin);
    cur = std::move(next);
    if (change < scan.rel_tol * cur.margin) settled = true;
  }
  if (scan.keep_grid && cur.grid.empty() && !trivial) cur.grid = run(n_omega, n_xi, true).rep.grid;

  rep.margin = cur.margin;
  rep.argmin_tau = cur.argmin_tau;
  rep.argmin_omega = cur.argmin_omega;
  rep.argmin_xi = cur.argmin_xi;
  rep.boundary_margin = cur.boundary_margin;
  rep.interior_margin = cur.interior_margin;
  rep.interior_minimum_xi = std::move(cur.interior_minimum_xi);
  rep.grid = std::move(cur.grid);
  rep.n_omega = n_omega;
  rep.n_xi = n_xi;
  rep.refinements = refinements;
  if (trivial) {
    rep.margin = rep.boundary_margin = rep.interior_margin = 1.0;
    rep.stable = true;
    return rep;
  }
  if (rep.margin <= scan.threshold) {
    rep.stable = false;
    return rep;
  }
  if (!settled) {
    if (scan.max_refinements == 0) {
      rep.stable = false;
      rep.warnings.push_back("no refinement requested; stability not confirmed");
      return rep;
    }
    throw ScanTooCoarse("margin still moving after " + std::to_string(refinements) +
                        " refinements (last " + std::to_string(rep.margin) + ")");
  }
  rep.stable = true;
  return rep;
}

std::string PenroseReport::to_json() const {
  nlohmann::json j{{"margin", margin},
                   {"argmin", {{"tau", argmin_tau}, {"omega", argmin_omega}, {"xi", argmin_xi}}},
                   {"boundary_margin", boundary_margin},
                   {"interior_margin", interior_margin},
                   {"stable", stable},
                   {"resolution",
                    {{"n_tau", n_tau},
                     {"n_omega", n_omega},
                     {"n_xi", n_xi},
                     {"refinements", refinements},
                     {"xi_max", xi_max},
                     {"xi_core", xi_core},
                     {"v_max", v_max},
                     {"margin_history", margin_history}}},
                   {"tail_certificate", tail_bound},
                   {"interior_minimum_xi", interior_minimum_xi},
                   {"warnings", warnings}};
  return j.dump(2);
}

// ---------------------------------------------------------------------------

SufficiencyReport penrose_sufficient_check(const VelocityProfile& p, const InteractionPotential& w) {
  SufficiencyReport r;
  const int d = p.dim();
  const double S = sphere_area(d);
  double moment = INFINITY;
  try {
    moment = penrose_moment_integral(p);
  } catch (const IntegralDiverges& e) {
    r.notes.push_back(std::string("moment integral diverges: ") + e.what());
  }
  r.ratio1 = w.sup_norm() * moment / (2.0 * S);
  if (w.is_zero() || p.is_zero()) r.ratio1 = 0.0;
  r.cond1 = r.ratio1 < 1.0;
  r.ratio2 = (w.negative_sup() == 0.0 || p.is_zero()) ? 0.0 : w.negative_sup() * moment / (2.0 * S);

  // monotonicity on a probe grid where g is not negligible
  bool mono = true;
  if (p.family() == ProfileFamily::ball_indicator) {
    mono = false;
    r.notes.push_back("indicator is flat inside the ball");
  } else if (!p.is_zero()) {
    const double R = p.support_radius();
    const double g0 = p.radial(0.0);
    for (int i = 1; i <= 400; ++i) {
      const double x = R * i / 401.0;
      if (p.radial(x) <= 1e-12 * g0) break;
      if (!(p.derivative(x) < 0)) {
        mono = false;
        break;
      }
    }
  }
  if (d <= 2) r.monotone = mono;

  // |S^{d-1}| int |G'(u)| u du from a sampled table
  if (p.is_zero()) {
    r.gradient_moment = 0.0;
  } else if (p.family() == ProfileFamily::tabulated_radial) {
    r.gradient_moment = NAN;
  } else {
    LaplaceTable t(p);
    const double h = t.step();
    const auto& G = t.samples();
    double s = 0;
    for (std::size_t i = 1; i + 1 < G.size(); ++i) s += std::abs(G[i + 1] - G[i - 1]) / (2 * h) * (h * i) * h;
    r.gradient_moment = S * s;
    if (t.truncated()) {
      r.gradient_moment = INFINITY;
      r.notes.push_back("Fourier profile does not decay within the table; gradient moment taken as infinite");
    }
  }
  const bool finite = std::isfinite(r.gradient_moment);
  if (p.family() == ProfileFamily::tabulated_radial) {
    r.notes.push_back("tabulated profile: monotonicity only sampled, second condition indeterminate");
    r.cond2.reset();
  } else {
    r.cond2 = (d >= 3 || mono) && finite && r.ratio2 < 1.0;
  }
  return r;
}

std::string SufficiencyReport::to_json() const {
  nlohmann::json j{{"cond1", {{"holds", cond1}, {"ratio", ratio1}}},
                   {"cond2",
                    {{"holds", cond2 ? nlohmann::json(*cond2) : nlohmann::json("indeterminate")},
                     {"monotone", monotone ? nlohmann::json(*monotone) : nlohmann::json(nullptr)},
                     {"gradient_moment", std::isnan(gradient_moment)   ? nlohmann::json(nullptr)
                                         : std::isfinite(gradient_moment) ? nlohmann::json(gradient_moment)
                                                                          : nlohmann::json("inf")},
                     {"negative_part_ratio", ratio2}}},
                   {"notes", notes}};
  if (!std::isfinite(ratio1)) j["cond1"]["ratio"] = "inf";
  return j.dump(2);
}

// ---------------------------------------------------------------------------

Root dispersion_root(const VelocityProfile& p, const InteractionPotential& w, double k, double tau0, double omega0,
                     int max_iter) {
  if (!(tau0 > 0)) throw InvalidArgument("dispersion_root needs tau0 > 0");
  const double wk = w.fourier_radial(k);
  auto F = [&](double tau, double om) { return 1.0 + 2.0 * wk * dispersion_m(p, tau, om, k); };
  const double h = 1e-6;
  double tau = tau0, om = omega0;
  cplx r = F(tau, om);
  int pinned = 0;
  // |1+2wM| -> 1 far out, so a stable pair can lure the iteration away
  const double escape = 100.0 * (1.0 + k) * (1.0 + k) * (1.0 + std::hypot(tau0, omega0));
  for (int it = 0; it < max_iter; ++it) {
    if (std::abs(r) <= 1e-8) return {tau, om, std::abs(r), it};
    const cplx dt = (F(tau + h, om) - r) / h;
    const cplx dw = (F(tau, om + h) - r) / h;
    const double a = dt.real(), b = dw.real(), c = dt.imag(), e = dw.imag();
    const double det = a * e - b * c;
    if (std::abs(det) <= 1e-14 * (a * a + b * b + c * c + e * e))
      throw JacobianSingular("dispersion Jacobian singular at tau=" + std::to_string(tau) +
                             " omega=" + std::to_string(om));
    const double st = -(e * r.real() - b * r.imag()) / det;
    const double so = -(-c * r.real() + a * r.imag()) / det;
    double lam = 1.0;
    bool moved = false;
    for (int ls = 0; ls < 12; ++ls, lam *= 0.5) {
      const double nt = std::max(0.0, tau + lam * st), no = om + lam * so;
      if (std::hypot(nt, no) > escape) continue;
      const cplx nr = F(nt, no);
      if (std::abs(nr) < std::abs(r)) {
        const bool stuck = nt == 0.0 && std::abs(nr) > 0.999 * std::abs(r);
        pinned = stuck ? pinned + 1 : 0;
        tau = nt;
        om = no;
        r = nr;
        moved = true;
        break;
      }
    }
    if (!moved || pinned >= 5)
      throw NoRoot("Newton stalled at tau=" + std::to_string(tau) + " omega=" + std::to_string(om) +
                   " with |1+2wM|=" + std::to_string(std::abs(r)));
  }
  if (std::abs(r) <= 1e-8) return {tau, om, std::abs(r), max_iter};
  throw NoRoot("iteration budget exhausted with |1+2wM|=" + std::to_string(std::abs(r)));
}

}  // namespace hartree
