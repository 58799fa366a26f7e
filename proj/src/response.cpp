#include "hartree/response.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <tuple>

#include "hartree/dynamics.hpp"
#include "hartree/errors.hpp"

namespace hartree {

namespace {

constexpr cd I{0.0, 1.0};

ModeWeights split_weights(std::span<const cd> H, double dt) {
  // H_m = K((m + 1/2) dt)
  const std::size_t n = H.size();
  ModeWeights w;
  w.c.assign(n, cd(0.0));
  w.b.assign(n, cd(0.0));
  for (std::size_t m = 0; m + 1 < n; ++m) w.c[m] = 0.5 * dt * (H[m] + (m ? H[m - 1] : cd(0.0)));
  for (std::size_t i = 1; i < n; ++i) w.b[i] = 0.5 * dt * H[i - 1];
  return w;
}

ModeWeights make_weights(TimeRule rule, std::span<const cd> K, double dt) {
  return rule == TimeRule::trapezoid ? trapezoid_weights(K, dt) : split_weights(K, dt);
}

double offset_of(TimeRule r) { return r == TimeRule::trapezoid ? 0.0 : 0.5; }

// g(k) - g(k+q) over operator modes with k+q still on the grid, summed per
// integer frequency 2 m_k.m_q + |m_q|^2 (units of dk^2).
std::map<long, double> lattice_terms(const VelocityProfile& g, const TorusGrid& G, const Mode& mq) {
  std::map<long, double> amp;
  for (std::size_t a = 0; a < G.size(); ++a) {
    Mode mk = G.mode(a), mp = mk;
    long dot = 0, qq = 0;
    for (int ax = 0; ax < G.dim(); ++ax) {
      mp[ax] += mq[ax];
      dot += static_cast<long>(mk[ax]) * mq[ax];
      qq += static_cast<long>(mq[ax]) * mq[ax];
    }
    if (!G.contains(mp)) continue;
    const auto kv = G.momentum(a), pv = G.momentum(G.flat(mp));
    const double c = g.eval(std::span<const double>(kv.data(), G.dim())) - g.eval(std::span<const double>(pv.data(), G.dim()));
    if (c != 0.0) amp[2 * dot + qq] += c;
  }
  return amp;
}

}  // namespace

struct ResponseKernel::Cache {
  std::mutex mu;
  std::map<std::tuple<int, double, int, int, double>, std::shared_ptr<const std::vector<ModeWeights>>> entries;
};

ResponseKernel::ResponseKernel(VelocityProfile g, InteractionPotential w, KernelModel model, TimeRule rule)
    : g_(std::move(g)), w_(std::move(w)), model_(model), rule_(rule), cache_(std::make_shared<Cache>()) {
  if (g_.dim() != w_.dim()) throw DimensionError("profile and potential dimensions differ");
}

double ResponseKernel::radial(double t, double k) const {
  if (t < 0 || k == 0) return 0.0;
  return 2.0 * w_.fourier_radial(k) * std::sin(t * k * k) * g_.fourier_radial(2.0 * t * k);
}

double ResponseKernel::operator()(double t, std::span<const double> xi) const {
  double k2 = 0;
  for (double v : xi) k2 += v * v;
  return radial(t, std::sqrt(k2));
}

double kernel_eval(const ResponseKernel& k, double t, std::span<const double> xi) { return k(t, xi); }

cd ResponseKernel::lattice(double t, const TorusGrid& density, std::size_t q) const {
  if (t < 0 || trivial()) return 0.0;
  const TorusGrid G(density.dim(), density.n() / 2, density.length());
  const double u = G.dk() * G.dk();
  cd s = 0;
  for (const auto& [f, c] : lattice_terms(g_, G, density.mode(q))) s += c * std::polar(1.0, -t * u * static_cast<double>(f));
  const double k = std::sqrt(density.k2(q));
  return std::pow(2.0 * kPi, 0.5 * G.dim()) * w_.fourier_radial(k) * I * s / G.volume();
}

// K((j + offset) dt), j = 0..n.
std::vector<cd> ResponseKernel::series(const TimeGrid& tg, const TorusGrid& density, std::size_t q,
                                       double offset) const {
  const std::size_t n = tg.samples();
  std::vector<cd> K(n, cd(0.0));
  const double k = std::sqrt(density.k2(q));
  const double wq = w_.fourier_radial(k);
  if (trivial() || wq == 0.0 || k == 0.0) return K;
  if (model_ == KernelModel::continuum) {
    for (std::size_t j = 0; j < n; ++j) K[j] = radial((static_cast<double>(j) + offset) * tg.dt, k);
    return K;
  }
  const TorusGrid G(density.dim(), density.n() / 2, density.length());
  const auto amp = lattice_terms(g_, G, density.mode(q));
  const double u = G.dk() * G.dk();
  const cd pref = std::pow(2.0 * kPi, 0.5 * G.dim()) * wq * I / G.volume();
  for (const auto& [f, c] : amp) {
    const double om = u * static_cast<double>(f);
    const cd step = std::polar(1.0, -om * tg.dt);
    cd z = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j % 64 == 0) z = std::polar(1.0, -om * (static_cast<double>(j) + offset) * tg.dt);  // reset drift
      K[j] += c * z;
      z *= step;
    }
  }
  for (auto& v : K) v *= pref;
  return K;
}

std::shared_ptr<const std::vector<ModeWeights>> ResponseKernel::weights(const TimeGrid& tg, const TorusGrid& density,
                                                                        const Executor& ex) const {
  if (model_ == KernelModel::lattice && (density.n() / 2 < 4 || (density.n() / 2) % 2))
    throw InvalidArgument("lattice kernel needs a doubled operator grid");
  const auto key = std::make_tuple(tg.n_steps, tg.dt, density.dim(), density.n(), density.length());
  {
    std::lock_guard lock(cache_->mu);
    auto it = cache_->entries.find(key);
    if (it != cache_->entries.end()) return it->second;
  }
  auto out = std::make_shared<std::vector<ModeWeights>>(density.size());
  const double off = offset_of(rule_);
  if (model_ == KernelModel::continuum) {
    // radial: one series per |q|^2 shell
    std::map<long, std::vector<std::size_t>> shells;
    for (std::size_t q = 0; q < density.size(); ++q) {
      const Mode m = density.mode(q);
      long s = 0;
      for (int ax = 0; ax < density.dim(); ++ax) s += static_cast<long>(m[ax]) * m[ax];
      shells[s].push_back(q);
    }
    std::vector<std::vector<std::size_t>> groups;
    for (auto& [s, v] : shells) groups.push_back(std::move(v));
    ex.for_each(groups.size(), [&](std::size_t i) {
      const auto K = series(tg, density, groups[i].front(), off);
      const auto w = make_weights(rule_, K, tg.dt);
      for (std::size_t q : groups[i]) (*out)[q] = w;
    });
  } else {
    ex.for_each(density.size(), [&](std::size_t q) {
      (*out)[q] = make_weights(rule_, series(tg, density, q, off), tg.dt);
    });
  }
  std::lock_guard lock(cache_->mu);
  cache_->entries[key] = out;
  return out;
}

ModeWeights trapezoid_weights(std::span<const cd> K, double dt) {
  const std::size_t n = K.size();
  ModeWeights w;
  w.c.resize(n);
  w.b.resize(n);
  for (std::size_t m = 0; m < n; ++m) {
    w.c[m] = (m ? 1.0 : 0.5) * dt * K[m];
    w.b[m] = m ? 0.5 * dt * K[m] : cd(0.0);  // [0,0] carries no weight
  }
  return w;
}

std::vector<cd> convolve_mode(const ModeWeights& w, std::span<const cd> r) {
  const std::size_t n = r.size();
  if (w.c.size() < n || w.b.size() < n) throw InvalidArgument("kernel weights shorter than the series");
  std::vector<cd> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    cd s = w.b[i] * r[0];
    for (std::size_t j = 1; j <= i; ++j) s += w.c[i - j] * r[j];
    out[i] = s;
  }
  return out;
}

std::vector<cd> volterra_solve(const ModeWeights& w, std::span<const cd> h) {
  const std::size_t n = h.size();
  if (w.c.size() < n || w.b.size() < n) throw InvalidArgument("kernel weights shorter than the series");
  std::vector<cd> f(n);
  if (n == 0) return f;
  const cd d0 = 1.0 + w.b[0], d = 1.0 + w.c[0];
  if (std::abs(d0) < 1e-8 || (n > 1 && std::abs(d) < 1e-8))
    throw NearSingularStep("Volterra diagonal coefficient within 1e-8 of zero");
  f[0] = h[0] / d0;
  for (std::size_t i = 1; i < n; ++i) {
    cd s = h[i] - w.b[i] * f[0];
    for (std::size_t j = 1; j < i; ++j) s -= w.c[i - j] * f[j];
    f[i] = s / d;
  }
  return f;
}

std::vector<cd> volterra_solve(const ResponseKernel& k, std::span<const double> xi, const TimeGrid& tg,
                               std::span<const cd> h) {
  if (h.size() != tg.samples()) throw InvalidArgument("series does not match the time grid");
  const double off = offset_of(k.rule());
  std::vector<cd> K(tg.samples());
  for (std::size_t j = 0; j < K.size(); ++j) K[j] = k((static_cast<double>(j) + off) * tg.dt, xi);
  return volterra_solve(make_weights(k.rule(), K, tg.dt), h);
}

SpaceTimeField apply_response(const ResponseKernel& k, const SpaceTimeField& rho, const Executor& ex) {
  SpaceTimeField out(rho.time(), rho.grid(), rho.real());
  if (k.trivial()) return out;
  auto W = k.weights(rho.time(), rho.grid(), ex);
  ex.for_each(rho.modes(), [&](std::size_t q) {
    const auto r = rho.mode_series(q);
    out.set_mode_series(q, convolve_mode((*W)[q], r));
  });
  return out;
}

SpaceTimeField invert_response(const ResponseKernel& k, const SpaceTimeField& Wf, const Executor& ex,
                               std::vector<std::string>* warnings) {
  if (k.trivial()) return Wf;
  SpaceTimeField out(Wf.time(), Wf.grid(), Wf.real());
  auto W = k.weights(Wf.time(), Wf.grid(), ex);
  std::vector<double> gain(Wf.modes(), 0.0);
  ex.for_each(Wf.modes(), [&](std::size_t q) {
    const auto h = Wf.mode_series(q);
    const auto f = volterra_solve((*W)[q], h);
    double hm = 0, fm = 0;
    for (std::size_t i = 0; i < h.size(); ++i) {
      hm = std::max(hm, std::abs(h[i]));
      fm = std::max(fm, std::abs(f[i]));
    }
    gain[q] = hm > 0 ? fm / hm : 0.0;
    out.set_mode_series(q, f);
  });
  if (warnings) {
    const auto it = std::max_element(gain.begin(), gain.end());
    if (it != gain.end() && *it > 100.0)
      warnings->push_back("response inversion amplifies mode " + std::to_string(it - gain.begin()) + " by " +
                          std::to_string(*it) + "; the pair may be Penrose unstable");
  }
  return out;
}

SpaceTimeField free_density(const DensityMatrixState& Q_in, const TimeGrid& tg) {
  const TorusGrid D = Q_in.grid.doubled();
  SpaceTimeField rho(tg, D, true);
  CMatrix Q = Q_in.Q;
  for (std::size_t i = 0; i < tg.samples(); ++i) {
    if (i) free_conjugate_inplace(Q_in.grid, Q, tg.dt);
    rho_coefficients(Q_in.grid, Q, rho.at(i));
  }
  return rho;
}

SpaceTimeField linear_solve(const DensityMatrixState& Q_in, const ResponseKernel& k, const TimeGrid& tg,
                            const Executor& ex, std::vector<std::string>* warnings) {
  return invert_response(k, free_density(Q_in, tg), ex, warnings);
}

GrowthFit growth_rate_fit(std::span<const cd> series, double dt, double start_fraction, double end_fraction) {
  const std::size_t n = series.size();
  if (n < 32) throw InvalidArgument("growth fit needs at least 32 samples");
  if (!(dt > 0) || !(start_fraction >= 0) || !(end_fraction <= 1) || !(start_fraction < end_fraction))
    throw InvalidArgument("bad growth fit window");
  GrowthFit fit;
  fit.first = static_cast<std::size_t>(std::floor(start_fraction * static_cast<double>(n)));
  fit.last = std::min(n, static_cast<std::size_t>(std::ceil(end_fraction * static_cast<double>(n))));
  const std::size_t m = fit.last - fit.first;
  if (m < 2) throw InvalidArgument("growth fit window holds fewer than two samples");
  std::vector<double> t(m), la(m), ph(m);
  for (std::size_t i = 0; i < m; ++i) {
    const cd v = series[fit.first + i];
    if (!(std::abs(v) > 0)) throw InvalidArgument("growth fit window contains a zero sample");
    t[i] = static_cast<double>(fit.first + i) * dt;
    la[i] = std::log(std::abs(v));
    ph[i] = std::arg(v);
    if (i) {
      // unwrap against the previous sample
      const double jump = ph[i] - ph[i - 1];
      ph[i] -= 2.0 * kPi * std::round(jump / (2.0 * kPi));
    }
  }
  const double tm = std::accumulate(t.begin(), t.end(), 0.0) / static_cast<double>(m);
  auto slope = [&](const std::vector<double>& y, double& intercept) {
    const double ym = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(m);
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < m; ++i) {
      sxy += (t[i] - tm) * (y[i] - ym);
      sxx += (t[i] - tm) * (t[i] - tm);
    }
    const double b = sxy / sxx;
    intercept = ym - b * tm;
    return b;
  };
  double a0 = 0, p0 = 0;
  fit.rate = slope(la, a0);
  fit.frequency = -slope(ph, p0);
  const double ym = std::accumulate(la.begin(), la.end(), 0.0) / static_cast<double>(m);
  double ss_res = 0, ss_tot = 0;
  for (std::size_t i = 0; i < m; ++i) {
    ss_res += std::pow(la[i] - (a0 + fit.rate * t[i]), 2);
    ss_tot += std::pow(la[i] - ym, 2);
  }
  fit.r2 = ss_tot > 0 ? 1.0 - ss_res / ss_tot : 1.0;
  return fit;
}

}  // namespace hartree
