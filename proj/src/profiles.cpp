#include "hartree/profiles.hpp"

#include <algorithm>
#include <array>
#include <complex>
#include <cmath>
#include <fstream>
#include <sstream>

// boost pchip calls isnan unqualified
using std::isnan;
#include <boost/math/interpolators/pchip.hpp>
#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/special_functions/bessel.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <boost/math/tools/toms748_solve.hpp>
#include <nlohmann/json.hpp>

#include "hartree/errors.hpp"
#include "hartree/quadrature.hpp"

namespace hartree {

double sphere_area(int d) {
  if (d < 1) throw DimensionError("dimension must be >= 1");
  return 2.0 * std::pow(kPi, 0.5 * d) / std::tgamma(0.5 * d);
}

const char* to_string(ProfileFamily f) {
  switch (f) {
    case ProfileFamily::gaussian: return "gaussian";
    case ProfileFamily::fermi_dirac: return "fermi_dirac";
    case ProfileFamily::two_stream: return "two_stream";
    case ProfileFamily::ball_indicator: return "ball_indicator";
    case ProfileFamily::tabulated_radial: return "tabulated_radial";
  }
  return "?";
}

const char* to_string(PotentialFamily f) {
  switch (f) {
    case PotentialFamily::delta: return "delta";
    case PotentialFamily::gaussian: return "gaussian";
    case PotentialFamily::yukawa: return "yukawa";
    case PotentialFamily::tabulated_radial: return "tabulated_radial";
  }
  return "?";
}

// ---------------------------------------------------------------- table

struct RadialTable::Interp {
  boost::math::interpolators::pchip<std::vector<double>> p;
};

RadialTable::RadialTable(std::vector<double> r, std::vector<double> v) : r_(std::move(r)), v_(std::move(v)) {
  if (r_.size() != v_.size()) throw InvalidArgument("table columns differ in length");
  if (r_.size() < 4) throw InvalidArgument("table needs at least four nodes");
  for (std::size_t i = 1; i < r_.size(); ++i)
    if (!(r_[i] > r_[i - 1])) throw InvalidArgument("table abscissae must be strictly increasing");
  if (r_.front() < 0) throw InvalidArgument("radial table must start at r >= 0");
  for (double x : v_)
    if (!std::isfinite(x)) throw InvalidArgument("table values must be finite");
  auto x = r_;
  auto y = v_;
  // radial functions are even, so the slope at the origin vanishes
  double left = r_.front() == 0.0 ? 0.0 : std::numeric_limits<double>::quiet_NaN();
  interp_ = std::make_unique<Interp>(Interp{{std::move(x), std::move(y), left}});
}

RadialTable::~RadialTable() = default;

double RadialTable::operator()(double r) const {
  r = std::abs(r);
  if (r <= r_.front()) return v_.front();
  if (r > r_.back()) return 0.0;
  return interp_->p(r);
}

double RadialTable::held(double r) const {
  r = std::abs(r);
  if (r >= r_.back()) return v_.back();
  return (*this)(r);
}

double RadialTable::slope(std::size_t i) const { return interp_->p.prime(r_[i]); }

// ---------------------------------------------------------------- profile

namespace {

void require(bool ok, const char* msg) {
  if (!ok) throw InvalidArgument(msg);
}

double fermi(double x) {  // 1/(1+e^x) without overflow
  if (x > 0) {
    double e = std::exp(-x);
    return e / (1.0 + e);
  }
  return 1.0 / (1.0 + std::exp(x));
}

// int_a^b f over table knots with Gauss-Legendre, splitting long or oscillatory intervals.
template <class F>
double knot_integral(const std::vector<double>& knots, F&& f, double osc) {
  double s = 0.0;
  for (std::size_t i = 0; i + 1 < knots.size(); ++i) {
    double a = knots[i], b = knots[i + 1];
    int pieces = 1 + static_cast<int>(osc * (b - a));
    double h = (b - a) / pieces;
    for (int k = 0; k < pieces; ++k)
      s += boost::math::quadrature::gauss<double, 10>::integrate(f, a + k * h, a + (k + 1) * h);
  }
  return s;
}

// int_0^inf p(r) r^e e^{iur} dr for the piecewise cubic interpolant of a table
// (held constant below the first node), e = 0 or 1. Each piece is a polynomial,
// so long cells are done exactly by repeated parts and short ones by GL10.
std::complex<double> table_fourier(const RadialTable& t, double u, int e) {
  using C = std::complex<double>;
  const auto& r = t.r();
  const auto& v = t.v();
  C total = 0.0;
  auto piece = [&](double a, double h, std::array<double, 5> q) {
    // q: coefficients in x = r - a, degree <= 4
    C s = 0.0;
    if (u * h < 1.0) {
      auto f = [&](double x) {
        double pv = q[4];
        for (int k = 3; k >= 0; --k) pv = pv * x + q[k];
        return pv;
      };
      const double cr = boost::math::quadrature::gauss<double, 10>::integrate(
          [&](double x) { return f(x) * std::cos(u * x); }, 0.0, h);
      const double ci = boost::math::quadrature::gauss<double, 10>::integrate(
          [&](double x) { return f(x) * std::sin(u * x); }, 0.0, h);
      s = C(cr, ci);
    } else {
      // sum_k (-1)^k [q^(k)(x) e^{iux}]_0^h / (iu)^{k+1}
      const C iu(0.0, u), eh = std::exp(C(0.0, u * h));
      std::array<double, 5> d = q;
      C den = iu;
      double sign = 1.0;
      for (int k = 0; k <= 4; ++k) {
        double at_h = d[4];
        for (int j = 3; j >= 0; --j) at_h = at_h * h + d[j];
        s += sign * (at_h * eh - d[0]) / den;
        for (int j = 0; j < 4; ++j) d[j] = (j + 1) * d[j + 1];
        d[4] = 0.0;
        den *= iu;
        sign = -sign;
      }
    }
    total += std::exp(C(0.0, u * a)) * s;
  };
  auto with_power = [&](double a, std::array<double, 4> c) {
    std::array<double, 5> q{c[0], c[1], c[2], c[3], 0.0};
    if (e == 1) {
      // (a + x) p(x)
      q = {a * c[0], a * c[1] + c[0], a * c[2] + c[1], a * c[3] + c[2], c[3]};
    }
    return q;
  };
  if (r.front() > 0.0) piece(0.0, r.front(), with_power(0.0, {v.front(), 0.0, 0.0, 0.0}));
  for (std::size_t i = 0; i + 1 < r.size(); ++i) {
    const double a = r[i], h = r[i + 1] - r[i];
    const double y0 = v[i], y1 = v[i + 1], s0 = t.slope(i), s1 = t.slope(i + 1);
    const double dd = (y1 - y0) / h;
    const double c2 = (3.0 * dd - 2.0 * s0 - s1) / h;
    const double c3 = (s0 + s1 - 2.0 * dd) / (h * h);
    piece(a, h, with_power(a, {y0, s0, c2, c3}));
  }
  return total;
}

// Smooth finite-range integral split into panels of at most `panel`.
template <class F>
double panel_integral(F&& f, double a, double b, double panel, unsigned depth = 12) {
  int n = std::max(1, static_cast<int>(std::ceil((b - a) / panel)));
  double h = (b - a) / n, s = 0.0;
  for (int i = 0; i < n; ++i) {
    double err = 0, l1 = 0;
    s += boost::math::quadrature::gauss_kronrod<double, 21>::integrate(f, a + i * h, a + (i + 1) * h, depth, 1e-12,
                                                                       &err, &l1);
  }
  return s;
}

}  // namespace

VelocityProfile VelocityProfile::gaussian(int d, double beta, double amplitude) {
  require(d >= 1, "dimension must be >= 1");
  require(beta > 0, "beta must be positive");
  require(amplitude >= 0, "amplitude must be nonnegative");
  VelocityProfile p;
  p.family_ = ProfileFamily::gaussian;
  p.d_ = d;
  p.beta_ = beta;
  p.amp_ = amplitude;
  p.finish();
  return p;
}

VelocityProfile VelocityProfile::fermi_dirac(int d, double beta, double mu, double amplitude) {
  require(d >= 1, "dimension must be >= 1");
  require(beta > 0, "beta must be positive");
  require(amplitude >= 0, "amplitude must be nonnegative");
  VelocityProfile p;
  p.family_ = ProfileFamily::fermi_dirac;
  p.d_ = d;
  p.beta_ = beta;
  p.mu_ = mu;
  p.amp_ = amplitude;
  p.finish();
  return p;
}

VelocityProfile VelocityProfile::two_stream(int d, double beta, double v0, double amplitude) {
  require(d >= 1, "dimension must be >= 1");
  require(beta > 0, "beta must be positive");
  require(v0 >= 0, "v0 must be nonnegative");
  require(amplitude >= 0, "amplitude must be nonnegative");
  VelocityProfile p;
  p.family_ = ProfileFamily::two_stream;
  p.d_ = d;
  p.beta_ = beta;
  p.v0_ = v0;
  p.amp_ = amplitude;
  p.finish();
  return p;
}

VelocityProfile VelocityProfile::ball_indicator(int d, double mu, double amplitude) {
  require(d >= 1, "dimension must be >= 1");
  require(mu > 0, "ball radius^2 mu must be positive");
  require(amplitude >= 0, "amplitude must be nonnegative");
  VelocityProfile p;
  p.family_ = ProfileFamily::ball_indicator;
  p.d_ = d;
  p.mu_ = mu;
  p.amp_ = amplitude;
  p.finish();
  return p;
}

VelocityProfile VelocityProfile::tabulated(int d, std::vector<double> r, std::vector<double> g) {
  require(d >= 1, "dimension must be >= 1");
  for (double& x : g) {
    require(x > -1e-12, "tabulated profile has negative samples");
    x = std::max(x, 0.0);
  }
  VelocityProfile p;
  p.family_ = ProfileFamily::tabulated_radial;
  p.d_ = d;
  p.table_ = std::make_shared<RadialTable>(std::move(r), std::move(g));
  p.finish();
  return p;
}

VelocityProfile VelocityProfile::load_csv(int d, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open profile table " + path);
  std::vector<double> r, g;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ss(line);
    double a, b;
    if (!(ss >> a >> b)) {
      if (first) {  // header
        first = false;
        continue;
      }
      throw InvalidArgument("malformed row in " + path + ": " + line);
    }
    first = false;
    r.push_back(a);
    g.push_back(b);
  }
  return tabulated(d, std::move(r), std::move(g));
}

void VelocityProfile::finish() {
  warnings_.clear();
  if (moment_hypothesis_fails())
    warnings_.push_back("ball_indicator in d <= 3: sup_w int t|g^(t w)| dt is infinite, Penrose scans need --force");
}

bool VelocityProfile::is_zero() const {
  if (family_ == ProfileFamily::tabulated_radial)
    return std::all_of(table_->v().begin(), table_->v().end(), [](double x) { return x == 0.0; });
  return amp_ == 0.0;
}

bool VelocityProfile::moment_hypothesis_fails() const {
  return family_ == ProfileFamily::ball_indicator && d_ <= 3;
}

double VelocityProfile::radial(double r) const {
  r = std::abs(r);
  switch (family_) {
    case ProfileFamily::gaussian: return amp_ * std::exp(-beta_ * r * r);
    case ProfileFamily::fermi_dirac: return amp_ * fermi(beta_ * (r * r - mu_));
    case ProfileFamily::two_stream:
      return amp_ * (std::exp(-beta_ * (r - v0_) * (r - v0_)) + std::exp(-beta_ * (r + v0_) * (r + v0_)));
    case ProfileFamily::ball_indicator: return r * r <= mu_ ? amp_ : 0.0;
    case ProfileFamily::tabulated_radial: return std::max(0.0, (*table_)(r));
  }
  return 0.0;
}

double VelocityProfile::eval(std::span<const double> xi) const {
  double s = 0;
  for (double x : xi) s += x * x;
  return radial(std::sqrt(s));
}

double VelocityProfile::derivative(double r) const {
  switch (family_) {
    case ProfileFamily::gaussian: return -2.0 * beta_ * r * amp_ * std::exp(-beta_ * r * r);
    case ProfileFamily::fermi_dirac: {
      double s = fermi(beta_ * (r * r - mu_));
      return -2.0 * beta_ * r * amp_ * s * (1.0 - s);
    }
    case ProfileFamily::two_stream: {
      double a = r - v0_, b = r + v0_;
      return -2.0 * beta_ * amp_ * (a * std::exp(-beta_ * a * a) + b * std::exp(-beta_ * b * b));
    }
    case ProfileFamily::ball_indicator: {
      double R = std::sqrt(mu_);
      if (std::abs(r - R) <= 1e-12 * std::max(1.0, R))
        throw NotDifferentiable("ball indicator is not differentiable at its edge");
      return 0.0;
    }
    case ProfileFamily::tabulated_radial: {
      double h = 1e-6 * std::max(1.0, r);
      return (radial(r + h) - radial(std::abs(r - h))) / (2.0 * h);
    }
  }
  return 0.0;
}

double VelocityProfile::support_radius() const {
  switch (family_) {
    case ProfileFamily::gaussian: return std::sqrt(40.0 / beta_);
    case ProfileFamily::fermi_dirac: return std::sqrt(std::max(mu_, 0.0) + 40.0 / beta_);
    case ProfileFamily::two_stream: return v0_ + std::sqrt(40.0 / beta_);
    case ProfileFamily::ball_indicator: return std::sqrt(mu_);
    case ProfileFamily::tabulated_radial: return table_->r_max();
  }
  return 0.0;
}

double VelocityProfile::integrate_radial(const std::function<double(double)>& h) const {
  const double R = support_radius();
  auto f = [&](double r) { return h(r) * std::pow(r, d_ - 1); };
  double s = 0.0;
  if (family_ == ProfileFamily::tabulated_radial) {
    s = knot_integral(table_->r(), f, 0.0);
    if (table_->r_min() > 0) s += panel_integral(f, 0.0, table_->r_min(), table_->r_min());
  } else {
    s = panel_integral(f, 0.0, R, R / 16.0);
  }
  return sphere_area(d_) * s;
}

double VelocityProfile::mass() const {
  if (family_ == ProfileFamily::ball_indicator) return amp_ * sphere_area(d_) * std::pow(mu_, 0.5 * d_) / d_;
  return integrate_radial([this](double r) { return radial(r); });
}

double VelocityProfile::momentum_radius(double fraction) const {
  const double total = mass();
  if (total == 0.0) return 0.0;
  const double R = support_radius();
  double lo = 0.0, hi = R;
  auto f = [&](double r) { return radial(r) * std::pow(r, d_ - 1); };
  const double full = panel_integral(f, 0.0, R, R / 16.0);
  for (int it = 0; it < 60; ++it) {
    double mid = 0.5 * (lo + hi);
    double part = panel_integral(f, 0.0, mid, R / 16.0);
    (part < fraction * full ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

bool VelocityProfile::has_closed_form_fourier() const {
  switch (family_) {
    case ProfileFamily::gaussian:
    case ProfileFamily::ball_indicator: return true;
    case ProfileFamily::two_stream: return d_ == 1;
    default: return false;
  }
}

double VelocityProfile::fourier_radial(double u) const {
  u = std::abs(u);
  switch (family_) {
    case ProfileFamily::gaussian:
      return amp_ * std::pow(2.0 * beta_, -0.5 * d_) * std::exp(-u * u / (4.0 * beta_));
    case ProfileFamily::two_stream:
      if (d_ == 1) return amp_ * std::pow(2.0 * beta_, -0.5) * std::exp(-u * u / (4.0 * beta_)) * 2.0 * std::cos(v0_ * u);
      break;
    case ProfileFamily::ball_indicator: {
      const double R = std::sqrt(mu_), nu = 0.5 * d_, z = R * u;
      if (z < 1e-4) {
        // leading terms of the series, (z/2)^nu / Gamma(nu+1) (1 - z^2 / (4 (nu+1)))
        return amp_ * std::pow(R, d_) * std::pow(2.0, -nu) / std::tgamma(nu + 1.0) * (1.0 - z * z / (4.0 * (nu + 1.0)));
      }
      return amp_ * std::pow(R, nu) * std::pow(u, -nu) * boost::math::cyl_bessel_j(nu, z);
    }
    default: break;
  }
  if (is_zero()) return 0.0;
  return hankel(u);
}

double VelocityProfile::hankel(double u) const {
  if (u == 0.0) return mass() * std::pow(2.0 * kPi, -0.5 * d_);
  const double R = support_radius();
  const double c = std::sqrt(2.0 / kPi);
  std::function<double(double)> f;
  double pre = 1.0;
  if (d_ == 1) {
    f = [&](double r) { return radial(r) * std::cos(u * r); };
    pre = c;
  } else if (d_ == 3) {
    f = [&](double r) { return radial(r) * r * std::sin(u * r); };
    pre = c / u;
  } else {
    const double nu = 0.5 * d_ - 1.0;
    f = [&, nu](double r) { return radial(r) * boost::math::cyl_bessel_j(nu, u * r) * std::pow(r, 0.5 * d_); };
    pre = std::pow(u, 1.0 - 0.5 * d_);
  }
  double s;
  if (family_ == ProfileFamily::tabulated_radial && (d_ == 1 || d_ == 3)) {
    const auto z = table_fourier(*table_, u, d_ == 1 ? 0 : 1);
    s = d_ == 1 ? z.real() : z.imag();
  } else if (family_ == ProfileFamily::tabulated_radial) {
    s = knot_integral(table_->r(), f, u / 2.0);
    if (table_->r_min() > 0) s += panel_integral(f, 0.0, table_->r_min(), std::min(table_->r_min(), kPi / u));
  } else {
    // oscillatory with cancellation: a relative tolerance would refine forever,
    // so use short panels (half a period at most) and a shallow rule
    s = panel_integral(f, 0.0, R, std::min(kPi / u, R / 32.0), 2);
  }
  return pre * s;
}

std::complex<double> VelocityProfile::fourier(std::span<const double> x) const {
  double s = 0;
  for (double v : x) s += v * v;
  return {fourier_radial(std::sqrt(s)), 0.0};
}

VelocityProfile VelocityProfile::marginal(bool allow_identity, int nodes) const {
  if (d_ == 1) {
    if (allow_identity) return *this;
    throw DimensionError("marginal of a one-dimensional profile requested");
  }
  require(nodes >= 4, "marginal needs at least four nodes");
  const double R = support_radius();
  const double area = sphere_area(d_ - 1);
  std::vector<double> r(nodes), phi(nodes);
  for (int i = 0; i < nodes; ++i) {
    r[i] = R * i / (nodes - 1);
    const double S = std::sqrt(std::max(0.0, R * R - r[i] * r[i]));
    if (S == 0.0) {
      phi[i] = 0.0;
      continue;
    }
    const double ri = r[i];
    auto f = [&](double s) { return radial(std::sqrt(ri * ri + s * s)) * std::pow(s, d_ - 2); };
    phi[i] = area * panel_integral(f, 0.0, S, S / 4.0);
  }
  return tabulated(1, std::move(r), std::move(phi));
}

VelocityProfile VelocityProfile::scaled(double lambda) const {
  require(lambda >= 0, "profile scale must be nonnegative");
  VelocityProfile p = *this;
  if (family_ == ProfileFamily::tabulated_radial) {
    auto v = table_->v();
    for (double& x : v) x *= lambda;
    p.table_ = std::make_shared<RadialTable>(table_->r(), std::move(v));
  } else {
    p.amp_ *= lambda;
  }
  return p;
}

std::string VelocityProfile::describe() const {
  nlohmann::json j{{"family", to_string(family_)}, {"dimension", d_}};
  switch (family_) {
    case ProfileFamily::gaussian: j["beta"] = beta_; break;
    case ProfileFamily::fermi_dirac: j["beta"] = beta_; j["mu"] = mu_; break;
    case ProfileFamily::two_stream: j["beta"] = beta_; j["v0"] = v0_; break;
    case ProfileFamily::ball_indicator: j["mu"] = mu_; break;
    case ProfileFamily::tabulated_radial: j["nodes"] = table_->r().size(); break;
  }
  if (family_ != ProfileFamily::tabulated_radial) j["amplitude"] = amp_;
  return j.dump();
}

double penrose_moment_integral(const VelocityProfile& p) {
  if (p.is_zero()) return 0.0;
  // values below the quadrature noise floor of g^ count as zero
  const double floor = 1e-12 * std::abs(p.fourier_radial(0.0));
  auto G = [&](double u) {
    const double v = p.fourier_radial(u);
    return std::abs(v) > floor ? v : 0.0;
  };
  const double panel = 2.0 * kPi / std::max(1.0, p.support_radius());
  // |g^| has kinks at sign changes: bracket them on a sampling grid, polish
  // with TOMS 748, and integrate the smooth signed pieces in between
  auto block = [&](double a, double b) {
    const int n = std::max(8, static_cast<int>(std::ceil(8.0 * (b - a) / panel)));
    const double h = (b - a) / n;
    std::vector<double> cuts{a}, peak{0.0};
    double x0 = a, g0 = G(a);
    peak.back() = std::abs(g0);
    for (int i = 1; i <= n; ++i) {
      const double x1 = a + i * h, g1 = G(x1);
      if ((g0 < 0 && g1 > 0) || (g0 > 0 && g1 < 0)) {
        std::uintmax_t iters = 60;
        auto root = boost::math::tools::toms748_solve(G, x0, x1, g0, g1, boost::math::tools::eps_tolerance<double>(48), iters);
        cuts.push_back(0.5 * (root.first + root.second));
        peak.push_back(0.0);
      }
      peak.back() = std::max(peak.back(), std::abs(g1));
      x0 = x1;
      g0 = g1;
    }
    cuts.push_back(b);
    double s = 0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
      if (peak[i] <= 10.0 * floor) continue;  // noise, and rough enough to stall GK
      // small pieces only need a few digits; deep refinement there chases noise
      const unsigned depth = peak[i] > 1e9 * floor ? 10 : 3;
      double err = 0, l1 = 0;
      s += std::abs(boost::math::quadrature::gauss_kronrod<double, 21>::integrate(
          [&](double u) { return G(u) * u; }, cuts[i], cuts[i + 1], depth, 1e-13, &err, &l1));
    }
    return s;
  };
  // blocks of doubling length: exponential tails die within a few blocks,
  // power tails show a stable block ratio r (convergent and extrapolated
  // geometrically when r < 0.9, divergent otherwise)
  const double L0 = 4.0 * panel * std::max(1.0, p.support_radius());
  double total = block(0.0, L0), a = L0, len = L0, prev = -1.0, prev_ratio = -1.0;
  int streak = 0;
  for (int k = 0; k < 24; ++k) {
    const double b = block(a, a + len);
    total += b;
    if (b <= 1e-13 * total) return sphere_area(p.dim()) * total;
    if (prev > 0) {
      const double r = b / prev;
      if (prev_ratio > 0 && std::abs(r - prev_ratio) <= 0.01 * prev_ratio) ++streak;
      else streak = 0;
      if (streak >= 3) {
        if (r >= 0.9) throw IntegralDiverges("moment integral tail does not decay (block ratio " + std::to_string(r) + ")");
        return sphere_area(p.dim()) * (total + b * r / (1.0 - r));
      }
      prev_ratio = r;
    }
    prev = b;
    a += len;
    len *= 2.0;
  }
  throw IntegralDiverges("moment integral tail did not settle within the block budget");
}

// ---------------------------------------------------------------- potential

InteractionPotential InteractionPotential::delta(int d, double c) {
  require(d >= 1, "dimension must be >= 1");
  InteractionPotential w;
  w.family_ = PotentialFamily::delta;
  w.d_ = d;
  w.c_ = c;
  return w;
}

InteractionPotential InteractionPotential::gaussian(int d, double c, double width) {
  require(d >= 1, "dimension must be >= 1");
  require(width > 0, "gaussian potential width must be positive");
  InteractionPotential w;
  w.family_ = PotentialFamily::gaussian;
  w.d_ = d;
  w.c_ = c;
  w.width_ = width;
  return w;
}

InteractionPotential InteractionPotential::yukawa(int d, double c, double mass) {
  require(d >= 1, "dimension must be >= 1");
  require(mass > 0, "yukawa screening mass must be positive");
  InteractionPotential w;
  w.family_ = PotentialFamily::yukawa;
  w.d_ = d;
  w.c_ = c;
  w.m_ = mass;
  return w;
}

InteractionPotential InteractionPotential::tabulated(int d, std::vector<double> k, std::vector<double> w_hat) {
  require(d >= 1, "dimension must be >= 1");
  InteractionPotential w;
  w.family_ = PotentialFamily::tabulated_radial;
  w.d_ = d;
  w.c_ = 1.0;
  w.table_ = std::make_shared<RadialTable>(std::move(k), std::move(w_hat));
  return w;
}

bool InteractionPotential::is_zero() const {
  if (family_ == PotentialFamily::tabulated_radial)
    return std::all_of(table_->v().begin(), table_->v().end(), [](double x) { return x == 0.0; });
  return c_ == 0.0;
}

double InteractionPotential::fourier_radial(double k) const {
  const double norm = std::pow(2.0 * kPi, -0.5 * d_);
  switch (family_) {
    case PotentialFamily::delta: return c_ * norm;
    case PotentialFamily::gaussian: return c_ * norm * std::exp(-0.5 * width_ * width_ * k * k);
    case PotentialFamily::yukawa: return c_ * norm / (k * k + m_ * m_);
    case PotentialFamily::tabulated_radial: return table_->held(k);
  }
  return 0.0;
}

double InteractionPotential::fourier(std::span<const double> xi) const {
  double s = 0;
  for (double x : xi) s += x * x;
  return fourier_radial(std::sqrt(s));
}

double InteractionPotential::sup_norm() const {
  if (family_ == PotentialFamily::tabulated_radial) {
    double m = 0;
    for (double x : table_->v()) m = std::max(m, std::abs(x));
    return m;
  }
  return std::abs(fourier_radial(0.0));
}

double InteractionPotential::negative_sup() const {
  if (family_ == PotentialFamily::tabulated_radial) {
    double m = 0;
    for (double x : table_->v()) m = std::max(m, -x);
    return m;
  }
  return std::max(0.0, -fourier_radial(0.0));
}

InteractionPotential InteractionPotential::scaled(double lambda) const {
  InteractionPotential w = *this;
  if (family_ == PotentialFamily::tabulated_radial) {
    auto v = table_->v();
    for (double& x : v) x *= lambda;
    w.table_ = std::make_shared<RadialTable>(table_->r(), std::move(v));
  } else {
    w.c_ *= lambda;
  }
  return w;
}

std::string InteractionPotential::describe() const {
  nlohmann::json j{{"family", to_string(family_)}, {"dimension", d_}, {"coupling", c_}};
  if (family_ == PotentialFamily::gaussian) j["width"] = width_;
  if (family_ == PotentialFamily::yukawa) j["mass"] = m_;
  if (family_ == PotentialFamily::tabulated_radial) j["nodes"] = table_->r().size();
  return j.dump();
}

}  // namespace hartree
