#pragma once

#include <complex>
#include <optional>
#include <string>
#include <vector>

#include "hartree/parallel.hpp"
#include "hartree/profiles.hpp"

namespace hartree {

using cplx = std::complex<double>;

struct DispersionSample {
  double tau = 0.0, omega = 0.0, xi = 0.0;  // xi is |xi|; pairs are radial
  cplx M{};
  cplx penrose_value{1.0, 0.0};
};

// M(tau, omega, xi) = int_0^inf e^{-t tau} e^{-i t omega} sin(t |xi|^2) g^(2 t xi) dt
// by adaptive panels in t' = t |xi|, tail below 1e-10.
cplx dispersion_m(const VelocityProfile& p, double tau, double omega, std::span<const double> xi);
cplx dispersion_m(const VelocityProfile& p, double tau, double omega, double xi_norm);

// m(tau, omega, xi) = int_0^inf e^{-t tau} e^{-i t omega} sin(t |xi|)/|xi| phi^(t) dt,
// the one-dimensional form with phi the marginal of g (g itself when d = 1).
// M(tau, omega, xi) = m(tau/2|xi|, omega/2|xi|, |xi|/2) / 4.
cplx reduced_m(const VelocityProfile& p, double tau, double omega, double xi_norm);

// Closed-form Im m(0, omega, xi) for a one-dimensional profile, omega > 0.
double im_m_boundary(const VelocityProfile& p, double omega, double xi_norm);

// Laplace transform H(z) = int_0^inf e^{-z u} G(u) du of the radial Fourier
// profile G, from samples on a uniform grid and exact exponential moments of
// the cubic interpolant on each three-cell panel. Re z >= 0.
class LaplaceTable {
 public:
  explicit LaplaceTable(const VelocityProfile& p, double h = 0.0);
  LaplaceTable(std::vector<double> samples, double h);
  cplx operator()(cplx z) const;
  // M at (tau, omega, k) through two transforms; same convention as dispersion_m.
  cplx dispersion(double tau, double omega, double k) const;
  double step() const { return h_; }
  double extent() const { return h_ * (static_cast<double>(G_.size()) - 1); }
  double l1() const { return l1_; }  // int |G|
  std::size_t nodes() const { return G_.size(); }
  const std::vector<double>& samples() const { return G_; }
  bool truncated() const { return truncated_; }  // G still above its floor at the cap

 private:
  double h_ = 0.0, l1_ = 0.0;
  bool truncated_ = false;
  std::vector<double> G_;
};

struct ScanConfig {
  int n_tau = 25;           // log-spaced, plus tau = 0
  double tau_min = 1e-4, tau_max = 10.0;
  int n_omega = 129;        // odd; symmetric about 0
  int n_xi = 64;
  double xi_max = 0.0;      // 0: from the tail certificate
  double omega_scale = 4.0; // Omega(xi) = omega_scale (xi^2 + xi v_max)
  double tail_target = 0.01;
  double rel_tol = 1e-2;
  int max_refinements = 3;
  double threshold = 1e-3;
  double polish_below = 0.3;  // grid minima under this are refined by Newton
  bool force = false;
  bool keep_grid = false;
};

// The shell xi -> 0 is scanned in the rescaled variables tau/|xi|, omega/|xi|,
// where M tends to (1/4) int u e^{-u (tau + i omega)/2|xi|} G(u) du. A report
// whose argmin_xi is 0 refers to that shell and its argmin_tau/omega are rescaled.
struct PenroseReport {
  double margin = 1.0;
  double argmin_tau = 0.0, argmin_omega = 0.0, argmin_xi = 0.0;
  double boundary_margin = 1.0;  // tau = 0 only
  double interior_margin = 1.0;  // tau > 0 only
  bool stable = true;
  int n_tau = 0, n_omega = 0, n_xi = 0, refinements = 0;
  double xi_max = 0.0, xi_core = 0.0, v_max = 0.0, tail_bound = 0.0;
  std::vector<double> margin_history;
  std::vector<double> interior_minimum_xi;  // shells whose tau-minimum is not at tau = 0
  std::vector<std::string> warnings;
  std::vector<DispersionSample> grid;  // last scan, when keep_grid
  std::string to_json() const;
};

PenroseReport penrose_margin(const VelocityProfile& p, const InteractionPotential& w, const ScanConfig& scan = {},
                             const Executor& ex = Executor::serial());

struct SufficiencyReport {
  bool cond1 = false;
  double ratio1 = 0.0;
  std::optional<bool> cond2;  // empty: indeterminate
  std::optional<bool> monotone;
  double gradient_moment = 0.0;  // NaN when not assessed
  double ratio2 = 0.0;
  std::vector<std::string> notes;
  std::string to_json() const;
};

SufficiencyReport penrose_sufficient_check(const VelocityProfile& p, const InteractionPotential& w);

struct Root {
  double tau = 0.0, omega = 0.0, residual = 0.0;
  int iterations = 0;
};

// Damped Newton on (Re, Im) of 1 + 2 w^(xi) M, finite-difference Jacobian.
Root dispersion_root(const VelocityProfile& p, const InteractionPotential& w, double xi_norm, double tau0,
                     double omega0, int max_iter = 60);

}  // namespace hartree
