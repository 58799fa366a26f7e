#pragma once

#include <complex>
#include <functional>
#include <memory>
#include <numbers>
#include <span>
#include <string>
#include <vector>

namespace hartree {

constexpr double kPi = std::numbers::pi;

// Area of the unit sphere S^{d-1} in R^d (2 for d = 1).
double sphere_area(int d);

enum class ProfileFamily { gaussian, fermi_dirac, two_stream, ball_indicator, tabulated_radial };

const char* to_string(ProfileFamily f);

class RadialTable;

// Radial momentum distribution g(|xi|) >= 0 with amplitude A.
//   gaussian     A exp(-beta r^2)
//   fermi_dirac  A / (1 + exp(beta (r^2 - mu)))
//   two_stream   A [exp(-beta (r - v0)^2) + exp(-beta (r + v0)^2)]
//   ball         A 1{r <= sqrt(mu)}
//   tabulated    monotone cubic through (r_i, g_i), 0 past the last node
// Fourier transforms use the unitary convention (2 pi)^{-d/2} int f e^{-ix.xi}.
class VelocityProfile {
 public:
  static VelocityProfile gaussian(int d, double beta, double amplitude = 1.0);
  static VelocityProfile fermi_dirac(int d, double beta, double mu, double amplitude = 1.0);
  static VelocityProfile two_stream(int d, double beta, double v0, double amplitude = 1.0);
  static VelocityProfile ball_indicator(int d, double mu, double amplitude = 1.0);
  static VelocityProfile tabulated(int d, std::vector<double> r, std::vector<double> g);
  static VelocityProfile load_csv(int d, const std::string& path);
  static VelocityProfile zero(int d) { return gaussian(d, 1.0, 0.0); }

  ProfileFamily family() const { return family_; }
  int dim() const { return d_; }
  double beta() const { return beta_; }
  double mu() const { return mu_; }
  double v0() const { return v0_; }
  double amplitude() const { return amp_; }
  bool is_zero() const;

  double eval(std::span<const double> xi) const;
  double radial(double r) const;
  // d g / d r; NotDifferentiable at the edge of a ball.
  double derivative(double r) const;

  // g^ at |x| = u (real since g is radial and even).
  double fourier_radial(double u) const;
  std::complex<double> fourier(std::span<const double> x) const;
  bool has_closed_form_fourier() const;

  // phi(r) = int_{R^{d-1}} g(sqrt(r^2 + |x'|^2)) dx', tabulated on [0, support_radius()].
  // d = 1 throws DimensionError unless allow_identity is set.
  VelocityProfile marginal(bool allow_identity = false, int nodes = 4097) const;

  double mass() const;                                   // int_{R^d} g
  double support_radius() const;                         // g < 1e-17 A beyond it
  double momentum_radius(double fraction = 0.99) const;  // radius carrying `fraction` of the mass
  // |S^{d-1}| int_0^R h(r) r^{d-1} dr over the support (knot-aware for tables).
  double integrate_radial(const std::function<double(double)>& h) const;

  // Def. of the Penrose hypothesis: the t |g^(t w)| moment. Fails for balls in d <= 3.
  bool moment_hypothesis_fails() const;
  const std::vector<std::string>& warnings() const { return warnings_; }

  VelocityProfile scaled(double lambda) const;
  const RadialTable* table() const { return table_.get(); }
  std::string describe() const;

 private:
  VelocityProfile() = default;
  void finish();
  double hankel(double u) const;

  ProfileFamily family_ = ProfileFamily::gaussian;
  int d_ = 1;
  double beta_ = 1.0, mu_ = 0.0, v0_ = 0.0, amp_ = 1.0;
  std::shared_ptr<const RadialTable> table_;
  std::vector<std::string> warnings_;
};

// Monotone cubic table (boost pchip) used by tabulated profiles and potentials.
// Below the first node the first value is held; past the last node the
// caller picks zero (profiles) or the last value (potentials).
class RadialTable {
 public:
  RadialTable(std::vector<double> r, std::vector<double> v);
  ~RadialTable();
  double operator()(double r) const;
  double held(double r) const;
  double slope(std::size_t i) const;  // interpolant slope at node i
  const std::vector<double>& r() const { return r_; }
  const std::vector<double>& v() const { return v_; }
  double r_min() const { return r_.front(); }
  double r_max() const { return r_.back(); }

 private:
  struct Interp;
  std::vector<double> r_, v_;
  std::unique_ptr<Interp> interp_;
};

// int_{R^d} |g^(x)| |x|^{2-d} dx, by radial panels; IntegralDiverges when the
// tail does not decay within the panel budget.
double penrose_moment_integral(const VelocityProfile& p);

enum class PotentialFamily { delta, gaussian, yukawa, tabulated_radial };

const char* to_string(PotentialFamily f);

// Pair potential through its Fourier multiplier (unitary convention):
//   delta     w = c delta_0                         w^ = c (2 pi)^{-d/2}
//   gaussian  w = c (2 pi s^2)^{-d/2} e^{-|x|^2/2s^2}  w^ = c (2 pi)^{-d/2} e^{-s^2|k|^2/2}
//   yukawa    (-Delta + m^2) w = c delta_0           w^ = c (2 pi)^{-d/2} / (|k|^2 + m^2)
//   tabulated w^ samples, held constant past the last node
class InteractionPotential {
 public:
  static InteractionPotential delta(int d, double c);
  static InteractionPotential gaussian(int d, double c, double width);
  static InteractionPotential yukawa(int d, double c, double mass);
  static InteractionPotential tabulated(int d, std::vector<double> k, std::vector<double> w_hat);
  static InteractionPotential zero(int d) { return delta(d, 0.0); }

  PotentialFamily family() const { return family_; }
  int dim() const { return d_; }
  double coupling() const { return c_; }
  double width() const { return width_; }
  double mass() const { return m_; }
  bool is_zero() const;

  double fourier(std::span<const double> xi) const;
  double fourier_radial(double k) const;
  double sup_norm() const;       // sup |w^|
  double negative_sup() const;   // sup of the negative part of w^
  InteractionPotential scaled(double lambda) const;
  std::string describe() const;

 private:
  InteractionPotential() = default;
  PotentialFamily family_ = PotentialFamily::delta;
  int d_ = 1;
  double c_ = 0.0, width_ = 0.0, m_ = 1.0;
  std::shared_ptr<const RadialTable> table_;
};

}  // namespace hartree
