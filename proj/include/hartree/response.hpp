#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include "hartree/parallel.hpp"
#include "hartree/profiles.hpp"
#include "hartree/spectral.hpp"

namespace hartree {

// continuum: K(t,q) = 2 w^(q) 1{t>=0} sin(t|q|^2) g^(2tq), the R^d kernel.
// lattice: the exact linear response of the truncated box, for density modes
// on the doubled grid of an N-mode operator grid,
//   K(t,q) = (2 pi)^{d/2} w^(q) i L^{-d} sum_{k, k+q} e^{-it(2k.q+|q|^2)} (g(k) - g(k+q)),
// the Riemann sum of the continuum kernel (complex at the Nyquist edge).
enum class KernelModel { continuum, lattice };

// How the causal convolution is discretized in time.
// trapezoid: product trapezoid on the samples t_j.
// split_step: the rule the Strang propagator realizes for a potential that is
// averaged over each step, h sum_m K((n-m-1/2)h)(r_m + r_{m+1})/2.
enum class TimeRule { trapezoid, split_step };

// Weights of (L r)_n = b_n r_0 + sum_{j=1}^n c_{n-j} r_j for one mode.
struct ModeWeights {
  std::vector<cd> c, b;
};

class ResponseKernel {
 public:
  ResponseKernel(VelocityProfile g, InteractionPotential w, KernelModel model = KernelModel::continuum,
                 TimeRule rule = TimeRule::trapezoid);

  const VelocityProfile& profile() const { return g_; }
  const InteractionPotential& potential() const { return w_; }
  KernelModel model() const { return model_; }
  TimeRule rule() const { return rule_; }
  bool trivial() const { return g_.is_zero() || w_.is_zero(); }

  double operator()(double t, std::span<const double> xi) const;  // continuum formula
  double radial(double t, double k) const;
  // Lattice kernel at time t for flat mode q of `density` (the doubled grid).
  cd lattice(double t, const TorusGrid& density, std::size_t q) const;

  // Weights per mode of `density`, built once per (time grid, grid) and shared.
  // Continuum kernels are computed once per |q| shell.
  std::shared_ptr<const std::vector<ModeWeights>> weights(const TimeGrid& tg, const TorusGrid& density,
                                                          const Executor& ex = Executor::serial()) const;

 private:
  std::vector<cd> series(const TimeGrid& tg, const TorusGrid& density, std::size_t q, double offset) const;

  VelocityProfile g_;
  InteractionPotential w_;
  KernelModel model_;
  TimeRule rule_;
  struct Cache;
  std::shared_ptr<Cache> cache_;
};

double kernel_eval(const ResponseKernel& k, double t, std::span<const double> xi);

// Product-trapezoid weights for kernel samples K_j = K(j dt), j = 0..n.
ModeWeights trapezoid_weights(std::span<const cd> K, double dt);

// Causal convolution and its Volterra inverse for one mode.
std::vector<cd> convolve_mode(const ModeWeights& w, std::span<const cd> r);
// Solves f + L f = h by forward marching. NearSingularStep when a diagonal
// coefficient comes within 1e-8 of zero.
std::vector<cd> volterra_solve(const ModeWeights& w, std::span<const cd> h);
std::vector<cd> volterra_solve(const ResponseKernel& k, std::span<const double> xi, const TimeGrid& tg,
                               std::span<const cd> h);

SpaceTimeField apply_response(const ResponseKernel& k, const SpaceTimeField& rho,
                              const Executor& ex = Executor::serial());
// (1 + L)^{-1} W mode by mode. When `warnings` is given, a note is appended if
// some mode grows well past its data, the time-domain mark of a Penrose
// instability.
SpaceTimeField invert_response(const ResponseKernel& k, const SpaceTimeField& W,
                               const Executor& ex = Executor::serial(), std::vector<std::string>* warnings = nullptr);

// rho_free(t) = rho[e^{it Delta} Q_in e^{-it Delta}] on the doubled grid.
SpaceTimeField free_density(const DensityMatrixState& Q_in, const TimeGrid& tg);
// (1 + L)^{-1} rho_free.
SpaceTimeField linear_solve(const DensityMatrixState& Q_in, const ResponseKernel& k, const TimeGrid& tg,
                            const Executor& ex = Executor::serial(), std::vector<std::string>* warnings = nullptr);

struct GrowthFit {
  double rate = 0.0;       // d log|f| / dt
  double frequency = 0.0;  // f ~ e^{(rate - i frequency) t}
  double r2 = 1.0;         // of the log-amplitude regression
  std::size_t first = 0, last = 0;
};

// Least squares on log|f| and on the unwrapped phase over samples
// [start_fraction, end_fraction) of the series. Needs >= 32 samples.
GrowthFit growth_rate_fit(std::span<const cd> series, double dt, double start_fraction = 0.5,
                          double end_fraction = 1.0);

}  // namespace hartree
