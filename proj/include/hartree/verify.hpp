#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hartree/parallel.hpp"
#include "hartree/spectral.hpp"

namespace hartree {

// rho of the free flow in L^p_t L^q_x against |<nabla>^s1 gamma <nabla>^s2| in S^alpha.
struct StrichartzParams {
  int d = 1;
  double p = 2.0, q = 2.0, alpha = 1.0;
  double sigma1 = 0.0, sigma2 = 0.0;
};

// Empty when (p, q, alpha, sigma1, sigma2) satisfies the estimate's hypotheses.
std::vector<std::string> admissibility_violations(const StrichartzParams& prm);

struct StrichartzWindow {
  double t_final = 1.0;
  int n_steps = 0;  // 0: chosen so that dt * max|k|^2 <= 1/2 on the grid
};

// Left side for gamma = A B^* (columns are momentum coefficients on g):
// (sum_j w_j ||rho(t_j)||_{L^q}^p)^{1/p}, trapezoid in time, rho sampled
// without aliasing on the doubled grid.
double strichartz_lhs(const TorusGrid& g, const StrichartzWindow& win, double p, double q, const CMatrix& A,
                      const CMatrix& B);
// Right side: Schatten-alpha norm of <k>^s1 A B^* <k>^s2 from a QR reduction.
double strichartz_rhs(const TorusGrid& g, const StrichartzParams& prm, const CMatrix& A, const CMatrix& B);

struct EstimateSample {
  StrichartzParams params;
  TorusGrid grid;
  double t_final = 0.0, dt = 0.0;
  int n_steps = 0;
  std::uint64_t seed = 0;
  bool admissible = true;
  std::vector<double> ratios;
  std::vector<int> ranks;
  double max = 0.0, mean = 0.0;
  std::vector<std::string> notes;
  std::string to_json() const;
  std::string ratios_csv() const;
};

// Random finite-rank gamma = A B^* with complex Gaussian factors, rank cycling
// through 1, 2, 4, 8; zero draws are redrawn. Sample i depends on (seed, i)
// only. Throws InvalidArgument on a non-admissible point unless probing.
EstimateSample strichartz_sample(const TorusGrid& g, const StrichartzWindow& win, const StrichartzParams& prm,
                                 int n_samples, std::uint64_t seed, bool probe_sharpness = false,
                                 const Executor& ex = Executor::serial());

struct LadderResult {
  EstimateSample coarse, fine;  // N and 2N in the same box
  double growth = 0.0;          // fine.max / coarse.max
  bool stable = false;          // growth within a factor 2 either way
  std::string to_json() const;
};

LadderResult strichartz_ladder(const TorusGrid& g, const StrichartzWindow& win, const StrichartzParams& prm,
                               int n_samples, std::uint64_t seed, bool probe_sharpness = false,
                               const Executor& ex = Executor::serial());

struct HsIdentity {
  double lhs = 0.0, rhs = 0.0, rel_err = 0.0;
  std::string to_json() const;
};

// lhs: |<nabla>^-a1 (sum_n dt e^{-i t_n Delta} V(t_n) e^{i t_n Delta}) <nabla>^-a2|_HS^2
// with V collocated on its own grid, n = 0 .. n_steps - 1.
// rhs: sum_{p,q} |sum_n dt e^{i t_n (|p|^2 - |q|^2)} v_{p-q}(t_n)|^2 <p>^-2a1 <q>^-2a2.
HsIdentity hs_identity_check(const SpaceTimeField& V, double alpha1, double alpha2);

struct WeightIntegral {
  double value = 0.0;
  bool diverges = false;
  std::string divergence;  // "", "logarithmic" or "power"
  int decades = 0;
};

// int_0^inf s^{d-2} ds / (<a + r, s>^{2 a1} <a - r, s>^{2 a2}), a = rho'/r, summed
// by decades; divergence is read off the per-decade increments.
WeightIntegral weight_integral(int d, double alpha1, double alpha2, double rho_p, double r);

struct WeightBoundReport {
  int d = 3;
  double alpha1 = 0.0, alpha2 = 0.0, alpha0 = 0.0;
  std::string regime;
  std::vector<double> rho_grid, r_grid;
  std::vector<double> row_max;  // max over rho' at each r
  double C = 0.0, argmax_rho = 0.0, argmax_r = 0.0;
  bool diverges = false;
  std::string divergence;
  std::vector<std::string> notes;
  std::string to_json() const;
};

// <r>^{2 alpha0} times the weight integral over the probe grid, alpha0 from the
// three regimes of the Hilbert-Schmidt Strichartz bound; C is the maximum.
// epsilon sets alpha0 = min(a1, a2) - epsilon on the borderline regime.
WeightBoundReport weight_sum_bound(int d, double alpha1, double alpha2, const std::vector<double>& rho_grid,
                                   const std::vector<double>& r_grid, double epsilon = 0.05);

}  // namespace hartree
