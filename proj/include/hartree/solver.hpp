#pragma once

#include <optional>
#include <string>
#include <vector>

#include "hartree/dynamics.hpp"
#include "hartree/parallel.hpp"
#include "hartree/response.hpp"
#include "hartree/spectral.hpp"

namespace hartree {

// Default Sobolev index: d/2 - 1, or 0 in d < 3 (flagged as outside the theorem).
double default_sobolev_index(int d);
// ||Q_in|| in H^{s, 2d/(d+1)}, the smallness input of the scattering theorem.
double input_norm(const DensityMatrixState& Q_in, double s);

struct DirectResult {
  Trajectory trajectory;
  double input_norm = 0.0;
  double s = 0.0;
};

// Self-consistent propagation of gamma = g + Q from Q_in.
DirectResult solve_direct(const DensityMatrixState& Q_in, const VelocityProfile& g, const InteractionPotential& w,
                          const TimeGrid& tg, const PropagateOptions& opt = {});

// Phi(rho) = (1 + L)^{-1}( rho[U_V (g + Q_in) U_V^* - g] + L[rho] ),  V = w * rho.
// rho lives on the doubled operator grid; g and w come from the kernel.
SpaceTimeField phi_apply(const SpaceTimeField& rho, const DensityMatrixState& Q_in, const ResponseKernel& k,
                         const Executor& ex = Executor::serial());

// The same map assembled from its four pieces: rho[U Q_in U^*] plus the three
// D_V cross terms of the reaction, each by trapezoid quadrature over
// U_V(t, tau) = U_V(t, 0) U_V(tau, 0)^*. O(n^2) dense products; an oracle.
SpaceTimeField phi_four_term(const SpaceTimeField& rho, const DensityMatrixState& Q_in, const ResponseKernel& k,
                             const Executor& ex = Executor::serial());

struct FixedPointConfig {
  double tol = 1e-10;  // on ||Phi(rho) - rho|| relative to ||Phi(rho)||, grid L^2_t H^s
  int max_iter = 30;
  double damping = 1.0;
  std::optional<double> s;
  bool keep_iterates = false;
};

struct FixedPointResult {
  SpaceTimeField rho;
  std::vector<double> residuals;  // ||Phi(rho_n) - rho_n||
  std::vector<double> factors;    // ||rho_{n+1} - rho_n|| / ||rho_n - rho_{n-1}||
  std::vector<SpaceTimeField> iterates;
  int iterations = 0;
  double s = 0.0;
  std::vector<std::string> notes;
};

// Damped Picard iteration from rho = 0. NotConverged carries the residual and
// factor history.
FixedPointResult solve_fixed_point(const DensityMatrixState& Q_in, const ResponseKernel& k, const TimeGrid& tg,
                                   const FixedPointConfig& cfg = {}, const Executor& ex = Executor::serial());

struct ScatteringReport {
  std::vector<double> times;
  std::vector<std::vector<double>> distance;  // symmetric table over the window
  bool full_table = false;                     // otherwise only the two quartile blocks are filled
  std::size_t quartile = 0;                    // snapshots per tail block
  double s = 0.0, alpha = 0.0;
  double tail_first = 0.0, tail_last = 0.0;  // max distance within the first / last quartile
  std::string verdict;                       // "scattering" or "no-scattering"
  std::vector<std::string> notes;
  std::string to_json() const;
};

// Interaction-picture snapshots W(t) = e^{-it Delta} Q(t) e^{it Delta} in
// [t0, t1], compared in H^{d/2-1, 2d/(d-1)} (alpha = inf when d = 1).
ScatteringReport scattering_diagnostic(const Trajectory& traj, double t0, double t1);

}  // namespace hartree
