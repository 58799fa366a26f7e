#pragma once

#include <complex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hartree/parallel.hpp"
#include "hartree/profiles.hpp"
#include "hartree/response.hpp"
#include "hartree/spectral.hpp"

namespace hartree {

// Q_{kk'} <- e^{-it(|k|^2 - |k'|^2)} Q_{kk'}, i.e. e^{it Delta} Q e^{-it Delta}.
void free_conjugate_inplace(const TorusGrid& g, CMatrix& Q, double t);
DensityMatrixState free_conjugate(const DensityMatrixState& Q, double t);

// Values at the operator-grid points x_j of a field given by coefficients on
// any grid of the same box (folded or zero padded as needed). Real part only.
std::vector<double> potential_samples(const TorusGrid& op, const TorusGrid& field, std::span<const cd> coeffs);

// Strang factors on an N^d operator grid. With a background profile g the
// state is the perturbation Q of gamma = g(-i nabla) + Q, and the potential
// factor acts on gamma while Q is stored.
class Propagator {
 public:
  explicit Propagator(const TorusGrid& g, const VelocityProfile* background = nullptr);
  const TorusGrid& grid() const { return grid_; }
  bool has_background() const { return G_.size() != 0; }

  void kinetic(CMatrix& Q, double h) const;
  void potential(CMatrix& Q, std::span<const double> V, double h) const;
  void step(CMatrix& Q, std::span<const double> V, double h) const;  // K(h/2) P(h) K(h/2)

  // Actions on the left only, as on a family of wave functions (columns).
  void kinetic_left(CMatrix& X, double h) const;
  void potential_left(CMatrix& X, std::span<const double> V, double h) const;
  void step_left(CMatrix& X, std::span<const double> V, double h) const;
  void multiply_left(CMatrix& X, std::span<const double> V) const;  // X <- V X

 private:
  TorusGrid grid_;
  CMatrix G_;  // background in the position basis (circulant), empty without one
};

DensityMatrixState strang_step(const DensityMatrixState& Q, std::span<const double> V, double h);

struct LedgerRow {
  int step = 0;
  double time = 0.0;
  cd trace{};
  double herm_defect = 0.0, rho_l2 = 0.0, rho_hs = 0.0;
};

struct Trajectory {
  TimeGrid time;
  TorusGrid grid;  // operator grid; rho lives on grid.doubled()
  std::vector<std::size_t> snapshot_steps;
  std::vector<DensityMatrixState> snapshots;
  SpaceTimeField rho;
  std::vector<LedgerRow> ledger;
  std::vector<std::string> notes;
  std::string ledger_csv() const;
};

struct PropagateOptions {
  int store_stride = 1;      // snapshot every this many steps (and the last)
  double breach_tol = 1e-8;  // trace drift and Hermiticity defect
  double hs_index = 0.0;     // Sobolev index of the rho_hs column
  bool left_endpoint = false;  // prescribed V: sample at t_n instead of the step average
};

// Prescribed potential. V's grid must share the box with Q0's grid; it is
// sampled on the operator grid. With a background the potential acts on g + Q.
Trajectory propagate_UV(const DensityMatrixState& Q0, const SpaceTimeField& V, const VelocityProfile* background,
                        const PropagateOptions& opt = {});
// Self-consistent: V = w * rho_Q, taken after the first kinetic half step,
// where the potential factor leaves rho unchanged. w * rho_g is a constant
// and is dropped as a gauge.
Trajectory propagate_UV(const DensityMatrixState& Q0, const VelocityProfile& g, const InteractionPotential& w,
                        const TimeGrid& tg, const PropagateOptions& opt = {});

struct DuhamelReport {
  double defect = 0.0;               // max over the grid
  std::vector<double> per_step;      // operator-norm discrepancy at each t_n
};

// Compares U_V(t,0)Q0 - e^{it Delta}Q0 with the trapezoid quadrature of the
// Duhamel integral built from the stored U_V(t_j,0)Q0.
DuhamelReport duhamel_defect(const SpaceTimeField& V, const DensityMatrixState& probe,
                             const PropagateOptions& opt = {});

struct ReactionTerms {
  SpaceTimeField full, linear, higher;
};

// full = rho[U_V g U_V^* - g], linear = -L[rho_src] with the density that
// generated V, higher = full - linear. The kernel's potential must be the one
// that produced V. MissingProvenance when V carries no source.
ReactionTerms reaction_terms(const TorusGrid& op, const PotentialField& V, const ResponseKernel& k,
                             const Executor& ex = Executor::serial());

// rho of -i int_0^t e^{i(t-s)Delta}[V(s), g] e^{-i(t-s)Delta} ds by the
// trapezoid rule on dense matrices, V collocated on the operator grid.
SpaceTimeField linear_reaction_quadrature(const TorusGrid& op, const SpaceTimeField& V, const VelocityProfile& g);

}  // namespace hartree
