#pragma once

#include <cmath>
#include <complex>
#include <string>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "hartree/errors.hpp"

namespace hartree {

template <class T>
struct QuadResult {
  T value{};
  double l1 = 0.0;     // integral of |f|, used for bounds and stopping
  double error = 0.0;  // estimate summed over panels
  int panels = 0;
};

// Adaptive Gauss-Kronrod 21 on a finite interval.
template <class F>
auto integrate_gk(F&& f, double a, double b, double tol = 1e-13, unsigned depth = 12) {
  using T = decltype(f(a));
  QuadResult<T> r;
  double err = 0.0, l1 = 0.0;
  r.value = boost::math::quadrature::gauss_kronrod<double, 21>::integrate(f, a, b, depth, tol, &err, &l1);
  r.error = err;
  r.l1 = l1;
  r.panels = 1;
  return r;
}

struct PanelMarch {
  double panel = 1.0;      // panel length
  double tail_tol = 1e-13; // absolute L1 a panel may carry and still count as tail
  int window = 6;          // consecutive tail panels needed to stop
  int max_panels = 20000;
  double rel_tol = 1e-13;  // per-panel GK tolerance
  double hard_end = INFINITY;  // integrand known to vanish beyond this point
  unsigned depth = 10;
};

// Integrates f over [a, inf) panel by panel; stops once `window` consecutive
// panels each carry less than tail_tol of |f|.
template <class F>
auto integrate_to_infinity(F&& f, double a, const PanelMarch& m) {
  using T = decltype(f(a));
  QuadResult<T> r;
  int quiet = 0;
  double x = a;
  for (int i = 0; i < m.max_panels; ++i) {
    double b = std::min(x + m.panel, m.hard_end);
    if (!(b > x)) return r;
    double err = 0.0, l1 = 0.0;
    T v = boost::math::quadrature::gauss_kronrod<double, 21>::integrate(f, x, b, m.depth, m.rel_tol, &err, &l1);
    r.value += v;
    r.l1 += l1;
    r.error += err;
    r.panels++;
    if (b >= m.hard_end) return r;
    quiet = (l1 <= m.tail_tol) ? quiet + 1 : 0;
    if (quiet >= m.window) return r;
    x = b;
  }
  throw QuadratureNotConverged("panel budget of " + std::to_string(m.max_panels) +
                               " exhausted with tail above " + std::to_string(m.tail_tol));
}

}  // namespace hartree
