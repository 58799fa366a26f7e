#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "hartree/errors.hpp"
#include "hartree/solver.hpp"

using namespace hartree;

namespace {

DensityMatrixState packet(const TorusGrid& G, double width, double shift, double amp) {
  CVector u(static_cast<Eigen::Index>(G.size()));
  for (std::size_t a = 0; a < G.size(); ++a)
    u(static_cast<Eigen::Index>(a)) = std::exp(-width * G.k2(a)) * std::polar(1.0, shift * G.momentum(a)[0]);
  u /= u.norm();
  return {G, amp * u * u.adjoint()};
}

double rel(const SpaceTimeField& a, const SpaceTimeField& b) { return sobolev_norm(a - b, 0.0) / sobolev_norm(b, 0.0); }

struct Setup {
  TorusGrid G{1, 32, 40.0};
  VelocityProfile g = VelocityProfile::gaussian(1, 4.0);
  InteractionPotential w = InteractionPotential::delta(1, 0.8);
  TimeGrid tg{200, 0.05};
  DensityMatrixState Q = packet(G, 2.0, 3.0, 1e-2);
  ResponseKernel K{g, w, KernelModel::lattice, TimeRule::split_step};
};

}  // namespace

TEST_CASE("sobolev index and input norm") {
  CHECK(default_sobolev_index(3) == 0.5);
  CHECK(default_sobolev_index(1) == 0.0);
  const TorusGrid G(1, 16, 10.0);
  const auto P = packet(G, 0.5, 0.0, 2.0);
  // rank one: every Schatten norm is the trace
  CHECK(input_norm(P, 0.0) == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("fixed point") {
  Setup S;
  SUBCASE("zero data stops at once") {
    const auto r = solve_fixed_point(DensityMatrixState(S.G), S.K, S.tg);
    CHECK(r.iterations == 1);
    CHECK(sobolev_norm(r.rho, 0.0) == 0.0);
    CHECK(!r.notes.empty());  // d = 1
  }
  SUBCASE("contracts to a fixed point of Phi that matches the direct solve") {
    FixedPointConfig cfg;
    cfg.keep_iterates = true;
    const auto r = solve_fixed_point(S.Q, S.K, S.tg, cfg);
    CHECK(r.iterations <= 15);
    CHECK(r.iterates.size() == static_cast<std::size_t>(r.iterations) + 1);
    for (double f : r.factors) CHECK(f < 0.8);
    const auto phi = phi_apply(r.rho, S.Q, S.K);
    CHECK(rel(phi, r.rho) <= 1e-9);
    const auto d = solve_direct(S.Q, S.g, S.w, S.tg);
    CHECK(rel(d.trajectory.rho, r.rho) <= 1e-3);
    CHECK(d.input_norm > 0);
  }
  SUBCASE("the fixed point does not depend on the preconditioning kernel") {
    const auto a = solve_fixed_point(S.Q, S.K, S.tg);
    const ResponseKernel Kc(S.g, S.w, KernelModel::continuum, TimeRule::trapezoid);
    const auto b = solve_fixed_point(S.Q, Kc, S.tg);
    CHECK(rel(b.rho, a.rho) <= 1e-8);
  }
  SUBCASE("no interaction gives the free density") {
    const ResponseKernel K0(S.g, InteractionPotential::delta(1, 0.0), KernelModel::lattice, TimeRule::split_step);
    const auto r = solve_fixed_point(S.Q, K0, S.tg);
    CHECK(rel(r.rho, free_density(S.Q, S.tg)) <= 1e-12);
  }
  SUBCASE("failure carries the history") {
    FixedPointConfig cfg;
    cfg.max_iter = 2;
    cfg.tol = 1e-300;
    try {
      solve_fixed_point(S.Q, S.K, S.tg, cfg);
      FAIL("expected NotConverged");
    } catch (const NotConverged& e) {
      CHECK(e.residuals.size() == 2);
      CHECK(e.factors.size() == 1);
    }
  }
  SUBCASE("bad configuration") {
    FixedPointConfig cfg;
    cfg.damping = 1.5;
    CHECK_THROWS_AS(solve_fixed_point(S.Q, S.K, S.tg, cfg), InvalidArgument);
    cfg = {};
    cfg.tol = 0;
    CHECK_THROWS_AS(solve_fixed_point(S.Q, S.K, S.tg, cfg), InvalidArgument);
    CHECK_THROWS_AS(phi_apply(SpaceTimeField(S.tg, S.G), S.Q, S.K), InvalidArgument);
  }
}

TEST_CASE("four-term assembly") {
  const TorusGrid G(1, 32, 20.0);
  const auto g = VelocityProfile::gaussian(1, 1.0);
  const ResponseKernel K(g, InteractionPotential::delta(1, 0.5), KernelModel::lattice, TimeRule::split_step);
  const auto Q = packet(G, 0.5, 2.0, 0.1);
  auto gap = [&](int n) {
    const TimeGrid tg(n, 4.0 / n);
    const TorusGrid D = G.doubled();
    SpaceTimeField rho(tg, D, true);
    for (std::size_t i = 0; i < tg.samples(); ++i) {
      const double t = tg.t(i);
      auto c = rho.at(i);
      c[D.flat({1, 0, 0})] = c[D.flat({-1, 0, 0})] = 0.02 * std::sin(t + 0.3);
      c[D.flat({2, 0, 0})] = cd(0.01 * std::cos(t), 0.005);
      c[D.flat({-2, 0, 0})] = cd(0.01 * std::cos(t), -0.005);
    }
    return rel(phi_four_term(rho, Q, K), phi_apply(rho, Q, K));
  };
  const double a = gap(40), b = gap(80);
  CHECK(a < 1e-5);
  CHECK(a / b == doctest::Approx(4.0).epsilon(0.25));
}

TEST_CASE("direct solve without interaction") {
  const TorusGrid G(1, 16, 10.0);
  const auto g = VelocityProfile::gaussian(1, 1.0);
  const auto Q = packet(G, 0.5, 1.0, 0.1);
  const TimeGrid tg(20, 0.1);
  const auto d = solve_direct(Q, g, InteractionPotential::delta(1, 0.0), tg);
  const auto& sn = d.trajectory.snapshots;
  REQUIRE(sn.size() == tg.samples());
  // two half-step phases per step: equal up to rounding
  for (std::size_t i = 0; i + 1 < sn.size(); ++i)
    CHECK((free_conjugate(sn[i], tg.dt).Q - sn[i + 1].Q).norm() <= 1e-14 * sn[i].Q.norm());
}

TEST_CASE("scattering diagnostic") {
  Setup S;
  PropagateOptions opt;
  opt.store_stride = 10;
  SUBCASE("free flow is already scattered") {
    const auto d = solve_direct(S.Q, S.g, InteractionPotential::delta(1, 0.0), S.tg, opt);
    const auto r = scattering_diagnostic(d.trajectory, 0.0, 10.0);
    CHECK(r.tail_first <= 1e-13);
    CHECK(r.tail_last <= 1e-13);
    CHECK(std::isinf(r.alpha));
  }
  SUBCASE("distance table is a metric and the tail shrinks") {
    const auto d = solve_direct(S.Q, S.g, S.w, S.tg, opt);
    const auto r = scattering_diagnostic(d.trajectory, 0.0, 10.0);
    const std::size_t K = r.times.size();
    REQUIRE(K == 21);
    for (std::size_t i = 0; i < K; ++i) {
      CHECK(r.distance[i][i] == 0.0);
      for (std::size_t j = 0; j < K; ++j) {
        CHECK(r.distance[i][j] == r.distance[j][i]);
        for (std::size_t l = 0; l < K; ++l) CHECK(r.distance[i][j] <= r.distance[i][l] + r.distance[l][j] + 1e-15);
      }
    }
    CHECK(r.tail_last < r.tail_first);
    CHECK(r.verdict == "scattering");
    CHECK(r.to_json().find("\"inf\"") != std::string::npos);
  }
  SUBCASE("short windows are refused") {
    const auto d = solve_direct(S.Q, S.g, S.w, TimeGrid(20, 0.05), opt);
    CHECK_THROWS_AS(scattering_diagnostic(d.trajectory, 0.0, 1.0), InvalidArgument);
    CHECK_THROWS_AS(scattering_diagnostic(d.trajectory, 1.0, 0.0), InvalidArgument);
  }
}

TEST_CASE("picard bookkeeping") {
  Setup S;
  FixedPointConfig cfg;
  cfg.damping = 0.7;
  cfg.keep_iterates = true;
  const auto r = solve_fixed_point(S.Q, S.K, S.tg, cfg);
  REQUIRE(r.iterations >= 3);
  // damped steps only; the accepting step stores Phi itself
  const auto last = static_cast<std::size_t>(r.iterations) - 1;
  for (std::size_t n = 1; n + 1 <= last; ++n) {
    const double a = sobolev_norm(r.iterates[n + 1] - r.iterates[n], r.s);
    const double b = sobolev_norm(r.iterates[n] - r.iterates[n - 1], r.s);
    CHECK(a == doctest::Approx(r.factors[n - 1] * b).epsilon(1e-10));
  }
  for (double f : r.factors) CHECK(f < 0.8);
}

TEST_CASE("first iterate") {
  Setup S;
  const SpaceTimeField zero(S.tg, S.G.doubled());
  const auto free = free_density(S.Q, S.tg);
  CHECK(rel(phi_apply(zero, S.Q, S.K), invert_response(S.K, free)) <= 1e-13);
  const ResponseKernel K0(S.g, InteractionPotential::delta(1, 0.0), KernelModel::lattice, TimeRule::split_step);
  CHECK(rel(phi_apply(zero, S.Q, K0), free) <= 1e-13);
  CHECK(sobolev_norm(phi_apply(zero, DensityMatrixState(S.G), S.K), 0.0) == 0.0);
}

TEST_CASE("direct solve trends") {
  SUBCASE("stable pair damps the density") {
    Setup S;
    const auto d = solve_direct(S.Q, S.g, S.w, TimeGrid(200, 0.05));
    const auto& L = d.trajectory.ledger;
    for (std::size_t n = 100; n + 10 < L.size(); n += 10) CHECK(L[n + 10].rho_l2 < L[n].rho_l2);
  }
  SUBCASE("unstable pair does not scatter") {
    const auto g = VelocityProfile::two_stream(1, 1.0, 2.0);
    const auto w = InteractionPotential::delta(1, 10.0);
    const TorusGrid G(1, 32, 20.0);
    CVector u = CVector::Zero(32);
    u(static_cast<Eigen::Index>(G.flat({0, 0, 0}))) = 1.0;
    u(static_cast<Eigen::Index>(G.flat({4, 0, 0}))) = 0.1;
    PropagateOptions opt;
    opt.store_stride = 10;
    const auto d = solve_direct(DensityMatrixState(G, 1e-6 * u * u.adjoint()), g, w, TimeGrid(400, 0.025), opt);
    const auto r = scattering_diagnostic(d.trajectory, 0.0, 10.0);
    CHECK(r.tail_last > r.tail_first);
    CHECK(r.verdict == "no-scattering");
  }
}
