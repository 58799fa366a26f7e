#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <cmath>
#include <random>

#include "hartree/errors.hpp"
#include "hartree/profiles.hpp"
#include "hartree/spectral.hpp"
#include "support/random.hpp"

using namespace hartree;
using testutil::random_hermitian;
using testutil::random_matrix;
using testutil::random_vector;

namespace {

cd plane(const Vec3& k, const Vec3& x) { return std::exp(cd(0, k[0] * x[0] + k[1] * x[1] + k[2] * x[2])); }

// One-sided Jacobi SVD for complex matrices in 50-digit arithmetic.
std::vector<double> mp_singular_values(const CMatrix& A) {
  using R = boost::multiprecision::cpp_bin_float_50;
  const long m = A.rows(), n = A.cols();
  std::vector<std::vector<R>> re(n, std::vector<R>(m)), im(n, std::vector<R>(m));
  for (long j = 0; j < n; ++j)
    for (long i = 0; i < m; ++i) {
      re[j][i] = A(i, j).real();
      im[j][i] = A(i, j).imag();
    }
  for (int sweep = 0; sweep < 60; ++sweep) {
    R off = 0;
    for (long p = 0; p < n; ++p)
      for (long q = p + 1; q < n; ++q) {
        R a = 0, b = 0, gr = 0, gi = 0;  // a=|c_p|^2, b=|c_q|^2, g=c_p^H c_q
        for (long i = 0; i < m; ++i) {
          a += re[p][i] * re[p][i] + im[p][i] * im[p][i];
          b += re[q][i] * re[q][i] + im[q][i] * im[q][i];
          gr += re[p][i] * re[q][i] + im[p][i] * im[q][i];
          gi += re[p][i] * im[q][i] - im[p][i] * re[q][i];
        }
        R g = sqrt(gr * gr + gi * gi);
        if (g == 0) continue;
        off = std::max<R>(off, g / sqrt(a * b));
        R zeta = (b - a) / (2 * g);
        R t = (zeta >= 0 ? R(1) : R(-1)) / (abs(zeta) + sqrt(1 + zeta * zeta));
        R c = 1 / sqrt(1 + t * t), s = c * t;
        R cr = gr / g, ci = gi / g;  // e^{i phi}
        for (long i = 0; i < m; ++i) {
          // v = c_q e^{-i phi}
          R vr = re[q][i] * cr + im[q][i] * ci, vi = im[q][i] * cr - re[q][i] * ci;
          R ur = re[p][i], ui = im[p][i];
          re[p][i] = c * ur - s * vr;
          im[p][i] = c * ui - s * vi;
          re[q][i] = s * ur + c * vr;
          im[q][i] = s * ui + c * vi;
        }
      }
    if (off < R("1e-45")) break;
  }
  std::vector<double> sv;
  for (long j = 0; j < n; ++j) {
    R s = 0;
    for (long i = 0; i < m; ++i) s += re[j][i] * re[j][i] + im[j][i] * im[j][i];
    sv.push_back(static_cast<double>(sqrt(s)));
  }
  std::sort(sv.rbegin(), sv.rend());
  return sv;
}

}  // namespace

TEST_CASE("grid indexing") {
  TorusGrid g(2, 8, 3.0);
  CHECK(g.size() == 64);
  CHECK(g.mode(0) == Mode{0, 0, 0});
  for (std::size_t i = 0; i < g.size(); ++i) CHECK(g.flat(g.mode(i)) == i);
  CHECK(g.contains(Mode{-4, 3, 0}));
  CHECK(!g.contains(Mode{4, 0, 0}));
  CHECK(g.mode(4)[1] == -4);  // Nyquist kept
  CHECK_THROWS_AS(TorusGrid(1, 7, 1.0), InvalidArgument);
  CHECK_THROWS_AS(TorusGrid(4, 8, 1.0), DimensionError);
}

TEST_CASE("coefficient transforms") {
  std::mt19937_64 rng(1);
  TorusGrid g(3, 6, 2.0);
  auto c = random_vector(rng, g.size());
  auto back = to_coefficients(g, to_values(g, c));
  for (std::size_t i = 0; i < c.size(); ++i) CHECK(std::abs(back[i] - c[i]) < 1e-13);
  // a single coefficient is a plane wave
  std::vector<cd> e(g.size(), 0.0);
  std::size_t q = g.flat({1, -2, 3});
  e[q] = 1.0;
  auto v = to_values(g, e);
  for (std::size_t j = 0; j < g.size(); j += 7) CHECK(std::abs(v[j] - plane(g.momentum(q), g.position(j))) < 1e-12);
}

TEST_CASE("resampling is exact interpolation and sampling") {
  std::mt19937_64 rng(2);
  TorusGrid coarse(2, 8, 5.0), fine = coarse.doubled();
  auto c = random_vector(rng, fine.size());
  auto vf = to_values(fine, c);
  auto vc = to_values(coarse, resample_coefficients(fine, c, coarse));
  for (std::size_t j = 0; j < coarse.size(); ++j) {
    Vec3 x = coarse.position(j);
    Mode m{static_cast<int>(std::lround(x[0] / 5.0 * 16)), static_cast<int>(std::lround(x[1] / 5.0 * 16)), 0};
    CHECK(std::abs(vc[j] - vf[m[0] * 16 + m[1]]) < 1e-11);
  }
  auto cc = random_vector(rng, coarse.size());
  auto up = resample_coefficients(coarse, cc, fine);
  auto down = resample_coefficients(fine, up, coarse);
  for (std::size_t i = 0; i < cc.size(); ++i) CHECK(std::abs(down[i] - cc[i]) < 1e-15);
}

TEST_CASE("position basis round trip and circulants") {
  std::mt19937_64 rng(3);
  TorusGrid g(2, 6, 4.0);
  CMatrix Q = random_matrix(rng, g.size(), g.size()), P = Q;
  to_position_basis(g, P);
  // direct check of one entry: (F Q F*)_{ab}
  const std::size_t a = 5, b = 17;
  cd ref = 0;
  for (std::size_t k = 0; k < g.size(); ++k)
    for (std::size_t l = 0; l < g.size(); ++l)
      ref += plane(g.momentum(k), g.position(a)) * Q(k, l) * std::conj(plane(g.momentum(l), g.position(b)));
  CHECK(std::abs(P(a, b) - ref / double(g.size())) < 1e-12);
  to_momentum_basis(g, P);
  CHECK((P - Q).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("density extraction") {
  std::mt19937_64 rng(4);
  SUBCASE("zero mode") {
    TorusGrid g(2, 8, 3.0);
    CMatrix Q = CMatrix::Zero(g.size(), g.size());
    Q(0, 0) = 1.0;
    auto rho = rho_from_matrix(g, Q).values();
    for (auto x : rho) CHECK(std::abs(x - 1.0 / 9.0) < 1e-15);
  }
  SUBCASE("rank one is |u|^2 pointwise") {
    for (int d = 1; d <= 3; ++d) {
      TorusGrid g(d, d == 3 ? 6 : 8, 2.5);
      auto u = random_vector(rng, g.size());
      CVector uv = Eigen::Map<CVector>(u.data(), u.size());
      CMatrix Q = uv * uv.adjoint();
      auto rho = rho_from_matrix(g, Q);
      auto vals = rho.values();
      const TorusGrid D = g.doubled();
      double mx = 0;
      for (std::size_t j = 0; j < D.size(); ++j) {
        cd ux = 0;
        for (std::size_t k = 0; k < g.size(); ++k) ux += u[k] * plane(g.momentum(k), D.position(j));
        ux /= std::sqrt(g.volume());
        mx = std::max(mx, std::abs(vals[j] - std::norm(ux)));
        CHECK(std::abs(vals[j].imag()) < 1e-12);
      }
      CHECK(mx < 1e-12);
    }
  }
  SUBCASE("brute force double sum at probe points") {
    TorusGrid g(2, 6, 3.0);
    CMatrix Q = random_hermitian(rng, g.size());
    auto rho = rho_from_matrix(g, Q);
    std::uniform_real_distribution<double> U(0, 3.0);
    for (int p = 0; p < 8; ++p) {
      Vec3 x{U(rng), U(rng), 0};
      cd ref = 0, got = 0;
      for (std::size_t k = 0; k < g.size(); ++k)
        for (std::size_t l = 0; l < g.size(); ++l)
          ref += Q(k, l) * plane(g.momentum(k), x) * std::conj(plane(g.momentum(l), x));
      ref /= g.volume();
      for (std::size_t q = 0; q < rho.grid.size(); ++q) got += rho.coeffs[q] * plane(rho.grid.momentum(q), x);
      CHECK(std::abs(got - ref) < 1e-10);
    }
  }
  SUBCASE("linear and conjugation equivariant") {
    TorusGrid g(1, 16, 7.0);
    CMatrix A = random_matrix(rng, 16, 16), B = random_matrix(rng, 16, 16);
    auto ra = rho_from_matrix(g, A), rb = rho_from_matrix(g, B), rab = rho_from_matrix(g, 2.0 * A - B);
    auto rs = rho_from_matrix(g, A.adjoint());
    auto va = ra.values(), vs = rs.values();
    for (std::size_t q = 0; q < ra.coeffs.size(); ++q) CHECK(std::abs(rab.coeffs[q] - 2.0 * ra.coeffs[q] + rb.coeffs[q]) < 1e-13);
    for (std::size_t j = 0; j < va.size(); ++j) CHECK(std::abs(vs[j] - std::conj(va[j])) < 1e-13);
  }
}

TEST_CASE("potential convolution") {
  std::mt19937_64 rng(5);
  TorusGrid g(2, 8, 4.0);
  SpatialField rho(g);
  {
    std::vector<cd> v(g.size());
    std::uniform_real_distribution<double> U(-1, 1);
    for (auto& x : v) x = U(rng);
    rho.coeffs = to_coefficients(g, v);
  }
  auto vr = rho.values();
  auto Vd = convolve_potential(InteractionPotential::delta(2, 1.7), rho).values();
  for (std::size_t j = 0; j < g.size(); ++j) CHECK(std::abs(Vd[j] - 1.7 * vr[j]) < 1e-13);

  SpatialField c(g);
  c.coeffs[0] = 0.3;
  auto w = InteractionPotential::yukawa(2, 1.1, 0.8);
  auto Vc = convolve_potential(w, c).values();
  for (auto x : Vc) CHECK(std::abs(x - 2 * kPi * w.fourier_radial(0) * 0.3) < 1e-13);

  // direct periodic lattice convolution: kernel samples from the multiplier, then a double sum
  auto Vy = convolve_potential(w, rho).values();
  std::vector<cd> kern(g.size(), 0.0);
  for (std::size_t j = 0; j < g.size(); ++j)
    for (std::size_t q = 0; q < g.size(); ++q)
      kern[j] += 2 * kPi * w.fourier_radial(std::sqrt(g.k2(q))) / g.volume() * plane(g.momentum(q), g.position(j));
  for (std::size_t i = 0; i < g.size(); i += 5) {
    cd s = 0;
    for (std::size_t j = 0; j < g.size(); ++j) {
      std::size_t ia = i / 8, ib = i % 8, ja = j / 8, jb = j % 8;
      std::size_t da = (ia + 8 - ja) % 8, db = (ib + 8 - jb) % 8;
      s += kern[da * 8 + db] * vr[j];
    }
    CHECK(std::abs(Vy[i] - s * g.cell_volume()) < 1e-10);
  }
}

TEST_CASE("sobolev norms") {
  TimeGrid t(3, 0.25);
  TorusGrid g(1, 8, 2.0);
  SpaceTimeField f(t, g, false);
  CHECK(sobolev_norm(f, 1.0) == 0.0);
  std::mt19937_64 rng(6);
  for (auto& x : f.data()) x = cd(std::normal_distribution<double>()(rng), std::normal_distribution<double>()(rng));
  double direct = 0;
  for (std::size_t i = 0; i < f.samples(); ++i)
    for (auto v : f.values(i)) direct += t.dt * std::norm(v) * g.cell_volume();
  CHECK(sobolev_norm(f, 0.0) == doctest::Approx(std::sqrt(direct)).epsilon(1e-12));
  TimeGrid one(2, 0.1);
  SpaceTimeField s(one, g, false);
  const std::size_t q0 = g.flat({3, 0, 0});
  s.at(0)[q0] = 0.7;
  const double expect = 0.7 * std::pow(1 + g.k2(q0), 0.75) * std::sqrt(0.1 * 2.0);
  CHECK(sobolev_norm(s, 1.5) == doctest::Approx(expect).epsilon(1e-14));
}

TEST_CASE("weighted Schatten norms") {
  std::mt19937_64 rng(7);
  TorusGrid g(1, 8, 3.0);
  SUBCASE("rank one") {
    auto u = random_vector(rng, 8), v = random_vector(rng, 8);
    CVector U = Eigen::Map<CVector>(u.data(), 8), V = Eigen::Map<CVector>(v.data(), 8);
    CMatrix Q = U * V.adjoint();
    double du = 0, dv = 0;
    for (int i = 0; i < 8; ++i) {
      du += std::norm(u[i]) * std::pow(1 + g.k2(i), 0.7);
      dv += std::norm(v[i]) * std::pow(1 + g.k2(i), 0.7);
    }
    for (double a : {1.0, 1.5, 2.0, 7.0, double(INFINITY)})
      CHECK(weighted_schatten_norm(g, Q, 0.7, a) == doctest::Approx(std::sqrt(du * dv)).epsilon(1e-12));
  }
  SUBCASE("diagonal") {
    CMatrix Q = CMatrix::Zero(8, 8);
    double ref = 0;
    for (int i = 0; i < 8; ++i) {
      Q(i, i) = cd(0.3 * i - 1, 0.2);
      ref += std::pow(std::abs(Q(i, i)) * std::pow(1 + g.k2(i), 0.5), 1.5);
    }
    CHECK(weighted_schatten_norm(g, Q, 0.5, 1.5) == doctest::Approx(std::pow(ref, 1 / 1.5)).epsilon(1e-12));
  }
  SUBCASE("high precision oracle") {
    TorusGrid g4(1, 4, 2.0);
    for (int rep = 0; rep < 5; ++rep) {
      CMatrix Q = random_matrix(rng, 4, 4);
      CMatrix W = Q;
      for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) W(i, j) *= std::sqrt((1 + g4.k2(i)) * (1 + g4.k2(j)));
      double ref = schatten_from_singular(mp_singular_values(W), 1.6);
      CHECK(weighted_schatten_norm(g4, Q, 1.0, 1.6) == doctest::Approx(ref).epsilon(1e-10));
    }
  }
  SUBCASE("hermitian input against the oracle") {
    TorusGrid g4(1, 4, 2.0);
    for (int rep = 0; rep < 5; ++rep) {
      CMatrix Q = random_hermitian(rng, 4);
      CMatrix W = Q;
      for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) W(i, j) *= std::sqrt((1 + g4.k2(i)) * (1 + g4.k2(j)));
      const auto ref = mp_singular_values(W);
      const auto sv = weighted_singular_values(g4, Q, 1.0);
      REQUIRE(sv.size() == 4);
      for (std::size_t i = 0; i < 4; ++i) CHECK(sv[i] == doctest::Approx(ref[i]).epsilon(1e-12));
      CHECK(weighted_schatten_norm(g4, Q, 1.0, 3.0) == doctest::Approx(schatten_from_singular(ref, 3.0)).epsilon(1e-12));
    }
  }
  SUBCASE("monotone in the exponent") {
    for (int rep = 0; rep < 50; ++rep) {
      CMatrix Q = random_matrix(rng, 8, 8);
      auto sv = weighted_singular_values(g, Q, 0.3);
      double prev = INFINITY;
      for (double a : {1.0, 1.3, 2.0, 3.0, 8.0, double(INFINITY)}) {
        double v = schatten_from_singular(sv, a);
        CHECK(v <= prev * (1 + 1e-14));
        prev = v;
      }
    }
  }
  SUBCASE("Holder") {
    for (int rep = 0; rep < 20; ++rep) {
      CMatrix A = random_matrix(rng, 8, 8), B = random_matrix(rng, 8, 8);
      double lhs = weighted_schatten_norm(g, A * B, 0.0, 1.0);
      double rhs = weighted_schatten_norm(g, A, 0.0, 2.0) * weighted_schatten_norm(g, B, 0.0, 2.0);
      CHECK(lhs <= rhs + 1e-10);
    }
  }
  SUBCASE("factored form") {
    TorusGrid g2(2, 6, 2.0);
    for (int r : {1, 3, 8}) {
      CMatrix A = random_matrix(rng, 36, r), B = random_matrix(rng, 36, r);
      CMatrix Q = A * B.adjoint();
      for (double a : {1.0, 4.0 / 3.0, double(INFINITY)})
        CHECK(weighted_schatten_norm_factored(g2, A, B, 0.5, a) ==
              doctest::Approx(weighted_schatten_norm(g2, Q, 0.5, a)).epsilon(1e-10));
    }
  }
}

TEST_CASE("multipliers") {
  std::mt19937_64 rng(8);
  TorusGrid g(2, 6, 3.0);
  SpatialField f(g);
  f.coeffs = random_vector(rng, g.size());
  auto orig = f.coeffs;
  apply_multiplier(f, [](const Vec3&) { return 1.0; });
  CHECK(f.coeffs == orig);
  auto br = [](double s) {
    return [s](const Vec3& k) { return std::pow(1 + k[0] * k[0] + k[1] * k[1] + k[2] * k[2], s / 2); };
  };
  apply_multiplier(f, br(1.3));
  apply_multiplier(f, br(-1.3));
  for (std::size_t i = 0; i < orig.size(); ++i) CHECK(std::abs(f.coeffs[i] - orig[i]) < 1e-12 * std::abs(orig[i]) + 1e-15);
  SpatialField p(g);
  const std::size_t q0 = g.flat({2, -1, 0});
  p.coeffs[q0] = 1.0;
  apply_multiplier(p, [](const Vec3& k) { return k[0] * k[0] + k[1] * k[1]; });
  CHECK(std::abs(p.coeffs[q0] - g.k2(q0)) < 1e-13);
  CMatrix Q = random_matrix(rng, 36, 36), Q0 = Q;
  apply_multiplier(g, Q, br(0.8), Side::both);
  apply_multiplier(g, Q, br(-0.8), Side::both);
  CHECK((Q - Q0).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("hermiticity bookkeeping") {
  std::mt19937_64 rng(9);
  TorusGrid g(1, 8, 1.0);
  DensityMatrixState s(g, random_matrix(rng, 8, 8));
  CHECK(s.herm_defect() == 0.0);
  CHECK(std::abs(s.trace().imag()) == 0.0);
  CHECK_THROWS_AS(DensityMatrixState(TorusGrid(3, 18, 1.0)), InvalidArgument);
}
