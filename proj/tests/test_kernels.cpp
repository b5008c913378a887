#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "oracles.hpp"
#include "pointdos/bessel.hpp"
#include "pointdos/kernels.hpp"
#include "pointdos/quadrature.hpp"
#include "pointdos/rng.hpp"
#include "pointdos/types.hpp"

using namespace pointdos;
using std::numbers::pi;

namespace {
double rel(Complex a, Complex b) { return std::abs(a - b) / std::max(1e-300, std::abs(b)); }
}  // namespace

TEST_CASE("sqrt_neg branch") {
  CHECK(sqrt_neg({-1.0, 0.0}).real() == doctest::Approx(1.0));
  CHECK(sqrt_neg({-4.0, 0.0}).real() == doctest::Approx(2.0));
  const Complex wi = sqrt_neg({0.0, 1.0});
  CHECK(wi.real() == doctest::Approx(std::sqrt(2.0) / 2.0));
  CHECK(wi.imag() == doctest::Approx(-std::sqrt(2.0) / 2.0));
  CHECK(wi.real() > 0.0);
  CHECK_THROWS_AS((void)sqrt_neg({1.0, 0.0}), Error);
  CHECK_THROWS_AS((void)sqrt_neg({0.0, 0.0}), Error);

  // w^2 = -z to 1e-14 relative, Re w > 0, over random off-cut samples
  for (int i = 0; i < 200; ++i) {
    const double re = -4.0 + 8.0 * counter_uniform(11, i, 0);
    double im = -2.0 + 4.0 * counter_uniform(11, i, 1);
    if (re >= 0.0 && std::abs(im) < 1e-3) im += 0.5;
    const Complex z(re, im);
    const Complex w = sqrt_neg(z);
    CHECK(std::abs(w * w + z) <= 1e-14 * std::abs(z));
    CHECK(w.real() > 0.0);
  }
}

TEST_CASE("free kernel values") {
  const SpectralPoint p1({-1.0, 0.0}, 1);
  const SpectralPoint p2({-1.0, 0.0}, 2, 1.0);
  const SpectralPoint p3({-1.0, 0.0}, 3);
  CHECK(rel(free_kernel(p1, 2.0), std::exp(-2.0) / 2.0) < 1e-12);
  CHECK(rel(free_kernel(p3, 1.0), std::exp(-1.0) / (4.0 * pi)) < 1e-12);
  CHECK(rel(free_kernel(p2, 1.0), oracles::k0_series({1.0, 0.0}) / (2.0 * pi)) < 1e-10);
  CHECK_THROWS_AS((void)free_kernel(p3, 0.0), Error);
}

TEST_CASE("bessel k0 against independent oracles") {
  CHECK(rel(bessel_k0({1.0, 0.0}), Complex(0.42102443824070834, 0.0)) < 1e-12);
  CHECK(rel(bessel_k0({20.0, 0.0}), oracles::k0_asymptotic({20.0, 0.0})) < 1e-9);
  // tiny argument dominated by the log term
  const Complex w_small(1e-3, 0.0);
  CHECK(std::abs(bessel_k0(w_small) - oracles::k0_small(w_small)) < 1e-5);
  CHECK(rel(bessel_k0(w_small), oracles::k0_series(w_small)) < 1e-12);

  // regime sweep, both oracles on their validity ranges
  for (int i = 0; i < 400; ++i) {
    const double mod = 0.05 * std::pow(50.0 / 0.05, counter_uniform(23, i, 0));
    const double arg = (pi / 2.0 - 0.05) * (2.0 * counter_uniform(23, i, 1) - 1.0);
    const Complex w = std::polar(mod, arg);
    const Complex ref = mod <= 11.0 ? oracles::k0_series(w) : oracles::k0_asymptotic(w);
    CHECK(rel(bessel_k0(w), ref) < 1e-9);
  }
  CHECK_THROWS_AS((void)bessel_k0({-1.0, 0.5}), Error);
}

TEST_CASE("bessel k0 seam consistency flag") {
  for (double mod : {1.9, 1.95, 2.05, 2.1, 12.8, 13.5, 14.5, 15.0}) {
    for (double arg : {-1.0, -0.3, 0.0, 0.7}) {
      const BesselDiag diag = bessel_k0_checked(std::polar(mod, arg));
      CAPTURE(mod);
      CAPTURE(arg);
      CHECK_FALSE(diag.accuracy_loss);
      CHECK(diag.seam_rel_diff < 1e-8);
    }
  }
}

TEST_CASE("bessel k1") {
  CHECK(rel(bessel_k1({1.0, 0.0}), Complex(0.6019072301972346, 0.0)) < 1e-12);
  for (int i = 0; i < 100; ++i) {
    const double mod = 0.1 * std::pow(100.0, counter_uniform(29, i, 0));
    const double arg = 1.4 * (2.0 * counter_uniform(29, i, 1) - 1.0);
    const Complex w = std::polar(mod, arg);
    if (mod <= 11.0) {
      CHECK(rel(bessel_k1(w), oracles::k1_series(w)) < 1e-9);
    }
  }
}

TEST_CASE("renormalized diagonal") {
  CHECK(rel(renorm_diag(SpectralPoint({-4.0, 0.0}, 1)), 0.25) < 1e-14);
  CHECK(std::abs(renorm_diag(SpectralPoint({-1.0, 0.0}, 2, 1.0))) < 1e-15);
  CHECK(rel(renorm_diag(SpectralPoint({-4.0, 0.0}, 3)), -1.0 / (2.0 * pi)) < 1e-14);
  // flipped convention enters through the effective value only
  const SpectralPoint flip({-4.0, 0.0}, 1, 1.0, -1.0);
  CHECK(rel(effective_renorm_diag(flip), -0.25) < 1e-14);
  CHECK(rel(renorm_diag(flip), 0.25) < 1e-14);
}

TEST_CASE("dz kernel closed forms") {
  const SpectralPoint p3({-1.0, 0.0}, 3);
  CHECK(rel(dz_free_kernel(p3, 1.0), std::exp(-1.0) / (8.0 * pi)) < 1e-12);
  CHECK(rel(dz_free_kernel(p3, 0.0), 1.0 / (8.0 * pi)) < 1e-12);
  const SpectralPoint p1({-1.0, 0.0}, 1);
  CHECK(rel(dz_free_kernel(p1, 0.0), 0.25) < 1e-12);  // d/dz of 1/(2 kappa) at kappa = 1
  // d=2 diagonal derivative equals the squared-resolvent diagonal -1/(4 pi z)
  const SpectralPoint p2({-2.0, 0.0}, 2, 1.0);
  CHECK(rel(dz_free_kernel(p2, 0.0), -1.0 / (4.0 * pi * (-2.0))) < 1e-12);
  // and is the r -> 0 limit of the off-diagonal derivative kernel
  CHECK(rel(dz_free_kernel(p2, 1e-5), dz_free_kernel(p2, 0.0)) < 1e-6);
}

TEST_CASE("dz kernel matches central differences") {
  const double h = 1e-6;
  for (int d : {1, 2, 3}) {
    for (double imz : {0.0, 0.1}) {
      for (double rez : {-0.7, -1.0, -2.5, -4.0}) {
        const Complex z(rez, imz);
        for (double r : {0.0, 1.0, 2.5}) {
          const SpectralPoint p(z, d, 1.3);
          const auto eval = [&](Complex zz) {
            const SpectralPoint q(zz, d, 1.3);
            return r == 0.0 ? renorm_diag(q) : free_kernel(q, r);
          };
          const Complex fd = (eval(z + h) - eval(z - h)) / (2.0 * h);
          Complex sym = dz_free_kernel(p, r);
          if (d == 2 && r == 0.0) sym = -sym;  // regularized-diagonal convention
          CAPTURE(d);
          CAPTURE(rez);
          CAPTURE(imz);
          CAPTURE(r);
          CHECK(rel(sym, fd) < 1e-6);
        }
      }
    }
  }
}

TEST_CASE("kernel symmetry and conjugation") {
  for (int d : {1, 2, 3}) {
    const SpectralPoint p({-2.0, 0.3}, d, 1.0);
    const SpectralPoint pc({-2.0, -0.3}, d, 1.0);
    for (double r : {1.0, std::sqrt(2.0), 2.0}) {
      CHECK(rel(free_kernel(pc, r), std::conj(free_kernel(p, r))) < 1e-13);
    }
    // distance |x| only: lattice pairs at equal distance give identical values
    CHECK(free_kernel(p, std::sqrt(5.0)) == free_kernel(p, std::hypot(2.0, 1.0)));
    // real z < 0 gives real values
    const SpectralPoint pr({-3.0, 0.0}, d, 1.0);
    CHECK(std::abs(free_kernel(pr, 1.5).imag()) <= 1e-13 * std::abs(free_kernel(pr, 1.5)));
    CHECK(std::abs(renorm_diag(pr).imag()) <= 1e-13 * (1.0 + std::abs(renorm_diag(pr))));
  }
}

namespace {

// d=1 convolution integral of two shifted kernels over the line
Complex conv_1d(const SpectralPoint& p, double L) {
  const auto f = [&](double y) {
    const Complex a = free_kernel(p, std::abs(y));
    const Complex b = free_kernel(p, std::abs(y - L));
    return a * b;
  };
  const double cut = 40.0 / p.kappa.real();
  Complex acc = quad::integrate_c(f, -cut, -1e-14, 1e-10);
  if (L > 0.0) acc += quad::integrate_c(f, 1e-14, L - 1e-14, 1e-10);
  acc += quad::integrate_c(f, std::max(1e-14, L + 1e-14), L + cut, 1e-10);
  return acc;
}

// d=3 via the bipolar reduction: Int f(|y|) g(|y-n|) dy
//   = (2 pi / L) Int_0^inf r f(r) Int_{|r-L|}^{r+L} s g(s) ds dr  (L > 0)
Complex conv_3d(const SpectralPoint& p, double L) {
  const Complex k = p.kappa;
  const auto rf = [&](double r) { return std::exp(-k * r) / (4.0 * pi); };  // r * G0(r)
  const double cut = 40.0 / p.kappa.real();
  if (L == 0.0) {
    return quad::integrate_c([&](double r) { return 4.0 * pi * rf(r) * rf(r); }, 0.0, cut,
                             1e-10);
  }
  return (2.0 * pi / L) *
         quad::integrate_c(
             [&](double r) {
               const Complex inner = quad::integrate_c(rf, std::abs(r - L), r + L, 1e-11);
               return rf(r) * inner;
             },
             0.0, cut, 1e-9);
}

}  // namespace

TEST_CASE("quadrature identity: kernel self-convolution equals dz kernel") {
  const SpectralPoint p1({-1.0, 0.0}, 1);
  const SpectralPoint p3({-1.0, 0.0}, 3);
  for (double L : {0.0, 1.0, 2.0}) {
    CAPTURE(L);
    CHECK(rel(conv_1d(p1, L), dz_free_kernel(p1, L)) < 1e-6);
    CHECK(rel(conv_3d(p3, L), dz_free_kernel(p3, L)) < 1e-6);
  }
  // d=2 diagonal: (1/2pi) kappa^-2 Int K0(u)^2 u du = -1/(4 pi z)
  const SpectralPoint p2({-2.0, 0.0}, 2, 1.0);
  const double k2 = std::norm(p2.kappa);
  const double integral = quad::integrate(
      [](double u) {
        const double k0 = oracles::k0_series({u, 0.0}).real();
        return k0 * k0 * u;
      },
      1e-8, 40.0, 1e-11);
  CHECK(rel(Complex(integral / (2.0 * pi * k2), 0.0), dz_free_kernel(p2, 0.0)) < 1e-6);
}
