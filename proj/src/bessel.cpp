#include "pointdos/bessel.hpp"

#include <cmath>
#include <numbers>

#include "pointdos/quadrature.hpp"

namespace pointdos {

namespace {

constexpr double kEulerGamma = 0.57721566490153286060651209008240;
constexpr double kSeriesCut = 2.0;
constexpr double kAsympCut = 14.0;

void check_domain(Complex w) {
  if (!(w.real() > 0.0)) throw Error(ErrorCode::DomainError, "bessel_k requires Re w > 0");
}

// Ascending series, nu = 0:
//   I0(w) = sum (w^2/4)^k / (k!)^2
//   K0(w) = -(log(w/2) + gamma) I0(w) + sum_{k>=1} H_k (w^2/4)^k / (k!)^2
Complex k0_series(Complex w) {
  const Complex q = 0.25 * w * w;
  Complex term = 1.0;      // (w^2/4)^k / (k!)^2
  Complex i0 = 1.0;
  Complex hsum = 0.0;
  double hk = 0.0;
  for (int k = 1; k < 60; ++k) {
    term *= q / double(k * k);
    i0 += term;
    hk += 1.0 / k;
    hsum += hk * term;
    if (std::abs(term) * (hk + 1.0) < 1e-18 * (std::abs(i0) + std::abs(hsum))) break;
  }
  return -(std::log(0.5 * w) + kEulerGamma) * i0 + hsum;
}

//   I1(w) = (w/2) sum (w^2/4)^k / (k! (k+1)!)
//   K1(w) = 1/w + log(w/2) I1(w) - (w/4) sum (psi(k+1)+psi(k+2)) (w^2/4)^k / (k!(k+1)!)
Complex k1_series(Complex w) {
  const Complex q = 0.25 * w * w;
  Complex term = 1.0;      // (w^2/4)^k / (k!(k+1)!)
  Complex i1sum = 1.0;
  Complex psum = (-kEulerGamma) + (1.0 - kEulerGamma);  // psi(1)+psi(2)
  double psi_a = -kEulerGamma, psi_b = 1.0 - kEulerGamma;
  for (int k = 1; k < 60; ++k) {
    term *= q / double(k * (k + 1));
    i1sum += term;
    psi_a += 1.0 / k;
    psi_b += 1.0 / (k + 1);
    psum += (psi_a + psi_b) * term;
    if (std::abs(term) * (psi_a + psi_b + 1.0) < 1e-18 * (std::abs(i1sum) + std::abs(psum))) break;
  }
  const Complex i1 = 0.5 * w * i1sum;
  return 1.0 / w + std::log(0.5 * w) * i1 - 0.25 * w * psum;
}

// Large-argument expansion K_nu(w) ~ sqrt(pi/2w) e^-w sum a_k(nu) / w^k,
// a_k(nu) = prod_{j<=k} (4nu^2 - (2j-1)^2) / (k! 8^k); truncated at the
// smallest term.
Complex k_asymptotic(Complex w, int nu) {
  const double fournu2 = 4.0 * nu * nu;
  Complex sum = 1.0;
  Complex term = 1.0;
  double prev_mag = 1.0;
  for (int k = 1; k < 80; ++k) {
    const double num = fournu2 - double((2 * k - 1) * (2 * k - 1));
    term *= num / (8.0 * k) / w;
    const double mag = std::abs(term);
    if (mag >= prev_mag) break;  // divergent tail reached
    sum += term;
    prev_mag = mag;
    if (mag < 1e-17 * std::abs(sum)) break;
  }
  return std::sqrt(std::numbers::pi / (2.0 * w)) * std::exp(-w) * sum;
}

// DLMF 10.32.8 with t = u^2:
//   K0(w) = sqrt(pi/2w) e^-w (2/sqrt(pi)) Int_0^inf e^{-u^2} (1+u^2/2w)^{-1/2} du
//   K1(w) = sqrt(pi/2w) e^-w (4/sqrt(pi)) Int_0^inf e^{-u^2} u^2 (1+u^2/2w)^{+1/2} du
// Valid for Re w > 0; the integrand's branch point sqrt(-2w) stays away from
// the real axis for |w| >= 2, so a fixed Gauss-Legendre rule converges fast.
Complex k_integral(Complex w, int nu) {
  const Complex inv2w = 0.5 / w;
  const int n_nodes = 160;
  const double cutoff = 7.0;  // e^{-49} below double precision
  Complex integral;
  if (nu == 0) {
    integral = quad::gl_integrate(
        [&](double u) { return std::exp(-u * u) / std::sqrt(1.0 + u * u * inv2w); }, 0.0, cutoff,
        n_nodes);
    integral *= 2.0 / std::sqrt(std::numbers::pi);
  } else {
    integral = quad::gl_integrate(
        [&](double u) { return std::exp(-u * u) * u * u * std::sqrt(1.0 + u * u * inv2w); }, 0.0,
        cutoff, n_nodes);
    integral *= 4.0 / std::sqrt(std::numbers::pi);
  }
  return std::sqrt(std::numbers::pi / (2.0 * w)) * std::exp(-w) * integral;
}

Complex k_eval(Complex w, int nu) {
  const double aw = std::abs(w);
  if (aw <= kSeriesCut) return nu == 0 ? k0_series(w) : k1_series(w);
  if (aw < kAsympCut) return k_integral(w, nu);
  return k_asymptotic(w, nu);
}

}  // namespace

Complex bessel_k0(Complex w) {
  check_domain(w);
  return k_eval(w, 0);
}

Complex bessel_k1(Complex w) {
  check_domain(w);
  return k_eval(w, 1);
}

BesselDiag bessel_k0_checked(Complex w) {
  check_domain(w);
  BesselDiag out;
  out.value = k_eval(w, 0);
  const double aw = std::abs(w);
  Complex other = out.value;
  if (aw > 0.9 * kSeriesCut && aw <= kSeriesCut) {
    other = k_integral(w, 0);
  } else if (aw > kSeriesCut && aw < 1.1 * kSeriesCut) {
    other = k0_series(w);
  } else if (aw > 0.9 * kAsympCut && aw < kAsympCut) {
    other = k_asymptotic(w, 0);
  } else if (aw >= kAsympCut && aw < 1.1 * kAsympCut) {
    other = k_integral(w, 0);
  }
  out.seam_rel_diff = std::abs(other - out.value) / std::abs(out.value);
  out.accuracy_loss = out.seam_rel_diff > 1e-8;
  return out;
}

}  // namespace pointdos
