#pragma once

// Independent oracles used by the test suites.  These deliberately do not
// call into the production special-function code paths.

#include <complex>

namespace oracles {

using CL = std::complex<long double>;
using C = std::complex<double>;

// Ascending series in long double; accurate to better than 1e-9 relative for
// |w| <= 11, Re w > 0 (cancellation grows like e^{2 Re w} eps).
inline C k0_series(C w) {
  const long double euler = 0.577215664901532860606512090082L;
  const CL wl(w.real(), w.imag());
  const CL q = wl * wl / 4.0L;
  CL term = 1.0L, i0 = 1.0L, hsum = 0.0L;
  long double hk = 0.0L;
  for (int k = 1; k < 120; ++k) {
    term *= q / (long double)(k) / (long double)(k);
    i0 += term;
    hk += 1.0L / k;
    hsum += hk * term;
    if (std::abs(term) * (hk + 1.0L) < 1e-22L * (std::abs(i0) + std::abs(hsum))) break;
  }
  const CL val = -(std::log(wl / 2.0L) + euler) * i0 + hsum;
  return C(double(val.real()), double(val.imag()));
}

// Large-argument expansion truncated at its smallest term; relative accuracy
// around e^{-2|w|} (use for |w| >= 11).
inline C k0_asymptotic(C w) {
  const double pi = 3.14159265358979323846;
  C sum = 1.0, term = 1.0;
  double prev = 1.0;
  for (int k = 1; k < 80; ++k) {
    const double odd = 2.0 * k - 1.0;
    term *= -(odd * odd) / (8.0 * k) / w;
    if (std::abs(term) >= prev) break;
    sum += term;
    prev = std::abs(term);
    if (prev < 1e-18) break;
  }
  return std::sqrt(pi / (2.0 * w)) * std::exp(-w) * sum;
}

// Small-argument leading behaviour -log(w/2) - gamma.
inline C k0_small(C w) {
  const double euler = 0.57721566490153286061;
  return -std::log(w / 2.0) - euler;
}

// K1 ascending series in long double (same validity range as k0_series).
inline C k1_series(C w) {
  const long double euler = 0.577215664901532860606512090082L;
  const CL wl(w.real(), w.imag());
  const CL q = wl * wl / 4.0L;
  CL term = 1.0L, i1 = 1.0L, psum = 0.0L;
  long double pa = -euler, pb = 1.0L - euler;
  psum = pa + pb;
  for (int k = 1; k < 120; ++k) {
    term *= q / (long double)(k) / (long double)(k + 1);
    i1 += term;
    pa += 1.0L / k;
    pb += 1.0L / (k + 1);
    psum += (pa + pb) * term;
    if (std::abs(term) * (pa + pb + 1.0L) < 1e-22L * (std::abs(i1) + std::abs(psum))) break;
  }
  const CL val = 1.0L / wl + std::log(wl / 2.0L) * (wl / 2.0L) * i1 - (wl / 4.0L) * psum;
  return C(double(val.real()), double(val.imag()));
}

}  // namespace oracles
