#include "pointdos/kernels.hpp"

#include <cmath>
#include <numbers>

#include "pointdos/bessel.hpp"

namespace pointdos {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kFourPi = 4.0 * std::numbers::pi;
}  // namespace

Complex free_kernel(const SpectralPoint& p, double r) {
  if (!(r > 0.0))
    throw Error(ErrorCode::ZeroDistance, "free_kernel needs r > 0; use renorm_diag at r = 0");
  const Complex k = p.kappa;
  switch (p.d) {
    case 1: return std::exp(-k * r) / (2.0 * k);
    case 2: return bessel_k0(k * r) / kTwoPi;
    default: return std::exp(-k * r) / (kFourPi * r);
  }
}

Complex renorm_diag(const SpectralPoint& p) {
  const Complex k = p.kappa;
  switch (p.d) {
    case 1: return 1.0 / (2.0 * k);
    case 2: return std::log(k / p.kappa0) / kTwoPi;
    default: return -k / kFourPi;
  }
}

Complex dz_free_kernel(const SpectralPoint& p, double r) {
  if (r < 0.0) throw Error(ErrorCode::DomainError, "dz_free_kernel needs r >= 0");
  const Complex k = p.kappa;
  if (r == 0.0) {
    switch (p.d) {
      case 1: return 1.0 / (4.0 * k * k * k);
      case 2: return -1.0 / (kFourPi * p.z);
      default: return 1.0 / (8.0 * std::numbers::pi * k);
    }
  }
  switch (p.d) {
    case 1: return std::exp(-k * r) * (r * k + 1.0) / (4.0 * k * k * k);
    case 2: return r * bessel_k1(k * r) / (kFourPi * k);
    default: return std::exp(-k * r) / (8.0 * std::numbers::pi * k);
  }
}

}  // namespace pointdos
