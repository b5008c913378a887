#pragma once

#include "pointdos/types.hpp"

namespace pointdos {

/// Free resolvent kernel G0(z; r) of -Laplace - z at distance r > 0.
///   d=1: e^{-kr}/(2k),  d=2: K0(kr)/(2pi),  d=3: e^{-kr}/(4 pi r),  k = sqrt(-z).
Complex free_kernel(const SpectralPoint& p, double r);

/// Renormalized diagonal value.
///   d=1: 1/(2k),  d=2: log(k/kappa0)/(2pi),  d=3: -k/(4pi).
Complex renorm_diag(const SpectralPoint& p);

/// renorm_diag with the configured diagonal sign applied; this is the value
/// that enters principal-matrix denominators.
inline Complex effective_renorm_diag(const SpectralPoint& p) {
  return p.diag_sign * renorm_diag(p);
}

/// d/dz of the free kernel; r = 0 returns the diagonal of the squared free
/// resolvent, i.e. the z-derivative of the r->0 regularized kernel limit
/// (finite in all dimensions):
///   d=1: 1/(4k^3),  d=2: -1/(4 pi z),  d=3: 1/(8 pi k).
Complex dz_free_kernel(const SpectralPoint& p, double r);

}  // namespace pointdos
