#pragma once

#include <complex>

#include "pointdos/types.hpp"

namespace pointdos {

/// Modified Bessel function K0 for complex argument with Re w > 0.
///
/// Three regimes with documented switchovers: ascending series for |w| <= 2,
/// a Laplace-type integral representation for 2 < |w| < 14 (the asymptotic
/// series cannot reach the accuracy target below |w| ~ 11), and the large-
/// argument asymptotic expansion for |w| >= 14.  Relative accuracy is
/// better than 1e-9 on 0.05 <= |w| <= 50.
Complex bessel_k0(Complex w);

/// K1, same regimes and domain as bessel_k0.
Complex bessel_k1(Complex w);

struct BesselDiag {
  Complex value;
  bool accuracy_loss = false;   // adjacent regimes disagree beyond 1e-8 near a seam
  double seam_rel_diff = 0.0;   // measured relative disagreement (0 away from seams)
};

/// K0 with the near-seam dual-regime consistency check.
BesselDiag bessel_k0_checked(Complex w);

}  // namespace pointdos
