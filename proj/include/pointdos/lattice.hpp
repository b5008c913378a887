#pragma once

#include <cstdint>
#include <vector>

#include "pointdos/types.hpp"

namespace pointdos {

/// Truncated lattice sum S(z) = sum_{n != 0} |G0(z; n)| with a certified tail.
/// value + tail_bound is an upper bound for the full sum.
struct LatticeSumResult {
  double value = 0.0;
  int truncation_radius = 0;
  double tail_bound = 0.0;
  int shells_used = 0;
};

struct LatticeSumOptions {
  double kappa_min = 1e-3;   // minimum admitted Re kappa
  int radius_cap = 4000;     // SlowDecay beyond this truncation radius
  double weight = 0.0;       // exponential weight e^{weight |n|}; must stay < Re kappa
};

LatticeSumResult lattice_sum_S(const SpectralPoint& p, double tol,
                               const LatticeSumOptions& opts = {});

/// Lemma-style majorant for S(E) at real E < 0:
///   d=1: e^{-k}/(k(1-e^{-k})) (exact), d=2: C2 k^{-3/2}, d=3: C3 k^{-2}.
/// C2, C3 are calibrated once by maximizing S(E) k^{d-alpha} over a reference
/// kappa grid; calibration metadata is exposed below.
double qbound_S(int d, double E);

struct QBoundCalibration {
  double constant = 0.0;
  double grid_min = 0.0, grid_max = 0.0;
  int grid_points = 0;
  double safety = 1.0;
};
const QBoundCalibration& qbound_calibration(int d);

struct SchurCertificate {
  double ratio = 0.0;        // (S value + tail) / delta_star
  bool small_hopping = false;
  double sum_value = 0.0;
  double sum_tail = 0.0;
};

/// Certified bound for ||D^-1 T|| under sup|w| <= 1/delta_star.
SchurCertificate schur_certificate(const SpectralPoint& p, double delta_star, double tol);

struct BandOptions {
  double e_lo = -1e4;        // search window [e_lo, e_hi], e_hi < 0
  double e_hi = -1e-4;
  double symbol_tol = 1e-13; // certified truncation of the hop sum
  int radius_cap = 4000;
  double root_tol = 1e-13;   // relative tolerance on E
};

/// Floquet symbol q^-1 - rho_eff(E) - sum_{n != 0} G0(E; n) cos(theta . n),
/// hops truncated with a certified tolerance folded into root finding.
double dispersion_symbol(int d, double q, const std::vector<double>& theta, double kappa0,
                         double E, double diag_sign = 1.0, const BandOptions& opts = {});

/// Root E < 0 of the dispersion symbol at fixed quasi-momentum.
double dispersion_root(int d, double q, const std::vector<double>& theta, double kappa0,
                       double diag_sign = 1.0, const BandOptions& opts = {});

struct BandWindow {
  double q = 0.0;
  double E_minus = 0.0;
  double E_plus = 0.0;
  int theta_samples = 0;
};

/// Sweep of dispersion roots over a uniform theta grid on [0, pi]^d.
BandWindow band_window(int d, double q, double kappa0, int theta_samples, double diag_sign = 1.0,
                       const BandOptions& opts = {});

namespace detail {
/// Multiplicities of squared radii |n|^2 <= r2max, n in Z^d \ {0}; cached per d.
const std::vector<std::int64_t>& shell_counts(int d, std::int64_t r2max);
}  // namespace detail

}  // namespace pointdos
