#pragma once

#include <functional>
#include <vector>

#include "pointdos/expansion.hpp"
#include "pointdos/sites.hpp"
#include "pointdos/types.hpp"

namespace pointdos {

struct Truncation {
  int n_max = 12;
  int r_hop = 3;
  int lattice_radius = 6;          // |n| cutoff of the derivative-kernel sum
  double sum_tol = 1e-10;
  std::uint64_t budget = 100000000ull;
};

struct GreenDiffResult {
  Complex value;
  double tail_bound = 0.0;  // expansion tails + derivative-sum remainder
};

/// Averaged Green-function difference G(z) - G_free(z) via
/// sum_n F(n) d/dz G0(z; n); the n = 0 term uses the regularized diagonal
/// derivative.  The quadrature identity behind the derivative kernel is
/// exercised by the test suite before anything trusts this.
GreenDiffResult averaged_green_diff(const SpectralPoint& p, const SingleSiteLaw& law,
                                    const Truncation& tr, const GapCertificate& cert);

/// Certified remainder sum_{|n| > N} |d/dz G0(z; n)|.
double dz_kernel_tail(const SpectralPoint& p, int N);

struct DosPoint {
  double n = 0.0;                    // extrapolated (1/pi) Im DeltaG(E + i0)
  double extrapolation_error = 0.0;
  std::vector<double> raw;           // (1/pi) Im DeltaG(E + i eps_k)
};

/// Stieltjes inversion by Richardson extrapolation along eps_schedule.
DosPoint dos_density(double E, const SingleSiteLaw& law, const std::vector<double>& eps_schedule,
                     const Truncation& tr, const GapCertificate& cert);

std::vector<double> default_eps_schedule();

struct ProbeResult {
  double cauchy_residual = 0.0;
  double taylor_radius_estimate = 0.0;
  double scale = 0.0;
  std::vector<double> coeff_mags;  // |Fourier coefficient| per order
};

/// Mean-value check and Taylor-radius estimate for a function on a circle.
ProbeResult analyticity_probe_fn(const std::function<Complex(Complex)>& f, double E0, double r,
                                 int m_points = 32);

/// Same probe applied to the averaged Green difference; the disk must stay
/// inside the certificate region.
ProbeResult analyticity_probe(double E0, double r, const SingleSiteLaw& law, const Truncation& tr,
                              const GapCertificate& cert, int m_points = 32);

struct ConductivityProbe {
  std::vector<double> nu;
  std::vector<Complex> F2;
  double fit_residual = 0.0;  // max deviation from a degree-4 fit, over scale
  double scale = 0.0;
};

/// Two-resolvent kernel F2(E + i eps, E + nu + i eps) on a nu grid with a
/// polynomial smoothness diagnostic.
ConductivityProbe conductivity_probe(double E, const std::vector<double>& nu_grid, double eps,
                                     const SingleSiteLaw& law, const Truncation& tr,
                                     const GapCertificate& cert);

struct IdsReport {
  std::vector<double> E_grid;
  std::vector<int> L_list;
  std::vector<std::vector<double>> per_site_counts;  // one curve per L
  std::vector<double> sup_distance_successive;       // between consecutive L curves
  std::vector<double> dos_cumulative;                // integral of dos_density, when certified
};

/// Finite-volume counting curves averaged over disorder samples, with the
/// expansion-side cumulative density for comparison where certified.
IdsReport ids_crosscheck(const SingleSiteLaw& law, const std::vector<double>& E_grid,
                         const std::vector<int>& L_list, int samples, std::uint64_t seed,
                         const Truncation& tr, const GapCertificate* cert, int d, double kappa0,
                         double diag_sign = 1.0);

}  // namespace pointdos
