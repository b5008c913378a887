#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <vector>

#include "pointdos/sites.hpp"
#include "pointdos/types.hpp"

namespace pointdos {

using IVec = std::array<int, 3>;  // lattice site, unused trailing components 0

/// Finite set of interaction sites Z^d intersected with [-L, L]^d and their
/// sampled couplings.
struct SiteConfiguration {
  int d = 1;
  int L = 0;
  std::vector<IVec> sites;       // lexicographic order
  std::vector<double> couplings; // q(a) per site
  std::uint64_t seed = 0;        // 0 when couplings were given explicitly
  std::uint64_t sample_index = 0;

  static SiteConfiguration sampled(int d, int L, const SingleSiteLaw& law, std::uint64_t seed,
                                   std::uint64_t sample_index = 0);
  static SiteConfiguration explicit_couplings(int d, int L, std::vector<double> couplings);

  int site_count() const { return int(sites.size()); }
  int index_of(const IVec& a) const;  // -1 when outside
  int center_index() const;           // index of the origin
};

struct PrincipalMatrix {
  SiteConfiguration config;
  SpectralPoint point;
  Eigen::VectorXcd diag;   // q(a)^-1 - rho_eff
  Eigen::MatrixXcd hop;    // +G0(z; a-b) off-diagonal, zero diagonal
  Eigen::MatrixXcd dense;  // diag - hop, assembled from the same values

  PrincipalMatrix(SiteConfiguration cfg, SpectralPoint p)
      : config(std::move(cfg)), point(p) {}
};

/// Gamma(a,b) = (q(a)^-1 - rho_eff) delta_ab - (1 - delta_ab) G0(z; a-b).
PrincipalMatrix assemble_gamma(const SiteConfiguration& config, const SpectralPoint& p);

/// Independently assembles Theta = diag(q^-1) and M, returns max |Gamma - (Theta - M)|.
double theta_minus_M_check(const SiteConfiguration& config, const SpectralPoint& p);

struct NeumannResult {
  Eigen::MatrixXcd matrix;
  double tail_bound = 0.0;  // operator-norm bound on the dropped terms
  double ratio = 0.0;       // certified contraction ratio sup|w| (S + tail)
  int n_max = 0;
};

/// Truncated Neumann series sum_{n<=n_max} (D^-1 T)^n D^-1 with a certified
/// tail sup|w| r^{n_max+1}/(1-r); the contraction ratio uses the realized
/// couplings, not the ensemble gap.
NeumannResult neumann_inverse(const PrincipalMatrix& pm, int n_max, double sum_tol = 1e-12);

/// LU inverse; Singular when the condition estimate exceeds 1e12.
Eigen::MatrixXcd dense_inverse(const PrincipalMatrix& pm);

/// Minimum eigenvalue of (Gamma^-1 - Gamma^-1*) / (2i); requires Im z > 0.
double herglotz_check(const PrincipalMatrix& pm);

/// Cumulative number of eigenvalue-branch zero crossings of Gamma(E') for
/// E' <= E, per grid energy.  Two-level grid refinement guards against
/// branches crossing twice between nodes.
std::vector<int> count_eigenvalues(const SiteConfiguration& config, const std::vector<double>& E_grid,
                                   double kappa0 = 1.0, double diag_sign = 1.0,
                                   int refine_steps = 8);

/// Crossing energies located by bisection on the eigenvalue branches.
std::vector<double> locate_crossings(const SiteConfiguration& config, double E_lo, double E_hi,
                                     double kappa0 = 1.0, double diag_sign = 1.0,
                                     int scan_points = 512, double tol = 1e-12);

}  // namespace pointdos
