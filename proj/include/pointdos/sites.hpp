#pragma once

#include <optional>
#include <vector>

#include "pointdos/types.hpp"

namespace pointdos {

/// Single-site coupling law: uniform on [alpha, beta] in (-inf, 0), or a
/// point mass (alpha == beta).  delta / delta_prime are the analytic
/// continuation margins in the coupling and energy planes.
struct SingleSiteLaw {
  enum class Kind { uniform, point_mass };
  Kind kind = Kind::uniform;
  double alpha = -2.0;
  double beta = -1.0;
  double delta = 0.0;
  double delta_prime = 0.0;

  SingleSiteLaw() = default;
  SingleSiteLaw(Kind k, double a, double b, double del = 0.0, double delp = 0.0)
      : kind(k), alpha(a), beta(b), delta(del), delta_prime(delp) {
    validate();
  }
  static SingleSiteLaw uniform(double a, double b, double del = 0.0, double delp = 0.0) {
    return SingleSiteLaw(Kind::uniform, a, b, del, delp);
  }
  static SingleSiteLaw point_mass(double q0, double del = 0.0, double delp = 0.0) {
    return SingleSiteLaw(Kind::point_mass, q0, q0, del, delp);
  }
  void validate() const;
  double density() const { return kind == Kind::uniform ? 1.0 / (beta - alpha) : 0.0; }
  double max_abs_q() const { return std::max(std::abs(alpha), std::abs(beta)); }
};

/// Axis-aligned rectangle in C, symmetric about the real axis.
struct Rect {
  double re_lo = 0.0;
  double re_hi = 0.0;
  double im_max = 0.0;
};

struct GapCertificate {
  double delta_star = 0.0;
  Rect z_region;
  Rect q_region;
  int grid_resolution = 0;
  bool small_hopping_ok = false;
  double s_sup = 0.0;            // certified sup of S(z) over z_region
  double lipschitz_margin = 0.0; // subtracted from the grid minimum
  int d = 0;
  double kappa0 = 1.0;
  double diag_sign = 1.0;
};

/// Denominator q^-1 - rho_eff(z) of the vertex weight.
Complex w_denominator(Complex q, const SpectralPoint& p);

/// Vertex weight w(q, z) = 1 / (q^-1 - rho_eff(z)).
Complex w_weight(Complex q, const SpectralPoint& p);

/// Pole in the coupling plane, 1/rho_eff(z); empty when the diagonal vanishes.
std::optional<Complex> pole_location(const SpectralPoint& p);

/// Grid minimization of |q^-1 - rho_eff(z)| over the fattened rectangles
/// Omega_delta(Q) x Omega_delta'(I), with a Lipschitz safety margin.
GapCertificate pole_gap(const SingleSiteLaw& law, int d, double kappa0, double I_lo, double I_hi,
                        int grid_resolution = 48, double diag_sign = 1.0);

enum class MomentMethod { closed_form, quadrature, contour };

/// Single-site moment I_m(z) = integral of w(q,z)^{m+1} dmu(q).
Complex moment_I(int m, const SingleSiteLaw& law, const SpectralPoint& p,
                 MomentMethod method = MomentMethod::closed_form);

/// Contour route with an explicit depth below the real axis (tests use this
/// to steer the contour around or across the pole).
Complex moment_contour(int m, const SingleSiteLaw& law, const SpectralPoint& p, double depth);

/// sup |g| over the contour times contour length; the concrete constant
/// attached to contour-deformation bounds.
double contour_constant(const SingleSiteLaw& law, double depth);

/// min( Delta^-(m+1), (max|q| / (|rho| dist(supp, 1/rho)))^{m+1} ), with the
/// pointwise gap Delta = dist(rho_eff, {q^-1 : q in supp}).  The overload
/// takes a certified Delta_* instead of the pointwise gap.
double moment_bound(int m, const SingleSiteLaw& law, const SpectralPoint& p);
double moment_bound(int m, const SingleSiteLaw& law, const SpectralPoint& p, double delta_star);

/// Pointwise pole gap at a single z (degenerate delta = delta' = 0 case).
double pointwise_gap(const SingleSiteLaw& law, const SpectralPoint& p);

/// Joint moment J_{m_1..m_k} = integral of prod_j w(q, z_j)^{m_j} dmu(q).
Complex joint_moment_J(const std::vector<int>& m_list, const SingleSiteLaw& law,
                       const std::vector<SpectralPoint>& p_list);

}  // namespace pointdos
