#include "pointdos/sites.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "pointdos/kernels.hpp"
#include "pointdos/lattice.hpp"
#include "pointdos/quadrature.hpp"

namespace pointdos {

void SingleSiteLaw::validate() const {
  if (!(beta < 0.0)) throw Error(ErrorCode::DomainError, "law support must satisfy beta < 0");
  if (!(alpha <= beta)) throw Error(ErrorCode::DomainError, "law support needs alpha <= beta");
  if (kind == Kind::point_mass && alpha != beta)
    throw Error(ErrorCode::DomainError, "point mass needs alpha == beta");
  if (kind == Kind::uniform && !(alpha < beta))
    throw Error(ErrorCode::DomainError, "uniform law needs alpha < beta");
  if (delta < 0.0 || delta_prime < 0.0)
    throw Error(ErrorCode::DomainError, "margins must be nonnegative");
  if (delta_prime > delta)
    throw Error(ErrorCode::DomainError, "delta_prime must not exceed delta");
}

Complex w_denominator(Complex q, const SpectralPoint& p) {
  if (q == Complex(0.0)) throw Error(ErrorCode::DomainError, "coupling must be nonzero");
  return 1.0 / q - effective_renorm_diag(p);
}

Complex w_weight(Complex q, const SpectralPoint& p) {
  const Complex den = w_denominator(q, p);
  if (std::abs(den) < 1e-13) throw Error(ErrorCode::PoleHit, "w(q,z) denominator vanishes");
  return 1.0 / den;
}

std::optional<Complex> pole_location(const SpectralPoint& p) {
  const Complex rho = effective_renorm_diag(p);
  if (rho == Complex(0.0)) return std::nullopt;
  return 1.0 / rho;
}

namespace {

double dist_point_to_real_segment(Complex pnt, double lo, double hi) {
  const double x = std::clamp(pnt.real(), lo, hi);
  return std::abs(pnt - Complex(x, 0.0));
}

// sup over the z rectangle of |rho| and |d rho / dz|; elementary corner bounds.
struct RhoBounds {
  double sup_abs = 0.0;
  double sup_deriv = 0.0;
};

RhoBounds rho_bounds(int d, double kappa0, const Rect& zr) {
  if (!(zr.re_hi < 0.0))
    throw Error(ErrorCode::DomainError, "energy rectangle must stay below 0");
  const double zmin = -zr.re_hi;  // closest point of the rectangle to the origin
  const double zmax = std::hypot(zr.re_lo, zr.im_max);
  RhoBounds b;
  if (d == 1) {
    b.sup_abs = 1.0 / (2.0 * std::sqrt(zmin));
    b.sup_deriv = 1.0 / (4.0 * std::pow(zmin, 1.5));
  } else if (d == 2) {
    const double lmin = std::abs(std::log(std::sqrt(zmin) / kappa0));
    const double lmax = std::abs(std::log(std::sqrt(zmax) / kappa0));
    // |arg kappa| < pi/4 on the left half plane
    b.sup_abs = (std::max(lmin, lmax) + std::numbers::pi / 4.0) / (2.0 * std::numbers::pi);
    b.sup_deriv = 1.0 / (4.0 * std::numbers::pi * zmin);
  } else {
    b.sup_abs = std::sqrt(zmax) / (4.0 * std::numbers::pi);
    b.sup_deriv = 1.0 / (8.0 * std::numbers::pi * std::sqrt(zmin));
  }
  return b;
}

}  // namespace

GapCertificate pole_gap(const SingleSiteLaw& law, int d, double kappa0, double I_lo, double I_hi,
                        int grid_resolution, double diag_sign) {
  if (!(I_lo <= I_hi && I_hi < 0.0))
    throw Error(ErrorCode::DomainError, "interval I must be compact in (-inf, 0)");
  if (law.delta >= std::abs(law.beta))
    throw Error(ErrorCode::DomainError, "delta must keep the fattened support away from 0");
  if (grid_resolution < 2) throw Error(ErrorCode::DomainError, "grid resolution too small");

  GapCertificate cert;
  cert.d = d;
  cert.kappa0 = kappa0;
  cert.diag_sign = diag_sign;
  cert.grid_resolution = grid_resolution;
  cert.q_region = {law.alpha - law.delta, law.beta + law.delta, law.delta};
  cert.z_region = {I_lo - law.delta_prime, I_hi + law.delta_prime, law.delta_prime};
  if (!(cert.z_region.re_hi < 0.0))
    throw Error(ErrorCode::DomainError, "fattened energy rectangle touches [0, inf)");

  const RhoBounds rb = rho_bounds(d, kappa0, cert.z_region);
  const double qmin = std::abs(cert.q_region.re_hi);  // distance of the q rectangle to 0
  const double lip_q = 1.0 / (qmin * qmin);

  const int n = grid_resolution;
  const auto lin = [n](double lo, double hi, int i) {
    return n == 1 ? lo : lo + (hi - lo) * double(i) / double(n - 1);
  };
  const double hq_re = (cert.q_region.re_hi - cert.q_region.re_lo) / std::max(1, n - 1);
  const double hq_im = cert.q_region.im_max / std::max(1, n - 1);
  const double hz_re = (cert.z_region.re_hi - cert.z_region.re_lo) / std::max(1, n - 1);
  const double hz_im = cert.z_region.im_max / std::max(1, n - 1);
  const double rq = 0.5 * std::hypot(hq_re, hq_im);
  const double rz = 0.5 * std::hypot(hz_re, hz_im);
  cert.lipschitz_margin = rq * lip_q + rz * rb.sup_deriv;

  // |f| is symmetric under joint conjugation of q and z, and z -> conj(z)
  // only conjugates rho; minimizing over Im q of both signs with Im z >= 0
  // covers the full region.
  double grid_min = std::numeric_limits<double>::infinity();
  for (int zi = 0; zi < n; ++zi) {
    for (int zj = 0; zj < n; ++zj) {
      const Complex z(lin(cert.z_region.re_lo, cert.z_region.re_hi, zi),
                      lin(0.0, cert.z_region.im_max, zj));
      const SpectralPoint p(z, d, kappa0, diag_sign);
      const Complex rho = effective_renorm_diag(p);
      for (int qi = 0; qi < n; ++qi) {
        for (int qj = -(n - 1); qj < n; ++qj) {
          const Complex q(lin(cert.q_region.re_lo, cert.q_region.re_hi, qi),
                          (qj >= 0 ? 1.0 : -1.0) *
                              lin(0.0, cert.q_region.im_max, std::abs(qj)));
          grid_min = std::min(grid_min, std::abs(1.0 / q - rho));
        }
      }
    }
  }
  cert.delta_star = grid_min - cert.lipschitz_margin;
  // second certified lower bound, independent of the grid:
  // |q^-1 - rho| >= 1/max|q| - sup|rho|
  const double qabs_max = std::hypot(cert.q_region.re_lo, cert.q_region.im_max);
  cert.delta_star = std::max(cert.delta_star, 1.0 / qabs_max - rb.sup_abs);
  if (!(cert.delta_star > 0.0))
    throw Error(ErrorCode::GapViolation, "certified pole gap is not positive");

  // certified sup of S over the z rectangle: S(z) <= S(E*) with
  // kappa* = min Re sqrt(-z), attained at the rightmost real point.
  const SpectralPoint pstar(Complex(cert.z_region.re_hi, 0.0), d, kappa0, diag_sign);
  const LatticeSumResult s = lattice_sum_S(pstar, 1e-10);
  cert.s_sup = s.value + s.tail_bound;
  cert.small_hopping_ok = cert.s_sup / cert.delta_star < 1.0;
  return cert;
}

namespace {

// Continuous-branch log((1 - rho a) / (1 - rho b)) along the segment
// q in [a, b]; the image is a straight segment, so the subtended angle is
// below pi and the principal log of the ratio is the continuous branch.
// Consistency is asserted by summing principal increments over a refinement.
Complex log_ratio_on_segment(Complex rho, double a, double b) {
  const Complex ua = 1.0 - rho * a;
  const Complex ub = 1.0 - rho * b;
  // distance of the image segment to 0
  const Complex dir = ub - ua;
  double dist;
  if (std::abs(dir) == 0.0) {
    dist = std::abs(ua);
  } else {
    const double t = std::clamp(-((ua.real() * dir.real() + ua.imag() * dir.imag()) /
                                  std::norm(dir)),
                                0.0, 1.0);
    dist = std::abs(ua + t * dir);
  }
  if (dist < 1e-13)
    throw Error(ErrorCode::PoleHit, "log branch crosses the singularity on the support");
  const Complex principal = std::log(ua / ub);
  const int nsub = 64;
  Complex unwound = 0.0;
  Complex prev = ub;
  for (int i = nsub - 1; i >= 0; --i) {
    const double q = a + (b - a) * double(i) / nsub;
    const Complex cur = 1.0 - rho * q;
    unwound += std::log(cur / prev);
    prev = cur;
  }
  if (std::abs(unwound - principal) > 1e-10 * (1.0 + std::abs(principal)))
    throw Error(ErrorCode::BranchError, "log branch inconsistent along the support");
  return principal;
}

Complex moment_closed_form(int m, const SingleSiteLaw& law, const SpectralPoint& p) {
  const Complex rho = effective_renorm_diag(p);
  const double a = law.alpha, b = law.beta;
  const double width = b - a;

  // small |rho q|: geometric expansion of (1 - rho q)^-(m+1); plain power
  // moments of the uniform law
  if (std::abs(rho) * law.max_abs_q() < 0.5) {
    Complex sum = 0.0;
    Complex rk = 1.0;  // rho^k
    double binom = 1.0;  // C(m+k, k)
    for (int k = 0; k < 400; ++k) {
      const int j = m + 1 + k;
      const double mono =
          (std::pow(b, j + 1) - std::pow(a, j + 1)) / (double(j + 1) * width);
      const Complex term = binom * rk * mono;
      sum += term;
      if (std::abs(term) < 1e-17 * std::abs(sum) && k > m) break;
      rk *= rho;
      binom *= double(m + 1 + k) / double(k + 1);
    }
    return sum;
  }

  // A_m = int_a^b q^{m+1} (1 - rho q)^-(m+1) dq by downward reduction:
  // A_m = [q^{m+1} (1-rho q)^-m / (m rho)]_a^b - (m+1)/(m rho) A_{m-1},
  // A_0 = [-q/rho - log(1 - rho q)/rho^2]_a^b.
  Complex A = -width / rho + log_ratio_on_segment(rho, a, b) / (rho * rho);
  for (int k = 1; k <= m; ++k) {
    const Complex bt = (std::pow(Complex(b), k + 1) * std::pow(1.0 - rho * b, -k) -
                        std::pow(Complex(a), k + 1) * std::pow(1.0 - rho * a, -k)) /
                       (double(k) * rho);
    A = bt - (double(k + 1) / (double(k) * rho)) * A;
  }
  return A / width;
}

Complex moment_quadrature(int m, const SingleSiteLaw& law, const SpectralPoint& p) {
  const double g = law.density();
  return quad::integrate_c(
      [&](double q) {
        Complex w = w_weight(Complex(q, 0.0), p);
        Complex acc = w;
        for (int i = 0; i < m; ++i) acc *= w;
        return acc * g;
      },
      law.alpha, law.beta, 1e-13);
}

Complex contour_piece(int m, const SingleSiteLaw& law, const SpectralPoint& p, Complex q0,
                      Complex q1) {
  const double g = law.density();
  const auto integrand = [&](Complex q) {
    Complex w = w_weight(q, p);
    Complex acc = w;
    for (int i = 0; i < m; ++i) acc *= w;
    return acc * g;
  };
  const Complex jac = q1 - q0;
  int n = 96;
  Complex prev = 0.0;
  for (int round = 0; round < 4; ++round) {
    Complex val = quad::gl_integrate(
        [&](double t) { return integrand(q0 + t * jac); }, 0.0, 1.0, n);
    val *= jac;
    if (round > 0 && std::abs(val - prev) < 1e-12 * (1.0 + std::abs(val))) return val;
    prev = val;
    n *= 2;
  }
  return prev;
}

}  // namespace

Complex moment_contour(int m, const SingleSiteLaw& law, const SpectralPoint& p, double depth) {
  if (!(depth > 0.0)) throw Error(ErrorCode::DomainError, "contour depth must be positive");
  const Complex a(law.alpha, 0.0), b(law.beta, 0.0);
  const Complex am(law.alpha, -depth), bm(law.beta, -depth);
  return contour_piece(m, law, p, a, am) + contour_piece(m, law, p, am, bm) +
         contour_piece(m, law, p, bm, b);
}

double contour_constant(const SingleSiteLaw& law, double depth) {
  const double length = 2.0 * depth + (law.beta - law.alpha);
  return std::abs(law.density()) * length;
}

Complex moment_I(int m, const SingleSiteLaw& law, const SpectralPoint& p, MomentMethod method) {
  if (m < 0) throw Error(ErrorCode::DomainError, "moment order must be nonnegative");
  if (law.kind == SingleSiteLaw::Kind::point_mass) {
    const Complex w = w_weight(Complex(law.alpha, 0.0), p);
    Complex acc = w;
    for (int i = 0; i < m; ++i) acc *= w;
    return acc;
  }
  switch (method) {
    case MomentMethod::closed_form: return moment_closed_form(m, law, p);
    case MomentMethod::quadrature: return moment_quadrature(m, law, p);
    case MomentMethod::contour:
      return moment_contour(m, law, p, law.delta > 0.0 ? law.delta : 0.25);
  }
  throw Error(ErrorCode::DomainError, "unknown moment method");
}

double pointwise_gap(const SingleSiteLaw& law, const SpectralPoint& p) {
  const Complex rho = effective_renorm_diag(p);
  // q^-1 over [alpha, beta] in (-inf,0) sweeps the real segment [1/beta, 1/alpha]
  return dist_point_to_real_segment(rho, 1.0 / law.beta, 1.0 / law.alpha);
}

double moment_bound(int m, const SingleSiteLaw& law, const SpectralPoint& p, double delta_star) {
  if (!(delta_star > 0.0)) throw Error(ErrorCode::DomainError, "delta_star must be positive");
  double bound = std::pow(delta_star, -(m + 1));
  const Complex rho = effective_renorm_diag(p);
  if (std::abs(rho) > 0.0) {
    const double dist = dist_point_to_real_segment(1.0 / rho, law.alpha, law.beta);
    if (dist > 0.0) {
      const double geom = std::pow(law.max_abs_q() / (std::abs(rho) * dist), m + 1);
      bound = std::min(bound, geom);
    }
  }
  return bound;
}

double moment_bound(int m, const SingleSiteLaw& law, const SpectralPoint& p) {
  return moment_bound(m, law, p, pointwise_gap(law, p));
}

Complex joint_moment_J(const std::vector<int>& m_list, const SingleSiteLaw& law,
                       const std::vector<SpectralPoint>& p_list) {
  if (m_list.size() != p_list.size())
    throw Error(ErrorCode::DomainError, "m_list and p_list sizes differ");
  for (int m : m_list)
    if (m < 0) throw Error(ErrorCode::DomainError, "joint moment orders must be nonnegative");
  if (law.kind == SingleSiteLaw::Kind::point_mass) {
    Complex acc = 1.0;
    for (std::size_t j = 0; j < m_list.size(); ++j) {
      const Complex w = w_weight(Complex(law.alpha, 0.0), p_list[j]);
      for (int i = 0; i < m_list[j]; ++i) acc *= w;
    }
    return acc;
  }
  const double g = law.density();
  return quad::integrate_c(
      [&](double q) {
        Complex acc = g;
        for (std::size_t j = 0; j < m_list.size(); ++j) {
          const Complex w = w_weight(Complex(q, 0.0), p_list[j]);
          for (int i = 0; i < m_list[j]; ++i) acc *= w;
        }
        return acc;
      },
      law.alpha, law.beta, 1e-13);
}

}  // namespace pointdos
