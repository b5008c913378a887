#include "pointdos/dos.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>

#include "pointdos/kernels.hpp"
#include "pointdos/lattice.hpp"
#include "pointdos/principal.hpp"

namespace pointdos {

namespace {

// tail of sum_{|n| > N} e^{-eta |n|} by cube-to-integral comparison
double exp_lattice_tail(int d, double eta, int N) {
  if (d == 1) return 2.0 * std::exp(-eta * (N + 1)) / (1.0 - std::exp(-eta));
  const double a = double(N) - std::sqrt(double(d));
  if (a < 0.5) return std::numeric_limits<double>::infinity();
  if (d == 2) {
    const double r = std::sqrt(2.0) / 2.0;
    return 2.0 * std::numbers::pi * std::exp(-eta * a) * (a / eta + 1.0 / (eta * eta) + r / eta);
  }
  const double r = std::sqrt(3.0) / 2.0;
  return 4.0 * std::numbers::pi * std::exp(-eta * a) *
         ((a * a / eta + 2.0 * a / (eta * eta) + 2.0 / (eta * eta * eta)) +
          2.0 * r * (a / eta + 1.0 / (eta * eta)) + r * r / eta);
}

// decreasing majorant of |d/dz G0(z; s)| with the exponential split off:
// |dz G0| <= h(s) e^{-kre s}, returns h(s)
double dz_prefactor(const SpectralPoint& p, double s) {
  const double kre = p.kappa.real();
  const double kab = std::abs(p.kappa);
  switch (p.d) {
    case 1: return (s * kab + 1.0) / (4.0 * kab * kab * kab);
    case 2: {
      // |K1(w)| <= K1(Re w) <= sqrt(pi/(2x)) e^{-x} (1 + 1/(2x)), x = kre s
      const double x = kre * s;
      return s * std::sqrt(std::numbers::pi / (2.0 * x)) * (1.0 + 1.0 / (2.0 * x)) /
             (4.0 * std::numbers::pi * kab);
    }
    default: return 1.0 / (8.0 * std::numbers::pi * kab);
  }
}

}  // namespace

// |dz G0| <= [h(s) e^{-kre s/2}] e^{-kre s/2}; the bracket decreases past N
// once kre N > 2, so the tail is h(N) e^{-kre N/2} sum_{|n|>N} e^{-kre|n|/2}.
double dz_kernel_tail(const SpectralPoint& p, int N) {
  const double kre = p.kappa.real();
  if (!(kre * N > 2.0))
    throw Error(ErrorCode::SlowDecay, "derivative-sum cutoff too small for this kappa");
  return dz_prefactor(p, double(N)) * std::exp(-0.5 * kre * N) *
         exp_lattice_tail(p.d, 0.5 * kre, N);
}

GreenDiffResult averaged_green_diff(const SpectralPoint& p, const SingleSiteLaw& law,
                                    const Truncation& tr, const GapCertificate& cert) {
  const LatticeSumResult s = lattice_sum_S(p, tr.sum_tol);
  const double ratio = (s.value + s.tail_bound) / cert.delta_star;
  if (ratio >= 1.0) throw Error(ErrorCode::RegimeViolation, "small-hopping fails at this z");

  // distinct canonical offsets within the ball |n| <= lattice_radius and
  // their orbit multiplicities
  std::map<IVec, std::int64_t> orbits;
  const int N = tr.lattice_radius;
  const auto canon = [&](IVec v) {
    for (int c = 0; c < 3; ++c) v[c] = std::abs(v[c]);
    std::sort(v.begin(), v.begin() + p.d, std::greater<int>());
    return v;
  };
  const auto visit = [&](IVec v) {
    std::int64_t n2 = 0;
    for (int c = 0; c < p.d; ++c) n2 += std::int64_t(v[c]) * v[c];
    if (n2 <= std::int64_t(N) * N) ++orbits[canon(v)];
  };
  if (p.d == 1) {
    for (int x = -N; x <= N; ++x) visit({x, 0, 0});
  } else if (p.d == 2) {
    for (int x = -N; x <= N; ++x)
      for (int y = -N; y <= N; ++y) visit({x, y, 0});
  } else {
    for (int x = -N; x <= N; ++x)
      for (int y = -N; y <= N; ++y)
        for (int z = -N; z <= N; ++z) visit({x, y, z});
  }

  GreenDiffResult out;
  out.value = 0.0;
  for (const auto& [n, mult] : orbits) {
    std::int64_t n2 = 0;
    for (int c = 0; c < p.d; ++c) n2 += std::int64_t(n[c]) * n[c];
    const ExpansionResult F = averaged_kernel_F(n, law, p, tr.n_max, tr.r_hop, tr.budget, cert);
    const Complex dg = dz_free_kernel(p, std::sqrt(double(n2)));
    out.value += double(mult) * F.value * dg;
    out.tail_bound += double(mult) * F.tail_bound * std::abs(dg);
  }
  const double f_max = (1.0 / cert.delta_star) / (1.0 - ratio);
  out.tail_bound += f_max * dz_kernel_tail(p, N);
  return out;
}

std::vector<double> default_eps_schedule() {
  std::vector<double> eps;
  for (int k = 0; k <= 8; ++k) eps.push_back(0.1 * std::pow(2.0, -k));
  return eps;
}

DosPoint dos_density(double E, const SingleSiteLaw& law, const std::vector<double>& eps_schedule,
                     const Truncation& tr, const GapCertificate& cert) {
  if (!(E >= cert.z_region.re_lo && E <= cert.z_region.re_hi))
    throw Error(ErrorCode::RegimeViolation, "E outside the certificate interval");
  if (eps_schedule.size() < 3)
    throw Error(ErrorCode::DomainError, "eps schedule needs at least 3 entries");
  for (std::size_t i = 0; i + 1 < eps_schedule.size(); ++i)
    if (!(eps_schedule[i] > eps_schedule[i + 1] && eps_schedule[i + 1] > 0.0))
      throw Error(ErrorCode::DomainError, "eps schedule must decrease to 0");

  DosPoint out;
  const SpectralPoint proto(Complex(E, eps_schedule.front()), cert.d, cert.kappa0,
                            cert.diag_sign);
  for (double eps : eps_schedule) {
    const GreenDiffResult g =
        averaged_green_diff(proto.with_z(Complex(E, eps)), law, tr, cert);
    out.raw.push_back(g.value.imag() / std::numbers::pi);
  }
  // Richardson, halving schedule, order 2
  const std::size_t n = out.raw.size();
  std::vector<std::vector<double>> R(n);
  for (std::size_t j = 0; j < n; ++j) {
    R[j].assign(3, 0.0);
    R[j][0] = out.raw[j];
    for (int i = 1; i <= 2 && std::size_t(i) <= j; ++i)
      R[j][std::size_t(i)] =
          (std::pow(2.0, i) * R[j][std::size_t(i - 1)] - R[j - 1][std::size_t(i - 1)]) /
          (std::pow(2.0, i) - 1.0);
  }
  out.n = R[n - 1][2];
  const double last = std::abs(R[n - 1][2] - R[n - 2][2]);
  const double prev = std::abs(R[n - 2][2] - R[n - 3][2]);
  out.extrapolation_error = last;
  if (last > 10.0 * prev && last > 1e-12)
    throw Error(ErrorCode::NonConvergent, "Richardson extrapolants diverge");
  return out;
}

ProbeResult analyticity_probe_fn(const std::function<Complex(Complex)>& f, double E0, double r,
                                 int m_points) {
  if (m_points < 16) throw Error(ErrorCode::DomainError, "need at least 16 circle points");
  ProbeResult out;
  std::vector<Complex> vals(static_cast<std::size_t>(m_points));
  for (int j = 0; j < m_points; ++j) {
    const double phi = 2.0 * std::numbers::pi * j / m_points;
    vals[std::size_t(j)] = f(Complex(E0 + r * std::cos(phi), r * std::sin(phi)));
  }
  Complex mean = 0.0;
  for (const Complex& v : vals) mean += v;
  mean /= double(m_points);
  const Complex center = f(Complex(E0, 0.0));
  out.cauchy_residual = std::abs(center - mean);

  double scale = std::abs(center);
  for (const Complex& v : vals) scale = std::max(scale, std::abs(v));
  out.scale = scale;

  const int kmax = m_points / 2 - 1;
  out.coeff_mags.resize(std::size_t(kmax) + 1);
  for (int k = 0; k <= kmax; ++k) {
    Complex c = 0.0;
    for (int j = 0; j < m_points; ++j) {
      const double phi = 2.0 * std::numbers::pi * j / m_points;
      c += vals[std::size_t(j)] * std::exp(Complex(0.0, -k * phi));
    }
    out.coeff_mags[std::size_t(k)] = std::abs(c) / m_points;
  }
  // least-squares slope of log |c_k| over the usable range
  const double noise = std::max(1e-300, 1e-13 * scale);
  std::vector<double> xs, ys;
  for (int k = 1; k <= kmax; ++k) {
    if (out.coeff_mags[std::size_t(k)] <= noise) break;
    xs.push_back(double(k));
    ys.push_back(std::log(out.coeff_mags[std::size_t(k)]));
  }
  if (xs.size() < 2) {
    // no measurable decay beyond the constant term: radius effectively infinite
    out.taylor_radius_estimate = std::numeric_limits<double>::infinity();
    return out;
  }
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ys[i];
  }
  const double m = double(xs.size());
  const double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  out.taylor_radius_estimate = r * std::exp(-slope);
  return out;
}

ProbeResult analyticity_probe(double E0, double r, const SingleSiteLaw& law, const Truncation& tr,
                              const GapCertificate& cert, int m_points) {
  if (!(E0 - r >= cert.z_region.re_lo && E0 + r <= cert.z_region.re_hi &&
        r <= cert.z_region.im_max))
    throw Error(ErrorCode::RegimeViolation, "probe disk exits the certificate region");
  return analyticity_probe_fn(
      [&](Complex z) {
        const SpectralPoint p(z, cert.d, cert.kappa0, cert.diag_sign);
        return averaged_green_diff(p, law, tr, cert).value;
      },
      E0, r, m_points);
}

ConductivityProbe conductivity_probe(double E, const std::vector<double>& nu_grid, double eps,
                                     const SingleSiteLaw& law, const Truncation& tr,
                                     const GapCertificate& cert) {
  if (!(eps > 0.0)) throw Error(ErrorCode::DomainError, "eps must be positive");
  ConductivityProbe out;
  out.nu = nu_grid;
  const SpectralPoint p1(Complex(E, eps), cert.d, cert.kappa0, cert.diag_sign);
  {
    const LatticeSumResult s1 = lattice_sum_S(p1, tr.sum_tol);
    if ((s1.value + s1.tail_bound) / cert.delta_star >= 1.0)
      throw Error(ErrorCode::RegimeViolation, "small-hopping fails at z1");
  }
  for (double nu : nu_grid) {
    const double Eshift = E + nu;
    if (!(Eshift >= cert.z_region.re_lo && Eshift <= cert.z_region.re_hi))
      throw Error(ErrorCode::RegimeViolation, "nu grid leaves the certificate interval");
    const SpectralPoint p2(Complex(Eshift, eps), cert.d, cert.kappa0, cert.diag_sign);
    const LatticeSumResult s2 = lattice_sum_S(p2, tr.sum_tol);
    if ((s2.value + s2.tail_bound) / cert.delta_star >= 1.0)
      throw Error(ErrorCode::RegimeViolation, "small-hopping fails at z2");
    out.F2.push_back(two_point_F2(law, p1, p2, tr.n_max, tr.r_hop, tr.budget));
  }

  // degree-4 least-squares fit of F2(nu), residual relative to scale
  const int npts = int(out.nu.size());
  if (npts >= 6) {
    Eigen::MatrixXd V(npts, 5);
    Eigen::VectorXd yre(npts), yim(npts);
    for (int i = 0; i < npts; ++i) {
      double pw = 1.0;
      for (int j = 0; j < 5; ++j) {
        V(i, j) = pw;
        pw *= out.nu[std::size_t(i)];
      }
      yre(i) = out.F2[std::size_t(i)].real();
      yim(i) = out.F2[std::size_t(i)].imag();
    }
    const Eigen::VectorXd cre = V.colPivHouseholderQr().solve(yre);
    const Eigen::VectorXd cim = V.colPivHouseholderQr().solve(yim);
    double resid = 0.0, scale = 0.0;
    for (int i = 0; i < npts; ++i) {
      const double re = (V.row(i) * cre)(0);
      const double im = (V.row(i) * cim)(0);
      resid = std::max(resid, std::abs(Complex(yre(i) - re, yim(i) - im)));
      scale = std::max(scale, std::abs(out.F2[std::size_t(i)]));
    }
    out.scale = scale;
    out.fit_residual = scale > 0.0 ? resid / scale : resid;
  }
  return out;
}

IdsReport ids_crosscheck(const SingleSiteLaw& law, const std::vector<double>& E_grid,
                         const std::vector<int>& L_list, int samples, std::uint64_t seed,
                         const Truncation& tr, const GapCertificate* cert, int d, double kappa0,
                         double diag_sign) {
  IdsReport rep;
  rep.E_grid = E_grid;
  rep.L_list = L_list;
  if (E_grid.empty()) return rep;
  for (std::size_t li = 0; li < L_list.size(); ++li) {
    const int L = L_list[li];
    std::vector<double> curve(E_grid.size(), 0.0);
    for (int smp = 0; smp < samples; ++smp) {
      const SiteConfiguration cfg =
          SiteConfiguration::sampled(d, L, law, seed, std::uint64_t(smp));
      const std::vector<int> counts = count_eigenvalues(cfg, E_grid, kappa0, diag_sign);
      for (std::size_t i = 0; i < counts.size(); ++i)
        curve[i] += double(counts[i]) / double(cfg.site_count());
    }
    for (double& v : curve) v /= double(samples);
    rep.per_site_counts.push_back(std::move(curve));
    if (li > 0) {
      double sup = 0.0;
      for (std::size_t i = 0; i < E_grid.size(); ++i)
        sup = std::max(sup,
                       std::abs(rep.per_site_counts[li][i] - rep.per_site_counts[li - 1][i]));
      rep.sup_distance_successive.push_back(sup);
    }
  }
  if (cert != nullptr) {
    double acc = 0.0;
    rep.dos_cumulative.assign(E_grid.size(), 0.0);
    for (std::size_t i = 1; i < E_grid.size(); ++i) {
      const double mid = 0.5 * (E_grid[i - 1] + E_grid[i]);
      if (mid >= cert->z_region.re_lo && mid <= cert->z_region.re_hi) {
        const DosPoint dp = dos_density(mid, law, default_eps_schedule(), tr, *cert);
        acc += dp.n * (E_grid[i] - E_grid[i - 1]);
      }
      rep.dos_cumulative[i] = acc;
    }
  }
  return rep;
}

}  // namespace pointdos
