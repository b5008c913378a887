#include "pointdos/principal.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "pointdos/kernels.hpp"
#include "pointdos/lattice.hpp"
#include "pointdos/rng.hpp"

namespace pointdos {

namespace {

std::vector<IVec> box_sites(int d, int L) {
  std::vector<IVec> sites;
  const int lo = -L, hi = L;
  if (d == 1) {
    for (int x = lo; x <= hi; ++x) sites.push_back({x, 0, 0});
  } else if (d == 2) {
    for (int x = lo; x <= hi; ++x)
      for (int y = lo; y <= hi; ++y) sites.push_back({x, y, 0});
  } else {
    for (int x = lo; x <= hi; ++x)
      for (int y = lo; y <= hi; ++y)
        for (int z = lo; z <= hi; ++z) sites.push_back({x, y, z});
  }
  return sites;
}

std::int64_t dist2(const IVec& a, const IVec& b) {
  std::int64_t s = 0;
  for (int c = 0; c < 3; ++c) {
    const std::int64_t dd = std::int64_t(a[c]) - b[c];
    s += dd * dd;
  }
  return s;
}

// kernel values per distinct squared distance; d=2 Bessel calls dominate
class KernelCache {
 public:
  explicit KernelCache(const SpectralPoint& p) : p_(p) {}
  Complex at(std::int64_t r2) {
    auto it = vals_.find(r2);
    if (it == vals_.end())
      it = vals_.emplace(r2, free_kernel(p_, std::sqrt(double(r2)))).first;
    return it->second;
  }

 private:
  const SpectralPoint& p_;
  std::map<std::int64_t, Complex> vals_;
};

}  // namespace

SiteConfiguration SiteConfiguration::sampled(int d, int L, const SingleSiteLaw& law,
                                             std::uint64_t seed, std::uint64_t sample_index) {
  SiteConfiguration cfg;
  cfg.d = d;
  cfg.L = L;
  cfg.seed = seed;
  cfg.sample_index = sample_index;
  cfg.sites = box_sites(d, L);
  cfg.couplings.resize(cfg.sites.size());
  for (std::size_t i = 0; i < cfg.sites.size(); ++i) {
    if (law.kind == SingleSiteLaw::Kind::point_mass) {
      cfg.couplings[i] = law.alpha;
    } else {
      const double u = counter_uniform(seed, sample_index, std::uint64_t(i));
      cfg.couplings[i] = law.alpha + (law.beta - law.alpha) * u;
    }
  }
  return cfg;
}

SiteConfiguration SiteConfiguration::explicit_couplings(int d, int L,
                                                        std::vector<double> couplings) {
  SiteConfiguration cfg;
  cfg.d = d;
  cfg.L = L;
  cfg.sites = box_sites(d, L);
  if (couplings.size() != cfg.sites.size())
    throw Error(ErrorCode::ConfigError, "coupling list does not match site count");
  cfg.couplings = std::move(couplings);
  return cfg;
}

int SiteConfiguration::index_of(const IVec& a) const {
  for (int c = d; c < 3; ++c)
    if (a[c] != 0) return -1;
  int idx = 0;
  const int w = 2 * L + 1;
  for (int c = 0; c < d; ++c) {
    if (a[c] < -L || a[c] > L) return -1;
    idx = idx * w + (a[c] + L);
  }
  return idx;
}

int SiteConfiguration::center_index() const { return index_of({0, 0, 0}); }

PrincipalMatrix assemble_gamma(const SiteConfiguration& config, const SpectralPoint& p) {
  const int n = config.site_count();
  PrincipalMatrix pm(config, p);
  const Complex rho = effective_renorm_diag(p);
  pm.diag.resize(n);
  for (int i = 0; i < n; ++i) {
    if (config.couplings[std::size_t(i)] == 0.0)
      throw Error(ErrorCode::DomainError, "zero coupling");
    pm.diag(i) = 1.0 / config.couplings[std::size_t(i)] - rho;
    if (std::abs(pm.diag(i)) < 1e-13)
      throw Error(ErrorCode::PoleHit, "diagonal denominator vanishes at a site");
  }
  KernelCache kc(p);
  pm.hop = Eigen::MatrixXcd::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const Complex g = kc.at(dist2(config.sites[std::size_t(i)], config.sites[std::size_t(j)]));
      pm.hop(i, j) = g;
      pm.hop(j, i) = g;
    }
  pm.dense.resize(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) pm.dense(i, j) = (i == j) ? pm.diag(i) : -pm.hop(i, j);
  return pm;
}

double theta_minus_M_check(const SiteConfiguration& config, const SpectralPoint& p) {
  const PrincipalMatrix pm = assemble_gamma(config, p);
  const int n = config.site_count();
  const Complex rho = effective_renorm_diag(p);
  KernelCache kc(p);
  Eigen::MatrixXcd theta = Eigen::MatrixXcd::Zero(n, n);
  Eigen::MatrixXcd M(n, n);
  for (int i = 0; i < n; ++i) {
    theta(i, i) = 1.0 / config.couplings[std::size_t(i)];
    for (int j = 0; j < n; ++j)
      M(i, j) = (i == j) ? rho
                         : kc.at(dist2(config.sites[std::size_t(i)], config.sites[std::size_t(j)]));
  }
  return (pm.dense - (theta - M)).cwiseAbs().maxCoeff();
}

NeumannResult neumann_inverse(const PrincipalMatrix& pm, int n_max, double sum_tol) {
  if (n_max < 0) throw Error(ErrorCode::DomainError, "n_max must be nonnegative");
  const int n = pm.config.site_count();
  double sup_w = 0.0;
  for (int i = 0; i < n; ++i) sup_w = std::max(sup_w, 1.0 / std::abs(pm.diag(i)));
  const LatticeSumResult s = lattice_sum_S(pm.point, sum_tol);

  NeumannResult out;
  out.n_max = n_max;
  out.ratio = sup_w * (s.value + s.tail_bound);
  if (out.ratio >= 1.0)
    throw Error(ErrorCode::RegimeViolation, "realized contraction ratio is not below 1");
  out.tail_bound = sup_w * std::pow(out.ratio, n_max + 1) / (1.0 - out.ratio);

  Eigen::VectorXcd w(n);
  for (int i = 0; i < n; ++i) w(i) = 1.0 / pm.diag(i);
  // D^-1 T with T = +hop
  Eigen::MatrixXcd dt = w.asDiagonal() * pm.hop;
  Eigen::MatrixXcd term = Eigen::MatrixXcd(w.asDiagonal());
  out.matrix = term;
  for (int k = 1; k <= n_max; ++k) {
    term = dt * term;
    out.matrix += term;
  }
  return out;
}

Eigen::MatrixXcd dense_inverse(const PrincipalMatrix& pm) {
  Eigen::PartialPivLU<Eigen::MatrixXcd> lu(pm.dense);
  const double rc = lu.rcond();
  if (!(rc > 1e-12)) throw Error(ErrorCode::Singular, "condition estimate exceeds 1e12");
  return lu.inverse();
}

double herglotz_check(const PrincipalMatrix& pm) {
  if (!(pm.point.z.imag() > 0.0))
    throw Error(ErrorCode::DomainError, "herglotz_check needs Im z > 0");
  const Eigen::MatrixXcd inv = dense_inverse(pm);
  const Eigen::MatrixXcd imPart = (inv - inv.adjoint()) / Complex(0.0, 2.0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(imPart, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

namespace {

Eigen::VectorXd real_spectrum(const SiteConfiguration& config, double E, double kappa0,
                              double diag_sign) {
  const SpectralPoint p(Complex(E, 0.0), config.d, kappa0, diag_sign);
  const PrincipalMatrix pm = assemble_gamma(config, p);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(pm.dense.real(), Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

std::vector<int> count_on_grid(const SiteConfiguration& config, const std::vector<double>& E_grid,
                               double kappa0, double diag_sign, int refine) {
  std::vector<int> counts(E_grid.size(), 0);
  int running = 0;
  Eigen::VectorXd prev = real_spectrum(config, E_grid.front(), kappa0, diag_sign);
  for (std::size_t g = 0; g + 1 < E_grid.size(); ++g) {
    for (int r = 1; r <= refine; ++r) {
      const double E = E_grid[g] + (E_grid[g + 1] - E_grid[g]) * double(r) / refine;
      const Eigen::VectorXd cur = real_spectrum(config, E, kappa0, diag_sign);
      for (int k = 0; k < cur.size(); ++k)
        if ((prev(k) < 0.0) != (cur(k) < 0.0)) ++running;
      prev = cur;
    }
    counts[g + 1] = running;
  }
  return counts;
}

}  // namespace

std::vector<int> count_eigenvalues(const SiteConfiguration& config,
                                   const std::vector<double>& E_grid, double kappa0,
                                   double diag_sign, int refine_steps) {
  if (E_grid.empty()) return {};
  for (std::size_t i = 0; i + 1 < E_grid.size(); ++i)
    if (!(E_grid[i] < E_grid[i + 1]))
      throw Error(ErrorCode::DomainError, "E_grid must be strictly increasing");
  if (!(E_grid.back() < 0.0)) throw Error(ErrorCode::DomainError, "E_grid must stay below 0");
  if (E_grid.size() == 1) return {0};
  const std::vector<int> coarse = count_on_grid(config, E_grid, kappa0, diag_sign, refine_steps);
  const std::vector<int> fine = count_on_grid(config, E_grid, kappa0, diag_sign, 2 * refine_steps);
  if (coarse != fine)
    throw Error(ErrorCode::GridTooCoarse, "counts changed under grid refinement");
  return fine;
}

std::vector<double> locate_crossings(const SiteConfiguration& config, double E_lo, double E_hi,
                                     double kappa0, double diag_sign, int scan_points,
                                     double tol) {
  if (!(E_lo < E_hi && E_hi < 0.0))
    throw Error(ErrorCode::DomainError, "need E_lo < E_hi < 0");
  std::vector<double> roots;
  Eigen::VectorXd prev = real_spectrum(config, E_lo, kappa0, diag_sign);
  double Eprev = E_lo;
  for (int i = 1; i <= scan_points; ++i) {
    const double E = E_lo + (E_hi - E_lo) * double(i) / scan_points;
    const Eigen::VectorXd cur = real_spectrum(config, E, kappa0, diag_sign);
    for (int k = 0; k < cur.size(); ++k) {
      if ((prev(k) < 0.0) == (cur(k) < 0.0)) continue;
      // bisection on the k-th sorted branch
      double a = Eprev, b = E;
      bool neg_a = prev(k) < 0.0;
      while (b - a > tol * std::max(1.0, std::abs(b))) {
        const double m = 0.5 * (a + b);
        const Eigen::VectorXd mid = real_spectrum(config, m, kappa0, diag_sign);
        if ((mid(k) < 0.0) == neg_a)
          a = m;
        else
          b = m;
      }
      roots.push_back(0.5 * (a + b));
    }
    prev = cur;
    Eprev = E;
  }
  std::sort(roots.begin(), roots.end());
  return roots;
}

}  // namespace pointdos
