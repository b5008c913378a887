#include "pointdos/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>

#include "pointdos/kernels.hpp"

namespace pointdos {

namespace detail {

const std::vector<std::int64_t>& shell_counts(int d, std::int64_t r2max) {
  struct Cache {
    std::mutex mu;
    std::vector<std::int64_t> counts;  // counts[r2], origin excluded
  };
  static Cache caches[4];
  Cache& c = caches[d];
  std::lock_guard<std::mutex> lock(c.mu);
  if (std::int64_t(c.counts.size()) <= r2max) {
    const std::int64_t R = std::int64_t(std::ceil(std::sqrt(double(r2max)))) + 1;
    c.counts.assign(std::size_t(R * R + 1), 0);
    const auto bump = [&](std::int64_t r2) {
      if (r2 > 0 && r2 < std::int64_t(c.counts.size())) ++c.counts[std::size_t(r2)];
    };
    if (d == 1) {
      for (std::int64_t i = -R; i <= R; ++i) bump(i * i);
    } else if (d == 2) {
      for (std::int64_t i = -R; i <= R; ++i)
        for (std::int64_t j = -R; j <= R; ++j) bump(i * i + j * j);
    } else {
      for (std::int64_t i = -R; i <= R; ++i)
        for (std::int64_t j = -R; j <= R; ++j)
          for (std::int64_t k = -R; k <= R; ++k) bump(i * i + j * j + k * k);
    }
  }
  return c.counts;
}

}  // namespace detail

namespace {

// Certified remainder of sum_{|n| > R} |G0(z;n)| e^{w|n|} by comparison with
// a radial integral of the per-dimension decreasing majorant.
double sum_tail(int d, double kappa_re, double kappa_abs, double weight, int R) {
  const double ke = kappa_re - weight;  // effective decay rate, > 0 by construction
  if (d == 1) {
    // exact geometric remainder
    return std::exp(-ke * (R + 1)) / (kappa_abs * (1.0 - std::exp(-ke)));
  }
  const double sqd = std::sqrt(double(d));
  const double a = double(R) - sqd;
  if (a < 0.5) return std::numeric_limits<double>::infinity();
  if (d == 2) {
    const double c2 = (1.0 / (2.0 * std::numbers::pi)) *
                      std::sqrt(std::numbers::pi / (2.0 * kappa_re));
    const double r2 = std::sqrt(2.0) / 2.0;
    const double integral =
        std::exp(-ke * a) * (a / ke + 1.0 / (ke * ke) + r2 / ke) / std::sqrt(a);
    return 2.0 * std::numbers::pi * c2 * integral;
  }
  const double r3 = std::sqrt(3.0) / 2.0;
  return std::exp(-ke * a) * (a / ke + 1.0 / (ke * ke) + (2.0 * r3 + r3 * r3 / a) / ke);
}

double abs_kernel(const SpectralPoint& p, double r) { return std::abs(free_kernel(p, r)); }

}  // namespace

LatticeSumResult lattice_sum_S(const SpectralPoint& p, double tol, const LatticeSumOptions& opts) {
  if (!(tol > 0.0)) throw Error(ErrorCode::DomainError, "lattice_sum_S needs tol > 0");
  const double kre = p.kappa.real();
  if (!(kre >= opts.kappa_min))
    throw Error(ErrorCode::SlowDecay, "Re kappa below configured minimum");
  if (!(opts.weight < kre))
    throw Error(ErrorCode::SlowDecay, "exponential weight must stay below Re kappa");
  const double kab = std::abs(p.kappa);

  LatticeSumResult out;
  for (int R = 1; R <= opts.radius_cap; ++R) {
    const std::int64_t r2_lo = std::int64_t(R - 1) * (R - 1);
    const std::int64_t r2_hi = std::int64_t(R) * R;
    const auto& counts = detail::shell_counts(p.d, r2_hi);
    for (std::int64_t r2 = r2_lo + 1; r2 <= r2_hi; ++r2) {
      if (counts[std::size_t(r2)] == 0) continue;
      const double r = std::sqrt(double(r2));
      out.value += double(counts[std::size_t(r2)]) * abs_kernel(p, r) * std::exp(opts.weight * r);
      ++out.shells_used;
    }
    out.truncation_radius = R;
    out.tail_bound = sum_tail(p.d, kre, kab, opts.weight, R);
    if (out.tail_bound < tol) return out;
  }
  throw Error(ErrorCode::SlowDecay, "truncation radius cap exceeded");
}

namespace {

QBoundCalibration calibrate_qbound(int d) {
  QBoundCalibration cal;
  cal.grid_min = 0.8;
  cal.grid_max = 12.0;
  cal.grid_points = 64;
  cal.safety = 1.05;
  const double expo = (d == 2) ? 1.5 : 2.0;  // d - alpha
  double best = 0.0;
  for (int i = 0; i < cal.grid_points; ++i) {
    const double t = double(i) / (cal.grid_points - 1);
    const double kappa = cal.grid_min * std::pow(cal.grid_max / cal.grid_min, t);
    const SpectralPoint p(Complex(-kappa * kappa, 0.0), d);
    const LatticeSumResult s = lattice_sum_S(p, 1e-12);
    best = std::max(best, (s.value + s.tail_bound) * std::pow(kappa, expo));
  }
  cal.constant = best * cal.safety;
  return cal;
}

}  // namespace

const QBoundCalibration& qbound_calibration(int d) {
  static std::mutex mu;
  static std::map<int, QBoundCalibration> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(d);
  if (it == cache.end()) it = cache.emplace(d, calibrate_qbound(d)).first;
  return it->second;
}

double qbound_S(int d, double E) {
  if (!(E < 0.0)) throw Error(ErrorCode::DomainError, "qbound_S needs E < 0");
  const double kappa = std::sqrt(-E);
  if (d == 1) {
    const double x = std::exp(-kappa);
    return x / (kappa * (1.0 - x));
  }
  const double expo = (d == 2) ? 1.5 : 2.0;
  return qbound_calibration(d).constant * std::pow(kappa, -expo);
}

SchurCertificate schur_certificate(const SpectralPoint& p, double delta_star, double tol) {
  if (!(delta_star > 0.0)) throw Error(ErrorCode::DomainError, "delta_star must be positive");
  const LatticeSumResult s = lattice_sum_S(p, tol);
  SchurCertificate cert;
  cert.sum_value = s.value;
  cert.sum_tail = s.tail_bound;
  cert.ratio = (s.value + s.tail_bound) / delta_star;
  cert.small_hopping = cert.ratio < 1.0;
  return cert;
}

namespace {

// Shell-resolved cosine sums c_r = sum_{|n|^2 = r2} cos(theta . n), fixed theta.
struct CosineShells {
  std::vector<std::int64_t> r2;   // squared radii with nonzero multiplicity
  std::vector<double> cos_sum;
};

CosineShells cosine_shells(int d, const std::vector<double>& theta, int R) {
  CosineShells out;
  std::map<std::int64_t, double> acc;
  const auto add = [&](std::int64_t r2, double c) {
    if (r2 > 0 && r2 <= std::int64_t(R) * R) acc[r2] += c;
  };
  if (d == 1) {
    for (int i = -R; i <= R; ++i) add(std::int64_t(i) * i, std::cos(theta[0] * i));
  } else if (d == 2) {
    for (int i = -R; i <= R; ++i)
      for (int j = -R; j <= R; ++j)
        add(std::int64_t(i) * i + std::int64_t(j) * j, std::cos(theta[0] * i + theta[1] * j));
  } else {
    for (int i = -R; i <= R; ++i)
      for (int j = -R; j <= R; ++j)
        for (int k = -R; k <= R; ++k)
          add(std::int64_t(i) * i + std::int64_t(j) * j + std::int64_t(k) * k,
              std::cos(theta[0] * i + theta[1] * j + theta[2] * k));
  }
  for (const auto& [r2, c] : acc) {
    out.r2.push_back(r2);
    out.cos_sum.push_back(c);
  }
  return out;
}

// Truncation radius so the certified hop tail (|cos| <= 1) is below tol.
int hop_radius(int d, double kappa, double tol, int cap) {
  for (int R = 2; R <= cap; ++R) {
    if (sum_tail(d, kappa, kappa, 0.0, R) < tol) return R;
  }
  throw Error(ErrorCode::SlowDecay, "hop truncation radius cap exceeded");
}

}  // namespace

double dispersion_symbol(int d, double q, const std::vector<double>& theta, double kappa0,
                         double E, double diag_sign, const BandOptions& opts) {
  if (q == 0.0) throw Error(ErrorCode::DomainError, "coupling must be nonzero");
  const SpectralPoint p(Complex(E, 0.0), d, kappa0, diag_sign);
  const double kappa = p.kappa.real();
  const int R = hop_radius(d, kappa, opts.symbol_tol, opts.radius_cap);
  const CosineShells shells = cosine_shells(d, theta, R);
  double hop = 0.0;
  for (std::size_t i = 0; i < shells.r2.size(); ++i)
    hop += shells.cos_sum[i] * free_kernel(p, std::sqrt(double(shells.r2[i]))).real();
  return 1.0 / q - effective_renorm_diag(p).real() - hop;
}

double dispersion_root(int d, double q, const std::vector<double>& theta, double kappa0,
                       double diag_sign, const BandOptions& opts) {
  if (std::int64_t(theta.size()) != d)
    throw Error(ErrorCode::DomainError, "theta must have d components");
  const auto f = [&](double E) {
    return dispersion_symbol(d, q, theta, kappa0, E, diag_sign, opts);
  };
  // bracket on a log grid in kappa
  const double k_lo = std::sqrt(-opts.e_hi), k_hi = std::sqrt(-opts.e_lo);
  const int ngrid = 256;
  double Ea = 0.0, Eb = 0.0, fa = 0.0, fb = 0.0;
  bool have = false;
  double prevE = 0.0, prevF = 0.0;
  for (int i = 0; i <= ngrid; ++i) {
    const double kappa = k_lo * std::pow(k_hi / k_lo, double(i) / ngrid);
    const double E = -kappa * kappa;
    double val;
    try {
      val = f(E);
    } catch (const Error&) {
      prevE = 0.0;
      have = false;
      continue;
    }
    if (i > 0 && prevE != 0.0 && ((prevF < 0.0) != (val < 0.0))) {
      Ea = prevE;
      Eb = E;
      fa = prevF;
      fb = val;
      have = true;
      break;
    }
    prevE = E;
    prevF = val;
  }
  if (!have) throw Error(ErrorCode::NoRoot, "no sign change in the search window");
  if (Ea > Eb) {
    std::swap(Ea, Eb);
    std::swap(fa, fb);
  }
  // bisection; the certified symbol tolerance is far below the root tolerance
  for (int it = 0; it < 200; ++it) {
    const double Em = 0.5 * (Ea + Eb);
    if (Eb - Ea < opts.root_tol * std::max(1.0, std::abs(Em))) return Em;
    const double fm = f(Em);
    if ((fm < 0.0) == (fa < 0.0)) {
      Ea = Em;
      fa = fm;
    } else {
      Eb = Em;
      fb = fm;
    }
  }
  return 0.5 * (Ea + Eb);
}

BandWindow band_window(int d, double q, double kappa0, int theta_samples, double diag_sign,
                       const BandOptions& opts) {
  if (theta_samples < 1) throw Error(ErrorCode::DomainError, "theta_samples must be >= 1");
  std::vector<std::vector<double>> grid;
  if (d == 1) {
    for (int i = 0; i < theta_samples; ++i) {
      const double t = theta_samples == 1 ? 0.0 : std::numbers::pi * i / (theta_samples - 1);
      grid.push_back({t});
    }
  } else {
    const int m = theta_samples;
    if (std::pow(double(m), d) > 4096.0)
      throw Error(ErrorCode::DomainError, "theta grid too large");
    std::vector<int> idx(std::size_t(d), 0);
    while (true) {
      std::vector<double> theta;
      for (int c = 0; c < d; ++c)
        theta.push_back(m == 1 ? 0.0 : std::numbers::pi * idx[std::size_t(c)] / (m - 1));
      grid.push_back(theta);
      int c = 0;
      for (; c < d; ++c) {
        if (++idx[std::size_t(c)] < m) break;
        idx[std::size_t(c)] = 0;
      }
      if (c == d) break;
    }
  }
  BandWindow win;
  win.q = q;
  win.theta_samples = theta_samples;
  bool first = true;
  for (const auto& theta : grid) {
    const double E = dispersion_root(d, q, theta, kappa0, diag_sign, opts);
    if (first || E < win.E_minus) win.E_minus = E;
    if (first || E > win.E_plus) win.E_plus = E;
    first = false;
  }
  return win;
}

}  // namespace pointdos
