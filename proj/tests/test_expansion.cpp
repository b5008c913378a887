#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>
#include <numbers>

#include "pointdos/expansion.hpp"
#include "pointdos/kernels.hpp"
#include "pointdos/lattice.hpp"
#include "pointdos/quadrature.hpp"
#include "pointdos/sites.hpp"

using namespace pointdos;

namespace {
const SingleSiteLaw kLaw = SingleSiteLaw::uniform(-2.0, -1.0);

GapCertificate cert_at(double E, int d = 1, double pad = 0.0) {
  return pole_gap(SingleSiteLaw::uniform(kLaw.alpha, kLaw.beta, pad, pad / 2.0), d, 1.0, E, E,
                  96);
}
}  // namespace

TEST_CASE("path enumeration small cases") {
  std::vector<LatticePath> paths;
  const auto collect = [&](const LatticePath& p) { paths.push_back(p); };

  enumerate_paths(1, {0, 0, 0}, {0, 0, 0}, 0, 1, 1000, collect);
  REQUIRE(paths.size() == 1);
  CHECK(paths[0].length() == 0);

  paths.clear();
  enumerate_paths(1, {0, 0, 0}, {0, 0, 0}, 2, 1, 1000, collect);
  REQUIRE(paths.size() == 2);  // (0,-1,0) and (0,1,0)
  CHECK(paths[0].vertices[1][0] == -1);
  CHECK(paths[1].vertices[1][0] == 1);

  paths.clear();
  enumerate_paths(1, {0, 0, 0}, {0, 0, 0}, 3, 1, 1000, collect);
  CHECK(paths.empty());  // odd closed walks with unit steps cannot return

  // budget guard
  CHECK_THROWS_AS(
      enumerate_paths(1, {0, 0, 0}, {0, 0, 0}, 12, 3, 100, collect), Error);
}

TEST_CASE("visit profiles sum to length + 1") {
  enumerate_paths(1, {0, 0, 0}, {1, 0, 0}, 3, 2, 100000, [&](const LatticePath& p) {
    int total = 0;
    for (const auto& [site, cnt] : visit_profile(p)) {
      CHECK(cnt >= 1);
      total += cnt;
    }
    CHECK(total == p.length() + 1);
    for (int j = 0; j + 1 < int(p.vertices.size()); ++j)
      CHECK(p.vertices[std::size_t(j)] != p.vertices[std::size_t(j) + 1]);
  });
}

TEST_CASE("path class tables count exactly") {
  // d=1, r_hop=1, closed length <= 4: lengths 0, 2, 4 with binomial counts
  const PathClassTable& tab = path_table(1, {0, 0, 0}, 4, 1, 100000);
  std::map<std::size_t, std::int64_t> count_by_length;
  for (const PathClass& c : tab.classes) count_by_length[c.steps2.size()] += c.count;
  CHECK(count_by_length[0] == 1);
  CHECK(count_by_length[2] == 2);
  CHECK(count_by_length[4] == 6);   // C(4,2) walks with +-1 steps returning
  CHECK(count_by_length.count(1) == 0);
  CHECK(count_by_length.count(3) == 0);
}

TEST_CASE("site-factorized averaging equals joint quadrature on short paths") {
  // every d=1 path of length <= 3 with hops <= 2: the averaged vertex product
  // computed by tensor-grid quadrature over the distinct-site product measure
  // must match the product of single-site moments
  const SpectralPoint p({-1.0, 0.0}, 1);
  int paths_checked = 0;
  for (int n = 0; n <= 3; ++n) {
    for (int b = -6; b <= 6; ++b) {
      enumerate_paths(1, {0, 0, 0}, {b, 0, 0}, n, 2, 1000000, [&](const LatticePath& path) {
        const auto prof = visit_profile(path);
        // product of moments
        Complex prod = 1.0;
        for (const auto& [site, cnt] : prof) prod *= moment_I(cnt - 1, kLaw, p);
        // tensor quadrature over the distinct sites
        const auto& rule = quad::gauss_legendre(24);
        const std::size_t k = prof.size();
        std::vector<std::size_t> idx(k, 0);
        Complex joint = 0.0;
        while (true) {
          Complex term = 1.0;
          for (std::size_t i = 0; i < k; ++i) {
            const double q =
                0.5 * (kLaw.alpha + kLaw.beta) + 0.5 * (kLaw.beta - kLaw.alpha) * rule.x[idx[i]];
            const Complex w = w_weight({q, 0.0}, p);
            Complex wp = 1.0;
            for (int c = 0; c < prof[i].second; ++c) wp *= w;
            term *= wp * (0.5 * rule.w[idx[i]]);  // weight of the normalized measure
          }
          joint += term;
          std::size_t c = 0;
          for (; c < k; ++c) {
            if (++idx[c] < rule.x.size()) break;
            idx[c] = 0;
          }
          if (c == k) break;
        }
        CHECK(std::abs(joint - prod) < 1e-10 * (1.0 + std::abs(prod)));
        ++paths_checked;
      });
    }
  }
  CHECK(paths_checked > 50);
}

TEST_CASE("averaged kernel basics") {
  const SpectralPoint p({-1.0, 0.0}, 1);
  const GapCertificate cert = cert_at(-1.0);

  // only the trivial path at n_max = 0
  const ExpansionResult F0 = averaged_kernel_F({0, 0, 0}, kLaw, p, 0, 1, 1000, cert);
  CHECK(std::abs(F0.value - moment_I(0, kLaw, p)) < 1e-14);
  CHECK(F0.tail_bound > 0.0);

  // two classes at n_max = 2, r_hop = 1: I0 and 2 I1 I0 G0(1)^2
  const ExpansionResult F2 = averaged_kernel_F({0, 0, 0}, kLaw, p, 2, 1, 10000, cert);
  const Complex I0 = moment_I(0, kLaw, p);
  const Complex I1 = moment_I(1, kLaw, p);
  const Complex g = free_kernel(p, 1.0);
  CHECK(std::abs(F2.value - (I0 + 2.0 * I1 * I0 * g * g)) < 1e-13);
  CHECK(F2.value.real() == doctest::Approx(-0.89125).epsilon(1e-4));

  // regime guard
  const SpectralPoint shallow({-0.05, 0.0}, 1);
  CHECK_THROWS_AS(
      (void)averaged_kernel_F({0, 0, 0}, kLaw, shallow, 2, 1, 10000, cert), Error);
}

TEST_CASE("tail honesty under deeper truncation") {
  const SpectralPoint p({-1.0, 0.0}, 1);
  const GapCertificate cert = cert_at(-1.0);
  const ExpansionResult a = averaged_kernel_F({0, 0, 0}, kLaw, p, 10, 1, 10000000, cert);
  const ExpansionResult b = averaged_kernel_F({0, 0, 0}, kLaw, p, 20, 1, 100000000, cert);
  CHECK(std::abs(a.value - b.value) < a.tail_bound);
  // joint refinement shrinks the reported bound
  const ExpansionResult c = averaged_kernel_F({0, 0, 0}, kLaw, p, 12, 2, 100000000, cert);
  const ExpansionResult d = averaged_kernel_F({0, 0, 0}, kLaw, p, 14, 3, 4000000000ull, cert);
  CHECK(d.tail_bound < c.tail_bound);
  CHECK(c.tail_bound < a.tail_bound);
}

TEST_CASE("deterministic law reduces to the fixed-coupling inverse") {
  const SingleSiteLaw pm = SingleSiteLaw::point_mass(-2.0);
  const SpectralPoint p({-1.0, 0.0}, 1);
  const GapCertificate cert = pole_gap(pm, 1, 1.0, -1.0, -1.0, 64);
  const ExpansionResult F = averaged_kernel_F({0, 0, 0}, pm, p, 10, 2, 10000000, cert);
  const SiteConfiguration cfg =
      SiteConfiguration::explicit_couplings(1, 16, std::vector<double>(33, -2.0));
  const Complex dense = dense_inverse(assemble_gamma(cfg, p))(16, 16);
  const double edge = finite_box_bound(p, pointwise_gap(pm, p), 16, {0, 0, 0});
  CHECK(std::abs(F.value - dense) <= F.tail_bound + edge);
  // the actual agreement is much tighter than the certified budget
  CHECK(std::abs(F.value - dense) < 5e-3);
}

TEST_CASE("hop tail closed form") {
  const SpectralPoint p({-1.0, 0.0}, 1);
  const double ref = std::exp(-2.0) / (1.0 - std::exp(-1.0));  // sum_{|n| >= 2} e^{-|n|}/2
  CHECK(hop_tail(p, 1) == doctest::Approx(ref).epsilon(1e-8));
  double prev = hop_tail(p, 1);
  for (int r = 2; r <= 5; ++r) {
    const double cur = hop_tail(p, r);
    CHECK(cur < prev);
    prev = cur;
  }
  CHECK_THROWS_AS((void)hop_tail(p, 0), Error);
}

TEST_CASE("monte carlo oracle") {
  const SpectralPoint p({-1.0, 0.0}, 1);

  // degenerate law: zero variance, mean equals the deterministic inverse
  const SingleSiteLaw pm = SingleSiteLaw::point_mass(-2.0);
  MCOptions mo;
  mo.L = 6;
  mo.samples = 32;
  mo.seed = 5;
  const MCResult det = mc_average(pm, p, {{0, 0, 0}, {1, 0, 0}}, mo);
  CHECK(det.stderrs[0] == doctest::Approx(0.0).epsilon(1e-14));
  const SiteConfiguration cfg =
      SiteConfiguration::explicit_couplings(1, 6, std::vector<double>(13, -2.0));
  const Eigen::MatrixXcd inv = dense_inverse(assemble_gamma(cfg, p));
  CHECK(std::abs(det.mean[0] - inv(6, 6)) < 1e-14);
  CHECK(std::abs(det.mean[1] - inv(6, 7)) < 1e-14);

  // identical seeds give bit-identical means
  mo.samples = 500;
  const MCResult a = mc_average(kLaw, p, {{0, 0, 0}}, mo);
  const MCResult b = mc_average(kLaw, p, {{0, 0, 0}}, mo);
  CHECK(a.mean[0].real() == b.mean[0].real());
  CHECK(a.mean[0].imag() == b.mean[0].imag());

  // symmetry F(n) = F(-n) within noise
  MCOptions ms;
  ms.L = 10;
  ms.samples = 3000;
  ms.seed = 17;
  const MCResult sym = mc_average(kLaw, p, {{2, 0, 0}, {-2, 0, 0}}, ms);
  CHECK(std::abs(sym.mean[0] - sym.mean[1]) <= 4.0 * (sym.stderrs[0] + sym.stderrs[1]));

  // translation invariance of the averaged entry: two base points agree
  MCOptions m0 = ms;
  MCOptions m1 = ms;
  m1.base = {3, 0, 0};
  const MCResult t0 = mc_average(kLaw, p, {{1, 0, 0}}, m0);
  const MCResult t1 = mc_average(kLaw, p, {{1, 0, 0}}, m1);
  // base 3 sits closer to the wall; allow the certified edge budget too
  const double edge = finite_box_bound(p, pointwise_gap(kLaw, p), 6, {1, 0, 0});
  CHECK(std::abs(t0.mean[0] - t1.mean[0]) <=
        4.0 * (t0.stderrs[0] + t1.stderrs[0]) + 2.0 * edge);
}

TEST_CASE("finite box bound behaviour") {
  const SpectralPoint p({-1.0, 0.0}, 1);
  const double gap = pointwise_gap(kLaw, p);
  const double b8 = finite_box_bound(p, gap, 8, {0, 0, 0});
  const double b16 = finite_box_bound(p, gap, 16, {0, 0, 0});
  CHECK(b8 > 0.0);
  CHECK(b16 < b8);
}

TEST_CASE("two-point pair classes") {
  const SpectralPoint z1({-1.0, 0.0}, 1);
  const SpectralPoint z2({-1.5, 0.0}, 1);

  // n_max = 0: the only pair is two trivial paths at the same site
  const SingleSiteLaw pm = SingleSiteLaw::point_mass(-2.0);
  const Complex f2 = two_point_F2(pm, z1, z2, 0, 1, 1000);
  CHECK(std::abs(f2 - w_weight({-2.0, 0.0}, z1) * w_weight({-2.0, 0.0}, z2)) < 1e-14);

  // disjoint-support pairs factorize through J(r, 0) J(0, s); the table keeps
  // shared-site pairs coupled: sanity against a small MC estimate
  MCOptions mo;
  mo.L = 10;
  mo.samples = 4000;
  mo.seed = 23;
  const int c = 10;
  double acc_re = 0.0;
  Complex mc2 = 0.0;
  for (int s = 0; s < mo.samples; ++s) {
    const SiteConfiguration cfg = SiteConfiguration::sampled(1, mo.L, kLaw, mo.seed, s);
    const Eigen::MatrixXcd i1 = dense_inverse(assemble_gamma(cfg, z1));
    const Eigen::MatrixXcd i2 = dense_inverse(assemble_gamma(cfg, z2));
    mc2 += i1(c, c) * i2(c, c);
    acc_re += std::norm(i1(c, c) * i2(c, c));
  }
  mc2 /= double(mo.samples);
  const double sd = std::sqrt(std::max(0.0, acc_re / mo.samples - std::norm(mc2)) / mo.samples);
  const Complex f2u = two_point_F2(kLaw, z1, z2, 6, 2, 10000000);
  CHECK(std::abs(f2u - mc2) <= 4.0 * sd + 0.05 * std::abs(mc2));
}
