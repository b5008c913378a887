#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "pointdos/principal.hpp"
#include "pointdos/sites.hpp"
#include "pointdos/types.hpp"

namespace pointdos {

/// Discrete lattice path; consecutive vertices distinct.
struct LatticePath {
  std::vector<IVec> vertices;
  int length() const { return int(vertices.size()) - 1; }
};

/// Visit counts per site; counts sum to length + 1.
std::vector<std::pair<IVec, int>> visit_profile(const LatticePath& path);

/// Streams all paths a -> b of exact length n with steps 0 < |s| <= r_hop,
/// lexicographic in the step vectors.  Throws Explosion past the budget.
void enumerate_paths(int d, const IVec& a, const IVec& b, int n, int r_hop, std::uint64_t budget,
                     const std::function<void(const LatticePath&)>& visit);

/// Paths grouped by (visit-count multiset, squared-step multiset); the
/// averaged weight depends only on the class, so one enumeration serves
/// every (law, z).
struct PathClass {
  std::vector<int> visits;  // sorted ascending
  std::vector<int> steps2;  // sorted ascending; size = path length
  std::int64_t count = 0;
};

struct PathClassTable {
  int d = 1;
  IVec target{0, 0, 0};
  int n_max = 0;
  int r_hop = 1;
  std::vector<PathClass> classes;  // sorted; evaluation order is deterministic
  std::uint64_t nodes = 0;         // DFS path-steps consumed
};

/// Cached table of all path classes 0 -> target up to length n_max.
const PathClassTable& path_table(int d, const IVec& target, int n_max, int r_hop,
                                 std::uint64_t budget);

struct ExpansionResult {
  Complex value;
  double tail_bound = 0.0;  // length truncation + hop truncation, certified
  int n_max = 0;
  int r_hop = 0;
  double hop_tail = 0.0;    // certified S_{> r_hop}(z)
};

/// Disorder-averaged inverse principal matrix entry F(n) = E[Gamma^-1(0, n)]
/// via the site-factorized path sum.
ExpansionResult averaged_kernel_F(const IVec& n, const SingleSiteLaw& law, const SpectralPoint& p,
                                  int n_max, int r_hop, std::uint64_t budget,
                                  const GapCertificate& cert);

/// Certified remainder sum_{|n| > r_hop} |G0(z; n)|.
double hop_tail(const SpectralPoint& p, int r_hop);

struct MCOptions {
  int L = 12;
  int samples = 10000;
  std::uint64_t seed = 1;
  IVec base{0, 0, 0};
};

struct MCResult {
  std::vector<Complex> mean;      // per requested offset
  std::vector<double> stderrs;    // sqrt((Var Re + Var Im) / N)
  int singular = 0;
  int samples = 0;
};

/// Brute-force ensemble oracle: samples configurations, dense-inverts, and
/// averages Gamma^-1(base, base + offset).  Deterministic given the seed.
MCResult mc_average(const SingleSiteLaw& law, const SpectralPoint& p,
                    const std::vector<IVec>& offsets, const MCOptions& opts);

/// Certified bound on |E[Gamma_L^-1(0,n)] - F(n)| from paths leaving the box,
/// via exponentially weighted Schur sums.
double finite_box_bound(const SpectralPoint& p, double delta_star, int L, const IVec& n);

/// Two-path classes for averaged products of two resolvents; sites shared by
/// both paths couple through joint moments J_{r1, r2}.
struct PairClass {
  std::vector<std::pair<int, int>> joint_visits;  // sorted (r1, r2)
  std::vector<int> steps2_a, steps2_b;
  std::int64_t count = 0;
};

struct PairClassTable {
  int d = 1;
  int n_max = 0;
  int r_hop = 1;
  std::vector<PairClass> classes;
};

const PairClassTable& pair_table(int d, int n_max, int r_hop, std::uint64_t budget);

/// F2(z1, z2) = E[Gamma^-1(z1)(0,0) Gamma^-1(z2)(0,0)] by the two-path
/// expansion, both paths truncated at n_max.
Complex two_point_F2(const SingleSiteLaw& law, const SpectralPoint& p1, const SpectralPoint& p2,
                     int n_max, int r_hop, std::uint64_t budget);

}  // namespace pointdos
