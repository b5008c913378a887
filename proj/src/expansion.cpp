#include "pointdos/expansion.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <tuple>
#include <unordered_map>

#include "pointdos/kernels.hpp"
#include "pointdos/lattice.hpp"
#include "pointdos/rng.hpp"

namespace pointdos {

std::vector<std::pair<IVec, int>> visit_profile(const LatticePath& path) {
  std::vector<std::pair<IVec, int>> prof;
  for (const IVec& v : path.vertices) {
    bool found = false;
    for (auto& [site, cnt] : prof)
      if (site == v) {
        ++cnt;
        found = true;
        break;
      }
    if (!found) prof.emplace_back(v, 1);
  }
  return prof;
}

namespace {

std::vector<IVec> step_set(int d, int r_hop) {
  if (r_hop < 1) throw Error(ErrorCode::DomainError, "r_hop must be >= 1");
  std::vector<IVec> steps;
  const int R = r_hop;
  const auto keep = [&](const IVec& v) {
    const std::int64_t n2 =
        std::int64_t(v[0]) * v[0] + std::int64_t(v[1]) * v[1] + std::int64_t(v[2]) * v[2];
    return n2 > 0 && n2 <= std::int64_t(R) * R;
  };
  if (d == 1) {
    for (int x = -R; x <= R; ++x)
      if (keep({x, 0, 0})) steps.push_back({x, 0, 0});
  } else if (d == 2) {
    for (int x = -R; x <= R; ++x)
      for (int y = -R; y <= R; ++y)
        if (keep({x, y, 0})) steps.push_back({x, y, 0});
  } else {
    for (int x = -R; x <= R; ++x)
      for (int y = -R; y <= R; ++y)
        for (int z = -R; z <= R; ++z)
          if (keep({x, y, z})) steps.push_back({x, y, z});
  }
  return steps;
}

std::int64_t norm2(const IVec& v) {
  return std::int64_t(v[0]) * v[0] + std::int64_t(v[1]) * v[1] + std::int64_t(v[2]) * v[2];
}

struct ClassKey {
  std::uint64_t k[4] = {0, 0, 0, 0};
  bool operator==(const ClassKey& o) const {
    return k[0] == o.k[0] && k[1] == o.k[1] && k[2] == o.k[2] && k[3] == o.k[3];
  }
};

struct ClassKeyHash {
  std::size_t operator()(const ClassKey& key) const {
    std::uint64_t h = 0;
    for (std::uint64_t v : key.k) h = mix64(h ^ v);
    return std::size_t(h);
  }
};

// 5-bit packing (values <= 31), 12 per word, two words per multiset
void pack_multiset(const int* vals, int n, std::uint64_t& lo, std::uint64_t& hi) {
  lo = hi = 0;
  for (int i = 0; i < n; ++i) {
    const std::uint64_t v = std::uint64_t(vals[i]) & 0x1f;
    if (i < 12)
      lo = (lo << 5) | v;
    else
      hi = (hi << 5) | v;
  }
}

constexpr int kMaxLen = 22;

// Reachable-box addressing for visit counts: coordinates stay within
// n_max * r_hop of the start, so a flat array gives O(1) bump/unbump.
struct VisitCounter {
  int M, W, d;
  std::vector<int> cnt;
  std::vector<int> active;  // flat indices in first-visit order

  VisitCounter(int d_, int reach) : M(reach), W(2 * reach + 1), d(d_) {
    std::size_t size = std::size_t(W);
    for (int c = 1; c < d; ++c) size *= std::size_t(W);
    cnt.assign(size, 0);
    active.reserve(kMaxLen);
  }
  int flat(const IVec& v) const {
    int idx = v[0] + M;
    for (int c = 1; c < d; ++c) idx = idx * W + (v[c] + M);
    return idx;
  }
  int bump(const IVec& v) {
    const int idx = flat(v);
    if (cnt[std::size_t(idx)]++ == 0) active.push_back(idx);
    return idx;
  }
  // LIFO: a count reaches zero only for the most recently activated site
  void unbump(int idx) {
    if (--cnt[std::size_t(idx)] == 0) active.pop_back();
  }
};

// Depth-first enumeration with incremental visit counts; match() receives the
// sorted-free visit counts and per-depth squared steps at every prefix ending
// on the target.  Returns the number of DFS path-steps.  With half_root the
// first step is restricted to the lexicographically positive half of the step
// set (negation symmetry; valid for closed paths, caller doubles counts).
template <class Match>
std::uint64_t dfs_core(int d, const IVec& start, const IVec& target, int n_max, int r_hop,
                       std::uint64_t budget, Match&& match, bool half_root = false) {
  if (n_max < 0) throw Error(ErrorCode::DomainError, "n_max must be >= 0");
  if (n_max + 1 > kMaxLen) throw Error(ErrorCode::DomainError, "n_max too large for packing");
  const std::vector<IVec> steps = step_set(d, r_hop);
  const int nsteps = int(steps.size());
  std::vector<std::int64_t> step2(steps.size());
  for (std::size_t i = 0; i < steps.size(); ++i) step2[i] = norm2(steps[i]);
  int first_positive = 0;  // lex-positive steps form the tail of the sorted step set
  while (first_positive < nsteps) {
    const IVec& s = steps[std::size_t(first_positive)];
    const int lead = s[0] != 0 ? s[0] : (s[1] != 0 ? s[1] : s[2]);
    if (lead > 0) break;
    ++first_positive;
  }

  VisitCounter vc(d, n_max * r_hop + 1);
  struct Frame {
    IVec pos;
    int next_step;
    int visit_slot;
  };
  std::vector<Frame> stack;
  stack.reserve(std::size_t(n_max) + 1);
  std::vector<int> edge2;
  edge2.reserve(std::size_t(n_max));
  std::uint64_t nodes = 0;

  stack.push_back({start, half_root ? first_positive : 0, vc.bump(start)});
  if (start == target) match(0, vc, edge2);

  while (!stack.empty()) {
    Frame& top = stack.back();
    const int depth = int(stack.size()) - 1;
    if (depth == n_max || top.next_step >= nsteps) {
      vc.unbump(top.visit_slot);
      stack.pop_back();
      if (!edge2.empty()) edge2.pop_back();
      continue;
    }
    const int si = top.next_step++;
    IVec nxt = top.pos;
    for (int c = 0; c < 3; ++c) nxt[c] += steps[std::size_t(si)][c];
    // reachability prune: remaining steps must cover the distance to target
    const int remaining = n_max - depth - 1;
    IVec diff = nxt;
    for (int c = 0; c < 3; ++c) diff[c] -= target[c];
    if (norm2(diff) > std::int64_t(remaining) * remaining * r_hop * r_hop) continue;
    if (++nodes > budget)
      throw Error(ErrorCode::Explosion, "path enumeration budget exceeded");
    edge2.push_back(int(step2[std::size_t(si)]));
    const int slot = vc.bump(nxt);
    if (nxt == target) match(depth + 1, vc, edge2);
    stack.push_back({nxt, 0, slot});
  }
  return nodes;
}

}  // namespace

void enumerate_paths(int d, const IVec& a, const IVec& b, int n, int r_hop, std::uint64_t budget,
                     const std::function<void(const LatticePath&)>& visit) {
  const std::vector<IVec> steps = step_set(d, r_hop);
  std::vector<IVec> path{a};
  std::uint64_t nodes = 0;
  const std::function<void()> rec = [&]() {
    const int depth = int(path.size()) - 1;
    if (depth == n) {
      if (path.back() == b) visit(LatticePath{path});
      return;
    }
    const int remaining = n - depth - 1;
    for (const IVec& s : steps) {
      IVec nxt = path.back();
      for (int c = 0; c < 3; ++c) nxt[c] += s[c];
      IVec diff = nxt;
      for (int c = 0; c < 3; ++c) diff[c] -= b[c];
      if (norm2(diff) > std::int64_t(remaining) * remaining * r_hop * r_hop) continue;
      if (++nodes > budget) throw Error(ErrorCode::Explosion, "path enumeration budget exceeded");
      path.push_back(nxt);
      rec();
      path.pop_back();
    }
  };
  rec();
}

namespace {

IVec canonical_target(int d, IVec n) {
  for (int c = 0; c < 3; ++c) n[c] = std::abs(n[c]);
  std::sort(n.begin(), n.begin() + d, std::greater<int>());
  return n;
}

PathClassTable build_table(int d, const IVec& target, int n_max, int r_hop,
                           std::uint64_t budget) {
  PathClassTable tab;
  tab.d = d;
  tab.target = target;
  tab.n_max = n_max;
  tab.r_hop = r_hop;
  if (r_hop > 5) throw Error(ErrorCode::DomainError, "r_hop above packing limit 5");

  struct ClassData {
    std::int64_t count = 0;
    std::vector<int> visits;
    std::vector<int> steps2;
  };
  std::unordered_map<ClassKey, ClassData, ClassKeyHash> acc;
  acc.reserve(1 << 14);

  const bool closed = target == IVec{0, 0, 0};
  int counts_buf[kMaxLen];
  int steps_buf[kMaxLen];
  const auto insertion_sort = [](int* a, int n) {
    for (int i = 1; i < n; ++i) {
      const int v = a[i];
      int j = i - 1;
      for (; j >= 0 && a[j] > v; --j) a[j + 1] = a[j];
      a[j + 1] = v;
    }
  };
  tab.nodes = dfs_core(
      d, IVec{0, 0, 0}, target, n_max, r_hop, budget,
      [&](int length, const VisitCounter& vc, const std::vector<int>& edge2) {
        const int nv = int(vc.active.size());
        for (int i = 0; i < nv; ++i) counts_buf[i] = vc.cnt[std::size_t(vc.active[std::size_t(i)])];
        insertion_sort(counts_buf, nv);
        for (int i = 0; i < length; ++i) steps_buf[i] = edge2[std::size_t(i)];
        insertion_sort(steps_buf, length);
        ClassKey key;
        pack_multiset(counts_buf, nv, key.k[0], key.k[1]);
        pack_multiset(steps_buf, length, key.k[2], key.k[3]);
        ClassData& cd = acc[key];
        if (cd.count++ == 0) {
          cd.visits.assign(counts_buf, counts_buf + nv);
          cd.steps2.assign(steps_buf, steps_buf + length);
        }
      },
      closed);

  tab.classes.reserve(acc.size());
  for (auto& [key, cd] : acc) {
    // mirror halving: every closed path of positive length pairs with its
    // negation; the length-0 path is its own class and stays single
    const std::int64_t count = (closed && !cd.steps2.empty()) ? 2 * cd.count : cd.count;
    tab.classes.push_back(PathClass{std::move(cd.visits), std::move(cd.steps2), count});
  }
  std::sort(tab.classes.begin(), tab.classes.end(), [](const PathClass& a, const PathClass& b) {
    if (a.steps2.size() != b.steps2.size()) return a.steps2.size() < b.steps2.size();
    if (a.visits != b.visits) return a.visits < b.visits;
    return a.steps2 < b.steps2;
  });
  return tab;
}

}  // namespace

const PathClassTable& path_table(int d, const IVec& target, int n_max, int r_hop,
                                 std::uint64_t budget) {
  struct Key {
    int d, n_max, r_hop;
    IVec target;
    auto operator<=>(const Key&) const = default;
  };
  static std::mutex mu;
  static std::map<Key, PathClassTable> cache;
  const Key key{d, n_max, r_hop, canonical_target(d, target)};
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(key);
  if (it == cache.end())
    it = cache.emplace(key, build_table(d, key.target, n_max, r_hop, budget)).first;
  return it->second;
}

namespace {

// exact finite sum over the admitted step set
double short_hop_sum(const SpectralPoint& p, int r_hop) {
  const auto& counts = detail::shell_counts(p.d, std::int64_t(r_hop) * r_hop);
  double s = 0.0;
  for (std::int64_t r2 = 1; r2 <= std::int64_t(r_hop) * r_hop; ++r2)
    if (counts[std::size_t(r2)] > 0)
      s += double(counts[std::size_t(r2)]) * std::abs(free_kernel(p, std::sqrt(double(r2))));
  return s;
}

}  // namespace

double hop_tail(const SpectralPoint& p, int r_hop) {
  if (r_hop < 1) throw Error(ErrorCode::DomainError, "r_hop must be >= 1");
  const LatticeSumResult s = lattice_sum_S(p, 1e-12);
  return std::max(0.0, s.value + s.tail_bound - short_hop_sum(p, r_hop));
}

ExpansionResult averaged_kernel_F(const IVec& n, const SingleSiteLaw& law, const SpectralPoint& p,
                                  int n_max, int r_hop, std::uint64_t budget,
                                  const GapCertificate& cert) {
  if (!cert.small_hopping_ok)
    throw Error(ErrorCode::RegimeViolation, "certificate does not grant small hopping");
  const LatticeSumResult s = lattice_sum_S(p, 1e-12);
  const double S_up = s.value + s.tail_bound;
  const double ratio = S_up / cert.delta_star;
  if (ratio >= 1.0)
    throw Error(ErrorCode::RegimeViolation, "S(z)/Delta_* >= 1 at this energy");

  const PathClassTable& tab = path_table(p.d, n, n_max, r_hop, budget);

  std::vector<Complex> I(std::size_t(n_max) + 1);
  for (int m = 0; m <= n_max; ++m) I[std::size_t(m)] = moment_I(m, law, p);
  std::map<int, Complex> edge;
  const auto edge_at = [&](int s2) {
    auto it = edge.find(s2);
    if (it == edge.end()) it = edge.emplace(s2, free_kernel(p, std::sqrt(double(s2)))).first;
    return it->second;
  };

  ExpansionResult out;
  out.n_max = n_max;
  out.r_hop = r_hop;
  out.value = 0.0;
  for (const PathClass& cls : tab.classes) {
    Complex t = double(cls.count);
    for (int r : cls.visits) t *= I[std::size_t(r - 1)];
    for (int s2 : cls.steps2) t *= edge_at(s2);
    out.value += t;
  }

  const double inv_delta = 1.0 / cert.delta_star;
  const double tail_geom =
      inv_delta * std::pow(ratio, n_max + 1) / (1.0 - ratio);
  const double S_le = short_hop_sum(p, r_hop);
  out.hop_tail = std::max(0.0, S_up - S_le);
  double weighted = 0.0;  // sum_{m<=n_max} m r^{m-1}
  for (int m = 1; m <= n_max; ++m) weighted += m * std::pow(ratio, m - 1);
  out.tail_bound = tail_geom + out.hop_tail * inv_delta * inv_delta * weighted;
  return out;
}

MCResult mc_average(const SingleSiteLaw& law, const SpectralPoint& p,
                    const std::vector<IVec>& offsets, const MCOptions& opts) {
  if (opts.samples < 1) throw Error(ErrorCode::DomainError, "samples must be >= 1");
  MCResult out;
  out.samples = opts.samples;
  const std::size_t k = offsets.size();
  std::vector<Complex> sum(k, 0.0);
  std::vector<double> sq(k, 0.0);  // |entry|^2 accumulator

  for (int smp = 0; smp < opts.samples; ++smp) {
    const SiteConfiguration cfg =
        SiteConfiguration::sampled(p.d, opts.L, law, opts.seed, std::uint64_t(smp));
    const int base = cfg.index_of(opts.base);
    if (base < 0) throw Error(ErrorCode::DomainError, "base site outside the box");
    try {
      const PrincipalMatrix pm = assemble_gamma(cfg, p);
      const Eigen::MatrixXcd inv = dense_inverse(pm);
      for (std::size_t j = 0; j < k; ++j) {
        IVec tgt = opts.base;
        for (int c = 0; c < 3; ++c) tgt[c] += offsets[j][c];
        const int col = cfg.index_of(tgt);
        if (col < 0) throw Error(ErrorCode::DomainError, "offset site outside the box");
        const Complex v = inv(base, col);
        sum[j] += v;
        sq[j] += std::norm(v);
      }
    } catch (const Error& e) {
      if (e.code() == ErrorCode::Singular) {
        ++out.singular;
        continue;
      }
      throw;
    }
  }
  const int good = opts.samples - out.singular;
  if (out.singular > 0 && double(out.singular) > 1e-3 * double(opts.samples))
    throw Error(ErrorCode::Singular, "more than 0.1% of samples were singular");
  out.mean.resize(k);
  out.stderrs.resize(k);
  for (std::size_t j = 0; j < k; ++j) {
    out.mean[j] = sum[j] / double(good);
    const double var = std::max(0.0, sq[j] / good - std::norm(out.mean[j]));
    out.stderrs[j] = std::sqrt(var / good);
  }
  return out;
}

double finite_box_bound(const SpectralPoint& p, double delta_star, int L, const IVec& n) {
  const double travel = 2.0 * (L + 1) - std::sqrt(double(norm2(n)));
  const double kre = p.kappa.real();
  double best = std::numeric_limits<double>::infinity();
  for (int i = 1; i <= 24; ++i) {
    const double theta = 0.98 * kre * double(i) / 25.0;
    LatticeSumOptions o;
    o.weight = theta;
    double S_theta;
    try {
      const LatticeSumResult s = lattice_sum_S(p, 1e-10, o);
      S_theta = s.value + s.tail_bound;
    } catch (const Error&) {
      continue;
    }
    const double r = S_theta / delta_star;
    if (r >= 1.0) continue;
    best = std::min(best, std::exp(-theta * travel) / (delta_star * (1.0 - r)));
  }
  return best;
}

namespace {

struct ConcretePath {
  std::vector<std::pair<int, int>> visits;  // flat site index -> count
  std::vector<int> steps2;                  // sorted
};

std::vector<ConcretePath> closed_paths(int d, int n_max, int r_hop, std::uint64_t budget) {
  std::vector<ConcretePath> out;
  dfs_core(d, IVec{0, 0, 0}, IVec{0, 0, 0}, n_max, r_hop, budget,
           [&](int length, const VisitCounter& vc, const std::vector<int>& edge2) {
             ConcretePath cp;
             for (int idx : vc.active)
               cp.visits.emplace_back(idx, vc.cnt[std::size_t(idx)]);
             std::sort(cp.visits.begin(), cp.visits.end());
             cp.steps2.assign(edge2.begin(), edge2.begin() + length);
             std::sort(cp.steps2.begin(), cp.steps2.end());
             out.push_back(std::move(cp));
           });
  return out;
}

PairClassTable build_pair_table(int d, int n_max, int r_hop, std::uint64_t budget) {
  PairClassTable tab;
  tab.d = d;
  tab.n_max = n_max;
  tab.r_hop = r_hop;
  const std::vector<ConcretePath> paths = closed_paths(d, n_max, r_hop, budget);

  std::map<std::tuple<std::vector<std::pair<int, int>>, std::vector<int>, std::vector<int>>,
           std::int64_t>
      acc;
  std::vector<std::pair<int, int>> joint;
  for (const ConcretePath& a : paths) {
    for (const ConcretePath& b : paths) {
      joint.clear();
      std::size_t ia = 0, ib = 0;
      while (ia < a.visits.size() || ib < b.visits.size()) {
        if (ib >= b.visits.size() ||
            (ia < a.visits.size() && a.visits[ia].first < b.visits[ib].first)) {
          joint.emplace_back(a.visits[ia].second, 0);
          ++ia;
        } else if (ia >= a.visits.size() || b.visits[ib].first < a.visits[ia].first) {
          joint.emplace_back(0, b.visits[ib].second);
          ++ib;
        } else {
          joint.emplace_back(a.visits[ia].second, b.visits[ib].second);
          ++ia;
          ++ib;
        }
      }
      std::sort(joint.begin(), joint.end());
      ++acc[{joint, a.steps2, b.steps2}];
    }
  }
  for (auto& [key, count] : acc)
    tab.classes.push_back(
        PairClass{std::get<0>(key), std::get<1>(key), std::get<2>(key), count});
  return tab;
}

}  // namespace

const PairClassTable& pair_table(int d, int n_max, int r_hop, std::uint64_t budget) {
  struct Key {
    int d, n_max, r_hop;
    auto operator<=>(const Key&) const = default;
  };
  static std::mutex mu;
  static std::map<Key, PairClassTable> cache;
  std::lock_guard<std::mutex> lock(mu);
  const Key key{d, n_max, r_hop};
  auto it = cache.find(key);
  if (it == cache.end())
    it = cache.emplace(key, build_pair_table(d, n_max, r_hop, budget)).first;
  return it->second;
}

Complex two_point_F2(const SingleSiteLaw& law, const SpectralPoint& p1, const SpectralPoint& p2,
                     int n_max, int r_hop, std::uint64_t budget) {
  const PairClassTable& tab = pair_table(p1.d, n_max, r_hop, budget);

  std::map<std::pair<int, int>, Complex> jmemo;
  const auto J = [&](int m1, int m2) {
    const auto key = std::make_pair(m1, m2);
    auto it = jmemo.find(key);
    if (it == jmemo.end())
      it = jmemo.emplace(key, joint_moment_J({m1, m2}, law, {p1, p2})).first;
    return it->second;
  };
  std::map<int, Complex> e1, e2;
  const auto edge_at = [&](std::map<int, Complex>& memo, const SpectralPoint& p, int s2) {
    auto it = memo.find(s2);
    if (it == memo.end()) it = memo.emplace(s2, free_kernel(p, std::sqrt(double(s2)))).first;
    return it->second;
  };

  Complex val = 0.0;
  for (const PairClass& cls : tab.classes) {
    Complex t = double(cls.count);
    for (const auto& [r1, r2] : cls.joint_visits) t *= J(r1, r2);
    for (int s2 : cls.steps2_a) t *= edge_at(e1, p1, s2);
    for (int s2 : cls.steps2_b) t *= edge_at(e2, p2, s2);
    val += t;
  }
  return val;
}

}  // namespace pointdos
