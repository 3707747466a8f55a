#include "fkdim/covering.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <optional>
#include <variant>

#include "fkdim/errors.hpp"
#include "fkdim/parallel.hpp"

namespace fkdim {

OrbitBank::OrbitBank(const SystemSpec& sys, std::span<const Point> points,
                     std::size_t length)
    : length_(length) {
  if (length == 0) throw ValidationError("n", "orbit length must be >= 1");
  orbits_.reserve(points.size());
  for (const Point& p : points) orbits_.push_back(fkdim::orbit(sys, p, length));
}

std::span<const Point> OrbitBank::orbit(std::size_t index, std::size_t n) const {
  if (n > length_) throw ValidationError("n", "exceeds precomputed orbit length");
  return {orbits_.at(index).points.data(), n};
}

bool BallOracle::contains(std::span<const Point> center, std::span<const Point> y) const {
  const SystemSpec& sys = *system;
  switch (kind) {
    case MetricKind::FK: return fk_within(sys, center.first(n), y.first(n), eps);
    case MetricKind::Bowen: return bowen_within(sys, center.first(n), y.first(n), eps);
    case MetricKind::Mean: return mean_within(sys, center.first(n), y.first(n), eps);
    case MetricKind::Mistake:
      return mistake_within(sys, center.first(n), y.first(n), eps, mistake);
    case MetricKind::Base: return metric_below(sys, center[0], y[0], eps);
  }
  return false;
}

namespace {

void check_oracle(const BallOracle& o) {
  if (!o.system) throw ValidationError("system", "ball oracle has no system");
  if (!(o.eps > 0.0)) throw ValidationError("epsilon", "must be > 0");
  if (o.n == 0) throw ValidationError("n", "must be >= 1");
}

std::size_t bank_length(const BallOracle& o) {
  return o.kind == MetricKind::Base ? 1 : o.n;
}

}  // namespace

std::vector<std::uint32_t> all_ids(std::size_t count) {
  std::vector<std::uint32_t> ids(count);
  std::iota(ids.begin(), ids.end(), 0u);
  return ids;
}

Coverage build_coverage(const BallOracle& oracle, const OrbitBank& candidates,
                        const OrbitBank& universe, unsigned threads) {
  const auto c = all_ids(candidates.size());
  if (&candidates == &universe) return build_coverage(oracle, candidates, c, universe, c, threads);
  const auto u = all_ids(universe.size());
  return build_coverage(oracle, candidates, c, universe, u, threads);
}

Coverage build_coverage(const BallOracle& oracle, const OrbitBank& candidates,
                        std::span<const std::uint32_t> candidate_ids,
                        const OrbitBank& universe,
                        std::span<const std::uint32_t> universe_ids, unsigned threads) {
  check_oracle(oracle);
  const std::size_t len = bank_length(oracle);
  Coverage cov;
  cov.universe_size = universe_ids.size();
  cov.sets.resize(candidate_ids.size());

  const bool same = &candidates == &universe && candidate_ids.size() == universe_ids.size() &&
                    std::equal(candidate_ids.begin(), candidate_ids.end(), universe_ids.begin());
  if (!same) {
    parallel_for(candidate_ids.size(), threads, [&](std::size_t c) {
      const auto center = candidates.orbit(candidate_ids[c], len);
      auto& set = cov.sets[c];
      for (std::size_t u = 0; u < universe_ids.size(); ++u)
        if (oracle.contains(center, universe.orbit(universe_ids[u], len)))
          set.push_back(static_cast<std::uint32_t>(u));
    });
    return cov;
  }

  // Every ball kind is symmetric: test j >= i once, then mirror.
  const std::size_t m = candidate_ids.size();
  std::vector<std::vector<std::uint32_t>> upper(m);
  parallel_for(m, threads, [&](std::size_t i) {
    const auto a = candidates.orbit(candidate_ids[i], len);
    for (std::size_t j = i; j < m; ++j)
      if (oracle.contains(a, candidates.orbit(candidate_ids[j], len)))
        upper[i].push_back(static_cast<std::uint32_t>(j));
  });
  for (std::size_t i = 0; i < m; ++i) {
    for (std::uint32_t j : upper[i]) {
      cov.sets[i].push_back(j);
      if (j != i) cov.sets[j].push_back(static_cast<std::uint32_t>(i));
    }
    std::vector<std::uint32_t>().swap(upper[i]);
  }
  return cov;
}

double ball_radius(const BallOracle& shape, std::span<const Point> center,
                   std::span<const Point> y, double cap) {
  const SystemSpec& sys = *shape.system;
  if (shape.kind == MetricKind::Base) return evaluate_metric(sys, center[0], y[0]);
  const std::size_t n = shape.n;
  switch (shape.kind) {
    case MetricKind::Bowen: {
      double m = 0.0;
      for (std::size_t i = 0; i < n && m < cap; ++i)
        m = std::max(m, evaluate_metric(sys, center[i], y[i]));
      return m;
    }
    case MetricKind::Mean: {
      const double nd = static_cast<double>(n);
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        s += evaluate_metric(sys, center[i], y[i]);
        if (s / nd >= cap) break;
      }
      return s / nd;
    }
    case MetricKind::Mistake: {
      // The ball ignores up to g(n) times, so the radius is the
      // (g(n) + 1)-th largest distance along the orbit.
      const std::size_t skip = shape.mistake(n);
      if (skip >= n) return 0.0;
      std::vector<double> d(n);
      std::size_t over = 0;
      for (std::size_t i = 0; i < n; ++i) {
        d[i] = evaluate_metric(sys, center[i], y[i]);
        if (d[i] >= cap && ++over > skip) return d[i];
      }
      std::nth_element(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(skip), d.end(),
                       std::greater<>());
      return d[skip];
    }
    case MetricKind::FK: {
      if (std::isfinite(cap) && !fk_within(sys, center.first(n), y.first(n), cap)) return cap;
      std::vector<double> e(n * n);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) e[i * n + j] = evaluate_metric(sys, center[i], y[j]);
      return fk_distance(DistanceMatrix(n, std::move(e)));
    }
    case MetricKind::Base: break;
  }
  return evaluate_metric(sys, center[0], y[0]);
}

namespace {

// Lower bounds on orbit distances from distances to a few pivot points:
// |d(a, p) - d(b, p)| <= d(a, b). Used to skip pairs that cannot lie within
// the largest radius.
class PivotFilter {
 public:
  PivotFilter(const BallOracle& shape, const OrbitBank& bank, std::size_t m,
              std::size_t len, double cap)
      : len_(len), cap_(cap) {
    const SystemSpec& sys = *shape.system;
    std::vector<Point> pivots{bank.orbit(0, 1)[0]};
    std::vector<double> nearest(m, std::numeric_limits<double>::infinity());
    while (pivots.size() < kPivots && m > 0) {
      std::size_t far = 0;
      for (std::size_t i = 0; i < m; ++i) {
        nearest[i] = std::min(nearest[i], evaluate_metric(sys, bank.orbit(i, 1)[0], pivots.back()));
        if (nearest[i] > nearest[far]) far = i;
      }
      if (!(nearest[far] > 0.0)) break;
      pivots.push_back(bank.orbit(far, 1)[0]);
    }
    np_ = pivots.size();
    keys_.resize(m * len * np_);
    for (std::size_t i = 0; i < m; ++i) {
      const auto o = bank.orbit(i, len);
      for (std::size_t j = 0; j < len; ++j)
        for (std::size_t q = 0; q < np_; ++q)
          keys_[(i * len + j) * np_ + q] = evaluate_metric(sys, o[j], pivots[q]);
    }
    const std::size_t n = shape.kind == MetricKind::Base ? 1 : shape.n;
    const double nd = static_cast<double>(n);
    kind_ = shape.kind;
    skip_ = shape.kind == MetricKind::Mistake ? shape.mistake(n) : 0;
    disabled_ = kind_ == MetricKind::FK && !(nd * cap < 1.0);
    // A pair within the cap has distance below `reach_` at one of the
    // times [0, times_).
    times_ = 1;
    switch (shape.kind) {
      case MetricKind::Base:
      case MetricKind::Bowen: reach_ = cap; break;
      case MetricKind::FK: reach_ = disabled_ ? kInf : cap; break;
      case MetricKind::Mean: reach_ = nd * cap; break;
      case MetricKind::Mistake:
        reach_ = skip_ < len_ ? cap : kInf;
        times_ = std::min(skip_ + 1, len_);
        break;
    }
    orders_.resize(times_);
    sorted_.resize(times_);
    for (std::size_t t = 0; t < times_; ++t) {
      auto& order = orders_[t];
      order.resize(m);
      std::iota(order.begin(), order.end(), 0u);
      std::stable_sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
        return key(a, t, 0) < key(b, t, 0);
      });
      sorted_[t].resize(m);
      for (std::size_t k = 0; k < m; ++k) sorted_[t][k] = key(order[k], t, 0);
    }
  }

  // Calls visit(j) once for every bank entry j that may lie within the cap
  // of entry i.
  template <class Visit>
  void for_each_partner(std::size_t i, Visit&& visit) const {
    const std::size_t m = sorted_[0].size();
    if (!std::isfinite(reach_)) {
      for (std::size_t j = 0; j < m; ++j) visit(j);
      return;
    }
    const double r = reach_ + kSlack;
    auto near = [&](std::size_t j, std::size_t t) {
      return std::fabs(key(i, t, 0) - key(j, t, 0)) <= r;
    };
    for (std::size_t t = 0; t < times_; ++t) {
      // The search range is widened; `near` decides membership.
      const double k = key(i, t, 0), w = 2.0 * r;
      const auto& sorted = sorted_[t];
      const auto lo = std::lower_bound(sorted.begin(), sorted.end(), k - w) - sorted.begin();
      const auto hi = std::upper_bound(sorted.begin(), sorted.end(), k + w) - sorted.begin();
      for (auto pos = lo; pos < hi; ++pos) {
        const std::size_t j = orders_[t][static_cast<std::size_t>(pos)];
        if (!near(j, t)) continue;
        bool seen = false;
        for (std::size_t u = 0; u < t && !seen; ++u) seen = near(j, u);
        if (!seen) visit(j);
      }
    }
  }

  // True when the pair's ball radius is certainly >= cap.
  bool excluded(std::size_t a, std::size_t b, std::vector<double>& lb) const {
    if (disabled_) return false;
    lb.assign(len_, 0.0);
    for (std::size_t j = 0; j < len_; ++j)
      for (std::size_t q = 0; q < np_; ++q)
        lb[j] = std::max(lb[j], std::fabs(key(a, j, q) - key(b, j, q)));
    double r = 0.0;
    switch (kind_) {
      case MetricKind::Base: r = lb[0]; break;
      case MetricKind::FK:
      case MetricKind::Bowen: r = *std::max_element(lb.begin(), lb.end()); break;
      case MetricKind::Mean: {
        double s = 0.0;
        for (double v : lb) s += v;
        r = s / static_cast<double>(len_);
        break;
      }
      case MetricKind::Mistake:
        if (skip_ >= len_) return false;
        std::nth_element(lb.begin(), lb.begin() + static_cast<std::ptrdiff_t>(skip_), lb.end(),
                         std::greater<>());
        r = lb[skip_];
        break;
    }
    return r - kSlack >= cap_;
  }

 private:
  static constexpr std::size_t kPivots = 3;
  static constexpr double kInf = std::numeric_limits<double>::infinity();
  static constexpr double kSlack = 1e-12;  // covers rounding in the keys

  double key(std::size_t i, std::size_t j, std::size_t q) const {
    return keys_[(i * len_ + j) * np_ + q];
  }

  std::size_t len_ = 1, np_ = 1, skip_ = 0, times_ = 1;
  double cap_ = 0.0, reach_ = kInf;
  MetricKind kind_ = MetricKind::Base;
  bool disabled_ = false;
  std::vector<double> keys_;
  std::vector<std::vector<std::uint32_t>> orders_;  // per time, by pivot-0 key
  std::vector<std::vector<double>> sorted_;
};

}  // namespace

std::vector<Coverage> build_coverages(const BallOracle& shape, std::span<const double> eps,
                                      const OrbitBank& bank,
                                      std::span<const std::size_t> sizes, unsigned threads) {
  if (!shape.system) throw ValidationError("system", "ball oracle has no system");
  if (shape.n == 0) throw ValidationError("n", "must be >= 1");
  if (eps.size() != sizes.size())
    throw ValidationError("sizes", "needs one universe size per radius");
  double cap = 0.0;
  std::size_t m = 0;
  for (std::size_t e = 0; e < eps.size(); ++e) {
    if (!(eps[e] > 0.0)) throw ValidationError("epsilon", "must be > 0");
    if (sizes[e] > bank.size()) throw ValidationError("sizes", "exceeds the bank size");
    cap = std::max(cap, eps[e]);
    m = std::max(m, sizes[e]);
  }
  const std::size_t len = shape.kind == MetricKind::Base ? 1 : shape.n;
  const std::size_t ne = eps.size();
  const PivotFilter filter(shape, bank, m, len, cap);
  // Below 1/n an FK ball needs a full match, which is the Bowen ball.
  BallOracle radius_shape = shape;
  if (shape.kind == MetricKind::FK && static_cast<double>(len) * cap < 1.0)
    radius_shape.kind = MetricKind::Bowen;

  // upper[e][i]: members j >= i of ball i at entry e.
  std::vector<std::vector<std::vector<std::uint32_t>>> upper(
      ne, std::vector<std::vector<std::uint32_t>>(m));
  parallel_for(m, threads, [&](std::size_t i) {
    const auto a = bank.orbit(i, len);
    std::vector<double> lb;
    filter.for_each_partner(i, [&](std::size_t j) {
      if (j < i || (j != i && filter.excluded(i, j, lb))) return;
      const double r = ball_radius(radius_shape, a, bank.orbit(j, len), cap);
      if (!(r < cap)) return;
      for (std::size_t e = 0; e < ne; ++e)
        if (j < sizes[e] && r < eps[e]) upper[e][i].push_back(static_cast<std::uint32_t>(j));
    });
    for (auto& u : upper) std::sort(u[i].begin(), u[i].end());
  });

  std::vector<Coverage> out(ne);
  for (std::size_t e = 0; e < ne; ++e) {
    Coverage& cov = out[e];
    cov.universe_size = sizes[e];
    cov.sets.resize(sizes[e]);
    for (std::size_t i = 0; i < sizes[e]; ++i) {
      for (std::uint32_t j : upper[e][i]) {
        cov.sets[i].push_back(j);
        if (j != i) cov.sets[j].push_back(static_cast<std::uint32_t>(i));
      }
      std::vector<std::uint32_t>().swap(upper[e][i]);
    }
  }
  return out;
}

std::string to_string(CoverMethod m) {
  return m == CoverMethod::Exact ? "exact" : "greedy";
}

namespace {

// ---------------------------------------------------------------------------
// Bounds

// Smallest t with the t largest gains summing to at least `need`.
std::size_t top_gain_bound(std::vector<std::size_t> gains, std::size_t need) {
  if (need == 0) return 0;
  std::sort(gains.begin(), gains.end(), std::greater<>());
  std::size_t sum = 0;
  for (std::size_t t = 0; t < gains.size(); ++t) {
    sum += gains[t];
    if (sum >= need) return t + 1;
  }
  return gains.size() + 1;
}

std::vector<std::vector<std::uint32_t>> inverse_index(const Coverage& cov) {
  std::vector<std::vector<std::uint32_t>> inv(cov.universe_size);
  for (std::size_t c = 0; c < cov.sets.size(); ++c)
    for (std::uint32_t u : cov.sets[c]) inv[u].push_back(static_cast<std::uint32_t>(c));
  return inv;
}

// Points no two of which share a candidate ball; each center covers at most
// one, so a cover of `required` points needs >= packed - (U - required).
std::size_t packing_bound(const Coverage& cov,
                          const std::vector<std::vector<std::uint32_t>>& inv,
                          std::size_t required) {
  std::vector<char> used(cov.sets.size(), 0);
  std::size_t packed = 0;
  for (std::size_t u = 0; u < cov.universe_size; ++u) {
    bool free = true;
    for (std::uint32_t c : inv[u])
      if (used[c]) { free = false; break; }
    if (!free) continue;
    ++packed;
    for (std::uint32_t c : inv[u]) used[c] = 1;
  }
  const std::size_t slack = cov.universe_size - required;
  return packed > slack ? packed - slack : 0;
}

std::size_t lower_bound_for(const Coverage& cov,
                            const std::vector<std::vector<std::uint32_t>>& inv,
                            std::size_t required) {
  std::vector<std::size_t> sizes;
  sizes.reserve(cov.sets.size());
  for (const auto& s : cov.sets) sizes.push_back(s.size());
  return std::max(top_gain_bound(std::move(sizes), required),
                  packing_bound(cov, inv, required));
}

// ---------------------------------------------------------------------------
// Greedy

GreedyTrace greedy_run(const Coverage& cov,
                       const std::vector<std::vector<std::uint32_t>>& inv,
                       std::size_t required) {
  std::vector<std::size_t> gain(cov.sets.size());
  for (std::size_t c = 0; c < cov.sets.size(); ++c) gain[c] = cov.sets[c].size();
  std::vector<char> covered(cov.universe_size, 0);
  std::size_t count = 0;
  GreedyTrace t;
  while (count < required && !gain.empty()) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < gain.size(); ++c)
      if (gain[c] > gain[best]) best = c;
    if (gain[best] == 0) break;
    t.centers.push_back(best);
    for (std::uint32_t u : cov.sets[best]) {
      if (covered[u]) continue;
      covered[u] = 1;
      ++count;
      for (std::uint32_t c : inv[u]) --gain[c];
    }
    t.covered.push_back(count);
  }
  return t;
}

CoverResult greedy_cover(const Coverage& cov,
                         const std::vector<std::vector<std::uint32_t>>& inv,
                         std::size_t required) {
  GreedyTrace t = greedy_run(cov, inv, required);
  CoverResult r;
  r.centers = std::move(t.centers);
  r.cardinality = r.centers.size();
  r.method = CoverMethod::Greedy;
  return r;
}

// ---------------------------------------------------------------------------
// Exact branch and bound on bitsets

class Bits {
 public:
  explicit Bits(std::size_t n = 0) : w_((n + 63) / 64, 0) {}
  void set(std::size_t i) { w_[i >> 6] |= std::uint64_t{1} << (i & 63); }
  bool test(std::size_t i) const { return (w_[i >> 6] >> (i & 63)) & 1u; }
  std::size_t count() const {
    std::size_t s = 0;
    for (auto v : w_) s += static_cast<std::size_t>(std::popcount(v));
    return s;
  }
  // |this \ other|
  std::size_t count_minus(const Bits& other) const {
    std::size_t s = 0;
    for (std::size_t k = 0; k < w_.size(); ++k)
      s += static_cast<std::size_t>(std::popcount(w_[k] & ~other.w_[k]));
    return s;
  }
  bool subset_of(const Bits& other) const {
    for (std::size_t k = 0; k < w_.size(); ++k)
      if (w_[k] & ~other.w_[k]) return false;
    return true;
  }
  bool operator==(const Bits&) const = default;
  Bits& operator|=(const Bits& o) {
    for (std::size_t k = 0; k < w_.size(); ++k) w_[k] |= o.w_[k];
    return *this;
  }

 private:
  std::vector<std::uint64_t> w_;
};

class ExactSolver {
 public:
  ExactSolver(const Coverage& cov, std::size_t required, std::vector<std::size_t> incumbent)
      : universe_(cov.universe_size), required_(required), best_(std::move(incumbent)) {
    // Dominance: drop candidates whose set is inside a kept one. Scanning by
    // size (then index) keeps the lowest index among equal sets.
    std::vector<std::size_t> order(cov.sets.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return cov.sets[a].size() > cov.sets[b].size();
    });
    for (std::size_t c : order) {
      if (cov.sets[c].empty()) continue;
      Bits b(universe_);
      for (auto u : cov.sets[c]) b.set(u);
      bool dominated = false;
      for (const Bits& k : sets_)
        if (b.subset_of(k)) { dominated = true; break; }
      if (dominated) continue;
      sets_.push_back(std::move(b));
      ids_.push_back(c);
    }
    holders_.resize(universe_);
    for (std::size_t k = 0; k < sets_.size(); ++k)
      for (std::size_t u = 0; u < universe_; ++u)
        if (sets_[k].test(u)) holders_[u].push_back(k);
  }

  /// False when the node budget ran out before optimality was proved.
  bool solve(std::size_t node_budget) {
    budget_ = node_budget;
    std::vector<std::size_t> chosen;
    Bits covered(universe_);
    std::vector<char> excluded(sets_.size(), 0);
    if (required_ == universe_)
      full_dfs(covered, chosen);
    else
      partial_dfs(covered, chosen, excluded);
    return !aborted_;
  }

  const std::vector<std::size_t>& best() const { return best_; }

 private:
  bool tick() {
    if (nodes_++ >= budget_) aborted_ = true;
    return !aborted_;
  }

  std::size_t bound(const Bits& covered, std::size_t have,
                    const std::vector<char>* excluded) const {
    std::vector<std::size_t> gains;
    gains.reserve(sets_.size());
    for (std::size_t k = 0; k < sets_.size(); ++k)
      if (!excluded || !(*excluded)[k]) gains.push_back(sets_[k].count_minus(covered));
    return top_gain_bound(std::move(gains), required_ - have);
  }

  void record(const std::vector<std::size_t>& chosen) {
    best_.clear();
    for (std::size_t k : chosen) best_.push_back(ids_[k]);
  }

  // Some chosen set must hold the uncovered point with fewest holders.
  void full_dfs(Bits& covered, std::vector<std::size_t>& chosen) {
    if (!tick()) return;
    const std::size_t have = covered.count();
    if (have >= required_) {
      if (chosen.size() < best_.size()) record(chosen);
      return;
    }
    if (chosen.size() + bound(covered, have, nullptr) >= best_.size()) return;
    std::size_t pivot = universe_, fewest = SIZE_MAX;
    for (std::size_t u = 0; u < universe_; ++u) {
      if (covered.test(u)) continue;
      if (holders_[u].size() < fewest) {
        fewest = holders_[u].size();
        pivot = u;
      }
    }
    std::vector<std::pair<std::size_t, std::size_t>> branch;  // (gain, k)
    for (std::size_t k : holders_[pivot]) branch.emplace_back(sets_[k].count_minus(covered), k);
    std::stable_sort(branch.begin(), branch.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (const auto& [g, k] : branch) {
      Bits next = covered;
      next |= sets_[k];
      chosen.push_back(k);
      full_dfs(next, chosen);
      chosen.pop_back();
      if (aborted_) return;
    }
  }

  // Include or exclude the remaining candidate of largest gain.
  void partial_dfs(Bits& covered, std::vector<std::size_t>& chosen,
                   std::vector<char>& excluded) {
    if (!tick()) return;
    const std::size_t have = covered.count();
    if (have >= required_) {
      if (chosen.size() < best_.size()) record(chosen);
      return;
    }
    if (chosen.size() + bound(covered, have, &excluded) >= best_.size()) return;
    std::size_t pick = sets_.size(), top = 0;
    for (std::size_t k = 0; k < sets_.size(); ++k) {
      if (excluded[k]) continue;
      const std::size_t g = sets_[k].count_minus(covered);
      if (g > top) {
        top = g;
        pick = k;
      }
    }
    if (pick == sets_.size()) return;
    excluded[pick] = 1;
    {
      Bits next = covered;
      next |= sets_[pick];
      chosen.push_back(pick);
      partial_dfs(next, chosen, excluded);
      chosen.pop_back();
    }
    if (!aborted_) partial_dfs(covered, chosen, excluded);
    excluded[pick] = 0;
  }

  std::size_t universe_;
  std::size_t required_;
  std::vector<Bits> sets_;
  std::vector<std::size_t> ids_;
  std::vector<std::vector<std::size_t>> holders_;
  std::vector<std::size_t> best_;
  std::size_t nodes_ = 0;
  std::size_t budget_ = 0;
  bool aborted_ = false;
};

constexpr std::size_t kNodeBudget = 20'000'000;

void check_feasible(const Coverage& cov,
                    const std::vector<std::vector<std::uint32_t>>& inv,
                    std::size_t required) {
  std::size_t reachable = 0;
  std::size_t orphan = cov.universe_size;
  for (std::size_t u = 0; u < cov.universe_size; ++u) {
    if (!inv[u].empty()) ++reachable;
    else if (orphan == cov.universe_size) orphan = u;
  }
  if (reachable >= required) return;
  throw InfeasibleCoverError(
      orphan, "universe point " + std::to_string(orphan) +
                  " lies in no candidate ball; " + std::to_string(reachable) + " of " +
                  std::to_string(cov.universe_size) + " points are coverable, " +
                  std::to_string(required) + " required");
}

}  // namespace

std::size_t GreedyTrace::steps_for(std::size_t required) const {
  if (required == 0) return 0;
  auto it = std::lower_bound(covered.begin(), covered.end(), required);
  if (it == covered.end())
    throw InfeasibleCoverError(0, "greedy trace never reaches " + std::to_string(required) +
                                      " points");
  return static_cast<std::size_t>(it - covered.begin()) + 1;
}

GreedyTrace greedy_trace(const Coverage& cov) {
  return greedy_run(cov, inverse_index(cov), cov.universe_size);
}

CoverResult cover_at_least(const Coverage& cov, std::size_t required, CoverMode mode,
                           const CoverLimits& limits) {
  if (cov.universe_size == 0) throw ValidationError("universe", "must be non-empty");
  if (required == 0 || required > cov.universe_size)
    throw ValidationError("required", "must lie in [1, universe size]");
  const auto inv = inverse_index(cov);
  check_feasible(cov, inv, required);

  if (mode == CoverMode::Exact && cov.universe_size > limits.exact_universe_cap &&
      cov.sets.size() > limits.exact_candidate_cap)
    throw ValidationError("cover.mode",
                          "exact covers need universe or candidate count within the cap");

  CoverResult greedy = greedy_cover(cov, inv, required);
  const std::size_t lb = lower_bound_for(cov, inv, required);
  greedy.lower_bound = std::min(lb, greedy.cardinality);

  if (mode == CoverMode::Greedy || greedy.lower_bound == greedy.cardinality) {
    if (greedy.lower_bound == greedy.cardinality) greedy.method = CoverMethod::Exact;
    return greedy;
  }
  ExactSolver solver(cov, required, greedy.centers);
  if (!solver.solve(kNodeBudget)) return greedy;
  CoverResult r;
  r.centers = solver.best();
  std::sort(r.centers.begin(), r.centers.end());
  r.cardinality = r.centers.size();
  r.lower_bound = r.cardinality;
  r.method = CoverMethod::Exact;
  return r;
}

CoverResult spanning_number(const Coverage& cov, CoverMode mode, const CoverLimits& limits) {
  return cover_at_least(cov, cov.universe_size, mode, limits);
}

std::size_t partial_cover_threshold(std::size_t universe_size, double delta) {
  if (!(delta > 0.0 && delta < 1.0)) throw ValidationError("delta", "must lie in (0, 1)");
  const long double target = (1.0L - static_cast<long double>(delta)) *
                             static_cast<long double>(universe_size);
  const auto need = static_cast<std::size_t>(std::floor(target)) + 1;
  return std::min(need, universe_size);
}

CoverResult partial_cover_number(const Coverage& cov, double delta, CoverMode mode,
                                 const CoverLimits& limits) {
  return cover_at_least(cov, partial_cover_threshold(cov.universe_size, delta), mode, limits);
}

namespace {

Coverage coverage_for(const SampleSet& universe, const SampleSet& candidates,
                      const BallOracle& oracle) {
  check_oracle(oracle);
  const std::size_t len = bank_length(oracle);
  OrbitBank u(*oracle.system, universe.points, len);
  OrbitBank c(*oracle.system, candidates.points, len);
  return build_coverage(oracle, c, u);
}

}  // namespace

CoverResult spanning_number(const SampleSet& universe, const SampleSet& candidates,
                            const BallOracle& oracle, CoverMode mode,
                            const CoverLimits& limits) {
  return spanning_number(coverage_for(universe, candidates, oracle), mode, limits);
}

CoverResult partial_cover_number(const SampleSet& universe, const SampleSet& candidates,
                                 const BallOracle& oracle, double delta, CoverMode mode,
                                 const CoverLimits& limits) {
  return partial_cover_number(coverage_for(universe, candidates, oracle), delta, mode,
                              limits);
}

std::size_t separated_number(const BallOracle& oracle, const OrbitBank& sample) {
  check_oracle(oracle);
  if (sample.size() == 0) throw ValidationError("sample", "must be non-empty");
  const std::size_t len = bank_length(oracle);
  std::vector<std::size_t> kept;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const auto y = sample.orbit(i, len);
    bool far = true;
    for (std::size_t k : kept)
      if (oracle.contains(sample.orbit(k, len), y)) { far = false; break; }
    if (far) kept.push_back(i);
  }
  return kept.size();
}

std::size_t separated_number(const SampleSet& sample, const BallOracle& oracle) {
  check_oracle(oracle);
  return separated_number(oracle, OrbitBank(*oracle.system, sample.points, bank_length(oracle)));
}

// ---------------------------------------------------------------------------
// Base space

namespace {

// Open eps-balls needed for [0,1] or the unit circle: the least m with
// m * 2 eps > 1.
std::size_t interval_count(double eps) {
  const long double w = 2.0L * static_cast<long double>(eps);
  const long double guess = std::floor(1.0L / w) + 1.0L;
  if (guess > 1e15L) throw ValidationError("epsilon", "too small for a covering count");
  auto m = static_cast<std::size_t>(guess);
  while (m > 1 && static_cast<long double>(m - 1) * w > 1.0L) --m;
  while (static_cast<long double>(m) * w <= 1.0L) ++m;
  return m;
}

std::optional<std::size_t> closed_form_count(const SystemSpec& sys, double eps) {
  if (std::holds_alternative<DoublingMap>(sys.kind) ||
      std::holds_alternative<TentMap>(sys.kind) ||
      std::holds_alternative<IdentityMap>(sys.kind))
    return interval_count(eps);
  if (const auto* p = std::get_if<ProductSystem>(&sys.kind); p && p->combiner == Combiner::Max) {
    auto l = closed_form_count(*p->left, eps);
    auto r = closed_form_count(*p->right, eps);
    if (l && r) return *l * *r;
  }
  return std::nullopt;
}

bool is_interval(const SystemSpec& sys) {
  return std::holds_alternative<DoublingMap>(sys.kind) ||
         std::holds_alternative<TentMap>(sys.kind) ||
         std::holds_alternative<IdentityMap>(sys.kind);
}

}  // namespace

CoverResult base_covering_number(const SystemSpec& sys, double eps,
                                 const BaseCoverOptions& opts) {
  if (!(eps > 0.0)) throw ValidationError("epsilon", "must be > 0");
  validate(sys);
  if (auto n = closed_form_count(sys, eps)) {
    CoverResult r;
    r.cardinality = *n;
    r.lower_bound = *n;
    r.method = CoverMethod::Exact;
    return r;
  }
  SampleSet s = sample_points(sys, opts.sample_count, opts.seed, opts.params);
  BallOracle oracle;
  oracle.kind = MetricKind::Base;
  oracle.eps = eps;
  oracle.system = s.system;
  CoverResult r = spanning_number(s, s, oracle, CoverMode::Greedy);
  return r;
}

SmallDiameterCover small_diameter_cover(const SystemSpec& sys, double eps,
                                        std::span<const Point> sample,
                                        std::span<const Point> probes) {
  if (!(eps > 0.0)) throw ValidationError("epsilon", "must be > 0");
  if (sample.empty()) throw ValidationError("sample", "must be non-empty");
  validate(sys);
  for (const Point& p : sample) check_point(sys, p);
  const double quarter = eps / 4.0;

  // Every point of the space within quarter (closed) of the sample.
  if (is_interval(sys)) {
    std::vector<double> v;
    for (const Point& p : sample) v.push_back(std::get<Scalar>(p.value).value);
    std::sort(v.begin(), v.end());
    const bool circle = std::holds_alternative<DoublingMap>(sys.kind);
    bool dense = true;
    for (std::size_t i = 1; i < v.size(); ++i)
      if (v[i] - v[i - 1] > 2.0 * quarter) dense = false;
    if (circle) {
      if (1.0 - v.back() + v.front() > 2.0 * quarter) dense = false;
    } else if (v.front() > quarter || 1.0 - v.back() > quarter) {
      dense = false;
    }
    if (!dense)
      throw ValidationError("sample", "not eps/4-dense in the space");
  } else {
    for (std::size_t k = 0; k < probes.size(); ++k) {
      bool near = false;
      for (const Point& s : sample)
        if (evaluate_metric(sys, s, probes[k]) <= quarter) { near = true; break; }
      if (!near)
        throw ValidationError("sample", "probe " + std::to_string(k) +
                                            " is farther than eps/4 from the sample");
    }
  }

  SmallDiameterCover out;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    bool covered = false;
    for (const Point& c : out.centers)
      if (metric_below(sys, c, sample[i], quarter)) { covered = true; break; }
    if (covered) continue;
    out.centers.push_back(sample[i]);
    out.center_indices.push_back(i);
  }
  out.spanning_radius = quarter;
  out.cover_radius = eps / 2.0;
  out.diameter_bound = eps;
  out.lebesgue_bound = quarter;
  return out;
}

TameGrowthReport tame_growth_diagnostic(const SystemSpec& sys, double theta,
                                        std::span<const double> eps_grid,
                                        const BaseCoverOptions& opts) {
  if (!(theta > 0.0)) throw ValidationError("theta", "must be > 0");
  for (std::size_t i = 0; i < eps_grid.size(); ++i) {
    if (!(eps_grid[i] > 0.0)) throw ValidationError("epsilons", "must be > 0");
    if (i > 0 && !(eps_grid[i] < eps_grid[i - 1]))
      throw ValidationError("epsilons", "must be strictly decreasing");
  }
  TameGrowthReport rep;
  rep.theta = theta;
  for (double e : eps_grid) {
    const CoverResult c = base_covering_number(sys, e, opts);
    TameGrowthRow row;
    row.eps = e;
    row.count = c.cardinality;
    row.method = c.method;
    row.product = std::pow(e, theta) * std::log(static_cast<double>(c.cardinality));
    rep.rows.push_back(row);
  }
  const auto& r = rep.rows;
  rep.decreasing_tail = r.size() >= 3 && r[r.size() - 3].product > r[r.size() - 2].product &&
                        r[r.size() - 2].product > r[r.size() - 1].product;
  return rep;
}

}  // namespace fkdim
