#include "fkdim/orbit_metrics.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <limits>

#include "fkdim/errors.hpp"

namespace fkdim {

DistanceMatrix::DistanceMatrix(std::size_t n, std::vector<double> entries)
    : n_(n), entries_(std::move(entries)) {
  if (entries_.size() != n_ * n_)
    throw ValidationError("distance_matrix", "entry count is not n*n");
}

DistanceMatrix DistanceMatrix::transposed() const {
  std::vector<double> t(entries_.size());
  for (std::size_t i = 0; i < n_; ++i)
    for (std::size_t j = 0; j < n_; ++j) t[j * n_ + i] = entries_[i * n_ + j];
  return DistanceMatrix(n_, std::move(t));
}

DistanceMatrix distance_matrix(const SystemSpec& sys, const OrbitSegment& a,
                               const OrbitSegment& b) {
  if (a.size() != b.size())
    throw ValidationError("distance_matrix", "orbit segments differ in length");
  const std::size_t n = a.size();
  std::vector<double> e(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      e[i * n + j] = evaluate_metric(sys, a.points[i], b.points[j]);
  return DistanceMatrix(n, std::move(e));
}

DistanceMatrix line_distance_matrix(std::span<const double> a,
                                    std::span<const double> b) {
  if (a.size() != b.size())
    throw ValidationError("distance_matrix", "sequences differ in length");
  const std::size_t n = a.size();
  std::vector<double> e(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) e[i * n + j] = std::fabs(a[i] - b[j]);
  return DistanceMatrix(n, std::move(e));
}

double fbar_value(std::size_t match_size, std::size_t n) {
  return 1.0 - static_cast<double>(match_size) / static_cast<double>(n);
}

namespace {

// LCS length over the predicate admissible(i, j), two rows.
template <class Adm>
std::size_t lcs_length(std::size_t n, Adm&& admissible) {
  std::vector<std::uint32_t> prev(n + 1, 0), cur(n + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    cur[0] = 0;
    for (std::size_t j = 1; j <= n; ++j) {
      if (admissible(i - 1, j - 1)) {
        cur[j] = prev[j - 1] + 1;
      } else {
        cur[j] = std::max(prev[j], cur[j - 1]);
      }
    }
    std::swap(prev, cur);
  }
  return prev[n];
}

std::size_t match_size_at_or_below(const DistanceMatrix& d, double level) {
  const auto& e = d.entries();
  const std::size_t n = d.n();
  return lcs_length(n, [&](std::size_t i, std::size_t j) { return e[i * n + j] <= level; });
}

}  // namespace

MatchOutcome max_match_size(const DistanceMatrix& d, double delta,
                            bool want_witness) {
  const std::size_t n = d.n();
  MatchOutcome out;
  if (n == 0) {
    out.fbar = 0.0;
    return out;
  }
  const auto& e = d.entries();
  auto adm = [&](std::size_t i, std::size_t j) { return e[i * n + j] < delta; };

  if (!want_witness) {
    out.size = lcs_length(n, adm);
    out.fbar = fbar_value(out.size, n);
    return out;
  }

  // suffix[i][j] = best match using rows >= i and columns >= j.
  const std::size_t w = n + 1;
  std::vector<std::uint32_t> suffix(w * w, 0);
  for (std::size_t i = n; i-- > 0;) {
    for (std::size_t j = n; j-- > 0;) {
      std::uint32_t best = std::max(suffix[(i + 1) * w + j], suffix[i * w + j + 1]);
      if (adm(i, j)) best = std::max(best, suffix[(i + 1) * w + j + 1] + 1);
      suffix[i * w + j] = best;
    }
  }
  out.size = suffix[0];
  out.fbar = fbar_value(out.size, n);

  std::vector<MatchPair> pairs;
  std::size_t i = 0, j = 0;
  while (i < n && j < n && suffix[i * w + j] > 0) {
    const std::uint32_t need = suffix[i * w + j];
    // Row i is skipped when no optimal match uses it.
    for (std::size_t k = j; k < n; ++k) {
      if (adm(i, k) && suffix[(i + 1) * w + k + 1] + 1 == need) {
        pairs.push_back({i, k});
        j = k + 1;
        break;
      }
    }
    ++i;
  }
  out.witness = std::move(pairs);
  return out;
}

namespace {

struct Breakpoints {
  std::vector<double> b;  // b[0] = 0, b[1..m] = sorted distinct entries
};

Breakpoints breakpoints(const DistanceMatrix& d) {
  std::vector<double> v = d.entries();
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  Breakpoints bp;
  bp.b.reserve(v.size() + 1);
  bp.b.push_back(0.0);
  bp.b.insert(bp.b.end(), v.begin(), v.end());
  return bp;
}

}  // namespace

double fk_distance(const DistanceMatrix& d) {
  const std::size_t n = d.n();
  if (n == 0) return 0.0;
  const Breakpoints bp = breakpoints(d);
  const std::size_t m = bp.b.size() - 1;
  constexpr double inf = std::numeric_limits<double>::infinity();
  auto upper = [&](std::size_t k) { return k + 1 <= m ? bp.b[k + 1] : inf; };

  // On the interval (b_k, b_{k+1}] the admissible pairs are the entries
  // <= b_k. works(k): that interval holds some delta with fbar < delta.
  // The set of working deltas is an up-set, so works() is monotone in k.
  auto g = [&](std::size_t k) { return fbar_value(match_size_at_or_below(d, bp.b[k]), n); };
  auto works = [&](std::size_t k, double gk) {
    const double lo = bp.b[k], hi = upper(k);
    return lo < hi && gk < hi;
  };

  std::size_t lo = 0, hi = m;  // works(m) always holds
  while (lo < hi) {
    const std::size_t mid = lo + (hi - lo) / 2;
    if (works(mid, g(mid))) hi = mid;
    else lo = mid + 1;
  }
  return std::min(std::max(bp.b[hi], g(hi)), 1.0);
}

double fk_distance_bisect(const DistanceMatrix& d, double tol) {
  const std::size_t n = d.n();
  if (n == 0) return 0.0;
  auto works = [&](double delta) {
    return max_match_size(d, delta).fbar < delta;
  };
  double lo = 0.0, hi = 1.0 + tol;
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (works(mid)) hi = mid;
    else lo = mid;
  }
  return std::min(hi, 1.0);
}

double bowen_distance(const DistanceMatrix& d) {
  double m = 0.0;
  for (std::size_t i = 0; i < d.n(); ++i) m = std::max(m, d(i, i));
  return m;
}

double mean_distance(const DistanceMatrix& d) {
  if (d.n() == 0) return 0.0;
  double s = 0.0;
  for (std::size_t i = 0; i < d.n(); ++i) s += d(i, i);
  return s / static_cast<double>(d.n());
}

std::vector<MatchProfileRow> match_profile(const DistanceMatrix& d) {
  std::vector<MatchProfileRow> rows;
  const std::size_t n = d.n();
  if (n == 0) return rows;
  const Breakpoints bp = breakpoints(d);
  const std::size_t m = bp.b.size() - 1;
  for (std::size_t k = 0; k <= m; ++k) {
    const double lo = bp.b[k];
    const double hi = k < m ? bp.b[k + 1] : std::numeric_limits<double>::infinity();
    if (!(lo < hi)) continue;
    MatchProfileRow r;
    r.delta_lo = lo;
    r.delta_hi = hi;
    r.size = match_size_at_or_below(d, lo);
    r.fbar = fbar_value(r.size, n);
    rows.push_back(r);
  }
  return rows;
}

// ---------------------------------------------------------------------------

MistakeFunction MistakeFunction::power_law(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw ValidationError("mistake.alpha", "must lie in (0, 1)");
  return MistakeFunction(Kind::PowerLaw, alpha);
}

MistakeFunction MistakeFunction::logarithmic() {
  return MistakeFunction(Kind::Logarithmic, 0.0);
}

std::size_t MistakeFunction::operator()(std::size_t n) const {
  if (n == 0) return 0;
  std::size_t raw;
  if (kind_ == Kind::Logarithmic) {
    raw = static_cast<std::size_t>(std::bit_width(n + 1) - 1);
  } else {
    // Relative nudge so exact integer powers (16^0.25 = 2) are not lost to
    // rounding in exp/log.
    raw = static_cast<std::size_t>(
        std::floor(std::exp(alpha_ * std::log(static_cast<double>(n))) * (1.0 + 1e-12)));
  }
  return std::min(raw, n - 1);
}

std::string MistakeFunction::to_string() const {
  if (kind_ == Kind::Logarithmic) return "log";
  char buf[64];
  std::snprintf(buf, sizeof buf, "power(%.17g)", alpha_);
  return buf;
}

MistakeFunction MistakeFunction::parse(const std::string& text) {
  if (text == "log") return logarithmic();
  if (text.rfind("power(", 0) == 0 && text.back() == ')') {
    const std::string inner = text.substr(6, text.size() - 7);
    char* end = nullptr;
    const double a = std::strtod(inner.c_str(), &end);
    if (end == inner.c_str() || *end != '\0')
      throw ValidationError("mistake", "cannot parse exponent in '" + text + "'");
    return power_law(a);
  }
  throw ValidationError("mistake", "expected 'power(alpha)' or 'log', got '" + text + "'");
}

bool mistake_ball_contains(const DistanceMatrix& d, double eps,
                           const MistakeFunction& g) {
  std::size_t bad = 0;
  for (std::size_t i = 0; i < d.n(); ++i)
    if (!(d(i, i) < eps)) ++bad;
  return bad <= g(d.n());
}

// ---------------------------------------------------------------------------

std::string to_string(MetricKind kind) {
  switch (kind) {
    case MetricKind::FK: return "fk";
    case MetricKind::Bowen: return "bowen";
    case MetricKind::Mean: return "mean";
    case MetricKind::Mistake: return "mistake";
    case MetricKind::Base: return "base";
  }
  return "?";
}

MetricKind parse_metric_kind(const std::string& text) {
  if (text == "fk") return MetricKind::FK;
  if (text == "bowen") return MetricKind::Bowen;
  if (text == "mean") return MetricKind::Mean;
  if (text == "mistake") return MetricKind::Mistake;
  if (text == "base") return MetricKind::Base;
  throw ValidationError("metrics.kinds", "unknown metric kind '" + text + "'");
}

namespace {

void check_lengths(std::span<const Point> a, std::span<const Point> b) {
  if (a.size() != b.size() || a.empty())
    throw ValidationError("orbit", "ball test needs two non-empty orbits of equal length");
}

}  // namespace

bool fk_within(const SystemSpec& sys, std::span<const Point> a,
               std::span<const Point> b, double eps) {
  check_lengths(a, b);
  const std::size_t n = a.size();
  // d_FK < eps iff the best match over entries < eps has fbar < eps.
  if (fbar_value(0, n) < eps) return true;
  // A match leaving u rows unmatched pairs only (i, j) with |i - j| <= u.
  std::size_t band = 0;
  while (band + 1 < n && fbar_value(n - (band + 1), n) < eps) ++band;
  if (!(fbar_value(n - band, n) < eps)) return false;  // only a full match would do

  if (band == 0) {
    for (std::size_t i = 0; i < n; ++i)
      if (!metric_below(sys, a[i], b[i], eps)) return false;
    return true;
  }

  // Metric cells are evaluated only inside the band.
  auto adm = [&](std::size_t i, std::size_t j) {
    const std::size_t gap = i > j ? i - j : j - i;
    return gap <= band && metric_below(sys, a[i], b[j], eps);
  };
  return fbar_value(lcs_length(n, adm), n) < eps;
}

bool bowen_within(const SystemSpec& sys, std::span<const Point> a,
                  std::span<const Point> b, double eps) {
  check_lengths(a, b);
  for (std::size_t i = 0; i < a.size(); ++i)
    if (!metric_below(sys, a[i], b[i], eps)) return false;
  return true;
}

bool mean_within(const SystemSpec& sys, std::span<const Point> a,
                 std::span<const Point> b, double eps) {
  check_lengths(a, b);
  const double n = static_cast<double>(a.size());
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    s += evaluate_metric(sys, a[i], b[i]);
    if (s / n >= eps) return false;
  }
  return s / n < eps;
}

bool mistake_within(const SystemSpec& sys, std::span<const Point> a,
                    std::span<const Point> b, double eps,
                    const MistakeFunction& g) {
  check_lengths(a, b);
  const std::size_t budget = g(a.size());
  std::size_t bad = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!metric_below(sys, a[i], b[i], eps) && ++bad > budget) return false;
  }
  return true;
}

}  // namespace fkdim
