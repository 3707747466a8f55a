#pragma once

// Orbit metrics: (n, delta)-matches, the Feldman-Katok metric d_{FK_n},
// the Bowen and mean metrics, and mistake Bowen balls.
//
// An (n, delta)-match of x and y is an order-preserving partial bijection
// pi of {0..n-1} with d(T^i x, T^{pi(i)} y) < delta for every matched i.
// fbar_{n,delta}(x, y) = 1 - (max |pi|) / n, and
// d_{FK_n}(x, y) = inf { delta > 0 : fbar_{n,delta}(x, y) < delta }.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fkdim/systems.hpp"

namespace fkdim {

/// Square matrix of pairwise distances d(a_i, b_j) between two orbit
/// segments of equal length n.
class DistanceMatrix {
 public:
  DistanceMatrix() = default;
  DistanceMatrix(std::size_t n, std::vector<double> entries);

  std::size_t n() const noexcept { return n_; }
  double operator()(std::size_t i, std::size_t j) const { return entries_[i * n_ + j]; }
  const std::vector<double>& entries() const noexcept { return entries_; }
  DistanceMatrix transposed() const;

 private:
  std::size_t n_ = 0;
  std::vector<double> entries_;
};

DistanceMatrix distance_matrix(const SystemSpec& sys, const OrbitSegment& a,
                               const OrbitSegment& b);

/// Distance matrix of two explicit real sequences under |x - y|.
DistanceMatrix line_distance_matrix(std::span<const double> a,
                                    std::span<const double> b);

struct MatchPair {
  std::size_t i = 0;
  std::size_t j = 0;
  bool operator==(const MatchPair&) const = default;
};

struct MatchOutcome {
  std::size_t size = 0;
  double fbar = 1.0;
  std::optional<std::vector<MatchPair>> witness;
};

/// 1 - size / n, the single formula every fbar comparison goes through.
double fbar_value(std::size_t match_size, std::size_t n);

/// Largest order-preserving match using only entries strictly below
/// `delta`. Two-row LCS recurrence; with `want_witness` the full table is
/// kept and the match whose earliest rows take the smallest columns is
/// returned.
MatchOutcome max_match_size(const DistanceMatrix& d, double delta,
                            bool want_witness = false);

/// Exact d_{FK_n} by search over the breakpoints of delta -> fbar_{n,delta}.
/// Always in [0, 1].
double fk_distance(const DistanceMatrix& d);

/// Bisection on delta for the crossing of fbar_{n,delta} < delta. Returns the
/// upper end of a bracket of width <= tol around the infimum.
double fk_distance_bisect(const DistanceMatrix& d, double tol);

double bowen_distance(const DistanceMatrix& d);
double mean_distance(const DistanceMatrix& d);

/// One row per interval (lo, hi] of delta on which the best match is
/// constant.
struct MatchProfileRow {
  double delta_lo = 0.0;
  double delta_hi = 0.0;  // +inf on the last row
  std::size_t size = 0;
  double fbar = 1.0;
};
std::vector<MatchProfileRow> match_profile(const DistanceMatrix& d);

/// Sublinear mistake budget g(n) < n with g(n)/n -> 0.
class MistakeFunction {
 public:
  enum class Kind { PowerLaw, Logarithmic };

  /// g(n) = floor(n^alpha), alpha in (0, 1).
  static MistakeFunction power_law(double alpha);
  /// g(n) = floor(log2(n + 1)).
  static MistakeFunction logarithmic();

  /// Clamped to n - 1 (and 0 for n = 0).
  std::size_t operator()(std::size_t n) const;

  Kind kind() const noexcept { return kind_; }
  double alpha() const noexcept { return alpha_; }

  std::string to_string() const;
  /// "power(0.5)" or "log".
  static MistakeFunction parse(const std::string& text);

  bool operator==(const MistakeFunction&) const = default;

 private:
  MistakeFunction(Kind k, double a) : kind_(k), alpha_(a) {}
  Kind kind_;
  double alpha_;
};

/// y in B_n(g; x, eps): at most g(n) diagonal entries are >= eps.
bool mistake_ball_contains(const DistanceMatrix& d, double eps,
                           const MistakeFunction& g);

// ---------------------------------------------------------------------------
// Ball membership evaluated directly on orbits. Each predicate has the same
// truth value as the matching DistanceMatrix formula compared against eps,
// but evaluates only the entries it needs.

enum class MetricKind { FK, Bowen, Mean, Mistake, Base };

std::string to_string(MetricKind kind);
MetricKind parse_metric_kind(const std::string& text);

/// d_{FK_n}(a, b) < eps, for the first n points of each orbit.
bool fk_within(const SystemSpec& sys, std::span<const Point> a,
               std::span<const Point> b, double eps);
bool bowen_within(const SystemSpec& sys, std::span<const Point> a,
                  std::span<const Point> b, double eps);
bool mean_within(const SystemSpec& sys, std::span<const Point> a,
                 std::span<const Point> b, double eps);
bool mistake_within(const SystemSpec& sys, std::span<const Point> a,
                    std::span<const Point> b, double eps,
                    const MistakeFunction& g);

}  // namespace fkdim
