#pragma once

// Spanning, separated and partial-cover cardinalities over finite samples,
// for any of the orbit metrics, plus base-space covering numbers.

#include <cstddef>
#include <cstdint>
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "fkdim/orbit_metrics.hpp"
#include "fkdim/systems.hpp"

namespace fkdim {

/// Orbits of a fixed point list, precomputed to a common length. Any
/// shorter prefix is a valid orbit of that length.
class OrbitBank {
 public:
  OrbitBank() = default;
  OrbitBank(const SystemSpec& sys, std::span<const Point> points, std::size_t length);

  std::size_t size() const noexcept { return orbits_.size(); }
  std::size_t length() const noexcept { return length_; }
  std::span<const Point> orbit(std::size_t index, std::size_t n) const;

 private:
  std::size_t length_ = 0;
  std::vector<OrbitSegment> orbits_;
};

/// Open-ball membership for one metric kind at fixed (n, eps).
struct BallOracle {
  MetricKind kind = MetricKind::FK;
  std::size_t n = 1;
  double eps = 0.1;
  std::shared_ptr<const SystemSpec> system;
  MistakeFunction mistake = MistakeFunction::power_law(0.5);

  /// y in B(center, eps). For the base kind only the first points count.
  bool contains(std::span<const Point> center, std::span<const Point> y) const;
};

/// sets[c]: sorted indices of universe points inside candidate c's ball.
struct Coverage {
  std::size_t universe_size = 0;
  std::vector<std::vector<std::uint32_t>> sets;
};

Coverage build_coverage(const BallOracle& oracle, const OrbitBank& candidates,
                        const OrbitBank& universe, unsigned threads = 1);

/// Same, restricted to the listed bank entries; set members index into
/// `universe_ids`. When both banks and both id lists coincide, each
/// unordered pair is tested once.
Coverage build_coverage(const BallOracle& oracle, const OrbitBank& candidates,
                        std::span<const std::uint32_t> candidate_ids,
                        const OrbitBank& universe,
                        std::span<const std::uint32_t> universe_ids, unsigned threads = 1);

/// Radius of the smallest open ball of this shape around `center` that
/// contains `y`: contains(center, y) iff the result is < shape.eps. Values at
/// or above `cap` are only reported as some value >= cap.
double ball_radius(const BallOracle& shape, std::span<const Point> center,
                   std::span<const Point> y,
                   double cap = std::numeric_limits<double>::infinity());

/// Coverages of one ball shape at several radii over nested prefixes of a
/// bank: entry e uses bank entries [0, sizes[e]) as both candidates and
/// universe and radius eps[e]. Each unordered pair is evaluated once for
/// all entries. shape.eps is ignored.
std::vector<Coverage> build_coverages(const BallOracle& shape, std::span<const double> eps,
                                      const OrbitBank& bank,
                                      std::span<const std::size_t> sizes, unsigned threads = 1);

std::vector<std::uint32_t> all_ids(std::size_t count);

enum class CoverMode { Exact, Greedy };
enum class CoverMethod { Exact, Greedy };

std::string to_string(CoverMethod m);

struct CoverLimits {
  /// Exact solving is allowed when either size is within its cap.
  std::size_t exact_universe_cap = 24;
  std::size_t exact_candidate_cap = 24;
  bool operator==(const CoverLimits&) const = default;
};

struct CoverResult {
  std::size_t cardinality = 0;
  CoverMethod method = CoverMethod::Greedy;
  std::size_t lower_bound = 0;
  /// Candidate indices; their balls cover the required part of the universe.
  std::vector<std::size_t> centers;
};

/// Greedy run (most newly covered points, ties to the lowest index) until
/// every coverable point is covered. covered[k] counts the points covered
/// by the first k + 1 centers, so any partial requirement is met by a prefix.
struct GreedyTrace {
  std::vector<std::size_t> centers;
  std::vector<std::size_t> covered;
  /// Fewest prefix steps reaching `required` points; throws if unreachable.
  std::size_t steps_for(std::size_t required) const;
};

GreedyTrace greedy_trace(const Coverage& cov);

/// Smallest number of candidate balls covering every universe point.
/// Throws InfeasibleCoverError naming an uncovered point.
CoverResult spanning_number(const Coverage& cov, CoverMode mode,
                            const CoverLimits& limits = {});

/// Smallest number of candidate balls covering at least `required` points.
CoverResult cover_at_least(const Coverage& cov, std::size_t required, CoverMode mode,
                           const CoverLimits& limits = {});

/// Number of points needed so that the covered fraction strictly exceeds
/// 1 - delta: floor((1 - delta) * size) + 1.
std::size_t partial_cover_threshold(std::size_t universe_size, double delta);

/// Covers more than (1 - delta) of the universe, counted uniformly.
CoverResult partial_cover_number(const Coverage& cov, double delta, CoverMode mode,
                                 const CoverLimits& limits = {});

/// Convenience form: builds orbits and coverage, then solves.
CoverResult spanning_number(const SampleSet& universe, const SampleSet& candidates,
                            const BallOracle& oracle, CoverMode mode,
                            const CoverLimits& limits = {});
CoverResult partial_cover_number(const SampleSet& universe, const SampleSet& candidates,
                                 const BallOracle& oracle, double delta, CoverMode mode,
                                 const CoverLimits& limits = {});

/// Size of the maximal set built greedily in index order whose members are
/// pairwise outside each other's balls.
std::size_t separated_number(const BallOracle& oracle, const OrbitBank& sample);
std::size_t separated_number(const SampleSet& sample, const BallOracle& oracle);

// ---------------------------------------------------------------------------
// Base space

struct BaseCoverOptions {
  std::size_t sample_count = 2048;
  std::uint64_t seed = 1;
  SampleParams params{};
};

/// #(X, d, eps): smallest number of open eps-balls covering X. Exact closed
/// form floor(1/(2 eps)) + 1 on [0,1] and the circle, multiplied over
/// max-products; otherwise a greedy cover of a sample, tagged greedy.
CoverResult base_covering_number(const SystemSpec& sys, double eps,
                                 const BaseCoverOptions& opts = {});

/// Cover with diameter <= eps and Lebesgue number >= eps/4 built from an
/// eps/4-spanning subset of a sample.
struct SmallDiameterCover {
  std::vector<Point> centers;
  std::vector<std::size_t> center_indices;  // into the sample
  double spanning_radius = 0.0;  // eps / 4
  double cover_radius = 0.0;     // eps / 2
  double diameter_bound = 0.0;   // eps
  double lebesgue_bound = 0.0;   // eps / 4
};

/// Throws ValidationError("sample", ...) when the sample is not eps/4-dense.
/// Density is checked exactly for interval systems and against `probes`
/// otherwise (skipped when `probes` is empty).
SmallDiameterCover small_diameter_cover(const SystemSpec& sys, double eps,
                                        std::span<const Point> sample,
                                        std::span<const Point> probes = {});

struct TameGrowthRow {
  double eps = 0.0;
  std::size_t count = 0;
  CoverMethod method = CoverMethod::Exact;
  double product = 0.0;  // eps^theta * log count
};

struct TameGrowthReport {
  double theta = 1.0;
  std::vector<TameGrowthRow> rows;
  /// Products strictly decrease over the last three grid points.
  bool decreasing_tail = false;
};

TameGrowthReport tame_growth_diagnostic(const SystemSpec& sys, double theta,
                                        std::span<const double> eps_grid,
                                        const BaseCoverOptions& opts = {});

}  // namespace fkdim
