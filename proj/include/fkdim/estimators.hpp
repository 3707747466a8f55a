#pragma once

// Growth rates of cover counts, metric mean dimension slopes, FK Katok
// entropies, FK local entropies and the verification routines built on them.

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fkdim/covering.hpp"
#include "fkdim/orbit_metrics.hpp"
#include "fkdim/systems.hpp"

namespace fkdim {

inline constexpr std::uint64_t kDefaultSeed = 0xFE1DCA70u;

// ---------------------------------------------------------------------------
// Fits

struct CountPoint {
  std::size_t n = 0;
  double count = 1.0;
};

/// Least-squares slope of log(count) against n over [n_min, n_max], plus the
/// max and min of log(count)/n over the same points as limsup and liminf
/// surrogates. r2 is 1 for an exact fit, including constant counts.
struct GrowthFit {
  double rate = 0.0;
  double r2 = 1.0;
  double limsup = 0.0;
  double liminf = 0.0;
  std::size_t points = 0;
};

/// Needs at least 3 points in the window and counts >= 1.
GrowthFit growth_rate(std::span<const CountPoint> counts, std::size_t n_min,
                      std::size_t n_max);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 1.0;
};

/// Ordinary least squares y = slope x + intercept; needs >= 2 distinct x.
LinearFit fit_line(std::span<const double> x, std::span<const double> y);

// ---------------------------------------------------------------------------
// Plans

struct NWindow {
  std::size_t n_min = 2;
  std::size_t n_max = 6;
  bool operator==(const NWindow&) const = default;
};

struct EstimatorGrid {
  std::vector<double> epsilons;  // strictly decreasing
  std::size_t n_min = 2;
  std::size_t n_max = 6;
  /// Separate n-window for mistake balls, whose budget g(n) is 0 at n = 1.
  std::optional<NWindow> mistake_window;

  NWindow window_for(MetricKind kind) const;
};

void validate(const EstimatorGrid& grid, std::size_t min_epsilons = 1);

struct SamplingPlan {
  /// Universe size per epsilon; a single entry applies to every epsilon.
  /// Samples are prefix-stable, so smaller sizes are prefixes of larger ones.
  std::vector<std::size_t> universe_sizes{400};
  /// Optional cap on the universe size at a given n (small n needs fewer
  /// points before counts saturate).
  std::map<std::size_t, std::size_t> n_caps;
  /// Extra candidate centers drawn beyond the universe.
  std::size_t extra_candidates = 0;
  SampleParams params{};
  CoverMode mode = CoverMode::Greedy;
  CoverLimits limits{};
  std::uint64_t seed = kDefaultSeed;
  unsigned threads = 1;

  std::size_t size_for(std::size_t eps_index) const;
  std::size_t size_for(std::size_t eps_index, std::size_t n) const;
  std::size_t max_size() const;
};

/// Seed of the sample stream playing `role` (see SampleRole) for measure
/// number `measure`.
enum class SampleRole : std::uint64_t { Universe = 1, Candidates = 2, Measure = 3, Partition = 4 };
std::uint64_t sample_seed(std::uint64_t master, SampleRole role, std::uint64_t measure = 0);

// ---------------------------------------------------------------------------
// Spanning rates and mean dimension

struct RateCell {
  double eps = 0.0;
  std::size_t n = 0;
  std::size_t universe = 0;
  std::size_t count = 0;
  std::size_t lower_bound = 0;
  CoverMethod method = CoverMethod::Greedy;
  double log_count_over_n = 0.0;
};

struct RateRow {
  double eps = 0.0;
  std::vector<RateCell> cells;  // ascending n
  GrowthFit fit;
};

struct RateCurve {
  MetricKind kind = MetricKind::FK;
  std::vector<RateRow> rows;  // grid order
};

struct MdimEstimate {
  MetricKind kind = MetricKind::FK;
  RateCurve curve;
  std::vector<double> rates;   // regression rate per epsilon
  std::vector<double> ratios;  // rate / log(1/eps)
  LinearFit fit;               // rate against log(1/eps)
  double upper_slope = 0.0;    // same regression on the limsup surrogates
  double lower_slope = 0.0;    // and on the liminf surrogates
  double ratio_smallest = 0.0;
  double slope() const { return fit.slope; }
};

/// One estimate per kind, all computed on the same universe and candidates.
std::vector<MdimEstimate> mdim_estimates(const SystemSpec& sys,
                                         std::span<const MetricKind> kinds,
                                         const SamplingPlan& plan, const EstimatorGrid& grid,
                                         const MistakeFunction& mistake);

MdimEstimate mdim_estimate(MetricKind kind, const SystemSpec& sys, const SamplingPlan& plan,
                           const EstimatorGrid& grid, const MistakeFunction& mistake);

// ---------------------------------------------------------------------------
// Measures

/// Finite stand-in for an invariant measure: how i.i.d. points are drawn.
class MeasureSampler {
 public:
  enum class Kind { Uniform, Bernoulli, PointMass };

  /// The system's own uniform sampler (Lebesgue on intervals, uniform
  /// symbols or coordinates on shifts).
  static MeasureSampler uniform();
  /// Independent symbols with the given weights (full shifts only).
  static MeasureSampler bernoulli(std::vector<double> weights);
  static MeasureSampler point_mass(Point atom);

  /// "uniform", "bernoulli(0.3,0.7)", "point(<point text>)".
  static MeasureSampler parse(const SystemSpec& sys, const std::string& text);
  std::string to_string() const;

  Kind kind() const noexcept { return kind_; }

  SampleSet draw(const SystemSpec& sys, std::size_t count, std::uint64_t seed,
                 const SampleParams& params) const;

 private:
  Kind kind_ = Kind::Uniform;
  std::vector<double> weights_;
  std::optional<Point> atom_;
};

// ---------------------------------------------------------------------------
// Katok entropy

struct KatokCell {
  double delta = 0.0;
  double eps = 0.0;
  std::size_t n = 0;
  std::size_t universe = 0;
  std::size_t partial_count = 0;
  std::size_t full_count = 0;  // spanning count of the same sample
  CoverMethod method = CoverMethod::Greedy;
};

struct KatokRow {
  double delta = 0.0;
  double eps = 0.0;
  std::vector<KatokCell> cells;
  GrowthFit fit;
};

struct KatokEstimate {
  std::string measure;
  std::vector<KatokRow> rows;  // delta-major, then grid order
  std::vector<GrowthFit> spanning_fits;  // full spanning rate per epsilon
  /// Per delta: regression of rate against log(1/eps).
  std::vector<LinearFit> slope_fits;
  std::vector<double> deltas;
};

KatokEstimate katok_entropy_estimate(const SystemSpec& sys, const MeasureSampler& measure,
                                     std::span<const double> deltas, const SamplingPlan& plan,
                                     const EstimatorGrid& grid, std::uint64_t measure_index = 0);

// ---------------------------------------------------------------------------
// Local entropy

struct LocalRow {
  double radius = 0.0;
  double eps = 0.0;
  std::size_t members = 0;       // sample points in the closed ball
  std::vector<CountPoint> counts;
  GrowthFit fit;
};

struct LocalEntropyEstimate {
  Point center;
  double eps = 0.0;
  std::vector<LocalRow> rows;  // radii order (decreasing)
  GrowthFit global;            // same sample, whole space
  double inf_rate = 0.0;       // min regression rate over radii
  double inf_limsup = 0.0;     // min limsup surrogate over radii
};

/// Neighbourhoods are the sample points in closed base-metric balls
/// around `x`; covering centers range over the whole sample. Counts are
/// made monotone: each radius level may reuse the centers of the level
/// above, so counts never increase as the radius shrinks and never exceed
/// the global count.
std::vector<LocalEntropyEstimate> local_entropy_estimates(
    const SystemSpec& sys, std::span<const Point> probes, std::span<const double> radii,
    const SamplingPlan& plan, const EstimatorGrid& grid);

// ---------------------------------------------------------------------------
// Verification

struct Check {
  std::string name;
  bool pass = false;
  double value = 0.0;
  double limit = 0.0;
  std::string detail;
};

struct VerifyReport {
  std::string name;
  std::vector<Check> checks;
  bool pass() const;
};

struct SlopeAgreementOptions {
  std::vector<MetricKind> kinds{MetricKind::FK, MetricKind::Bowen, MetricKind::Mean,
                                MetricKind::Mistake};
  double tolerance = 0.1;  // pairwise slope difference
  std::optional<double> slope_min;
  std::optional<double> slope_max;
};

VerifyReport verify_slope_agreement(const SystemSpec& sys, const SamplingPlan& plan,
                                const EstimatorGrid& grid, const MistakeFunction& mistake,
                                const SlopeAgreementOptions& opts,
                                std::vector<MdimEstimate>* out = nullptr);

struct KatokBoundOptions {
  std::vector<MeasureSampler> measures{MeasureSampler::uniform()};
  double delta = 0.1;
  double tolerance = 0.1;  // Katok slope <= FK slope + tolerance
};

VerifyReport verify_katok_bound(const SystemSpec& sys, const SamplingPlan& plan,
                                const EstimatorGrid& grid, const KatokBoundOptions& opts,
                                std::vector<KatokEstimate>* out = nullptr);

struct LocalBoundOptions {
  std::vector<Point> probes;
  std::vector<double> radii;
  std::optional<double> gap_tolerance;  // global - sup local at the smallest eps
};

VerifyReport verify_local_bound(const SystemSpec& sys, const SamplingPlan& plan,
                                const EstimatorGrid& grid, const LocalBoundOptions& opts,
                                std::vector<LocalEntropyEstimate>* out = nullptr);

struct UnionSandwichOptions {
  std::size_t trials = 50;
  std::size_t max_pieces = 4;
  std::size_t sample_size = 24;  // at most the exact cap
  std::vector<std::size_t> ns{1, 4, 10};
  std::vector<double> epsilons{0.5, 0.25, 0.125};
  MetricKind kind = MetricKind::FK;
  bool operator==(const UnionSandwichOptions&) const = default;
};

/// Finite-union sandwich max_j r(Z_j) <= r(union) <= sum_j r(Z_j) with exact
/// covers and the whole sample as candidates.
VerifyReport verify_union_sandwich(const SystemSpec& sys, const SamplingPlan& plan,
                           const UnionSandwichOptions& opts);

}  // namespace fkdim
