#pragma once

// State spaces, metrics and forward maps of the built-in dynamical systems.
//
// Shift spaces are represented through their periodic points, which makes the
// shift map exact and gives the two-sided metric
//
//     d(x, y) = sum_{i in Z} base^{-|i|} rho(x_i, y_i)
//
// a closed form: for periods a and b with L = lcm(a, b),
//
//     d(x, y) = sum_{r=0}^{L-1} w_r rho(x_r, y_r),
//     w_r = (base^{-r} + base^{-(L-r)}) / (1 - base^{-L}).

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace fkdim {

// ---------------------------------------------------------------------------
// Points

/// Periodic sequence over the alphabet {0, ..., k-1}; `symbols[r]` is the
/// coordinate x_r, and x_i = symbols[i mod period].
struct SymbolicPeriodic {
  std::vector<int> symbols;
  std::size_t period() const noexcept { return symbols.size(); }
};

/// Periodic sequence in ([0,1]^dim)^Z stored row-major: coordinate r is
/// coords[r*dim, (r+1)*dim).
struct CubePeriodic {
  std::size_t dim = 1;
  std::vector<double> coords;
  std::size_t period() const noexcept { return dim == 0 ? 0 : coords.size() / dim; }
  std::span<const double> at(std::size_t r) const {
    return {coords.data() + r * dim, dim};
  }
};

struct Scalar {
  double value = 0.0;
};

struct Point;

/// Point of a product system; `parts` holds exactly the left and right
/// component points.
struct ProductPoint {
  std::vector<Point> parts;
};

struct Point {
  std::variant<SymbolicPeriodic, CubePeriodic, Scalar, ProductPoint> value;

  friend bool operator==(const Point& a, const Point& b);
};

bool operator==(const SymbolicPeriodic& a, const SymbolicPeriodic& b);
bool operator==(const CubePeriodic& a, const CubePeriodic& b);
bool operator==(const Scalar& a, const Scalar& b);
bool operator==(const ProductPoint& a, const ProductPoint& b);

Point symbolic_point(std::vector<int> symbols);
Point cube_point(std::size_t dim, std::vector<double> coords);
Point scalar_point(double value);
Point product_point(Point left, Point right);

// ---------------------------------------------------------------------------
// Systems

/// Full shift on k symbols with the discrete metric on coordinates.
struct FullShift {
  int alphabet = 2;
  double decay_base = 2.0;
};

/// Shift on ([0,1]^dim)^Z with the max-coordinate metric on coordinates.
struct CubeShift {
  int dim = 1;
  double decay_base = 2.0;
};

/// x -> 2x mod 1 on the circle R/Z, circle metric.
struct DoublingMap {};

/// x -> min(2x, 2-2x) on [0,1], metric |x-y|.
struct TentMap {};

/// Identity on [0,1], metric |x-y|. Every orbit metric collapses to d.
struct IdentityMap {};

enum class Combiner { Max, Sum };

struct SystemSpec;

struct ProductSystem {
  std::shared_ptr<const SystemSpec> left;
  std::shared_ptr<const SystemSpec> right;
  Combiner combiner = Combiner::Max;
};

struct SystemSpec {
  std::variant<FullShift, CubeShift, DoublingMap, TentMap, IdentityMap,
               ProductSystem>
      kind;
};

SystemSpec full_shift(int alphabet, double decay_base = 2.0);
SystemSpec cube_shift(int dim, double decay_base = 2.0);
SystemSpec doubling_map();
SystemSpec tent_map();
SystemSpec identity_map();
SystemSpec product_system(SystemSpec left, SystemSpec right, Combiner combiner);

/// Throws ValidationError when parameters are out of range.
void validate(const SystemSpec& sys);

/// Throws IncompatiblePointError unless `p` is a point of `sys`.
void check_point(const SystemSpec& sys, const Point& p);

/// Returns T(p).
Point evaluate_map(const SystemSpec& sys, const Point& p);

/// Returns d(p, q).
double evaluate_metric(const SystemSpec& sys, const Point& p, const Point& q);

/// Same truth value as `evaluate_metric(sys, p, q) < threshold`, with early
/// exit on shift metrics once the outcome is certain.
bool metric_below(const SystemSpec& sys, const Point& p, const Point& q,
                  double threshold);

/// Upper bound on d over the whole space.
double diameter_bound(const SystemSpec& sys);

/// Weights w_0 .. w_{L-1} of the closed-form periodic shift metric.
std::vector<double> shift_weights(double decay_base, std::size_t lcm_period);

struct OrbitSegment {
  std::vector<Point> points;
  std::size_t size() const noexcept { return points.size(); }
};

/// (p, Tp, ..., T^{n-1} p). Throws ValidationError for n = 0.
OrbitSegment orbit(const SystemSpec& sys, const Point& p, std::size_t n);

// ---------------------------------------------------------------------------
// Sampling

enum class SampleFamily { Random, Grid };
enum class PeriodMode { UpTo, Exact };

struct SampleParams {
  SampleFamily family = SampleFamily::Random;
  /// Period bound P for shift points.
  std::size_t period = 8;
  PeriodMode period_mode = PeriodMode::UpTo;
  /// Number of midpoint levels per coordinate for cube-shift grids.
  std::size_t levels = 4;
};

struct SampleSet {
  std::vector<Point> points;
  std::uint64_t seed = 0;
  std::shared_ptr<const SystemSpec> system;
};

/// Deterministic sample of `count` points.
///
/// Random family: periods uniform in [1, P] (or exactly P), symbols and
/// coordinates uniform; interval points uniform in [0,1]. The stream is
/// prefix-stable: a larger count extends a smaller one.
///
/// Grid family: interval points are the midpoints (2i+1)/(2 count); shift
/// points enumerate all period-P words over the symbol (or level) set in
/// lexicographic order, thinned to `count` by even striding when there are
/// more words than requested.
SampleSet sample_points(const SystemSpec& sys, std::size_t count,
                        std::uint64_t seed, const SampleParams& params = {});

// ---------------------------------------------------------------------------
// Text forms used by the CLI and config files.

std::string to_string(const SystemSpec& sys);
std::string to_string(const Point& p);

/// Parses "fullshift(k=2,base=2)", "cube(D=1)", "doubling", "tent",
/// "identity", "product(max;<left>;<right>)".
SystemSpec parse_system(const std::string& text);

/// Parses a point of `sys`: "0.25" for interval maps, "0,1,1" for symbolic
/// words, "0.1:0.2,0.3:0.4" for cube words (coordinates of one time step
/// joined by ':'), "<left>|<right>" for products.
Point parse_point(const SystemSpec& sys, const std::string& text);

}  // namespace fkdim
