#include "fkdim/systems.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstring>
#include <limits>
#include <numeric>
#include <unordered_map>

#include "fkdim/errors.hpp"
#include "fkdim/rng.hpp"

namespace fkdim {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

const char* variant_name(const Point& p) {
  switch (p.value.index()) {
    case 0: return "symbolic";
    case 1: return "cube";
    case 2: return "scalar";
    default: return "product";
  }
}

[[noreturn]] void incompatible(const Point& p, const char* expected) {
  throw IncompatiblePointError(std::string("expected a ") + expected +
                               " point, got a " + variant_name(p) + " point");
}

// Weights of one periodic shift metric, stored in traversal order: entry k
// is the common weight of r = k and r = L - k. `tail[k]` is the total weight
// of entries k, k+1, ... counted with multiplicity.
struct WeightTable {
  std::vector<double> w;
  std::vector<double> tail;
};

const WeightTable& weight_table(double base, std::size_t L) {
  struct Key {
    double base;
    std::size_t L;
    bool operator==(const Key&) const = default;
  };
  struct KeyHash {
    std::size_t operator()(const Key& k) const noexcept {
      std::uint64_t bits;
      static_assert(sizeof bits == sizeof k.base);
      std::memcpy(&bits, &k.base, sizeof bits);
      return static_cast<std::size_t>(splitmix64(bits ^ (k.L * 0x9E37ULL)));
    }
  };
  thread_local std::unordered_map<Key, WeightTable, KeyHash> cache;
  thread_local const WeightTable* last = nullptr;
  thread_local Key last_key{0.0, 0};
  const Key key{base, L};
  if (last != nullptr && last_key == key) return *last;

  auto it = cache.find(key);
  if (it == cache.end()) {
    WeightTable t;
    const std::size_t half = L / 2;
    const double norm = 1.0 - std::pow(base, -static_cast<double>(L));
    t.w.resize(half + 1);
    for (std::size_t k = 0; k <= half; ++k) {
      t.w[k] = (std::pow(base, -static_cast<double>(k)) +
                std::pow(base, -static_cast<double>(L - k))) /
               norm;
    }
    t.tail.assign(half + 2, 0.0);
    for (std::size_t k = half + 1; k-- > 0;) {
      const double mult = (k == 0 || 2 * k == L) ? 1.0 : 2.0;
      t.tail[k] = t.tail[k + 1] + mult * t.w[k];
    }
    it = cache.emplace(key, std::move(t)).first;
  }
  last = &it->second;
  last_key = key;
  return *last;
}

// Sums w_r rho(r) over r in traversal order 0, 1, L-1, 2, L-2, ...
// With a finite threshold, stops as soon as the comparison against it is
// decided; the returned flag is then meaningful and the sum is partial.
template <class Rho>
std::pair<double, bool> shift_sum(double base, std::size_t L, Rho&& rho,
                                  double threshold) {
  const WeightTable& t = weight_table(base, L);
  const bool bounded = std::isfinite(threshold);
  const double slack = 1.0 + 4e-16 * static_cast<double>(L + 4);
  double acc = 0.0;
  const std::size_t half = L / 2;
  for (std::size_t k = 0; k <= half; ++k) {
    acc += t.w[k] * rho(k);
    if (k != 0 && 2 * k != L) acc += t.w[k] * rho(L - k);
    if (bounded) {
      if (acc >= threshold) return {acc, false};
      if ((acc + t.tail[k + 1]) * slack < threshold) return {acc, true};
    }
  }
  return {acc, acc < threshold};
}

double symbolic_rho_sum(double base, const SymbolicPeriodic& x,
                        const SymbolicPeriodic& y, double threshold,
                        bool* below) {
  const std::size_t a = x.period(), b = y.period();
  const std::size_t L = std::lcm(a, b);
  auto rho = [&](std::size_t r) {
    return x.symbols[r % a] == y.symbols[r % b] ? 0.0 : 1.0;
  };
  auto [acc, flag] = shift_sum(base, L, rho, threshold);
  if (below) *below = flag;
  return acc;
}

double cube_rho_sum(double base, const CubePeriodic& x, const CubePeriodic& y,
                    double threshold, bool* below) {
  const std::size_t a = x.period(), b = y.period();
  const std::size_t L = std::lcm(a, b);
  const std::size_t dim = x.dim;
  auto rho = [&](std::size_t r) {
    const double* u = x.coords.data() + (r % a) * dim;
    const double* v = y.coords.data() + (r % b) * dim;
    double m = 0.0;
    for (std::size_t c = 0; c < dim; ++c) m = std::max(m, std::fabs(u[c] - v[c]));
    return m;
  };
  auto [acc, flag] = shift_sum(base, L, rho, threshold);
  if (below) *below = flag;
  return acc;
}

const SymbolicPeriodic& as_symbolic(const FullShift& s, const Point& p) {
  const auto* x = std::get_if<SymbolicPeriodic>(&p.value);
  if (!x) incompatible(p, "symbolic");
  if (x->symbols.empty())
    throw IncompatiblePointError("symbolic point has period 0");
  for (int v : x->symbols) {
    if (v < 0 || v >= s.alphabet)
      throw IncompatiblePointError("symbol " + std::to_string(v) +
                                   " outside alphabet of size " +
                                   std::to_string(s.alphabet));
  }
  return *x;
}

const CubePeriodic& as_cube(const CubeShift& s, const Point& p) {
  const auto* x = std::get_if<CubePeriodic>(&p.value);
  if (!x) incompatible(p, "cube");
  if (x->dim != static_cast<std::size_t>(s.dim))
    throw IncompatiblePointError("cube point of dimension " +
                                 std::to_string(x->dim) + ", system has " +
                                 std::to_string(s.dim));
  if (x->coords.empty() || x->coords.size() % x->dim != 0)
    throw IncompatiblePointError("cube point storage is not a whole period");
  for (double v : x->coords) {
    if (!(v >= 0.0 && v <= 1.0))
      throw IncompatiblePointError("cube coordinate outside [0,1]");
  }
  return *x;
}

double as_scalar(const Point& p) {
  const auto* x = std::get_if<Scalar>(&p.value);
  if (!x) incompatible(p, "scalar");
  if (!(x->value >= 0.0 && x->value <= 1.0))
    throw IncompatiblePointError("scalar outside [0,1]");
  return x->value;
}

const ProductPoint& as_product(const Point& p) {
  const auto* x = std::get_if<ProductPoint>(&p.value);
  if (!x) incompatible(p, "product");
  if (x->parts.size() != 2)
    throw IncompatiblePointError("product point needs exactly two parts");
  return *x;
}

double circle_distance(double x, double y) {
  const double a = std::fabs(x - y);
  return std::min(a, 1.0 - a);
}

std::string format_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& s, const char* what) {
  double v = 0.0;
  const char* b = s.data();
  const char* e = s.data() + s.size();
  while (b < e && *b == ' ') ++b;
  while (e > b && e[-1] == ' ') --e;
  auto res = std::from_chars(b, e, v);
  if (res.ec != std::errc() || res.ptr != e)
    throw ValidationError(what, "cannot parse number '" + s + "'");
  return v;
}

long parse_long(const std::string& s, const char* what) {
  long v = 0;
  const char* b = s.data();
  const char* e = s.data() + s.size();
  while (b < e && *b == ' ') ++b;
  while (e > b && e[-1] == ' ') --e;
  auto res = std::from_chars(b, e, v);
  if (res.ec != std::errc() || res.ptr != e)
    throw ValidationError(what, "cannot parse integer '" + s + "'");
  return v;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

// Splits on `sep` at parenthesis depth zero.
std::vector<std::string> split_top(const std::string& s, char sep) {
  std::vector<std::string> out;
  int depth = 0;
  std::string cur;
  for (char c : s) {
    if (c == '(') ++depth;
    if (c == ')') --depth;
    if (c == sep && depth == 0) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

std::string strip_parens(std::string s) {
  s = trim(s);
  while (s.size() >= 2 && s.front() == '(' && s.back() == ')') {
    int depth = 0;
    bool wraps = true;
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (s[i] == '(') ++depth;
      if (s[i] == ')') --depth;
      if (depth == 0 && i + 1 < s.size()) {
        wraps = false;
        break;
      }
    }
    if (!wraps) break;
    s = trim(s.substr(1, s.size() - 2));
  }
  return s;
}

}  // namespace

// ---------------------------------------------------------------------------

bool operator==(const SymbolicPeriodic& a, const SymbolicPeriodic& b) {
  return a.symbols == b.symbols;
}
bool operator==(const CubePeriodic& a, const CubePeriodic& b) {
  return a.dim == b.dim && a.coords == b.coords;
}
bool operator==(const Scalar& a, const Scalar& b) { return a.value == b.value; }
bool operator==(const ProductPoint& a, const ProductPoint& b) {
  return a.parts == b.parts;
}
bool operator==(const Point& a, const Point& b) { return a.value == b.value; }

Point symbolic_point(std::vector<int> symbols) {
  return Point{SymbolicPeriodic{std::move(symbols)}};
}
Point cube_point(std::size_t dim, std::vector<double> coords) {
  return Point{CubePeriodic{dim, std::move(coords)}};
}
Point scalar_point(double value) { return Point{Scalar{value}}; }
Point product_point(Point left, Point right) {
  ProductPoint pp;
  pp.parts.reserve(2);
  pp.parts.push_back(std::move(left));
  pp.parts.push_back(std::move(right));
  return Point{std::move(pp)};
}

SystemSpec full_shift(int alphabet, double decay_base) {
  return SystemSpec{FullShift{alphabet, decay_base}};
}
SystemSpec cube_shift(int dim, double decay_base) {
  return SystemSpec{CubeShift{dim, decay_base}};
}
SystemSpec doubling_map() { return SystemSpec{DoublingMap{}}; }
SystemSpec tent_map() { return SystemSpec{TentMap{}}; }
SystemSpec identity_map() { return SystemSpec{IdentityMap{}}; }
SystemSpec product_system(SystemSpec left, SystemSpec right, Combiner combiner) {
  return SystemSpec{ProductSystem{std::make_shared<const SystemSpec>(std::move(left)),
                                  std::make_shared<const SystemSpec>(std::move(right)),
                                  combiner}};
}

void validate(const SystemSpec& sys) {
  std::visit(
      overloaded{
          [](const FullShift& s) {
            if (s.alphabet < 2) throw ValidationError("system.k", "alphabet size must be >= 2");
            if (!(s.decay_base > 1.0))
              throw ValidationError("system.base", "decay base must be > 1");
          },
          [](const CubeShift& s) {
            if (s.dim < 1) throw ValidationError("system.D", "dimension must be >= 1");
            if (!(s.decay_base > 1.0))
              throw ValidationError("system.base", "decay base must be > 1");
          },
          [](const ProductSystem& s) {
            if (!s.left || !s.right)
              throw ValidationError("system", "product needs two components");
            validate(*s.left);
            validate(*s.right);
          },
          [](const auto&) {}},
      sys.kind);
}

void check_point(const SystemSpec& sys, const Point& p) {
  std::visit(overloaded{[&](const FullShift& s) { as_symbolic(s, p); },
                        [&](const CubeShift& s) { as_cube(s, p); },
                        [&](const ProductSystem& s) {
                          const auto& pp = as_product(p);
                          check_point(*s.left, pp.parts[0]);
                          check_point(*s.right, pp.parts[1]);
                        },
                        [&](const auto&) { as_scalar(p); }},
             sys.kind);
}

Point evaluate_map(const SystemSpec& sys, const Point& p) {
  return std::visit(
      overloaded{
          [&](const FullShift& s) {
            const auto& x = as_symbolic(s, p);
            std::vector<int> out(x.symbols.begin() + 1, x.symbols.end());
            out.push_back(x.symbols.front());
            return symbolic_point(std::move(out));
          },
          [&](const CubeShift& s) {
            const auto& x = as_cube(s, p);
            std::vector<double> out(x.coords.begin() + x.dim, x.coords.end());
            out.insert(out.end(), x.coords.begin(), x.coords.begin() + x.dim);
            return cube_point(x.dim, std::move(out));
          },
          [&](const DoublingMap&) {
            double y = 2.0 * as_scalar(p);
            if (y >= 1.0) y -= 1.0;
            return scalar_point(y);
          },
          [&](const TentMap&) {
            const double x = as_scalar(p);
            return scalar_point(std::min(2.0 * x, 2.0 - 2.0 * x));
          },
          [&](const IdentityMap&) { return scalar_point(as_scalar(p)); },
          [&](const ProductSystem& s) {
            const auto& pp = as_product(p);
            return product_point(evaluate_map(*s.left, pp.parts[0]),
                                 evaluate_map(*s.right, pp.parts[1]));
          }},
      sys.kind);
}

double evaluate_metric(const SystemSpec& sys, const Point& p, const Point& q) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  return std::visit(
      overloaded{
          [&](const FullShift& s) {
            return symbolic_rho_sum(s.decay_base, as_symbolic(s, p),
                                    as_symbolic(s, q), inf, nullptr);
          },
          [&](const CubeShift& s) {
            return cube_rho_sum(s.decay_base, as_cube(s, p), as_cube(s, q), inf,
                                nullptr);
          },
          [&](const DoublingMap&) {
            return circle_distance(as_scalar(p), as_scalar(q));
          },
          [&](const ProductSystem& s) {
            const auto& a = as_product(p);
            const auto& b = as_product(q);
            const double l = evaluate_metric(*s.left, a.parts[0], b.parts[0]);
            const double r = evaluate_metric(*s.right, a.parts[1], b.parts[1]);
            return s.combiner == Combiner::Max ? std::max(l, r) : l + r;
          },
          [&](const auto&) { return std::fabs(as_scalar(p) - as_scalar(q)); }},
      sys.kind);
}

bool metric_below(const SystemSpec& sys, const Point& p, const Point& q,
                  double threshold) {
  if (const auto* s = std::get_if<FullShift>(&sys.kind)) {
    bool below = false;
    symbolic_rho_sum(s->decay_base, as_symbolic(*s, p), as_symbolic(*s, q),
                     threshold, &below);
    return below;
  }
  if (const auto* s = std::get_if<CubeShift>(&sys.kind)) {
    bool below = false;
    cube_rho_sum(s->decay_base, as_cube(*s, p), as_cube(*s, q), threshold, &below);
    return below;
  }
  return evaluate_metric(sys, p, q) < threshold;
}

double diameter_bound(const SystemSpec& sys) {
  return std::visit(
      overloaded{
          [](const FullShift& s) { return (s.decay_base + 1.0) / (s.decay_base - 1.0); },
          [](const CubeShift& s) { return (s.decay_base + 1.0) / (s.decay_base - 1.0); },
          [](const DoublingMap&) { return 0.5; },
          [](const ProductSystem& s) {
            const double l = diameter_bound(*s.left), r = diameter_bound(*s.right);
            return s.combiner == Combiner::Max ? std::max(l, r) : l + r;
          },
          [](const auto&) { return 1.0; }},
      sys.kind);
}

std::vector<double> shift_weights(double decay_base, std::size_t lcm_period) {
  if (lcm_period == 0) throw ValidationError("period", "must be >= 1");
  const WeightTable& t = weight_table(decay_base, lcm_period);
  std::vector<double> out(lcm_period);
  for (std::size_t r = 0; r < lcm_period; ++r) {
    out[r] = t.w[std::min(r, lcm_period - r)];
  }
  return out;
}

OrbitSegment orbit(const SystemSpec& sys, const Point& p, std::size_t n) {
  if (n == 0) throw ValidationError("n", "orbit length must be >= 1");
  check_point(sys, p);
  OrbitSegment seg;
  seg.points.reserve(n);
  seg.points.push_back(p);
  for (std::size_t i = 1; i < n; ++i) {
    seg.points.push_back(evaluate_map(sys, seg.points.back()));
  }
  return seg;
}

// ---------------------------------------------------------------------------

namespace {

Point sample_random(const SystemSpec& sys, Engine& eng, const SampleParams& params) {
  return std::visit(
      overloaded{
          [&](const FullShift& s) {
            const std::size_t p = params.period_mode == PeriodMode::Exact
                                      ? params.period
                                      : 1 + uniform_below(eng, params.period);
            std::vector<int> sym(p);
            for (auto& v : sym)
              v = static_cast<int>(uniform_below(eng, static_cast<std::uint64_t>(s.alphabet)));
            return symbolic_point(std::move(sym));
          },
          [&](const CubeShift& s) {
            const std::size_t p = params.period_mode == PeriodMode::Exact
                                      ? params.period
                                      : 1 + uniform_below(eng, params.period);
            std::vector<double> c(p * static_cast<std::size_t>(s.dim));
            for (auto& v : c) v = uniform01(eng);
            return cube_point(static_cast<std::size_t>(s.dim), std::move(c));
          },
          [&](const ProductSystem& s) {
            Point l = sample_random(*s.left, eng, params);
            Point r = sample_random(*s.right, eng, params);
            return product_point(std::move(l), std::move(r));
          },
          [&](const auto&) { return scalar_point(uniform01(eng)); }},
      sys.kind);
}

// Word number `index` (base-`radix` digits, most significant first).
std::vector<std::size_t> word_digits(std::uint64_t index, std::size_t radix,
                                     std::size_t length) {
  std::vector<std::size_t> d(length);
  for (std::size_t i = length; i-- > 0;) {
    d[i] = static_cast<std::size_t>(index % radix);
    index /= radix;
  }
  return d;
}

std::vector<Point> sample_grid(const SystemSpec& sys, std::size_t count,
                               const SampleParams& params) {
  std::vector<Point> out;
  auto words = [&](std::size_t radix, auto make) {
    const double total_d = std::pow(static_cast<double>(radix),
                                    static_cast<double>(params.period));
    if (total_d > 9.0e15)
      throw ValidationError("sampling.period", "grid enumeration too large");
    const auto total = static_cast<std::uint64_t>(total_d);
    const std::uint64_t take = std::min<std::uint64_t>(count, total);
    out.reserve(take);
    for (std::uint64_t j = 0; j < take; ++j) {
      // Even striding: floor(j * total / take), computed without overflow.
      const std::uint64_t idx = static_cast<std::uint64_t>(
          (static_cast<unsigned __int128>(j) * total) / take);
      out.push_back(make(word_digits(idx, radix, params.period)));
    }
  };
  std::visit(
      overloaded{
          [&](const FullShift& s) {
            words(static_cast<std::size_t>(s.alphabet), [](const auto& d) {
              return symbolic_point(std::vector<int>(d.begin(), d.end()));
            });
          },
          [&](const CubeShift& s) {
            if (params.levels == 0)
              throw ValidationError("sampling.levels", "must be >= 1 for cube grids");
            const std::size_t m = params.levels;
            const auto dim = static_cast<std::size_t>(s.dim);
            std::size_t radix = 1;
            for (std::size_t c = 0; c < dim; ++c) radix *= m;
            words(radix, [&](const auto& d) {
              std::vector<double> coords;
              coords.reserve(d.size() * dim);
              for (std::size_t v : d) {
                auto lv = word_digits(v, m, dim);
                for (std::size_t l : lv)
                  coords.push_back((2.0 * static_cast<double>(l) + 1.0) /
                                   (2.0 * static_cast<double>(m)));
              }
              return cube_point(dim, std::move(coords));
            });
          },
          [&](const ProductSystem&) {
            throw ValidationError("sampling.family",
                                  "grid sampling is not defined for product systems");
          },
          [&](const auto&) {
            out.reserve(count);
            for (std::size_t i = 0; i < count; ++i)
              out.push_back(scalar_point((2.0 * static_cast<double>(i) + 1.0) /
                                         (2.0 * static_cast<double>(count))));
          }},
      sys.kind);
  return out;
}

}  // namespace

SampleSet sample_points(const SystemSpec& sys, std::size_t count,
                        std::uint64_t seed, const SampleParams& params) {
  if (count == 0) throw ValidationError("sampling.count", "must be >= 1");
  if (params.period == 0) throw ValidationError("sampling.period", "must be >= 1");
  validate(sys);
  SampleSet set;
  set.seed = seed;
  set.system = std::make_shared<const SystemSpec>(sys);
  if (params.family == SampleFamily::Grid) {
    set.points = sample_grid(sys, count, params);
  } else {
    Engine eng(seed);
    set.points.reserve(count);
    for (std::size_t i = 0; i < count; ++i)
      set.points.push_back(sample_random(sys, eng, params));
  }
  return set;
}

// ---------------------------------------------------------------------------

std::string to_string(const SystemSpec& sys) {
  return std::visit(
      overloaded{
          [](const FullShift& s) {
            return "fullshift(k=" + std::to_string(s.alphabet) +
                   ",base=" + format_double(s.decay_base) + ")";
          },
          [](const CubeShift& s) {
            return "cube(D=" + std::to_string(s.dim) +
                   ",base=" + format_double(s.decay_base) + ")";
          },
          [](const DoublingMap&) { return std::string("doubling"); },
          [](const TentMap&) { return std::string("tent"); },
          [](const IdentityMap&) { return std::string("identity"); },
          [](const ProductSystem& s) {
            return std::string("product(") +
                   (s.combiner == Combiner::Max ? "max" : "sum") + ";" +
                   to_string(*s.left) + ";" + to_string(*s.right) + ")";
          }},
      sys.kind);
}

std::string to_string(const Point& p) {
  return std::visit(
      overloaded{
          [](const SymbolicPeriodic& x) {
            std::string s;
            for (std::size_t i = 0; i < x.symbols.size(); ++i) {
              if (i) s += ',';
              s += std::to_string(x.symbols[i]);
            }
            return s;
          },
          [](const CubePeriodic& x) {
            std::string s;
            for (std::size_t r = 0; r < x.period(); ++r) {
              if (r) s += ',';
              for (std::size_t c = 0; c < x.dim; ++c) {
                if (c) s += ':';
                s += format_double(x.coords[r * x.dim + c]);
              }
            }
            return s;
          },
          [](const Scalar& x) { return format_double(x.value); },
          [](const ProductPoint& x) {
            return "(" + to_string(x.parts[0]) + ")|(" + to_string(x.parts[1]) + ")";
          }},
      p.value);
}

SystemSpec parse_system(const std::string& text) {
  const std::string t = trim(text);
  const auto open = t.find('(');
  const std::string name = trim(t.substr(0, open));
  std::string args;
  if (open != std::string::npos) {
    if (t.back() != ')')
      throw ValidationError("system", "missing ')' in '" + t + "'");
    args = t.substr(open + 1, t.size() - open - 2);
  }

  if (name == "product") {
    auto parts = split_top(args, ';');
    if (parts.size() != 3)
      throw ValidationError("system", "product needs 'max|sum;<left>;<right>'");
    const std::string comb = trim(parts[0]);
    Combiner c;
    if (comb == "max") c = Combiner::Max;
    else if (comb == "sum") c = Combiner::Sum;
    else throw ValidationError("system", "unknown combiner '" + comb + "'");
    return product_system(parse_system(parts[1]), parse_system(parts[2]), c);
  }

  std::vector<std::pair<std::string, std::string>> kv;
  if (!trim(args).empty()) {
    for (const auto& item : split_top(args, ',')) {
      const auto eq = item.find('=');
      if (eq == std::string::npos)
        throw ValidationError("system", "expected key=value, got '" + item + "'");
      kv.emplace_back(trim(item.substr(0, eq)), trim(item.substr(eq + 1)));
    }
  }
  auto reject_unknown = [&](std::initializer_list<const char*> allowed) {
    for (const auto& [k, v] : kv) {
      bool ok = false;
      for (const char* a : allowed) ok = ok || k == a;
      if (!ok) throw ValidationError("system." + k, "unknown parameter for " + name);
    }
  };

  SystemSpec sys;
  if (name == "fullshift") {
    reject_unknown({"k", "base"});
    FullShift s;
    for (const auto& [k, v] : kv) {
      if (k == "k") s.alphabet = static_cast<int>(parse_long(v, "system.k"));
      if (k == "base") s.decay_base = parse_double(v, "system.base");
    }
    sys.kind = s;
  } else if (name == "cube") {
    reject_unknown({"D", "base"});
    CubeShift s;
    for (const auto& [k, v] : kv) {
      if (k == "D") s.dim = static_cast<int>(parse_long(v, "system.D"));
      if (k == "base") s.decay_base = parse_double(v, "system.base");
    }
    sys.kind = s;
  } else if (name == "doubling" || name == "tent" || name == "identity") {
    reject_unknown({});
    if (name == "doubling") sys.kind = DoublingMap{};
    if (name == "tent") sys.kind = TentMap{};
    if (name == "identity") sys.kind = IdentityMap{};
  } else {
    throw ValidationError("system", "unknown system '" + name + "'");
  }
  validate(sys);
  return sys;
}

Point parse_point(const SystemSpec& sys, const std::string& text) {
  Point p = std::visit(
      overloaded{
          [&](const FullShift&) {
            std::vector<int> sym;
            for (const auto& item : split_top(text, ','))
              sym.push_back(static_cast<int>(parse_long(item, "point")));
            return symbolic_point(std::move(sym));
          },
          [&](const CubeShift& s) {
            std::vector<double> coords;
            for (const auto& step : split_top(text, ',')) {
              auto comps = split_top(step, ':');
              if (comps.size() != static_cast<std::size_t>(s.dim))
                throw ValidationError("point", "each time step needs " +
                                                   std::to_string(s.dim) + " coordinates");
              for (const auto& c : comps) coords.push_back(parse_double(c, "point"));
            }
            return cube_point(static_cast<std::size_t>(s.dim), std::move(coords));
          },
          [&](const ProductSystem& s) {
            auto parts = split_top(text, '|');
            if (parts.size() != 2)
              throw ValidationError("point", "product point needs '<left>|<right>'");
            return product_point(parse_point(*s.left, strip_parens(parts[0])),
                                 parse_point(*s.right, strip_parens(parts[1])));
          },
          [&](const auto&) { return scalar_point(parse_double(text, "point")); }},
      sys.kind);
  check_point(sys, p);
  return p;
}

}  // namespace fkdim
