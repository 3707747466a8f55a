#include "fkdim/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numeric>
#include <sstream>

#include "fkdim/errors.hpp"
#include "fkdim/parallel.hpp"
#include "fkdim/rng.hpp"

namespace fkdim {

// ---------------------------------------------------------------------------
// Fits

LinearFit fit_line(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2)
    throw ValidationError("fit", "needs at least two (x, y) pairs");
  const double m = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= m;
  my /= m;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (!(sxx > 0.0)) throw ValidationError("fit", "x values must not all coincide");
  LinearFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - (f.slope * x[i] + f.intercept);
    ss_res += r * r;
  }
  f.r2 = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
  return f;
}

GrowthFit growth_rate(std::span<const CountPoint> counts, std::size_t n_min,
                      std::size_t n_max) {
  std::vector<double> xs, ys;
  GrowthFit g;
  g.limsup = -std::numeric_limits<double>::infinity();
  g.liminf = std::numeric_limits<double>::infinity();
  for (const auto& c : counts) {
    if (c.n < n_min || c.n > n_max) continue;
    if (c.n == 0) throw ValidationError("grid.n_min", "n must be >= 1");
    if (!(c.count >= 1.0)) throw ValidationError("counts", "counts must be >= 1");
    const double lc = std::log(c.count);
    xs.push_back(static_cast<double>(c.n));
    ys.push_back(lc);
    g.limsup = std::max(g.limsup, lc / static_cast<double>(c.n));
    g.liminf = std::min(g.liminf, lc / static_cast<double>(c.n));
  }
  if (xs.size() < 3)
    throw ValidationError("grid.n_window", "growth rate needs at least 3 values of n");
  const LinearFit f = fit_line(xs, ys);
  g.rate = f.slope;
  g.r2 = f.r2;
  g.points = xs.size();
  return g;
}

// ---------------------------------------------------------------------------
// Plans

NWindow EstimatorGrid::window_for(MetricKind kind) const {
  if (kind == MetricKind::Mistake && mistake_window) return *mistake_window;
  return {n_min, n_max};
}

void validate(const EstimatorGrid& grid, std::size_t min_epsilons) {
  if (grid.epsilons.size() < min_epsilons)
    throw ValidationError("grid.epsilons",
                          "needs at least " + std::to_string(min_epsilons) + " values");
  for (std::size_t i = 0; i < grid.epsilons.size(); ++i) {
    if (!(grid.epsilons[i] > 0.0)) throw ValidationError("grid.epsilons", "must be > 0");
    if (i > 0 && !(grid.epsilons[i] < grid.epsilons[i - 1]))
      throw ValidationError("grid.epsilons", "must be strictly decreasing");
  }
  if (grid.n_min < 1) throw ValidationError("grid.n_min", "must be >= 1");
  if (!(grid.n_min < grid.n_max)) throw ValidationError("grid.n_max", "must exceed n_min");
  if (grid.n_max - grid.n_min < 2)
    throw ValidationError("grid.n_max", "window must hold at least 3 values of n");
  if (const auto& w = grid.mistake_window) {
    if (w->n_min < 1 || w->n_max < w->n_min + 2)
      throw ValidationError("grid.mistake_n_window",
                            "must start at n >= 1 and hold at least 3 values of n");
  }
}

std::size_t SamplingPlan::size_for(std::size_t eps_index) const {
  if (universe_sizes.empty()) throw ValidationError("sampling.universe", "no sizes given");
  const std::size_t s =
      universe_sizes.size() == 1 ? universe_sizes[0] : universe_sizes.at(eps_index);
  if (s == 0) throw ValidationError("sampling.universe", "sizes must be >= 1");
  return s;
}

std::size_t SamplingPlan::size_for(std::size_t eps_index, std::size_t n) const {
  const std::size_t s = size_for(eps_index);
  const auto cap = n_caps.find(n);
  return cap == n_caps.end() ? s : std::min(s, cap->second);
}

std::size_t SamplingPlan::max_size() const {
  if (universe_sizes.empty()) throw ValidationError("sampling.universe", "no sizes given");
  return *std::max_element(universe_sizes.begin(), universe_sizes.end());
}

std::uint64_t sample_seed(std::uint64_t master, SampleRole role, std::uint64_t measure) {
  return derive_seed(master, {static_cast<std::uint64_t>(role), measure});
}

namespace {

void check_plan(const SamplingPlan& plan, const EstimatorGrid& grid) {
  if (plan.universe_sizes.size() != 1 && plan.universe_sizes.size() != grid.epsilons.size())
    throw ValidationError("sampling.universe",
                          "give one size or one size per epsilon");
  for (std::size_t i = 0; i < grid.epsilons.size(); ++i) plan.size_for(i);
  for (const auto& [n, cap] : plan.n_caps)
    if (n == 0 || cap == 0) throw ValidationError("sampling.n_caps", "n and caps must be >= 1");
}

// Universe points (largest size) followed by the extra candidates, with
// orbits up to n_max.
struct SampleBank {
  SampleSet set;
  std::size_t universe_max = 0;
  std::size_t extra = 0;
  OrbitBank bank;

  std::vector<std::uint32_t> universe_ids(std::size_t count) const {
    return all_ids(count);
  }
  std::vector<std::uint32_t> candidate_ids(std::size_t count) const {
    std::vector<std::uint32_t> ids = all_ids(count);
    for (std::size_t k = 0; k < extra; ++k)
      ids.push_back(static_cast<std::uint32_t>(universe_max + k));
    return ids;
  }
};

template <class Draw>
SampleBank make_bank(const SystemSpec& sys, const SamplingPlan& plan, std::size_t length,
                     Draw&& draw) {
  SampleBank b;
  b.universe_max = plan.max_size();
  b.extra = plan.extra_candidates;
  b.set = draw(b.universe_max, SampleRole::Universe);
  if (b.extra > 0) {
    SampleSet more = draw(b.extra, SampleRole::Candidates);
    b.set.points.insert(b.set.points.end(), more.points.begin(), more.points.end());
  }
  b.bank = OrbitBank(sys, b.set.points, length);
  return b;
}

BallOracle make_oracle(MetricKind kind, std::size_t n, double eps,
                       const std::shared_ptr<const SystemSpec>& sys,
                       const MistakeFunction& mistake) {
  BallOracle o;
  o.kind = kind;
  o.n = n;
  o.eps = eps;
  o.system = sys;
  o.mistake = mistake;
  return o;
}

// Coverages of one ball shape at every epsilon of the grid, on the
// per-cell universe prefixes.
std::vector<Coverage> grid_coverages(const BallOracle& shape, const SampleBank& b,
                                     const SamplingPlan& plan, const EstimatorGrid& grid) {
  std::vector<std::size_t> sizes;
  for (std::size_t e = 0; e < grid.epsilons.size(); ++e)
    sizes.push_back(plan.size_for(e, shape.n));
  if (b.extra == 0) return build_coverages(shape, grid.epsilons, b.bank, sizes, plan.threads);
  std::vector<Coverage> out;
  for (std::size_t e = 0; e < sizes.size(); ++e) {
    BallOracle o = shape;
    o.eps = grid.epsilons[e];
    const auto u = b.universe_ids(sizes[e]);
    const auto c = b.candidate_ids(sizes[e]);
    out.push_back(build_coverage(o, b.bank, c, b.bank, u, plan.threads));
  }
  return out;
}

// Runs cell(e, i, coverage) for every epsilon index e and n = n_min + i,
// sharing pair evaluations across epsilons.
template <class Cell>
void for_each_cell(BallOracle shape, const SampleBank& b, const SamplingPlan& plan,
                   const EstimatorGrid& grid, NWindow window, Cell&& cell) {
  for (std::size_t n = window.n_min; n <= window.n_max; ++n) {
    shape.n = n;
    const std::vector<Coverage> covs = grid_coverages(shape, b, plan, grid);
    parallel_for(covs.size(), plan.threads,
                 [&](std::size_t e) { cell(e, n - window.n_min, covs[e]); });
  }
}

template <class Cell>
void for_each_cell(BallOracle shape, const SampleBank& b, const SamplingPlan& plan,
                   const EstimatorGrid& grid, Cell&& cell) {
  for_each_cell(shape, b, plan, grid, NWindow{grid.n_min, grid.n_max},
                std::forward<Cell>(cell));
}

double log_inv(double eps) { return std::log(1.0 / eps); }

void check_mdim_grid(const EstimatorGrid& grid) {
  validate(grid, 2);
  if (!(grid.epsilons.front() < 1.0))
    throw ValidationError("grid.epsilons", "mean dimension slopes need every epsilon < 1");
}

}  // namespace

// ---------------------------------------------------------------------------
// Mean dimension

std::vector<MdimEstimate> mdim_estimates(const SystemSpec& sys,
                                         std::span<const MetricKind> kinds,
                                         const SamplingPlan& plan, const EstimatorGrid& grid,
                                         const MistakeFunction& mistake) {
  validate(sys);
  check_mdim_grid(grid);
  check_plan(plan, grid);
  std::vector<NWindow> windows;
  std::size_t longest = grid.n_max;
  for (MetricKind k : kinds) {
    windows.push_back(grid.window_for(k));
    longest = std::max(longest, windows.back().n_max);
  }
  const SampleBank b = make_bank(sys, plan, longest, [&](std::size_t count, SampleRole r) {
    return sample_points(sys, count, sample_seed(plan.seed, r), plan.params);
  });

  const std::size_t ne = grid.epsilons.size();
  std::vector<std::vector<RateCell>> cells(kinds.size());
  for (std::size_t k = 0; k < kinds.size(); ++k) {
    const std::size_t nn = windows[k].n_max - windows[k].n_min + 1;
    cells[k].resize(ne * nn);
    const BallOracle shape = make_oracle(kinds[k], 1, 1.0, b.set.system, mistake);
    for_each_cell(shape, b, plan, grid, windows[k],
                  [&](std::size_t e, std::size_t i, const Coverage& cov) {
                    const CoverResult r = spanning_number(cov, plan.mode, plan.limits);
                    RateCell& c = cells[k][e * nn + i];
                    c.eps = grid.epsilons[e];
                    c.n = windows[k].n_min + i;
                    c.universe = cov.universe_size;
                    c.count = r.cardinality;
                    c.lower_bound = r.lower_bound;
                    c.method = r.method;
                    c.log_count_over_n =
                        std::log(static_cast<double>(r.cardinality)) / static_cast<double>(c.n);
                  });
  }

  std::vector<MdimEstimate> out;
  for (std::size_t k = 0; k < kinds.size(); ++k) {
    const std::size_t nn = windows[k].n_max - windows[k].n_min + 1;
    MdimEstimate m;
    m.kind = kinds[k];
    m.curve.kind = kinds[k];
    std::vector<double> xs, ups, lows;
    for (std::size_t e = 0; e < ne; ++e) {
      RateRow row;
      row.eps = grid.epsilons[e];
      std::vector<CountPoint> pts;
      for (std::size_t i = 0; i < nn; ++i) {
        const RateCell& c = cells[k][e * nn + i];
        row.cells.push_back(c);
        pts.push_back({c.n, static_cast<double>(c.count)});
      }
      row.fit = growth_rate(pts, windows[k].n_min, windows[k].n_max);
      xs.push_back(log_inv(row.eps));
      m.rates.push_back(row.fit.rate);
      m.ratios.push_back(row.fit.rate / log_inv(row.eps));
      ups.push_back(row.fit.limsup);
      lows.push_back(row.fit.liminf);
      m.curve.rows.push_back(std::move(row));
    }
    m.fit = fit_line(xs, m.rates);
    m.upper_slope = fit_line(xs, ups).slope;
    m.lower_slope = fit_line(xs, lows).slope;
    m.ratio_smallest = m.ratios.back();
    out.push_back(std::move(m));
  }
  return out;
}

MdimEstimate mdim_estimate(MetricKind kind, const SystemSpec& sys, const SamplingPlan& plan,
                           const EstimatorGrid& grid, const MistakeFunction& mistake) {
  const MetricKind kinds[] = {kind};
  return std::move(mdim_estimates(sys, kinds, plan, grid, mistake).front());
}

// ---------------------------------------------------------------------------
// Measures

MeasureSampler MeasureSampler::uniform() { return MeasureSampler{}; }

MeasureSampler MeasureSampler::bernoulli(std::vector<double> weights) {
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w))
      throw ValidationError("measures", "Bernoulli weights must be finite and >= 0");
    total += w;
  }
  if (weights.size() < 2 || !(total > 0.0))
    throw ValidationError("measures", "Bernoulli needs >= 2 weights with a positive sum");
  MeasureSampler m;
  m.kind_ = Kind::Bernoulli;
  for (double& w : weights) w /= total;
  m.weights_ = std::move(weights);
  return m;
}

MeasureSampler MeasureSampler::point_mass(Point atom) {
  MeasureSampler m;
  m.kind_ = Kind::PointMass;
  m.atom_ = std::move(atom);
  return m;
}

MeasureSampler MeasureSampler::parse(const SystemSpec& sys, const std::string& text) {
  if (text == "uniform") return uniform();
  const auto open = text.find('(');
  if (open == std::string::npos || text.back() != ')')
    throw ValidationError("measures", "expected uniform, bernoulli(...) or point(...), got '" +
                                          text + "'");
  const std::string name = text.substr(0, open);
  const std::string inner = text.substr(open + 1, text.size() - open - 2);
  if (name == "point") return point_mass(parse_point(sys, inner));
  if (name == "bernoulli") {
    std::vector<double> w;
    std::stringstream ss(inner);
    std::string item;
    while (std::getline(ss, item, ',')) {
      char* end = nullptr;
      const double v = std::strtod(item.c_str(), &end);
      if (end == item.c_str()) throw ValidationError("measures", "bad weight '" + item + "'");
      w.push_back(v);
    }
    return bernoulli(std::move(w));
  }
  throw ValidationError("measures", "unknown measure '" + name + "'");
}

std::string MeasureSampler::to_string() const {
  switch (kind_) {
    case Kind::Uniform: return "uniform";
    case Kind::PointMass: return "point(" + fkdim::to_string(*atom_) + ")";
    case Kind::Bernoulli: {
      std::ostringstream s;
      s.precision(17);
      s << "bernoulli(";
      for (std::size_t i = 0; i < weights_.size(); ++i) s << (i ? "," : "") << weights_[i];
      s << ')';
      return s.str();
    }
  }
  return "?";
}

SampleSet MeasureSampler::draw(const SystemSpec& sys, std::size_t count, std::uint64_t seed,
                               const SampleParams& params) const {
  if (count == 0) throw ValidationError("sampling.count", "must be >= 1");
  if (kind_ == Kind::Uniform) return sample_points(sys, count, seed, params);
  SampleSet s;
  s.seed = seed;
  s.system = std::make_shared<const SystemSpec>(sys);
  if (kind_ == Kind::PointMass) {
    check_point(sys, *atom_);
    s.points.assign(count, *atom_);
    return s;
  }
  const auto* fs = std::get_if<FullShift>(&sys.kind);
  if (!fs) throw ValidationError("measures", "Bernoulli measures need a full shift");
  if (weights_.size() != static_cast<std::size_t>(fs->alphabet))
    throw ValidationError("measures", "Bernoulli needs one weight per symbol");
  if (params.period == 0) throw ValidationError("sampling.period", "must be >= 1");
  Engine eng(seed);
  s.points.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t p = params.period_mode == PeriodMode::Exact
                              ? params.period
                              : 1 + uniform_below(eng, params.period);
    std::vector<int> sym(p);
    for (auto& v : sym) {
      const double u = uniform01(eng);
      double acc = 0.0;
      std::size_t k = 0;
      while (k + 1 < weights_.size() && u >= (acc += weights_[k])) ++k;
      v = static_cast<int>(k);
    }
    s.points.push_back(symbolic_point(std::move(sym)));
  }
  return s;
}

// ---------------------------------------------------------------------------
// Katok entropy

KatokEstimate katok_entropy_estimate(const SystemSpec& sys, const MeasureSampler& measure,
                                     std::span<const double> deltas, const SamplingPlan& plan,
                                     const EstimatorGrid& grid, std::uint64_t measure_index) {
  validate(sys);
  validate(grid, 1);
  check_plan(plan, grid);
  if (deltas.empty()) throw ValidationError("katok.deltas", "needs at least one delta");
  for (double d : deltas)
    if (!(d > 0.0 && d < 1.0)) throw ValidationError("katok.deltas", "must lie in (0, 1)");

  const SampleBank b = make_bank(sys, plan, grid.n_max, [&](std::size_t count, SampleRole r) {
    const std::uint64_t role = r == SampleRole::Universe ? 0 : 1;
    return measure.draw(sys, count,
                        derive_seed(plan.seed, {static_cast<std::uint64_t>(SampleRole::Measure),
                                                measure_index, role}),
                        plan.params);
  });

  const std::size_t ne = grid.epsilons.size();
  const std::size_t nn = grid.n_max - grid.n_min + 1;
  const std::size_t nd = deltas.size();
  struct CellOut {
    std::vector<std::size_t> partial;
    std::size_t full = 0;
    CoverMethod method = CoverMethod::Greedy;
    std::size_t universe = 0;
  };
  std::vector<CellOut> cells(ne * nn);
  const BallOracle shape =
      make_oracle(MetricKind::FK, 1, 1.0, b.set.system, MistakeFunction::power_law(0.5));
  for_each_cell(shape, b, plan, grid, [&](std::size_t e, std::size_t i, const Coverage& cov) {
    const std::size_t idx = e * nn + i;
    const std::size_t size = cov.universe_size;
    CellOut& out = cells[idx];
    out.universe = size;
    if (plan.mode == CoverMode::Greedy) {
      // Partial covers are prefixes of the full greedy cover.
      const GreedyTrace t = greedy_trace(cov);
      out.full = t.steps_for(size);
      for (double d : deltas) out.partial.push_back(t.steps_for(partial_cover_threshold(size, d)));
      out.method = CoverMethod::Greedy;
    } else {
      const CoverResult full = spanning_number(cov, CoverMode::Exact, plan.limits);
      out.full = full.cardinality;
      out.method = full.method;
      for (double d : deltas) {
        const CoverResult p = partial_cover_number(cov, d, CoverMode::Exact, plan.limits);
        out.partial.push_back(p.cardinality);
        if (p.method == CoverMethod::Greedy) out.method = CoverMethod::Greedy;
      }
    }
  });

  KatokEstimate est;
  est.measure = measure.to_string();
  est.deltas.assign(deltas.begin(), deltas.end());
  std::vector<double> xs;
  for (double eps : grid.epsilons) xs.push_back(log_inv(eps));
  for (std::size_t e = 0; e < ne; ++e) {
    std::vector<CountPoint> pts;
    for (std::size_t i = 0; i < nn; ++i)
      pts.push_back({grid.n_min + i, static_cast<double>(cells[e * nn + i].full)});
    est.spanning_fits.push_back(growth_rate(pts, grid.n_min, grid.n_max));
  }
  for (std::size_t d = 0; d < nd; ++d) {
    std::vector<double> rates;
    for (std::size_t e = 0; e < ne; ++e) {
      KatokRow row;
      row.delta = deltas[d];
      row.eps = grid.epsilons[e];
      std::vector<CountPoint> pts;
      for (std::size_t i = 0; i < nn; ++i) {
        const CellOut& c = cells[e * nn + i];
        KatokCell kc;
        kc.delta = deltas[d];
        kc.eps = grid.epsilons[e];
        kc.n = grid.n_min + i;
        kc.universe = c.universe;
        kc.partial_count = c.partial[d];
        kc.full_count = c.full;
        kc.method = c.method;
        row.cells.push_back(kc);
        pts.push_back({kc.n, static_cast<double>(kc.partial_count)});
      }
      row.fit = growth_rate(pts, grid.n_min, grid.n_max);
      rates.push_back(row.fit.rate);
      est.rows.push_back(std::move(row));
    }
    if (ne >= 2 && grid.epsilons.front() < 1.0)
      est.slope_fits.push_back(fit_line(xs, rates));
  }
  return est;
}

// ---------------------------------------------------------------------------
// Local entropy

namespace {

// Coverage restricted to the universe members listed in `members` (sorted;
// entries beyond the universe are dropped), re-indexed by position.
Coverage restrict_universe(const Coverage& cov, const std::vector<std::uint32_t>& members) {
  std::vector<std::int64_t> pos(cov.universe_size, -1);
  std::size_t kept = 0;
  for (auto u : members)
    if (u < cov.universe_size) pos[u] = static_cast<std::int64_t>(kept++);
  if (kept == 0)
    throw ValidationError("local.radii", "a neighbourhood has no sample point at this size");
  Coverage out;
  out.universe_size = kept;
  out.sets.resize(cov.sets.size());
  for (std::size_t c = 0; c < cov.sets.size(); ++c)
    for (auto u : cov.sets[c])
      if (pos[u] >= 0) out.sets[c].push_back(static_cast<std::uint32_t>(pos[u]));
  return out;
}

// Centers from `previous` whose balls meet the restricted universe.
std::vector<std::size_t> touching(const Coverage& restricted,
                                  const std::vector<std::size_t>& previous) {
  std::vector<std::size_t> out;
  for (auto c : previous)
    if (!restricted.sets[c].empty()) out.push_back(c);
  return out;
}

}  // namespace

std::vector<LocalEntropyEstimate> local_entropy_estimates(
    const SystemSpec& sys, std::span<const Point> probes, std::span<const double> radii,
    const SamplingPlan& plan, const EstimatorGrid& grid) {
  validate(sys);
  validate(grid, 1);
  check_plan(plan, grid);
  if (probes.empty()) throw ValidationError("local.probes", "needs at least one probe point");
  if (radii.empty()) throw ValidationError("local.radii", "needs at least one radius");
  for (std::size_t i = 0; i < radii.size(); ++i) {
    if (!(radii[i] > 0.0)) throw ValidationError("local.radii", "must be > 0");
    if (i > 0 && !(radii[i] < radii[i - 1]))
      throw ValidationError("local.radii", "must be strictly decreasing");
  }
  for (const Point& p : probes) check_point(sys, p);

  const SampleBank b = make_bank(sys, plan, grid.n_max, [&](std::size_t count, SampleRole r) {
    return sample_points(sys, count, sample_seed(plan.seed, r), plan.params);
  });
  const std::size_t ne = grid.epsilons.size();
  const std::size_t nn = grid.n_max - grid.n_min + 1;
  const std::size_t np = probes.size();
  const std::size_t nr = radii.size();

  // members[p][r][e]: universe indices inside the closed ball.
  std::vector<std::vector<std::vector<std::vector<std::uint32_t>>>> members(
      np, std::vector<std::vector<std::vector<std::uint32_t>>>(nr, std::vector<std::vector<std::uint32_t>>(ne)));
  for (std::size_t p = 0; p < np; ++p) {
    std::vector<double> dist(b.universe_max);
    for (std::size_t u = 0; u < b.universe_max; ++u)
      dist[u] = evaluate_metric(sys, probes[p], b.set.points[u]);
    for (std::size_t r = 0; r < nr; ++r)
      for (std::size_t e = 0; e < ne; ++e) {
        const std::size_t size = plan.size_for(e);
        for (std::size_t u = 0; u < size; ++u)
          if (dist[u] <= radii[r]) members[p][r][e].push_back(static_cast<std::uint32_t>(u));
        if (members[p][r][e].empty())
          throw ValidationError("local.radii", "probe " + std::to_string(p) +
                                                   " has no sample point within radius " +
                                                   std::to_string(radii[r]));
      }
  }

  struct CellOut {
    std::size_t global = 0;
    std::vector<std::size_t> local;  // [p * nr + r]
  };
  std::vector<CellOut> cells(ne * nn);
  const BallOracle shape =
      make_oracle(MetricKind::FK, 1, 1.0, b.set.system, MistakeFunction::power_law(0.5));
  for_each_cell(shape, b, plan, grid, [&](std::size_t e, std::size_t i, const Coverage& cov) {
    const std::size_t idx = e * nn + i;
    const CoverResult global = spanning_number(cov, plan.mode, plan.limits);
    CellOut& out = cells[idx];
    out.global = global.cardinality;
    out.local.resize(np * nr);
    for (std::size_t p = 0; p < np; ++p) {
      std::vector<std::size_t> previous = global.centers;
      for (std::size_t r = 0; r < nr; ++r) {
        const Coverage sub = restrict_universe(cov, members[p][r][e]);
        CoverResult own = spanning_number(sub, plan.mode, plan.limits);
        std::vector<std::size_t> inherited = touching(sub, previous);
        if (inherited.size() < own.cardinality) own.centers = std::move(inherited);
        out.local[p * nr + r] = own.centers.size();
        previous = std::move(own.centers);
      }
    }
  });

  std::vector<LocalEntropyEstimate> out;
  for (std::size_t p = 0; p < np; ++p) {
    for (std::size_t e = 0; e < ne; ++e) {
      LocalEntropyEstimate est;
      est.center = probes[p];
      est.eps = grid.epsilons[e];
      std::vector<CountPoint> gpts;
      for (std::size_t i = 0; i < nn; ++i)
        gpts.push_back({grid.n_min + i, static_cast<double>(cells[e * nn + i].global)});
      est.global = growth_rate(gpts, grid.n_min, grid.n_max);
      est.inf_rate = std::numeric_limits<double>::infinity();
      est.inf_limsup = std::numeric_limits<double>::infinity();
      for (std::size_t r = 0; r < nr; ++r) {
        LocalRow row;
        row.radius = radii[r];
        row.eps = est.eps;
        row.members = members[p][r][e].size();
        for (std::size_t i = 0; i < nn; ++i)
          row.counts.push_back(
              {grid.n_min + i, static_cast<double>(cells[e * nn + i].local[p * nr + r])});
        row.fit = growth_rate(row.counts, grid.n_min, grid.n_max);
        est.inf_rate = std::min(est.inf_rate, row.fit.rate);
        est.inf_limsup = std::min(est.inf_limsup, row.fit.limsup);
        est.rows.push_back(std::move(row));
      }
      out.push_back(std::move(est));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Verification

bool VerifyReport::pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
}

VerifyReport verify_slope_agreement(const SystemSpec& sys, const SamplingPlan& plan,
                                const EstimatorGrid& grid, const MistakeFunction& mistake,
                                const SlopeAgreementOptions& opts, std::vector<MdimEstimate>* out) {
  VerifyReport rep;
  rep.name = "thm11";
  auto est = mdim_estimates(sys, opts.kinds, plan, grid, mistake);
  for (std::size_t i = 0; i < est.size(); ++i) {
    for (std::size_t j = i + 1; j < est.size(); ++j) {
      Check c;
      c.name = "slope_diff_" + to_string(est[i].kind) + "_" + to_string(est[j].kind);
      c.value = std::fabs(est[i].slope() - est[j].slope());
      c.limit = opts.tolerance;
      c.pass = c.value <= c.limit;
      rep.checks.push_back(c);
    }
    if (opts.slope_min) {
      Check c{"slope_min_" + to_string(est[i].kind), est[i].slope() >= *opts.slope_min,
              est[i].slope(), *opts.slope_min, ""};
      rep.checks.push_back(c);
    }
    if (opts.slope_max) {
      Check c{"slope_max_" + to_string(est[i].kind), est[i].slope() <= *opts.slope_max,
              est[i].slope(), *opts.slope_max, ""};
      rep.checks.push_back(c);
    }
  }
  if (out) *out = std::move(est);
  return rep;
}

VerifyReport verify_katok_bound(const SystemSpec& sys, const SamplingPlan& plan,
                                const EstimatorGrid& grid, const KatokBoundOptions& opts,
                                std::vector<KatokEstimate>* out) {
  VerifyReport rep;
  rep.name = "thm12";
  if (opts.measures.empty()) throw ValidationError("katok.measures", "needs at least one measure");
  const MdimEstimate fk = mdim_estimate(MetricKind::FK, sys, plan, grid,
                                        MistakeFunction::power_law(0.5));
  const double deltas[] = {opts.delta};
  std::vector<KatokEstimate> all;
  std::size_t violations = 0, cells = 0;
  double max_slope = -std::numeric_limits<double>::infinity();
  for (std::size_t m = 0; m < opts.measures.size(); ++m) {
    KatokEstimate k = katok_entropy_estimate(sys, opts.measures[m], deltas, plan, grid, m);
    for (const auto& row : k.rows)
      for (const auto& c : row.cells) {
        ++cells;
        if (c.partial_count > c.full_count) ++violations;
      }
    max_slope = std::max(max_slope, k.slope_fits.front().slope);
    all.push_back(std::move(k));
  }
  rep.checks.push_back({"partial_le_full_per_cell", violations == 0,
                        static_cast<double>(violations), 0.0,
                        std::to_string(cells) + " cells"});
  rep.checks.push_back({"katok_slope_le_fk_slope", max_slope <= fk.slope() + opts.tolerance,
                        max_slope - fk.slope(), opts.tolerance,
                        "max katok slope " + std::to_string(max_slope) + ", fk slope " +
                            std::to_string(fk.slope())});
  if (out) *out = std::move(all);
  return rep;
}

VerifyReport verify_local_bound(const SystemSpec& sys, const SamplingPlan& plan,
                                const EstimatorGrid& grid, const LocalBoundOptions& opts,
                                std::vector<LocalEntropyEstimate>* out) {
  VerifyReport rep;
  rep.name = "thm13";
  auto est = local_entropy_estimates(sys, opts.probes, opts.radii, plan, grid);
  const std::size_t ne = grid.epsilons.size();
  std::size_t one_sided = 0, monotone = 0;
  for (std::size_t e = 0; e < ne; ++e) {
    double sup_limsup = -std::numeric_limits<double>::infinity();
    for (std::size_t p = 0; p < opts.probes.size(); ++p) {
      const auto& le = est[p * ne + e];
      sup_limsup = std::max(sup_limsup, le.inf_limsup);
      for (std::size_t r = 1; r < le.rows.size(); ++r)
        for (std::size_t i = 0; i < le.rows[r].counts.size(); ++i)
          if (le.rows[r].counts[i].count > le.rows[r - 1].counts[i].count) ++monotone;
    }
    if (sup_limsup > est[e].global.limsup) ++one_sided;
  }
  rep.checks.push_back({"sup_local_le_global", one_sided == 0, static_cast<double>(one_sided),
                        0.0, "limsup surrogate, every epsilon"});
  rep.checks.push_back({"local_counts_monotone_in_radius", monotone == 0,
                        static_cast<double>(monotone), 0.0, ""});
  if (opts.gap_tolerance) {
    const std::size_t e = ne - 1;
    double sup_rate = -std::numeric_limits<double>::infinity();
    for (std::size_t p = 0; p < opts.probes.size(); ++p)
      sup_rate = std::max(sup_rate, est[p * ne + e].inf_rate);
    const double gap = est[e].global.rate - sup_rate;
    rep.checks.push_back({"gap_at_smallest_eps", gap <= *opts.gap_tolerance, gap,
                          *opts.gap_tolerance, "global rate minus sup of local rates"});
  }
  if (out) *out = std::move(est);
  return rep;
}

VerifyReport verify_union_sandwich(const SystemSpec& sys, const SamplingPlan& plan,
                           const UnionSandwichOptions& opts) {
  validate(sys);
  if (opts.max_pieces < 2) throw ValidationError("prop32.max_pieces", "must be >= 2");
  if (opts.sample_size < 2) throw ValidationError("prop32.sample_size", "must be >= 2");
  if (opts.ns.empty() || opts.epsilons.empty())
    throw ValidationError("prop32", "needs n and epsilon values");
  std::size_t n_max = *std::max_element(opts.ns.begin(), opts.ns.end());
  const SampleSet s =
      sample_points(sys, opts.sample_size, sample_seed(plan.seed, SampleRole::Universe),
                    plan.params);
  const OrbitBank bank(sys, s.points, n_max);
  const auto ids = all_ids(s.points.size());

  struct Outcome {
    std::size_t max_piece = 0, whole = 0, sum = 0;
  };
  std::vector<Outcome> outcomes(opts.trials);
  parallel_for(opts.trials, plan.threads, [&](std::size_t t) {
    Engine eng(derive_seed(plan.seed, {static_cast<std::uint64_t>(SampleRole::Partition), t}));
    const std::size_t m = 2 + uniform_below(eng, opts.max_pieces - 1);
    std::vector<std::vector<std::uint32_t>> pieces(m);
    // Every piece gets one point first, the rest are assigned at random.
    std::vector<std::uint32_t> order = ids;
    for (std::size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[uniform_below(eng, i)]);
    for (std::size_t i = 0; i < order.size(); ++i)
      pieces[i < m ? i : uniform_below(eng, m)].push_back(order[i]);
    for (auto& p : pieces) std::sort(p.begin(), p.end());

    const std::size_t n = opts.ns[t % opts.ns.size()];
    const double eps = opts.epsilons[(t / opts.ns.size()) % opts.epsilons.size()];
    const BallOracle o = make_oracle(opts.kind, n, eps, s.system, MistakeFunction::power_law(0.5));
    const Coverage cov = build_coverage(o, bank, ids, bank, ids, 1);
    const CoverLimits limits{std::max<std::size_t>(plan.limits.exact_universe_cap, ids.size()),
                             std::max<std::size_t>(plan.limits.exact_candidate_cap, ids.size())};
    Outcome& out = outcomes[t];
    out.whole = spanning_number(cov, CoverMode::Exact, limits).cardinality;
    for (const auto& piece : pieces) {
      const std::size_t r =
          spanning_number(restrict_universe(cov, piece), CoverMode::Exact, limits).cardinality;
      out.max_piece = std::max(out.max_piece, r);
      out.sum += r;
    }
  });

  std::size_t violations = 0;
  for (const auto& o : outcomes)
    if (!(o.max_piece <= o.whole && o.whole <= o.sum)) ++violations;
  VerifyReport rep;
  rep.name = "prop32";
  rep.checks.push_back({"finite_union_sandwich", violations == 0,
                        static_cast<double>(violations), 0.0,
                        std::to_string(opts.trials) + " partitions"});
  return rep;
}

}  // namespace fkdim
