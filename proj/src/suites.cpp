#include "fkdim/suites.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include "fkdim/oracles.hpp"
#include "fkdim/rng.hpp"

namespace fkdim {

namespace {

Check count_check(std::string name, std::size_t violations, std::string detail = {}) {
  return Check{std::move(name), violations == 0, static_cast<double>(violations), 0.0,
               std::move(detail)};
}

Check bound_check(std::string name, double value, double limit) {
  return Check{std::move(name), value <= limit, value, limit, {}};
}

}  // namespace

std::vector<SystemSpec> builtin_systems() {
  return {full_shift(2),
          full_shift(3, 4.0),
          cube_shift(1),
          cube_shift(2),
          doubling_map(),
          tent_map(),
          identity_map(),
          product_system(doubling_map(), full_shift(2), Combiner::Max),
          product_system(tent_map(), identity_map(), Combiner::Sum)};
}

VerifyReport verify_match_oracles(std::size_t matrices, std::uint64_t seed) {
  VerifyReport rep;
  rep.name = "oracles.match";
  Engine eng(seed);
  std::size_t size_bad = 0, witness_bad = 0, definition_bad = 0, thresholds = 0;
  double bisect_gap = 0.0;
  for (std::size_t t = 0; t < matrices; ++t) {
    const auto d = oracles::random_matrix(eng, 1 + t % 6);
    std::vector<double> deltas(d.entries());
    for (double e : d.entries()) deltas.push_back(std::nextafter(e, 2.0));
    deltas.push_back(0.05 + 1.1 * uniform01(eng));
    for (double delta : deltas) {
      if (!(delta > 0.0)) continue;
      ++thresholds;
      const auto m = max_match_size(d, delta, true);
      if (m.size != oracles::brute_force_match(d, delta)) ++size_bad;
      if (!oracles::witness_valid(d, delta, *m.witness) || m.witness->size() != m.size)
        ++witness_bad;
    }
    const double fk = fk_distance(d);
    bisect_gap = std::max(bisect_gap, std::fabs(fk - fk_distance_bisect(d, 1e-10)));
    if (fk != oracles::fk_by_definition(d)) ++definition_bad;
  }
  const std::string where = std::to_string(matrices) + " matrices, " +
                            std::to_string(thresholds) + " thresholds";
  rep.checks.push_back(count_check("match_size_vs_enumeration", size_bad, where));
  rep.checks.push_back(count_check("match_witness_valid", witness_bad, where));
  rep.checks.push_back(bound_check("fk_vs_bisection", bisect_gap, 1e-9));
  rep.checks.push_back(count_check("fk_vs_definition", definition_bad));
  return rep;
}

VerifyReport verify_metric_properties(std::size_t triples, std::size_t n, std::uint64_t seed) {
  VerifyReport rep;
  rep.name = "metrics";
  std::uint64_t k = 0;
  for (const auto& sys : builtin_systems()) {
    const std::string name = to_string(sys);
    const auto s = sample_points(sys, 3 * triples, derive_seed(seed, {k++}),
                                 SampleParams{SampleFamily::Random, 6});
    std::vector<OrbitSegment> orbs;
    orbs.reserve(s.points.size());
    for (const auto& p : s.points) orbs.push_back(orbit(sys, p, n));
    std::size_t asym = 0, dominated = 0;
    double excess = 0.0;
    for (std::size_t t = 0; t < triples; ++t) {
      const auto& x = orbs[3 * t];
      const auto& y = orbs[3 * t + 1];
      const auto& z = orbs[3 * t + 2];
      const auto dxy = distance_matrix(sys, x, y);
      const double xy = fk_distance(dxy);
      const double yx = fk_distance(distance_matrix(sys, y, x));
      const double xz = fk_distance(distance_matrix(sys, x, z));
      const double yz = fk_distance(distance_matrix(sys, y, z));
      if (xy != yx) ++asym;
      excess = std::max(excess, xz - xy - yz);
      if (!(xy <= std::min(bowen_distance(dxy), 1.0))) ++dominated;
    }
    rep.checks.push_back(count_check("fk_symmetry " + name, asym));
    rep.checks.push_back(bound_check("fk_triangle " + name, std::max(excess, 0.0), 1e-9));
    rep.checks.push_back(count_check("fk_le_min_bowen_1 " + name, dominated));
  }
  return rep;
}

VerifyReport verify_cover_oracles(std::size_t instances, std::uint64_t seed) {
  VerifyReport rep;
  rep.name = "oracles.cover";
  const SystemSpec systems[] = {full_shift(2), doubling_map(), cube_shift(1), tent_map()};
  const MetricKind kinds[] = {MetricKind::FK, MetricKind::Bowen, MetricKind::Mean};
  const std::size_t ns[] = {1, 3, 6};
  const double epss[] = {0.05, 0.1, 0.2, 0.4};
  Engine eng(seed);
  std::size_t greedy_bad = 0, lower_bad = 0, upper_bad = 0, brute_bad = 0;
  double worst_ratio = 0.0;
  for (std::size_t t = 0; t < instances; ++t) {
    const SystemSpec& sys = systems[t % 4];
    const MetricKind kind = kinds[(t / 4) % 3];
    const std::size_t n = ns[(t / 12) % 3];
    const double eps = epss[uniform_below(eng, 4)];
    const std::size_t size = 8 + uniform_below(eng, 13);
    const auto s = sample_points(sys, size, eng(), SampleParams{SampleFamily::Random, 5});
    const BallOracle o{kind, n, eps, s.system};
    const OrbitBank bank(sys, s.points, n);
    const Coverage cov = build_coverage(o, bank, bank);
    const auto exact = spanning_number(cov, CoverMode::Exact);
    const auto greedy = spanning_number(cov, CoverMode::Greedy);
    const double factor = 1.0 + std::log(static_cast<double>(size));
    worst_ratio = std::max(worst_ratio, greedy.cardinality / (exact.cardinality * factor));
    if (greedy.cardinality < exact.cardinality ||
        greedy.cardinality > exact.cardinality * factor)
      ++greedy_bad;
    if (exact.cardinality != oracles::brute_force_cover(cov, size)) ++brute_bad;
    BallOracle wide = o;
    wide.eps = 2 * eps;
    if (separated_number(s, wide) > exact.cardinality) ++lower_bad;
    if (exact.cardinality > separated_number(s, o)) ++upper_bad;
  }
  const std::string where = std::to_string(instances) + " instances";
  rep.checks.push_back(count_check("greedy_within_log_factor", greedy_bad, where));
  rep.checks.push_back(bound_check("greedy_ratio_over_factor", worst_ratio, 1.0));
  rep.checks.push_back(count_check("exact_vs_enumeration", brute_bad, where));
  rep.checks.push_back(count_check("separated_2eps_le_spanning", lower_bad, where));
  rep.checks.push_back(count_check("spanning_le_separated_eps", upper_bad, where));
  return rep;
}

VerifyReport verify_tame_growth(const TameGrowthOptions& opts) {
  VerifyReport rep;
  rep.name = "tame";
  const std::pair<const char*, SystemSpec> spaces[] = {
      {"interval", identity_map()},
      {"square", product_system(identity_map(), identity_map(), Combiner::Max)}};
  for (const auto& [name, sys] : spaces) {
    const auto r = tame_growth_diagnostic(sys, opts.theta, opts.epsilons);
    const auto& rows = r.rows;
    const double last = rows.empty() ? 0.0 : rows.back().product;
    rep.checks.push_back(Check{std::string("decreasing_tail ") + name, r.decreasing_tail,
                               rows.size() >= 2 ? rows[rows.size() - 2].product - last : 0.0,
                               0.0, ""});
    rep.checks.push_back(bound_check(std::string("product_at_smallest ") + name, last,
                                     opts.limit));
  }
  return rep;
}

}  // namespace fkdim
