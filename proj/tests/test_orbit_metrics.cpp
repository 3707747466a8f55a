#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "fkdim/errors.hpp"
#include "fkdim/orbit_metrics.hpp"
#include "fkdim/rng.hpp"
#include "fkdim/oracles.hpp"
#include "test_util.hpp"

using namespace fkdim;

TEST_CASE("distance_matrix") {
  auto a = orbit(doubling_map(), scalar_point(0.1), 2);
  auto b = orbit(doubling_map(), scalar_point(0.3), 2);
  auto d = distance_matrix(doubling_map(), a, b);
  CHECK(d(0, 0) == doctest::Approx(0.2));
  CHECK(d(0, 1) == doctest::Approx(0.5));
  CHECK(d(1, 0) == doctest::Approx(0.1));
  CHECK(d(1, 1) == doctest::Approx(0.4));

  auto same = distance_matrix(tent_map(), a, a);
  for (std::size_t i = 0; i < 2; ++i) CHECK(same(i, i) == 0.0);

  OrbitSegment one{{scalar_point(0.2)}};
  OrbitSegment other{{scalar_point(0.7)}};
  auto single = distance_matrix(tent_map(), one, other);
  REQUIRE(single.n() == 1);
  CHECK(single(0, 0) == doctest::Approx(0.5));
  CHECK_THROWS_AS(distance_matrix(tent_map(), one, a), ValidationError);
}

TEST_CASE("max_match_size examples") {
  const double a[] = {0, 1, 2}, b[] = {1, 2, 3};
  auto d = line_distance_matrix(a, b);
  auto m = max_match_size(d, 1.5, true);
  CHECK(m.size == 3);
  CHECK(m.fbar == 0.0);
  REQUIRE(m.witness.has_value());
  CHECK(*m.witness == std::vector<MatchPair>{{0, 0}, {1, 1}, {2, 2}});

  auto same = line_distance_matrix(a, a);
  CHECK(max_match_size(same, 1e-9).size == 3);
  CHECK(max_match_size(d, 1.0).size == 2);  // strict: distance 1 is not admissible
  CHECK(max_match_size(d, 0.5).size == 2);  // shifted match on the zero entries
  const double far[] = {5, 6, 7};
  auto none = max_match_size(line_distance_matrix(a, far), 1.0);
  CHECK(none.size == 0);
  CHECK(none.fbar == 1.0);
}

TEST_CASE("fk_distance examples") {
  const double a[] = {0, 10, 20, 30}, b[] = {10, 20, 30, 40};
  auto d = line_distance_matrix(a, b);
  CHECK(fk_distance(d) == 0.25);
  CHECK(bowen_distance(d) == 10.0);
  CHECK(std::fabs(fk_distance_bisect(d, 1e-12) - 0.25) <= 1e-12);

  CHECK(fk_distance(line_distance_matrix(a, a)) == 0.0);
  CHECK(fk_distance(DistanceMatrix(1, {0.3})) == 0.3);
  CHECK(fk_distance(DistanceMatrix(1, {1.7})) == 1.0);
  CHECK(fk_distance(DistanceMatrix(1, {1.0})) == 1.0);

  auto rows = match_profile(d);
  REQUIRE(rows.size() == 5);
  CHECK(rows[0].delta_lo == 0.0);
  CHECK(rows[0].delta_hi == 10.0);
  CHECK(rows[0].size == 3);
  CHECK(rows[1].size == 4);
  CHECK(std::isinf(rows.back().delta_hi));
  CHECK(rows.back().size == 4);
}

TEST_CASE("bowen and mean distances") {
  DistanceMatrix d(2, {0.2, 0.9, 0.9, 0.4});
  CHECK(bowen_distance(d) == 0.4);
  CHECK(mean_distance(d) == doctest::Approx(0.3));
}

TEST_CASE("mistake function") {
  auto g = MistakeFunction::power_law(0.5);
  CHECK(g(1) == 0);
  CHECK(g(4) == 2);
  CHECK(g(16) == 4);
  CHECK(MistakeFunction::power_law(0.25)(16) == 2);
  CHECK(MistakeFunction::logarithmic()(7) == 3);
  CHECK_THROWS_AS(MistakeFunction::power_law(1.0), ValidationError);
  CHECK(MistakeFunction::parse(g.to_string()) == g);
  CHECK(MistakeFunction::parse("log") == MistakeFunction::logarithmic());
  CHECK_THROWS_AS(MistakeFunction::parse("power(x)"), ValidationError);

  for (const auto& f : {g, MistakeFunction::power_law(0.9), MistakeFunction::logarithmic()}) {
    std::size_t prev = 0;
    for (std::size_t n = 1; n <= (1u << 20); n += (n < 4096 ? 1 : 997)) {
      const std::size_t v = f(n);
      REQUIRE(v < n);
      REQUIRE(v >= prev);
      prev = v;
    }
    CHECK(static_cast<double>(f(1u << 20)) / (1u << 20) < 0.5);
  }
}

TEST_CASE("mistake_ball_contains") {
  auto g = MistakeFunction::power_law(0.25);  // g(4) = 1
  auto diag = [](std::vector<double> v) {
    std::vector<double> e(v.size() * v.size(), 5.0);
    for (std::size_t i = 0; i < v.size(); ++i) e[i * v.size() + i] = v[i];
    return DistanceMatrix(v.size(), e);
  };
  CHECK(mistake_ball_contains(diag({0, 0, 0.9, 0}), 0.5, g));
  CHECK_FALSE(mistake_ball_contains(diag({0, 0.9, 0.9, 0}), 0.5, g));
  CHECK(mistake_ball_contains(diag({0, 0, 0, 0}), 1e-9, g));
  CHECK(mistake_ball_contains(diag({0.1, 0.2, 0.3, 0.4}), 0.45, g));
}

TEST_CASE("oracle equivalence on random small matrices") {
  Engine eng(2024);
  for (int t = 0; t < 500; ++t) {
    auto d = oracles::random_matrix(eng, 1 + t % 6);
    const double delta = 0.05 + 1.1 * uniform01(eng);
    auto m = max_match_size(d, delta, true);
    REQUIRE(m.size == oracles::brute_force_match(d, delta));
    REQUIRE(oracles::witness_valid(d, delta, *m.witness));
    REQUIRE(m.witness->size() == m.size);
    REQUIRE(max_match_size(d.transposed(), delta).size == m.size);
    const double fk = fk_distance(d);
    REQUIRE(std::fabs(fk - fk_distance_bisect(d, 1e-9)) <= 1e-9);
    REQUIRE(fk == fk_distance(d.transposed()));
    REQUIRE(fk <= std::min(bowen_distance(d), 1.0));
    REQUIRE(fk == oracles::fk_by_definition(d));
  }
}

TEST_CASE("fbar monotone in delta") {
  Engine eng(5);
  for (int t = 0; t < 200; ++t) {
    auto d = oracles::random_matrix(eng, 2 + t % 12);
    double d1 = uniform01(eng), d2 = uniform01(eng);
    if (d1 > d2) std::swap(d1, d2);
    CHECK(max_match_size(d, d1).size <= max_match_size(d, d2).size);
  }
}

TEST_CASE("orbit predicates agree with matrix formulas") {
  auto g = MistakeFunction::power_law(0.5);
  for (const auto& sys : test::all_systems()) {
    auto s = sample_points(sys, 60, 17, SampleParams{SampleFamily::Random, 5});
    for (std::size_t n : {1u, 3u, 8u, 16u}) {
      for (std::size_t i = 0; i + 1 < s.points.size(); i += 2) {
        auto a = orbit(sys, s.points[i], n);
        auto b = orbit(sys, s.points[i + 1], n);
        auto d = distance_matrix(sys, a, b);
        const double fk = fk_distance(d), bw = bowen_distance(d), mn = mean_distance(d);
        for (double eps : {0.02, 0.1, 0.3, 0.7, 1.2, fk, bw, mn, std::nextafter(fk, 2.0)}) {
          if (!(eps > 0.0)) continue;
          REQUIRE(fk_within(sys, a.points, b.points, eps) == (fk < eps));
          REQUIRE(bowen_within(sys, a.points, b.points, eps) == (bw < eps));
          REQUIRE(mean_within(sys, a.points, b.points, eps) == (mn < eps));
          REQUIRE(mistake_within(sys, a.points, b.points, eps, g) ==
                  mistake_ball_contains(d, eps, g));
        }
      }
    }
  }
}

TEST_CASE("FK pseudo-metric on orbit triples") {
  for (const auto& sys : test::all_systems()) {
    auto s = sample_points(sys, 300, 31, SampleParams{SampleFamily::Random, 6});
    std::vector<OrbitSegment> orbs;
    for (const auto& p : s.points) orbs.push_back(orbit(sys, p, 16));
    for (std::size_t t = 0; t < 100; ++t) {
      const auto& x = orbs[3 * t];
      const auto& y = orbs[3 * t + 1];
      const auto& z = orbs[3 * t + 2];
      const double xy = fk_distance(distance_matrix(sys, x, y));
      REQUIRE(xy == fk_distance(distance_matrix(sys, y, x)));
      REQUIRE(fk_distance(distance_matrix(sys, x, z)) <=
              xy + fk_distance(distance_matrix(sys, y, z)) + 1e-9);
    }
  }
}

TEST_CASE("metric kind names") {
  for (auto k : {MetricKind::FK, MetricKind::Bowen, MetricKind::Mean, MetricKind::Mistake,
                 MetricKind::Base})
    CHECK(parse_metric_kind(to_string(k)) == k);
  CHECK_THROWS_AS(parse_metric_kind("hamming"), ValidationError);
}
