#include <doctest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "fkdim/errors.hpp"
#include "fkdim/rng.hpp"
#include "fkdim/systems.hpp"
#include "test_util.hpp"

using namespace fkdim;

namespace {

double scalar(const Point& p) { return std::get<Scalar>(p.value).value; }

// Direct sum of base^{-|i|} rho(x_i, y_i) over |i| <= W.
double truncated_shift_metric(const SystemSpec& sys, const Point& p, const Point& q,
                              int W) {
  auto idx = [](int i, std::size_t period) {
    const int m = static_cast<int>(period);
    return static_cast<std::size_t>(((i % m) + m) % m);
  };
  double s = 0.0;
  if (const auto* fs = std::get_if<FullShift>(&sys.kind)) {
    const auto& x = std::get<SymbolicPeriodic>(p.value);
    const auto& y = std::get<SymbolicPeriodic>(q.value);
    for (int i = -W; i <= W; ++i)
      if (x.symbols[idx(i, x.period())] != y.symbols[idx(i, y.period())])
        s += std::pow(fs->decay_base, -std::abs(i));
  } else {
    const auto& cs = std::get<CubeShift>(sys.kind);
    const auto& x = std::get<CubePeriodic>(p.value);
    const auto& y = std::get<CubePeriodic>(q.value);
    for (int i = -W; i <= W; ++i) {
      auto u = x.at(idx(i, x.period()));
      auto v = y.at(idx(i, y.period()));
      double m = 0.0;
      for (std::size_t c = 0; c < u.size(); ++c) m = std::max(m, std::fabs(u[c] - v[c]));
      s += std::pow(cs.decay_base, -std::abs(i)) * m;
    }
  }
  return s;
}

}  // namespace

TEST_CASE("evaluate_map examples") {
  CHECK(scalar(evaluate_map(doubling_map(), scalar_point(0.25))) == 0.5);
  CHECK(evaluate_map(full_shift(2), symbolic_point({0, 1, 1})) == symbolic_point({1, 1, 0}));
  CHECK(scalar(evaluate_map(tent_map(), scalar_point(0.75))) == 0.5);
  CHECK(scalar(evaluate_map(identity_map(), scalar_point(0.3))) == 0.3);
  CHECK(evaluate_map(cube_shift(2), cube_point(2, {0.1, 0.2, 0.3, 0.4})) ==
        cube_point(2, {0.3, 0.4, 0.1, 0.2}));
}

TEST_CASE("evaluate_map rejects incompatible points") {
  CHECK_THROWS_AS(evaluate_map(doubling_map(), symbolic_point({0})), IncompatiblePointError);
  CHECK_THROWS_AS(evaluate_map(full_shift(2), symbolic_point({0, 2})), IncompatiblePointError);
  CHECK_THROWS_AS(evaluate_map(full_shift(2), scalar_point(0.5)), IncompatiblePointError);
  CHECK_THROWS_AS(evaluate_map(cube_shift(2), cube_point(1, {0.5})), IncompatiblePointError);
  CHECK_THROWS_AS(evaluate_map(cube_shift(1), cube_point(1, {1.5})), IncompatiblePointError);
  CHECK_THROWS_AS(evaluate_map(tent_map(), scalar_point(-0.1)), IncompatiblePointError);
}

TEST_CASE("evaluate_metric examples") {
  CHECK(evaluate_metric(full_shift(2), symbolic_point({0}), symbolic_point({1})) ==
        doctest::Approx(3.0).epsilon(1e-15));
  CHECK(evaluate_metric(doubling_map(), scalar_point(0.1), scalar_point(0.9)) ==
        doctest::Approx(0.2).epsilon(1e-12));
  CHECK(evaluate_metric(tent_map(), scalar_point(0.1), scalar_point(0.9)) ==
        doctest::Approx(0.8));
  CHECK(evaluate_metric(full_shift(2), symbolic_point({0, 1}), symbolic_point({0, 1})) == 0.0);
  CHECK(diameter_bound(full_shift(2)) == 3.0);
}

TEST_CASE("shift weights match the geometric series") {
  for (std::size_t L : {1u, 2u, 3u, 5u, 8u}) {
    auto w = shift_weights(2.0, L);
    for (std::size_t r = 0; r < L; ++r) {
      double direct = 0.0;
      for (int i = -64; i <= 64; ++i) {
        const int m = static_cast<int>(L);
        if (((i % m) + m) % m == static_cast<int>(r)) direct += std::pow(2.0, -std::abs(i));
      }
      CHECK(w[r] == doctest::Approx(direct).epsilon(1e-14));
    }
  }
}

TEST_CASE("closed-form shift metric within the truncation tail bound") {
  Engine eng(11);
  const SystemSpec systems[] = {full_shift(2), full_shift(3), cube_shift(1), cube_shift(2)};
  for (const auto& sys : systems) {
    auto sample = sample_points(sys, 40, 5, SampleParams{SampleFamily::Random, 7});
    for (std::size_t i = 0; i + 1 < sample.points.size(); ++i) {
      const auto& p = sample.points[i];
      const auto& q = sample.points[i + 1];
      const double exact = evaluate_metric(sys, p, q);
      for (int W : {10, 20, 30}) {
        const double tail = std::pow(2.0, -W + 1);
        CHECK(std::fabs(exact - truncated_shift_metric(sys, p, q, W)) <= tail + 1e-12);
      }
    }
  }
}

TEST_CASE("metric_below agrees with evaluate_metric") {
  const SystemSpec systems[] = {full_shift(2), full_shift(2, 64.0), cube_shift(1),
                                cube_shift(2, 8.0)};
  for (const auto& sys : systems) {
    auto s = sample_points(sys, 60, 9, SampleParams{SampleFamily::Random, 9});
    for (std::size_t i = 0; i < s.points.size(); ++i)
      for (std::size_t j = 0; j < s.points.size(); j += 7) {
        const double d = evaluate_metric(sys, s.points[i], s.points[j]);
        for (double t : {0.01, 0.1, 0.5, 1.0, 2.0, d, std::nextafter(d, 10.0)})
          CHECK(metric_below(sys, s.points[i], s.points[j], t) == (d < t));
      }
  }
}

TEST_CASE("metric axioms on random triples") {
  for (const auto& sys : test::all_systems()) {
    auto s = sample_points(sys, 3000, 21, SampleParams{SampleFamily::Random, 6});
    for (std::size_t t = 0; t < 1000; ++t) {
      const auto& p = s.points[3 * t];
      const auto& q = s.points[3 * t + 1];
      const auto& r = s.points[3 * t + 2];
      const double pq = evaluate_metric(sys, p, q);
      REQUIRE(pq == evaluate_metric(sys, q, p));
      REQUIRE(evaluate_metric(sys, p, p) <= 1e-15);
      REQUIRE(evaluate_metric(sys, p, r) <= pq + evaluate_metric(sys, q, r) + 1e-12);
      REQUIRE(pq <= diameter_bound(sys) + 1e-12);
    }
  }
}

TEST_CASE("orbit examples and prefix property") {
  auto o = orbit(doubling_map(), scalar_point(0.1), 3);
  REQUIRE(o.size() == 3);
  CHECK(scalar(o.points[0]) == 0.1);
  CHECK(scalar(o.points[1]) == 0.2);
  CHECK(scalar(o.points[2]) == 0.4);

  auto s = orbit(full_shift(2), symbolic_point({0, 1}), 3);
  CHECK(s.points[0] == symbolic_point({0, 1}));
  CHECK(s.points[1] == symbolic_point({1, 0}));
  CHECK(s.points[2] == symbolic_point({0, 1}));

  CHECK(orbit(tent_map(), scalar_point(0.3), 1).size() == 1);
  CHECK_THROWS_AS(orbit(tent_map(), scalar_point(0.3), 0), ValidationError);

  for (const auto& sys : test::all_systems()) {
    auto pts = sample_points(sys, 5, 3);
    for (const auto& p : pts.points) {
      auto longer = orbit(sys, p, 12);
      for (std::size_t n : {1u, 5u, 12u}) {
        auto shorter = orbit(sys, p, n);
        for (std::size_t i = 0; i < n; ++i) CHECK(shorter.points[i] == longer.points[i]);
      }
    }
  }
}

TEST_CASE("sample_points grid and determinism") {
  auto g = sample_points(doubling_map(), 5, 1, SampleParams{SampleFamily::Grid});
  REQUIRE(g.points.size() == 5);
  const double want[] = {0.1, 0.3, 0.5, 0.7, 0.9};
  for (int i = 0; i < 5; ++i) CHECK(scalar(g.points[i]) == doctest::Approx(want[i]));

  for (const auto& sys : test::all_systems()) {
    auto a = sample_points(sys, 50, 99);
    auto b = sample_points(sys, 50, 99);
    auto longer = sample_points(sys, 80, 99);
    CHECK(a.points == b.points);
    for (std::size_t i = 0; i < 50; ++i) CHECK(a.points[i] == longer.points[i]);
    for (const auto& p : a.points) CHECK_NOTHROW(check_point(sys, p));
  }
  CHECK_THROWS_AS(sample_points(tent_map(), 0, 1), ValidationError);

  SampleParams exact{SampleFamily::Random, 4, PeriodMode::Exact};
  for (const auto& p : sample_points(full_shift(3), 30, 2, exact).points)
    CHECK(std::get<SymbolicPeriodic>(p.value).period() == 4);
  auto grid = sample_points(full_shift(2), 100, 0, SampleParams{SampleFamily::Grid, 3});
  CHECK(grid.points.size() == 8);
  CHECK(grid.points.front() == symbolic_point({0, 0, 0}));
  CHECK(grid.points.back() == symbolic_point({1, 1, 1}));
}

TEST_CASE("sampler golden: full shift k=2, 8 points, seed 7, period bound 3") {
  auto s = sample_points(full_shift(2), 8, 7, SampleParams{SampleFamily::Random, 3});
  std::ostringstream got;
  for (const auto& p : s.points) got << to_string(p) << '\n';
  CHECK(got.str() == test::read_golden("sampler_fullshift2_seed7_P3.txt"));
}

TEST_CASE("text forms round-trip") {
  for (const auto& sys : test::all_systems()) {
    const std::string text = to_string(sys);
    CHECK(to_string(parse_system(text)) == text);
    for (const auto& p : sample_points(sys, 10, 4).points)
      CHECK(parse_point(sys, to_string(p)) == p);
  }
  CHECK(to_string(parse_system("fullshift(k=3)")) == "fullshift(k=3,base=2)");
  CHECK_THROWS_AS(parse_system("fullshift(q=3)"), ValidationError);
  CHECK_THROWS_AS(parse_system("bogus"), ValidationError);
  CHECK_THROWS_AS(parse_point(full_shift(2), "0,1,x"), ValidationError);
}

TEST_CASE("validate rejects bad parameters") {
  CHECK_THROWS_AS(validate(full_shift(1)), ValidationError);
  CHECK_THROWS_AS(validate(full_shift(2, 1.0)), ValidationError);
  CHECK_THROWS_AS(validate(cube_shift(0)), ValidationError);
  CHECK_NOTHROW(validate(product_system(tent_map(), full_shift(2), Combiner::Sum)));
}
