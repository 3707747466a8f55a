#include <doctest.h>

#include <json.hpp>

#include "fkdim/config.hpp"
#include "fkdim/errors.hpp"

using namespace fkdim;

namespace {

int error_line(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.line();
  }
  return -1;
}

std::string error_text(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

const char* kFull = R"yaml(system: "cube(D=1,base=128)"
grid:
  epsilons: [0.125, 0.088388347648318447, 0.0625]
  n_min: 1
  n_max: 3
  mistake_n_window: [2, 4]
sampling:
  universe: [4000, 8000, 16000]
  n_caps: {1: 6000, 2: 8000}
  extra_candidates: 5
  family: random
  period: 6
  period_mode: exact
  levels: 3
  mode: exact
  exact_universe_cap: 20
  exact_candidate_cap: 22
  seed: 12345
metrics:
  kinds: [fk, bowen]
  mistake: log
katok:
  deltas: [0.1, 0.3]
  measures: [uniform, "point(0.5)"]
local:
  probes: ["0.25", "0.5,0.5"]
  radii: [0.5, 0.1]
prop32:
  trials: 7
  max_pieces: 3
  sample_size: 12
  ns: [1, 2]
  epsilons: [0.3]
  kind: bowen
tolerances:
  thm11: 0.3
  thm12: 0.2
  thm13_gap: 0.15
  slope_min: 0.7
  slope_max: 1.3
output:
  dir: results/cube
  gnuplot: true
)yaml";

}  // namespace

TEST_CASE("empty config gives the defaults") {
  CHECK(parse_config("") == ExperimentConfig{});
  CHECK(parse_config("# nothing\n") == ExperimentConfig{});
}

TEST_CASE("every field is read") {
  const auto c = parse_config(kFull);
  CHECK(c.system == "cube(D=1,base=128)");
  CHECK(c.epsilons == std::vector<double>{0.125, 0.088388347648318447, 0.0625});
  CHECK(c.n_min == 1);
  CHECK(c.n_max == 3);
  REQUIRE(c.mistake_window);
  CHECK(c.mistake_window->n_min == 2);
  CHECK(c.universe == std::vector<std::size_t>{4000, 8000, 16000});
  CHECK(c.n_caps == std::map<std::size_t, std::size_t>{{1, 6000}, {2, 8000}});
  CHECK(c.extra_candidates == 5);
  CHECK(c.period == 6);
  CHECK(c.period_mode == PeriodMode::Exact);
  CHECK(c.levels == 3);
  CHECK(c.mode == CoverMode::Exact);
  CHECK(c.limits.exact_universe_cap == 20);
  CHECK(c.limits.exact_candidate_cap == 22);
  CHECK(c.seed == 12345);
  CHECK(c.kinds == std::vector<MetricKind>{MetricKind::FK, MetricKind::Bowen});
  CHECK(c.mistake == "log");
  CHECK(c.deltas.size() == 2);
  CHECK(c.measures.size() == 2);
  CHECK(c.probes.size() == 2);
  CHECK(c.prop32.trials == 7);
  CHECK(c.prop32.kind == MetricKind::Bowen);
  CHECK(*c.thm13_gap == 0.15);
  CHECK(*c.slope_max == 1.3);
  CHECK(c.output_dir == "results/cube");
  CHECK(c.gnuplot);

  const auto plan = c.plan(3);
  CHECK(plan.threads == 3);
  CHECK(plan.size_for(0, 1) == 4000);
  CHECK(plan.size_for(2, 2) == 8000);
  CHECK(plan.size_for(2, 3) == 16000);
  CHECK(c.grid().window_for(MetricKind::Mistake).n_max == 4);
}

TEST_CASE("canonical YAML round-trips losslessly") {
  const auto c = parse_config(kFull);
  const std::string y = to_yaml(c);
  CHECK(parse_config(y) == c);
  CHECK(to_yaml(parse_config(y)) == y);

  ExperimentConfig d;
  d.epsilons = {1.0 / 3.0, 0.1, 1e-7};
  d.seed = 0xFFFFFFFFFFFFFFFFull;
  d.system = "product(max;doubling;fullshift(k=3,base=4))";
  d.probes = {"0.5|0,1,2"};
  d.measures = {"uniform"};
  CHECK(parse_config(to_yaml(d)) == d);
  CHECK(parse_config(to_yaml(ExperimentConfig{})) == ExperimentConfig{});
}

TEST_CASE("hash follows content") {
  const auto c = parse_config(kFull);
  CHECK(config_hash(c).size() == 16);
  CHECK(config_hash(c) == config_hash(parse_config(to_yaml(c))));
  auto d = c;
  d.seed += 1;
  CHECK(config_hash(d) != config_hash(c));
}

TEST_CASE("unknown keys are errors naming the field and line") {
  CHECK(error_line("grid:\n  n_min: 2\n  n_mx: 9\n") == 3);
  CHECK(error_text("grid:\n  n_min: 2\n  n_mx: 9\n").find("grid.n_mx") != std::string::npos);
  CHECK(error_line("system: tent\nsamplng:\n  universe: 3\n") == 2);
  CHECK(error_line("output:\n  dir: x\n  colour: red\n") == 3);
}

TEST_CASE("type and range errors carry the line of the offending field") {
  CHECK(error_line("grid:\n  epsilons: [0.1, 0.2]\n") == 2);
  CHECK(error_text("grid:\n  epsilons: [0.1, 0.2]\n").find("grid.epsilons") != std::string::npos);
  CHECK(error_line("grid:\n  epsilons: [0.1, -0.2]\n") == 2);
  CHECK(error_line("grid:\n  n_min: 5\n  n_max: 4\n") != -1);
  CHECK(error_line("katok:\n  deltas: [0.1]\n\nlocal:\n  radii: [0.2]\nkatok2: 1\n") == 6);
  CHECK(error_line("katok:\n  deltas: [1.5]\n") == 2);
  CHECK(error_text("katok:\n  deltas: [0]\n").find("katok.deltas") != std::string::npos);
  CHECK(error_line("system: fullshift(k=1)\n") == 1);
  CHECK(error_text("system: fullshift(k=1)\n").find("system.k") != std::string::npos);
  CHECK(error_line("system: tent\nlocal:\n  probes: [\"0,1\"]\n") == 3);
  CHECK(error_line("sampling:\n  period: -3\n") == 2);
  CHECK(error_line("sampling:\n  mode: fastest\n") == 2);
  CHECK(error_line("sampling:\n  universe: [10, 20]\n") == 2);
  CHECK(error_line("metrics:\n  kinds: [fk, bowne]\n") == 2);
  CHECK(error_line("metrics:\n  mistake: power(2)\n") == 2);
  CHECK(error_line("grid: [1, 2\n") >= 1);
  CHECK(error_line("output:\n  gnuplot: maybe\n") == 2);
}

TEST_CASE("manifest") {
  auto c = parse_config(kFull);
  auto m = make_manifest("mdim", c);
  m.outputs = {"rates.csv", "mdim.csv"};
  const auto j = nlohmann::json::parse(m.to_json());
  CHECK(j["command"] == "mdim");
  CHECK(j["config_hash"] == config_hash(c));
  CHECK(j["seed"].get<std::uint64_t>() == 12345);
  CHECK(j["version"] == version_string());
  CHECK(j["seeds"]["universe"].get<std::uint64_t>() ==
        sample_seed(12345, SampleRole::Universe));
  CHECK(j["seeds"].contains("measure1.candidates"));
  CHECK(j["outputs"].size() == 2);
  CHECK(j["timestamp"].get<std::string>().back() == 'Z');
}
