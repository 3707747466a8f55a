#pragma once

// Experiment configuration (YAML) and the run manifest (JSON).

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fkdim/estimators.hpp"

namespace fkdim {

struct ExperimentConfig {
  std::string system = "fullshift(k=2,base=2)";

  // grid
  std::vector<double> epsilons{0.25, 0.125, 0.0625, 0.03125};
  std::size_t n_min = 2;
  std::size_t n_max = 6;
  std::optional<NWindow> mistake_window;

  // sampling
  std::vector<std::size_t> universe{400};
  std::map<std::size_t, std::size_t> n_caps;
  std::size_t extra_candidates = 0;
  SampleFamily family = SampleFamily::Random;
  std::size_t period = 8;
  PeriodMode period_mode = PeriodMode::UpTo;
  std::size_t levels = 4;
  CoverMode mode = CoverMode::Greedy;
  CoverLimits limits{};
  std::uint64_t seed = kDefaultSeed;

  // metrics
  std::vector<MetricKind> kinds{MetricKind::FK, MetricKind::Bowen, MetricKind::Mean,
                                MetricKind::Mistake};
  std::string mistake = "power(0.5)";

  // katok
  std::vector<double> deltas{0.1};
  std::vector<std::string> measures{"uniform"};

  // local
  std::vector<std::string> probes;
  std::vector<double> radii{0.5, 0.25, 0.125};

  // prop32
  UnionSandwichOptions prop32{};

  // tolerances
  double thm11_tolerance = 0.1;
  double thm12_tolerance = 0.1;
  std::optional<double> thm13_gap;
  std::optional<double> slope_min;
  std::optional<double> slope_max;

  // output
  std::string output_dir = "out";
  bool gnuplot = false;

  SamplingPlan plan(unsigned threads = 1) const;
  EstimatorGrid grid() const;
  SystemSpec system_spec() const;
  MistakeFunction mistake_function() const;
  std::vector<Point> probe_points() const;
  std::vector<MeasureSampler> measure_samplers() const;

  bool operator==(const ExperimentConfig&) const = default;
};

/// Parses YAML text. Unknown keys, wrong types and out-of-range values raise
/// ConfigError carrying the line and naming the field.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);

/// Canonical YAML; parse_config(to_yaml(c)) == c.
std::string to_yaml(const ExperimentConfig& config);

/// 64-bit FNV-1a of the canonical YAML, as 16 hex digits.
std::string config_hash(const ExperimentConfig& config);

struct RunManifest {
  std::string command;
  std::string config_hash;
  std::string version;
  std::uint64_t seed = 0;
  std::string timestamp;  // UTC, ISO 8601
  std::vector<std::pair<std::string, std::uint64_t>> seeds;  // named sample streams
  std::vector<std::string> outputs;

  std::string to_json() const;
};

/// Fills command, hash, version, seed, timestamp and the seeds of the
/// sample streams the estimators draw from `config`.
RunManifest make_manifest(const std::string& command, const ExperimentConfig& config);

const char* version_string();

}  // namespace fkdim
