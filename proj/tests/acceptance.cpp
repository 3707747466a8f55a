// Acceptance run: one PASS/FAIL line per criterion, followed by the
// individual checks. Exit status 0 iff every criterion passes.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>
#include <thread>
#include <string>
#include <vector>

#include "fkdim/commands.hpp"

#ifndef FKDIM_CONFIG_DIR
#error "FKDIM_CONFIG_DIR must be defined by the build"
#endif

using namespace fkdim;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::vector<std::string> lines;

  void add(const VerifyReport& r) {
    for (const auto& c : r.checks) {
      pass = pass && c.pass;
      lines.push_back(std::string(c.pass ? "ok   " : "FAIL ") + r.name + " " + c.name +
                      " value=" + format_real(c.value) + " limit=" + format_real(c.limit) +
                      (c.detail.empty() ? "" : " (" + c.detail + ")"));
    }
  }

  void require(bool ok, const std::string& what) {
    pass = pass && ok;
    lines.push_back(std::string(ok ? "ok   " : "FAIL ") + what);
  }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

ExperimentConfig config(const std::string& name) {
  return load_config(std::string(FKDIM_CONFIG_DIR) + "/" + name);
}

unsigned threads() { return std::max(1u, std::thread::hardware_concurrency()); }

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void time_limit(Outcome& o, std::chrono::steady_clock::time_point t0, double limit,
                const std::string& what) {
  const double t = seconds_since(t0);
  o.require(t < limit, what + " runtime " + format_real(t) + " s < " + format_real(limit) + " s");
}

Outcome ac1() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  o.add(verify_match_oracles(500, kDefaultSeed));
  time_limit(o, t0, 10.0, "oracle suite");
  return o;
}

Outcome ac2() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  o.add(verify_metric_properties(1000, 16, kDefaultSeed));
  time_limit(o, t0, 30.0, "metric suite");
  return o;
}

Outcome ac3() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  o.add(verify_cover_oracles(200, kDefaultSeed));
  time_limit(o, t0, 60.0, "cover suite");
  return o;
}

Outcome ac4() {
  Outcome o;
  UnionSandwichOptions opts;
  opts.trials = 50;
  opts.max_pieces = 4;
  opts.sample_size = 24;
  opts.ns = {1, 4, 10};
  SamplingPlan plan;
  plan.threads = threads();
  for (const auto& sys : {full_shift(2), doubling_map(), cube_shift(1)}) {
    VerifyReport r = verify_union_sandwich(sys, plan, opts);
    r.name += " " + to_string(sys);
    o.add(r);
  }
  return o;
}

Outcome ac5() {
  Outcome o;
  const struct {
    const char* file;
    double tolerance;
  } runs[] = {{"ac5_fullshift.yaml", 0.2}, {"ac5_doubling.yaml", 0.25}};
  for (const auto& run : runs) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto c = config(run.file);
    const auto est = katok_entropy_estimate(c.system_spec(), c.measure_samplers().front(),
                                            c.deltas, c.plan(threads()), c.grid());
    const double rate = est.rows.front().fit.rate;
    const double err = std::fabs(rate - std::numbers::ln2);
    o.require(err <= run.tolerance, c.system + " " + est.measure + " delta=" +
                                        format_real(c.deltas.front()) + " eps=" +
                                        format_real(c.epsilons.front()) + " rate " +
                                        format_real(rate) + ", |rate - log 2| = " +
                                        format_real(err) + " <= " + format_real(run.tolerance));
    time_limit(o, t0, 300.0, run.file);
  }
  return o;
}

Outcome ac6() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  for (const char* file : {"ac6_fullshift.yaml", "ac6_cube.yaml"}) {
    const auto c = config(file);
    SlopeAgreementOptions t;
    t.kinds = c.kinds;
    t.tolerance = c.thm11_tolerance;
    t.slope_min = c.slope_min;
    t.slope_max = c.slope_max;
    std::vector<MdimEstimate> est;
    VerifyReport r = verify_slope_agreement(c.system_spec(), c.plan(threads()), c.grid(),
                                        c.mistake_function(), t, &est);
    r.name += " " + c.system;
    o.add(r);
    for (const auto& e : est)
      o.lines.push_back("     " + c.system + " " + to_string(e.kind) +
                        " slope=" + format_real(e.slope()));
  }
  time_limit(o, t0, 600.0, "both systems");
  return o;
}

Outcome ac7() {
  Outcome o;
  for (const char* file : {"ac6_fullshift.yaml", "ac7_doubling.yaml"}) {
    const auto c = config(file);
    KatokBoundOptions t;
    t.measures = c.measure_samplers();
    t.delta = c.deltas.front();
    t.tolerance = c.thm12_tolerance;
    VerifyReport r = verify_katok_bound(c.system_spec(), c.plan(threads()), c.grid(), t);
    r.name += " " + c.system;
    o.add(r);
  }
  return o;
}

Outcome ac8() {
  Outcome o;
  const auto c = config("ac8_fullshift.yaml");
  LocalBoundOptions t;
  t.probes = c.probe_points();
  t.radii = c.radii;
  t.gap_tolerance = c.thm13_gap;
  VerifyReport r = verify_local_bound(c.system_spec(), c.plan(threads()), c.grid(), t);
  r.name += " " + c.system;
  o.add(r);
  return o;
}

Outcome ac9() {
  Outcome o;
  o.add(verify_tame_growth());
  return o;
}

Outcome ac10() {
  Outcome o;
  const auto c = config("fullshift2_small.yaml");
  const fs::path root = fs::temp_directory_path() / "fkdim_acceptance_ac10";
  fs::remove_all(root);
  std::ostringstream sink;
  const unsigned counts[] = {1, 1, 3, 8};
  for (std::size_t i = 0; i < 4; ++i) {
    RunOptions opts;
    opts.threads = counts[i];
    opts.out_dir = (root / std::to_string(i)).string();
    cmd_mdim(c, opts, sink);
  }
  for (const char* f : {"rates.csv", "mdim.csv"}) {
    const std::string first = slurp(root / "0" / f);
    o.require(!first.empty(), std::string(f) + " written");
    for (std::size_t i = 1; i < 4; ++i)
      o.require(slurp(root / std::to_string(i) / f) == first,
                std::string(f) + " identical with --threads " + std::to_string(counts[i]) +
                    (i == 1 ? " (rerun)" : ""));
  }
  return o;
}

}  // namespace

int main() {
  const struct {
    const char* id;
    const char* what;
    std::function<Outcome()> run;
  } criteria[] = {
      {"AC1", "match and FK kernels equal their oracles", ac1},
      {"AC2", "FK symmetry, triangle inequality and Bowen domination", ac2},
      {"AC3", "greedy factor and separated-set sandwich against exact covers", ac3},
      {"AC4", "finite-union sandwich with exact covers", ac4},
      {"AC5", "Katok rate reproduces log 2 on the full shift and doubling map", ac5},
      {"AC6", "mean dimension slopes agree across metrics", ac6},
      {"AC7", "Katok counts and slopes bounded by FK spanning", ac7},
      {"AC8", "local entropy bounded by global, small gap on the full shift", ac8},
      {"AC9", "tame growth of covering numbers on [0,1] and [0,1]^2", ac9},
      {"AC10", "mdim CSVs byte-identical across reruns and thread counts", ac10},
  };

  bool all = true;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.lines.push_back(std::string("FAIL error: ") + e.what());
    }
    std::printf("%s %s %s (%.1f s)\n", c.id, o.pass ? "PASS" : "FAIL", c.what,
                seconds_since(t0));
    for (const auto& l : o.lines) std::printf("    %s\n", l.c_str());
    std::fflush(stdout);
    all = all && o.pass;
  }
  std::printf("%s\n", all ? "ALL CRITERIA PASS" : "SOME CRITERIA FAIL");
  return all ? 0 : 1;
}
