#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "fkdim/commands.hpp"
#include "fkdim/errors.hpp"

namespace {

std::vector<double> parse_sequence(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || item.find_first_not_of(" \t", used) != std::string::npos)
      throw fkdim::ValidationError("line", "not a number: '" + item + "'");
    out.push_back(v);
  }
  return out;
}

unsigned default_threads() {
  if (const char* env = std::getenv("FKDIM_THREADS")) {
    char* end = nullptr;
    const unsigned long v = std::strtoul(env, &end, 10);
    if (end != env && *end == '\0' && v >= 1) return static_cast<unsigned>(v);
    throw fkdim::ValidationError("FKDIM_THREADS", "expected a positive integer");
  }
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Orbit metrics, covering numbers and entropy estimators"};
  app.require_subcommand(1);
  app.set_version_flag("--version", fkdim::version_string());

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  std::string out_dir;
  std::optional<double> tolerance;
  bool no_manifest = false;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "YAML experiment file")->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "master seed (overrides sampling.seed)");
    sub->add_option("--threads", threads, "worker threads (default: FKDIM_THREADS or 1)")
        ->check(CLI::PositiveNumber);
    sub->add_option("--out", out_dir, "output directory (overrides output.dir)");
    sub->add_option("--tolerance", tolerance, "override the tolerance of the check in use")
        ->check(CLI::NonNegativeNumber);
    sub->add_flag("--no-manifest", no_manifest, "skip manifest.json");
  };

  fkdim::FkDistRequest dist;
  std::vector<std::string> line;
  bool no_profile = false;
  auto* fk = app.add_subcommand("fk-dist", "FK, Bowen and mean distances of orbit pairs");
  fk->add_option("--config", config_path, "take the system from this file")
      ->check(CLI::ExistingFile);
  fk->add_option("--system", dist.system, "system text, e.g. fullshift(k=2,base=2)");
  fk->add_option("-n,--n", dist.n, "orbit length")->check(CLI::PositiveNumber);
  fk->add_option("points", dist.points, "points, taken two at a time");
  fk->add_option("--line", line, "two comma-separated real sequences")->expected(2);
  fk->add_flag("--no-profile", no_profile, "omit the match-size table");

  auto* mdim = app.add_subcommand("mdim", "spanning rates and mean dimension slopes");
  auto* katok = app.add_subcommand("katok", "FK Katok entropy tables");
  auto* local = app.add_subcommand("local", "FK local entropy tables");
  auto* verify = app.add_subcommand("verify", "run a check suite");
  std::string which;
  verify->add_option("which", which, "thm11 | thm12 | thm13 | prop32 | metrics | oracles | tame")
      ->required()
      ->check(CLI::IsMember({"thm11", "thm12", "thm13", "prop32", "metrics", "oracles", "tame"}));
  for (auto* sub : {mdim, katok, local, verify}) add_common(sub);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : fkdim::kExitError;
  }

  try {
    fkdim::ExperimentConfig config;
    if (!config_path.empty()) config = fkdim::load_config(config_path);

    if (fk->parsed()) {
      if (dist.system.empty()) dist.system = config.system;
      if (!line.empty()) {
        dist.line_a = parse_sequence(line[0]);
        dist.line_b = parse_sequence(line[1]);
      }
      dist.profile = !no_profile;
      return fkdim::cmd_fk_dist(dist, std::cout);
    }

    if (seed) config.seed = *seed;
    fkdim::RunOptions opts;
    opts.threads = threads ? *threads : default_threads();
    opts.out_dir = out_dir;
    opts.tolerance = tolerance;
    opts.manifest = !no_manifest;

    if (mdim->parsed()) return fkdim::cmd_mdim(config, opts, std::cout);
    if (katok->parsed()) return fkdim::cmd_katok(config, opts, std::cout);
    if (local->parsed()) return fkdim::cmd_local(config, opts, std::cout);
    return fkdim::cmd_verify(which, config, opts, std::cout);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return fkdim::kExitError;
  }
}
