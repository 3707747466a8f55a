#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "test_util.hpp"

#ifndef FKDIM_CLI
#error "FKDIM_CLI must be defined by the build"
#endif
#ifndef FKDIM_CONFIG_DIR
#error "FKDIM_CONFIG_DIR must be defined by the build"
#endif

namespace fs = std::filesystem;

namespace {

struct Result {
  int code = -1;
  std::string output;
};

Result run(const std::string& args) {
  const std::string cmd = std::string(FKDIM_CLI) + " " + args + " 2>&1";
  Result r;
  FILE* p = popen(cmd.c_str(), "r");
  REQUIRE(p != nullptr);
  char buf[4096];
  std::size_t got;
  while ((got = fread(buf, 1, sizeof buf, p)) > 0) r.output.append(buf, got);
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("fkdim_cli_test_" + name);
  fs::remove_all(p);
  return p;
}

fs::path write_config(const std::string& name, const std::string& text) {
  const fs::path p = fs::temp_directory_path() / ("fkdim_cli_test_" + name + ".yaml");
  std::ofstream(p) << text;
  return p;
}

std::string config(const std::string& name) {
  return std::string(FKDIM_CONFIG_DIR) + "/" + name;
}

}  // namespace

TEST_CASE("fk-dist on explicit sequences") {
  auto r = run("fk-dist --line 0,10,20,30 10,20,30,40");
  CHECK(r.code == 0);
  CHECK(r.output.find("line,4,0.25,10,10\n") != std::string::npos);
  CHECK(r.output.find("pair,delta_lo,delta_hi,match_size,fbar") != std::string::npos);
  CHECK(r.output.find("line,0,10,3,0.25\n") != std::string::npos);
  CHECK(run("fk-dist --line 0,10,20,30 10,20,30,40").output == r.output);
}

TEST_CASE("fk-dist on system points") {
  auto r = run("fk-dist --system 'doubling' -n 8 0.3 0.3 --no-profile");
  CHECK(r.code == 0);
  CHECK(r.output == "pair,n,fk,bowen,mean\n0,8,0,0,0\n");
  CHECK(run("fk-dist --system 'doubling' -n 8 0.3").code == 2);
  CHECK(run("fk-dist --system 'fullshift(k=2)' -n 3 0,2 0,1").code == 2);
}

TEST_CASE("mdim golden table, reruns and thread counts") {
  const fs::path a = scratch("mdim_a"), b = scratch("mdim_b"), c = scratch("mdim_c");
  const std::string cfg = config("fullshift2_small.yaml");
  REQUIRE(run("mdim --config " + cfg + " --threads 1 --out " + a.string()).code == 0);
  REQUIRE(run("mdim --config " + cfg + " --threads 4 --out " + b.string()).code == 0);
  REQUIRE(run("mdim --config " + cfg + " --threads 1 --out " + c.string()).code == 0);
  for (const char* f : {"rates.csv", "mdim.csv", "mdim_surrogates.csv"}) {
    CHECK(slurp(a / f) == slurp(b / f));
    CHECK(slurp(a / f) == slurp(c / f));
  }
  CHECK(slurp(a / "rates.csv") == test::read_golden("mdim_fullshift2/rates.csv"));
  CHECK(slurp(a / "mdim.csv") == test::read_golden("mdim_fullshift2/mdim.csv"));
  CHECK(fs::exists(a / "manifest.json"));
  CHECK(!fs::exists(a / "plot.gp"));
}

TEST_CASE("FKDIM_THREADS fallback and seed override") {
  const fs::path a = scratch("env_a"), b = scratch("env_b"), c = scratch("env_c");
  const auto cfg = write_config("env", "system: tent\ngrid:\n  epsilons: [0.25, 0.125]\n"
                                       "sampling:\n  universe: 120\n");
  REQUIRE(run("mdim --config " + cfg.string() + " --out " + a.string()).code == 0);
  const std::string env = "FKDIM_THREADS=3 ";
  const std::string cmd = std::string(FKDIM_CLI) + " mdim --config " + cfg.string() + " --out " +
                          b.string() + " > /dev/null";
  REQUIRE(std::system((env + cmd).c_str()) == 0);
  CHECK(slurp(a / "rates.csv") == slurp(b / "rates.csv"));
  CHECK(std::system(("FKDIM_THREADS=zero " + cmd).c_str()) != 0);
  REQUIRE(run("mdim --config " + cfg.string() + " --seed 99 --out " + c.string()).code == 0);
  CHECK(slurp(a / "rates.csv") != slurp(c / "rates.csv"));
}

TEST_CASE("katok and local tables") {
  const fs::path out = scratch("katok");
  const auto cfg = write_config(
      "katok", "system: fullshift(k=2,base=256)\ngrid:\n  epsilons: [0.125, 0.0625]\n"
               "sampling:\n  universe: 300\n  period: 8\n  period_mode: exact\n"
               "katok:\n  deltas: [0.1, 0.5]\n  measures: [uniform, \"bernoulli(0.9,0.1)\"]\n"
               "local:\n  probes: [\"0\", \"0,1\"]\n  radii: [0.5, 0.1]\n");
  REQUIRE(run("katok --config " + cfg.string() + " --out " + out.string()).code == 0);
  const std::string k = slurp(out / "katok.csv");
  CHECK(k.rfind("delta,epsilon,n,partial_count,rate\n", 0) == 0);
  CHECK(fs::exists(out / "katok_1.csv"));
  REQUIRE(run("local --config " + cfg.string() + " --out " + out.string()).code == 0);
  const std::string l = slurp(out / "local.csv");
  CHECK(l.rfind("probe_id,radius,epsilon,n,count,rate,inf_rate\n", 0) == 0);
  CHECK(l.find("\n1,0.1,0.0625,6,") != std::string::npos);
}

TEST_CASE("verify exit codes") {
  const fs::path out = scratch("verify");
  const auto ident = write_config("ident", "system: identity\ngrid:\n  epsilons: [0.25, 0.125]\n"
                                           "sampling:\n  universe: 80\n");
  auto r = run("verify thm11 --config " + ident.string() + " --out " + out.string());
  CHECK(r.code == 0);
  CHECK(r.output.find("all checks passed") != std::string::npos);
  CHECK(slurp(out / "verify_thm11.csv").rfind("report,check,pass,value,limit,detail\n", 0) == 0);

  const auto strict = write_config("strict", "system: identity\ngrid:\n  epsilons: [0.25, 0.125]\n"
                                             "sampling:\n  universe: 80\n"
                                             "tolerances:\n  slope_min: 0.5\n");
  CHECK(run("verify thm11 --config " + strict.string() + " --out " + out.string()).code == 1);
  CHECK(run("verify prop32 --out " + out.string()).code == 0);
  CHECK(run("verify tame --out " + out.string()).code == 0);
  CHECK(run("verify tame --tolerance 0.001 --out " + out.string()).code == 1);
  CHECK(run("verify nonsense --out " + out.string()).code == 2);
}

TEST_CASE("config errors exit with 2 and name the field") {
  const auto bad = write_config("bad", "system: tent\ngrid:\n  epsilons: [0.25, 0.125]\n"
                                       "  n_mx: 4\n");
  auto r = run("mdim --config " + bad.string());
  CHECK(r.code == 2);
  CHECK(r.output.find("line 4") != std::string::npos);
  CHECK(r.output.find("grid.n_mx") != std::string::npos);
  const auto range = write_config("range", "system: tent\nkatok:\n  deltas: [1.2]\n");
  r = run("katok --config " + range.string());
  CHECK(r.code == 2);
  CHECK(r.output.find("katok.deltas") != std::string::npos);
  CHECK(run("mdim --config /nonexistent.yaml").code == 2);
  CHECK(run("").code == 2);
}
