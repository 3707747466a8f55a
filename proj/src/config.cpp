#include "fkdim/config.hpp"

#include <yaml-cpp/yaml.h>

#include <charconv>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include <json.hpp>

#include "fkdim/errors.hpp"
#include "fkdim/rng.hpp"

#ifndef FKDIM_VERSION
#define FKDIM_VERSION "0.0.0"
#endif

namespace fkdim {

namespace {

int line_of(const YAML::Node& node) {
  const YAML::Mark m = node.Mark();
  return m.line >= 0 ? m.line + 1 : 1;
}

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}

// Field paths ("grid.epsilons") are mapped to the line where they were read
// so that validation errors can point back into the file.
class Reader {
 public:
  [[noreturn]] void fail(const YAML::Node& node, const std::string& field,
                         const std::string& what) const {
    throw ConfigError(line_of(node), field + ": " + what);
  }

  void note(const std::string& field, const YAML::Node& node) { lines_[field] = line_of(node); }

  int line_for(const std::string& field) const {
    std::string f = field;
    for (;;) {
      if (auto it = lines_.find(f); it != lines_.end()) return it->second;
      const auto dot = f.rfind('.');
      if (dot == std::string::npos) break;
      f.resize(dot);
    }
    return 1;
  }

  std::string text(const YAML::Node& n, const std::string& field) const {
    if (!n.IsScalar()) fail(n, field, "expected a scalar");
    return n.Scalar();
  }

  double real(const YAML::Node& n, const std::string& field) const {
    const std::string s = text(n, field);
    double v = 0.0;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size())
      fail(n, field, "expected a number, got '" + s + "'");
    return v;
  }

  std::uint64_t unsigned_int(const YAML::Node& n, const std::string& field) const {
    std::string s = text(n, field);
    int base = 10;
    const char* b = s.data();
    if (s.size() > 2 && s[0] == '0' && (s[1] == 'x' || s[1] == 'X')) {
      base = 16;
      b += 2;
    }
    std::uint64_t v = 0;
    const auto [p, ec] = std::from_chars(b, s.data() + s.size(), v, base);
    if (ec != std::errc{} || p != s.data() + s.size() || b == s.data() + s.size())
      fail(n, field, "expected a non-negative integer, got '" + s + "'");
    return v;
  }

  std::size_t size(const YAML::Node& n, const std::string& field) const {
    return static_cast<std::size_t>(unsigned_int(n, field));
  }

  bool boolean(const YAML::Node& n, const std::string& field) const {
    const std::string s = text(n, field);
    if (s == "true") return true;
    if (s == "false") return false;
    fail(n, field, "expected true or false, got '" + s + "'");
  }

  template <class T, class F>
  std::vector<T> list(const YAML::Node& n, const std::string& field, F item) const {
    if (!n.IsSequence()) fail(n, field, "expected a list");
    std::vector<T> out;
    for (const auto& e : n) out.push_back(item(e, field));
    return out;
  }

  // Calls handler(key, value) for every entry; unknown keys are errors.
  void section(const YAML::Node& n, const std::string& name,
               const std::set<std::string>& keys,
               const std::function<void(const std::string&, const YAML::Node&)>& handler) {
    if (!n.IsMap()) fail(n, name, "expected a mapping");
    for (const auto& kv : n) {
      const std::string key = kv.first.Scalar();
      const std::string field = name.empty() ? key : name + "." + key;
      if (!keys.count(key)) fail(kv.first, field, "unknown key");
      note(field, kv.first);
      handler(key, kv.second);
    }
  }

 private:
  std::map<std::string, int> lines_;
};

template <class E>
E pick(const Reader& r, const YAML::Node& n, const std::string& field,
       std::initializer_list<std::pair<const char*, E>> options) {
  const std::string s = r.text(n, field);
  std::string names;
  for (const auto& [name, value] : options) {
    if (s == name) return value;
    names += names.empty() ? name : std::string(", ") + name;
  }
  r.fail(n, field, "expected one of " + names + ", got '" + s + "'");
}

const char* family_name(SampleFamily f) { return f == SampleFamily::Grid ? "grid" : "random"; }
const char* period_mode_name(PeriodMode m) { return m == PeriodMode::Exact ? "exact" : "up_to"; }
const char* mode_name(CoverMode m) { return m == CoverMode::Exact ? "exact" : "greedy"; }

void check(bool ok, const char* field, const std::string& what) {
  if (!ok) throw ValidationError(field, what);
}

// Rewraps parse failures of embedded texts under the config field.
template <class F>
auto under(const char* field, F f) {
  try {
    return f();
  } catch (const ValidationError& e) {
    if (e.field().rfind(field, 0) == 0) throw;
    throw ValidationError(field, e.what());
  } catch (const Error& e) {
    throw ValidationError(field, e.what());
  }
}

void validate_config(const ExperimentConfig& c) {
  const SystemSpec sys = under("system", [&] { return c.system_spec(); });
  validate(c.grid(), 1);
  check(!c.universe.empty(), "sampling.universe", "needs at least one size");
  check(c.universe.size() == 1 || c.universe.size() == c.epsilons.size(), "sampling.universe",
        "give one size or one size per epsilon");
  for (auto s : c.universe) check(s >= 1, "sampling.universe", "sizes must be >= 1");
  for (const auto& [n, cap] : c.n_caps)
    check(n >= 1 && cap >= 1, "sampling.n_caps", "n and caps must be >= 1");
  check(c.period >= 1, "sampling.period", "must be >= 1");
  check(c.levels >= 1, "sampling.levels", "must be >= 1");
  check(!c.kinds.empty(), "metrics.kinds", "needs at least one kind");
  under("metrics.mistake", [&] { return c.mistake_function(); });
  check(!c.deltas.empty(), "katok.deltas", "needs at least one delta");
  for (double d : c.deltas) check(d > 0.0 && d < 1.0, "katok.deltas", "must lie in (0, 1)");
  check(!c.measures.empty(), "katok.measures", "needs at least one measure");
  for (const auto& m : c.measures)
    under("katok.measures", [&] { return MeasureSampler::parse(sys, m); });
  for (const auto& p : c.probes) under("local.probes", [&] { return parse_point(sys, p); });
  for (std::size_t i = 0; i < c.radii.size(); ++i) {
    check(c.radii[i] > 0.0, "local.radii", "must be > 0");
    check(i == 0 || c.radii[i] < c.radii[i - 1], "local.radii", "must be strictly decreasing");
  }
  check(c.prop32.trials >= 1, "prop32.trials", "must be >= 1");
  check(c.prop32.max_pieces >= 2, "prop32.max_pieces", "must be >= 2");
  check(c.prop32.sample_size >= c.prop32.max_pieces, "prop32.sample_size",
        "must be >= max_pieces");
  check(!c.prop32.ns.empty(), "prop32.ns", "needs at least one n");
  for (auto n : c.prop32.ns) check(n >= 1, "prop32.ns", "must be >= 1");
  check(!c.prop32.epsilons.empty(), "prop32.epsilons", "needs at least one epsilon");
  for (double e : c.prop32.epsilons) check(e > 0.0, "prop32.epsilons", "must be > 0");
  check(c.thm11_tolerance >= 0.0, "tolerances.thm11", "must be >= 0");
  check(c.thm12_tolerance >= 0.0, "tolerances.thm12", "must be >= 0");
  if (c.thm13_gap) check(*c.thm13_gap >= 0.0, "tolerances.thm13_gap", "must be >= 0");
  if (c.slope_min && c.slope_max)
    check(*c.slope_min <= *c.slope_max, "tolerances.slope_min", "must be <= slope_max");
  check(!c.output_dir.empty(), "output.dir", "must not be empty");
}

}  // namespace

SamplingPlan ExperimentConfig::plan(unsigned threads) const {
  SamplingPlan p;
  p.universe_sizes = universe;
  p.n_caps = n_caps;
  p.extra_candidates = extra_candidates;
  p.params.family = family;
  p.params.period = period;
  p.params.period_mode = period_mode;
  p.params.levels = levels;
  p.mode = mode;
  p.limits = limits;
  p.seed = seed;
  p.threads = threads;
  return p;
}

EstimatorGrid ExperimentConfig::grid() const {
  EstimatorGrid g;
  g.epsilons = epsilons;
  g.n_min = n_min;
  g.n_max = n_max;
  g.mistake_window = mistake_window;
  return g;
}

SystemSpec ExperimentConfig::system_spec() const { return parse_system(system); }

MistakeFunction ExperimentConfig::mistake_function() const {
  return MistakeFunction::parse(mistake);
}

std::vector<Point> ExperimentConfig::probe_points() const {
  const SystemSpec sys = system_spec();
  std::vector<Point> out;
  for (const auto& p : probes) out.push_back(parse_point(sys, p));
  return out;
}

std::vector<MeasureSampler> ExperimentConfig::measure_samplers() const {
  const SystemSpec sys = system_spec();
  std::vector<MeasureSampler> out;
  for (const auto& m : measures) out.push_back(MeasureSampler::parse(sys, m));
  return out;
}

ExperimentConfig parse_config(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw ConfigError(e.mark.line >= 0 ? e.mark.line + 1 : 1, e.msg);
  }
  ExperimentConfig c;
  if (!root || root.IsNull()) return c;

  Reader r;
  auto reals = [&](const YAML::Node& n, const std::string& f) {
    return r.list<double>(n, f, [&](const YAML::Node& e, const std::string& ff) {
      return r.real(e, ff);
    });
  };
  auto sizes = [&](const YAML::Node& n, const std::string& f) {
    return r.list<std::size_t>(n, f, [&](const YAML::Node& e, const std::string& ff) {
      return r.size(e, ff);
    });
  };
  auto texts = [&](const YAML::Node& n, const std::string& f) {
    return r.list<std::string>(n, f, [&](const YAML::Node& e, const std::string& ff) {
      return r.text(e, ff);
    });
  };

  r.section(root, "",
            {"system", "grid", "sampling", "metrics", "katok", "local", "prop32", "tolerances",
             "output"},
            [&](const std::string& sec, const YAML::Node& v) {
              if (sec == "system") {
                c.system = r.text(v, "system");
              } else if (sec == "grid") {
                r.section(v, "grid", {"epsilons", "n_min", "n_max", "mistake_n_window"},
                          [&](const std::string& k, const YAML::Node& x) {
                            const std::string f = "grid." + k;
                            if (k == "epsilons") c.epsilons = reals(x, f);
                            else if (k == "n_min") c.n_min = r.size(x, f);
                            else if (k == "n_max") c.n_max = r.size(x, f);
                            else {
                              const auto w = sizes(x, f);
                              if (w.size() != 2) r.fail(x, f, "expected [n_min, n_max]");
                              c.mistake_window = NWindow{w[0], w[1]};
                            }
                          });
              } else if (sec == "sampling") {
                r.section(
                    v, "sampling",
                    {"universe", "n_caps", "extra_candidates", "family", "period",
                     "period_mode", "levels", "mode", "exact_universe_cap",
                     "exact_candidate_cap", "seed"},
                    [&](const std::string& k, const YAML::Node& x) {
                      const std::string f = "sampling." + k;
                      if (k == "universe") {
                        c.universe = x.IsSequence() ? sizes(x, f)
                                                    : std::vector<std::size_t>{r.size(x, f)};
                      } else if (k == "n_caps") {
                        if (!x.IsMap()) r.fail(x, f, "expected a mapping n: size");
                        c.n_caps.clear();
                        for (const auto& kv : x)
                          c.n_caps[r.size(kv.first, f)] = r.size(kv.second, f);
                      } else if (k == "extra_candidates") {
                        c.extra_candidates = r.size(x, f);
                      } else if (k == "family") {
                        c.family = pick<SampleFamily>(
                            r, x, f, {{"random", SampleFamily::Random}, {"grid", SampleFamily::Grid}});
                      } else if (k == "period") {
                        c.period = r.size(x, f);
                      } else if (k == "period_mode") {
                        c.period_mode = pick<PeriodMode>(
                            r, x, f, {{"up_to", PeriodMode::UpTo}, {"exact", PeriodMode::Exact}});
                      } else if (k == "levels") {
                        c.levels = r.size(x, f);
                      } else if (k == "mode") {
                        c.mode = pick<CoverMode>(
                            r, x, f, {{"greedy", CoverMode::Greedy}, {"exact", CoverMode::Exact}});
                      } else if (k == "exact_universe_cap") {
                        c.limits.exact_universe_cap = r.size(x, f);
                      } else if (k == "exact_candidate_cap") {
                        c.limits.exact_candidate_cap = r.size(x, f);
                      } else {
                        c.seed = r.unsigned_int(x, f);
                      }
                    });
              } else if (sec == "metrics") {
                r.section(v, "metrics", {"kinds", "mistake"},
                          [&](const std::string& k, const YAML::Node& x) {
                            const std::string f = "metrics." + k;
                            if (k == "mistake") {
                              c.mistake = r.text(x, f);
                              return;
                            }
                            c.kinds.clear();
                            for (const auto& name : texts(x, f)) {
                              try {
                                c.kinds.push_back(parse_metric_kind(name));
                              } catch (const Error& e) {
                                r.fail(x, f, e.what());
                              }
                            }
                          });
              } else if (sec == "katok") {
                r.section(v, "katok", {"deltas", "measures"},
                          [&](const std::string& k, const YAML::Node& x) {
                            if (k == "deltas") c.deltas = reals(x, "katok.deltas");
                            else c.measures = texts(x, "katok.measures");
                          });
              } else if (sec == "local") {
                r.section(v, "local", {"probes", "radii"},
                          [&](const std::string& k, const YAML::Node& x) {
                            if (k == "probes") c.probes = texts(x, "local.probes");
                            else c.radii = reals(x, "local.radii");
                          });
              } else if (sec == "prop32") {
                r.section(v, "prop32",
                          {"trials", "max_pieces", "sample_size", "ns", "epsilons", "kind"},
                          [&](const std::string& k, const YAML::Node& x) {
                            const std::string f = "prop32." + k;
                            if (k == "trials") c.prop32.trials = r.size(x, f);
                            else if (k == "max_pieces") c.prop32.max_pieces = r.size(x, f);
                            else if (k == "sample_size") c.prop32.sample_size = r.size(x, f);
                            else if (k == "ns") c.prop32.ns = sizes(x, f);
                            else if (k == "epsilons") c.prop32.epsilons = reals(x, f);
                            else {
                              try {
                                c.prop32.kind = parse_metric_kind(r.text(x, f));
                              } catch (const Error& e) {
                                r.fail(x, f, e.what());
                              }
                            }
                          });
              } else if (sec == "tolerances") {
                r.section(v, "tolerances",
                          {"thm11", "thm12", "thm13_gap", "slope_min", "slope_max"},
                          [&](const std::string& k, const YAML::Node& x) {
                            const double val = r.real(x, "tolerances." + k);
                            if (k == "thm11") c.thm11_tolerance = val;
                            else if (k == "thm12") c.thm12_tolerance = val;
                            else if (k == "thm13_gap") c.thm13_gap = val;
                            else if (k == "slope_min") c.slope_min = val;
                            else c.slope_max = val;
                          });
              } else {
                r.section(v, "output", {"dir", "gnuplot"},
                          [&](const std::string& k, const YAML::Node& x) {
                            if (k == "dir") c.output_dir = r.text(x, "output.dir");
                            else c.gnuplot = r.boolean(x, "output.gnuplot");
                          });
              }
            });

  try {
    validate_config(c);
  } catch (const ValidationError& e) {
    throw ConfigError(r.line_for(e.field()), e.what());
  }
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(0, "cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string to_yaml(const ExperimentConfig& c) {
  std::ostringstream o;
  auto reals = [](const std::vector<double>& v) {
    std::string s = "[";
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + fmt_double(v[i]);
    return s + "]";
  };
  auto sizes = [](const std::vector<std::size_t>& v) {
    std::string s = "[";
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + std::to_string(v[i]);
    return s + "]";
  };
  auto texts = [](const std::vector<std::string>& v) {
    std::string s = "[";
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + quote(v[i]);
    return s + "]";
  };

  o << "system: " << quote(c.system) << "\n";
  o << "grid:\n";
  o << "  epsilons: " << reals(c.epsilons) << "\n";
  o << "  n_min: " << c.n_min << "\n";
  o << "  n_max: " << c.n_max << "\n";
  if (c.mistake_window)
    o << "  mistake_n_window: [" << c.mistake_window->n_min << ", " << c.mistake_window->n_max
      << "]\n";
  o << "sampling:\n";
  o << "  universe: " << sizes(c.universe) << "\n";
  if (!c.n_caps.empty()) {
    o << "  n_caps: {";
    bool first = true;
    for (const auto& [n, cap] : c.n_caps) {
      o << (first ? "" : ", ") << n << ": " << cap;
      first = false;
    }
    o << "}\n";
  }
  o << "  extra_candidates: " << c.extra_candidates << "\n";
  o << "  family: " << family_name(c.family) << "\n";
  o << "  period: " << c.period << "\n";
  o << "  period_mode: " << period_mode_name(c.period_mode) << "\n";
  o << "  levels: " << c.levels << "\n";
  o << "  mode: " << mode_name(c.mode) << "\n";
  o << "  exact_universe_cap: " << c.limits.exact_universe_cap << "\n";
  o << "  exact_candidate_cap: " << c.limits.exact_candidate_cap << "\n";
  char seed[32];
  std::snprintf(seed, sizeof seed, "0x%016llx", static_cast<unsigned long long>(c.seed));
  o << "  seed: " << seed << "\n";
  o << "metrics:\n";
  std::vector<std::string> kinds;
  for (MetricKind k : c.kinds) kinds.push_back(to_string(k));
  o << "  kinds: " << texts(kinds) << "\n";
  o << "  mistake: " << quote(c.mistake) << "\n";
  o << "katok:\n";
  o << "  deltas: " << reals(c.deltas) << "\n";
  o << "  measures: " << texts(c.measures) << "\n";
  o << "local:\n";
  o << "  probes: " << texts(c.probes) << "\n";
  o << "  radii: " << reals(c.radii) << "\n";
  o << "prop32:\n";
  o << "  trials: " << c.prop32.trials << "\n";
  o << "  max_pieces: " << c.prop32.max_pieces << "\n";
  o << "  sample_size: " << c.prop32.sample_size << "\n";
  o << "  ns: " << sizes(c.prop32.ns) << "\n";
  o << "  epsilons: " << reals(c.prop32.epsilons) << "\n";
  o << "  kind: " << to_string(c.prop32.kind) << "\n";
  o << "tolerances:\n";
  o << "  thm11: " << fmt_double(c.thm11_tolerance) << "\n";
  o << "  thm12: " << fmt_double(c.thm12_tolerance) << "\n";
  if (c.thm13_gap) o << "  thm13_gap: " << fmt_double(*c.thm13_gap) << "\n";
  if (c.slope_min) o << "  slope_min: " << fmt_double(*c.slope_min) << "\n";
  if (c.slope_max) o << "  slope_max: " << fmt_double(*c.slope_max) << "\n";
  o << "output:\n";
  o << "  dir: " << quote(c.output_dir) << "\n";
  o << "  gnuplot: " << (c.gnuplot ? "true" : "false") << "\n";
  return o.str();
}

std::string config_hash(const ExperimentConfig& config) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : to_yaml(config)) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string RunManifest::to_json() const {
  nlohmann::ordered_json j;
  j["command"] = command;
  j["config_hash"] = config_hash;
  j["version"] = version;
  j["seed"] = seed;
  j["timestamp"] = timestamp;
  nlohmann::ordered_json s = nlohmann::ordered_json::object();
  for (const auto& [name, value] : seeds) s[name] = value;
  j["seeds"] = s;
  j["outputs"] = outputs;
  return j.dump(2) + "\n";
}

RunManifest make_manifest(const std::string& command, const ExperimentConfig& config) {
  RunManifest m;
  m.command = command;
  m.config_hash = fkdim::config_hash(config);
  m.version = version_string();
  m.seed = config.seed;

  const std::time_t now =
      std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char ts[32];
  std::strftime(ts, sizeof ts, "%Y-%m-%dT%H:%M:%SZ", &tm);
  m.timestamp = ts;

  m.seeds.emplace_back("universe", sample_seed(config.seed, SampleRole::Universe));
  m.seeds.emplace_back("candidates", sample_seed(config.seed, SampleRole::Candidates));
  const auto role = static_cast<std::uint64_t>(SampleRole::Measure);
  for (std::size_t i = 0; i < config.measures.size(); ++i) {
    m.seeds.emplace_back("measure" + std::to_string(i) + ".universe",
                         derive_seed(config.seed, {role, i, 0}));
    m.seeds.emplace_back("measure" + std::to_string(i) + ".candidates",
                         derive_seed(config.seed, {role, i, 1}));
  }
  const auto part = static_cast<std::uint64_t>(SampleRole::Partition);
  for (std::size_t t = 0; t < config.prop32.trials; ++t)
    m.seeds.emplace_back("partition" + std::to_string(t), derive_seed(config.seed, {part, t}));
  return m;
}

const char* version_string() { return FKDIM_VERSION; }

}  // namespace fkdim
