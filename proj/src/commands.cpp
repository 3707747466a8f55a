#include "fkdim/commands.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include "fkdim/errors.hpp"

namespace fkdim {

namespace {

namespace fs = std::filesystem;

std::string csv_text(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

class Output {
 public:
  Output(const ExperimentConfig& config, const RunOptions& opts)
      : dir_(opts.out_dir.empty() ? config.output_dir : opts.out_dir) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) throw ValidationError("output.dir", "cannot create '" + dir_ + "': " + ec.message());
  }

  void write(const std::string& name, const std::string& content) {
    const fs::path p = fs::path(dir_) / name;
    std::ofstream f(p, std::ios::binary);
    f << content;
    if (!f) throw Error("cannot write " + p.string());
    files_.push_back(name);
  }

  void finish(const std::string& command, const ExperimentConfig& config,
              const RunOptions& opts) {
    if (!opts.manifest) return;
    RunManifest m = make_manifest(command, config);
    m.outputs = files_;
    m.outputs.push_back("manifest.json");
    write("manifest.json", m.to_json());
  }

  const std::string& dir() const { return dir_; }

 private:
  std::string dir_;
  std::vector<std::string> files_;
};

std::string mdim_plot_script(std::span<const MdimEstimate> est) {
  std::ostringstream o;
  o << "set datafile separator ','\n"
       "set key left top\n"
       "set xlabel 'log(1/epsilon)'\n"
       "set ylabel 'spanning rate'\n"
       "plot ";
  for (std::size_t i = 0; i < est.size(); ++i) {
    const std::string k = to_string(est[i].kind);
    o << (i ? ", \\\n     " : "") << "'mdim.csv' using (strcol(1) eq '" << k
      << "' ? log(1/$2) : 1/0):3 with linespoints title '" << k << "'";
  }
  o << "\n";
  return o.str();
}

void print_report(const VerifyReport& r, std::ostream& out) {
  for (const auto& c : r.checks)
    out << (c.pass ? "PASS " : "FAIL ") << r.name << " " << c.name
        << " value=" << format_real(c.value) << " limit=" << format_real(c.limit)
        << (c.detail.empty() ? "" : " (" + c.detail + ")") << "\n";
}

}  // namespace

std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

std::string rates_csv(std::span<const MdimEstimate> est) {
  std::string s = "metric_kind,epsilon,n,count,method,log_count_over_n\n";
  for (const auto& e : est)
    for (const auto& row : e.curve.rows)
      for (const auto& c : row.cells)
        s += to_string(e.kind) + "," + format_real(c.eps) + "," + std::to_string(c.n) + "," +
             std::to_string(c.count) + "," + to_string(c.method) + "," +
             format_real(c.log_count_over_n) + "\n";
  return s;
}

std::string mdim_csv(std::span<const MdimEstimate> est) {
  std::string s = "metric_kind,epsilon,rate,r2,ratio_rate_over_log_inv_eps,slope\n";
  for (const auto& e : est)
    for (std::size_t i = 0; i < e.curve.rows.size(); ++i) {
      const auto& row = e.curve.rows[i];
      s += to_string(e.kind) + "," + format_real(row.eps) + "," + format_real(e.rates[i]) + "," +
           format_real(row.fit.r2) + "," + format_real(e.ratios[i]) + "," +
           format_real(e.slope()) + "\n";
    }
  return s;
}

std::string surrogates_csv(std::span<const MdimEstimate> est) {
  std::string s = "metric_kind,epsilon,rate,limsup,liminf,slope,upper_slope,lower_slope\n";
  for (const auto& e : est)
    for (const auto& row : e.curve.rows)
      s += to_string(e.kind) + "," + format_real(row.eps) + "," + format_real(row.fit.rate) +
           "," + format_real(row.fit.limsup) + "," + format_real(row.fit.liminf) + "," +
           format_real(e.slope()) + "," + format_real(e.upper_slope) + "," +
           format_real(e.lower_slope) + "\n";
  return s;
}

std::string katok_csv(const KatokEstimate& est) {
  std::string s = "delta,epsilon,n,partial_count,rate\n";
  for (const auto& row : est.rows)
    for (const auto& c : row.cells)
      s += format_real(row.delta) + "," + format_real(row.eps) + "," + std::to_string(c.n) + "," +
           std::to_string(c.partial_count) + "," + format_real(row.fit.rate) + "\n";
  return s;
}

std::string local_csv(std::span<const LocalEntropyEstimate> est, std::size_t per_probe) {
  std::string s = "probe_id,radius,epsilon,n,count,rate,inf_rate\n";
  for (std::size_t i = 0; i < est.size(); ++i) {
    const std::string id = std::to_string(per_probe ? i / per_probe : 0);
    for (const auto& row : est[i].rows)
      for (const auto& c : row.counts)
        s += id + "," + format_real(row.radius) + "," + format_real(row.eps) + "," +
             std::to_string(c.n) + "," + format_real(c.count) + "," + format_real(row.fit.rate) +
             "," + format_real(est[i].inf_rate) + "\n";
  }
  return s;
}

std::string verify_csv(std::span<const VerifyReport> reports) {
  std::string s = "report,check,pass,value,limit,detail\n";
  for (const auto& r : reports)
    for (const auto& c : r.checks)
      s += csv_text(r.name) + "," + csv_text(c.name) + "," + (c.pass ? "1" : "0") + "," +
           format_real(c.value) + "," + format_real(c.limit) + "," + csv_text(c.detail) + "\n";
  return s;
}

int cmd_mdim(const ExperimentConfig& config, const RunOptions& opts, std::ostream& out) {
  const SystemSpec sys = config.system_spec();
  const auto est = mdim_estimates(sys, config.kinds, config.plan(opts.threads), config.grid(),
                                  config.mistake_function());
  Output o(config, opts);
  o.write("rates.csv", rates_csv(est));
  o.write("mdim.csv", mdim_csv(est));
  o.write("mdim_surrogates.csv", surrogates_csv(est));
  if (config.gnuplot) o.write("plot.gp", mdim_plot_script(est));
  o.finish("mdim", config, opts);
  for (const auto& e : est)
    out << to_string(e.kind) << " slope=" << format_real(e.slope())
        << " upper=" << format_real(e.upper_slope) << " lower=" << format_real(e.lower_slope)
        << "\n";
  return kExitOk;
}

int cmd_katok(const ExperimentConfig& config, const RunOptions& opts, std::ostream& out) {
  const SystemSpec sys = config.system_spec();
  const auto measures = config.measure_samplers();
  const SamplingPlan plan = config.plan(opts.threads);
  const EstimatorGrid grid = config.grid();
  Output o(config, opts);
  for (std::size_t i = 0; i < measures.size(); ++i) {
    const auto est = katok_entropy_estimate(sys, measures[i], config.deltas, plan, grid, i);
    o.write(i == 0 ? "katok.csv" : "katok_" + std::to_string(i) + ".csv", katok_csv(est));
    for (std::size_t d = 0; d < est.slope_fits.size(); ++d)
      out << est.measure << " delta=" << format_real(est.deltas[d])
          << " slope=" << format_real(est.slope_fits[d].slope) << "\n";
  }
  o.finish("katok", config, opts);
  return kExitOk;
}

int cmd_local(const ExperimentConfig& config, const RunOptions& opts, std::ostream& out) {
  const SystemSpec sys = config.system_spec();
  const auto probes = config.probe_points();
  if (probes.empty()) throw ValidationError("local.probes", "needs at least one probe point");
  const auto est = local_entropy_estimates(sys, probes, config.radii,
                                           config.plan(opts.threads), config.grid());
  Output o(config, opts);
  o.write("local.csv", local_csv(est, config.epsilons.size()));
  o.finish("local", config, opts);
  for (std::size_t i = 0; i < est.size(); ++i)
    out << "probe=" << i / config.epsilons.size() << " eps=" << format_real(est[i].eps)
        << " global=" << format_real(est[i].global.rate)
        << " inf_rate=" << format_real(est[i].inf_rate) << "\n";
  return kExitOk;
}

int cmd_verify(const std::string& which, const ExperimentConfig& config, const RunOptions& opts,
               std::ostream& out) {
  std::vector<VerifyReport> reports;
  const SamplingPlan plan = config.plan(opts.threads);
  if (which == "thm11") {
    SlopeAgreementOptions t;
    t.kinds = config.kinds;
    t.tolerance = opts.tolerance.value_or(config.thm11_tolerance);
    t.slope_min = config.slope_min;
    t.slope_max = config.slope_max;
    reports.push_back(verify_slope_agreement(config.system_spec(), plan, config.grid(),
                                         config.mistake_function(), t));
  } else if (which == "thm12") {
    KatokBoundOptions t;
    t.measures = config.measure_samplers();
    t.delta = config.deltas.front();
    t.tolerance = opts.tolerance.value_or(config.thm12_tolerance);
    reports.push_back(verify_katok_bound(config.system_spec(), plan, config.grid(), t));
  } else if (which == "thm13") {
    LocalBoundOptions t;
    t.probes = config.probe_points();
    if (t.probes.empty()) throw ValidationError("local.probes", "needs at least one probe point");
    t.radii = config.radii;
    t.gap_tolerance = opts.tolerance ? opts.tolerance : config.thm13_gap;
    reports.push_back(verify_local_bound(config.system_spec(), plan, config.grid(), t));
  } else if (which == "prop32") {
    reports.push_back(verify_union_sandwich(config.system_spec(), plan, config.prop32));
  } else if (which == "metrics") {
    reports.push_back(verify_metric_properties(1000, 16, config.seed));
  } else if (which == "oracles") {
    reports.push_back(verify_match_oracles(500, config.seed));
    reports.push_back(verify_cover_oracles(200, config.seed));
  } else if (which == "tame") {
    TameGrowthOptions t;
    if (opts.tolerance) t.limit = *opts.tolerance;
    reports.push_back(verify_tame_growth(t));
  } else {
    throw ValidationError("verify", "unknown suite '" + which + "'");
  }

  Output o(config, opts);
  o.write("verify_" + which + ".csv", verify_csv(reports));
  o.finish("verify " + which, config, opts);
  bool pass = true;
  for (const auto& r : reports) {
    print_report(r, out);
    pass = pass && r.pass();
  }
  out << (pass ? "verify " + which + ": all checks passed\n"
               : "verify " + which + ": some checks failed\n");
  return pass ? kExitOk : kExitCheckFailed;
}

int cmd_fk_dist(const FkDistRequest& req, std::ostream& out) {
  std::vector<DistanceMatrix> mats;
  std::vector<std::string> labels;
  if (!req.line_a.empty() || !req.line_b.empty()) {
    if (req.line_a.size() != req.line_b.size() || req.line_a.empty())
      throw ValidationError("line", "both sequences need the same nonzero length");
    mats.push_back(line_distance_matrix(req.line_a, req.line_b));
    labels.push_back("line");
  } else {
    if (req.points.empty() || req.points.size() % 2 != 0)
      throw ValidationError("points", "give points in pairs");
    if (req.n == 0) throw ValidationError("n", "must be >= 1");
    const SystemSpec sys = parse_system(req.system);
    for (std::size_t i = 0; i < req.points.size(); i += 2) {
      const Point a = parse_point(sys, req.points[i]);
      const Point b = parse_point(sys, req.points[i + 1]);
      mats.push_back(distance_matrix(sys, orbit(sys, a, req.n), orbit(sys, b, req.n)));
      labels.push_back(std::to_string(i / 2));
    }
  }
  out << "pair,n,fk,bowen,mean\n";
  for (std::size_t i = 0; i < mats.size(); ++i)
    out << labels[i] << "," << mats[i].n() << "," << format_real(fk_distance(mats[i])) << ","
        << format_real(bowen_distance(mats[i])) << "," << format_real(mean_distance(mats[i]))
        << "\n";
  if (req.profile) {
    out << "pair,delta_lo,delta_hi,match_size,fbar\n";
    for (std::size_t i = 0; i < mats.size(); ++i)
      for (const auto& r : match_profile(mats[i]))
        out << labels[i] << "," << format_real(r.delta_lo) << ","
            << (std::isinf(r.delta_hi) ? std::string("inf") : format_real(r.delta_hi)) << ","
            << r.size << "," << format_real(r.fbar) << "\n";
  }
  return kExitOk;
}

}  // namespace fkdim
