#pragma once

// Subcommand bodies behind the fkdim executable. Each writes its CSV
// tables into the output directory and returns the process exit code.

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fkdim/config.hpp"
#include "fkdim/suites.hpp"

namespace fkdim {

enum ExitCode : int { kExitOk = 0, kExitCheckFailed = 1, kExitError = 2 };

struct RunOptions {
  unsigned threads = 1;
  std::string out_dir;                 // empty: config.output_dir
  std::optional<double> tolerance;     // overrides the verify tolerance in use
  bool manifest = true;
};

/// 12 significant digits, C locale.
std::string format_real(double v);

std::string rates_csv(std::span<const MdimEstimate> est);
std::string mdim_csv(std::span<const MdimEstimate> est);
/// Regression rate next to both tail surrogates, per kind and epsilon.
std::string surrogates_csv(std::span<const MdimEstimate> est);
std::string katok_csv(const KatokEstimate& est);
/// Rows are probe-major; `per_probe` estimates belong to each probe.
std::string local_csv(std::span<const LocalEntropyEstimate> est, std::size_t per_probe);
std::string verify_csv(std::span<const VerifyReport> reports);

int cmd_mdim(const ExperimentConfig& config, const RunOptions& opts, std::ostream& out);
int cmd_katok(const ExperimentConfig& config, const RunOptions& opts, std::ostream& out);
int cmd_local(const ExperimentConfig& config, const RunOptions& opts, std::ostream& out);

/// which: thm11, thm12, thm13, prop32, metrics, oracles, tame.
int cmd_verify(const std::string& which, const ExperimentConfig& config, const RunOptions& opts,
               std::ostream& out);

struct FkDistRequest {
  std::string system;
  std::size_t n = 1;
  /// Point texts taken two at a time.
  std::vector<std::string> points;
  /// Alternative to points: two explicit real sequences compared under |x - y|.
  std::vector<double> line_a, line_b;
  bool profile = true;
};

/// Prints one row per pair (fk, bowen, mean) and, with `profile`, the
/// match-size table of each pair.
int cmd_fk_dist(const FkDistRequest& req, std::ostream& out);

}  // namespace fkdim
