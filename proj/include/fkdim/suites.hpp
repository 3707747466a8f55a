#pragma once

// Self-contained check suites: kernel oracles, metric axioms on orbits,
// cover oracles and base-space growth. Each returns a VerifyReport.

#include <cstddef>
#include <cstdint>
#include <vector>

#include "fkdim/estimators.hpp"

namespace fkdim {

/// Full shifts, cube shifts, interval maps and two products.
std::vector<SystemSpec> builtin_systems();

/// Random n <= 6 matrices: DP match size against enumeration at several
/// thresholds, breakpoint FK against bisection and the definition.
VerifyReport verify_match_oracles(std::size_t matrices = 500, std::uint64_t seed = kDefaultSeed);

/// Orbit triples of length n on every built-in system: FK symmetry (exact),
/// triangle inequality (within 1e-9), d_FK <= min(d_Bowen, 1) (exact).
VerifyReport verify_metric_properties(std::size_t triples = 1000, std::size_t n = 16,
                                      std::uint64_t seed = kDefaultSeed);

/// Instances with at most 20 universe points: greedy within (1 + ln N) of
/// exact, separated(2 eps) <= exact spanning(eps) <= separated(eps).
VerifyReport verify_cover_oracles(std::size_t instances = 200, std::uint64_t seed = kDefaultSeed);

struct TameGrowthOptions {
  double theta = 1.0;
  std::vector<double> epsilons{0.25, 0.125, 0.0625, 0.03125, 0.015625,
                               0.0078125, 0.00390625, 0.001953125};
  double limit = 0.05;  // bound on the product at the smallest epsilon
};

/// [0,1] and [0,1]^2 (max metric): eps^theta log #(X, d, eps) strictly
/// decreasing over the last three grid points and <= limit at the end.
VerifyReport verify_tame_growth(const TameGrowthOptions& opts = {});

}  // namespace fkdim
