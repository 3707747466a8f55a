#pragma once

// Slow reference implementations used to cross-check the fast kernels.

#include <cstddef>
#include <vector>

#include "fkdim/covering.hpp"
#include "fkdim/orbit_metrics.hpp"
#include "fkdim/rng.hpp"

namespace fkdim::oracles {

/// n x n matrix with entries in [0, 1.3]; about half the draws are rounded
/// to a multiple of 0.1 so that ties and breakpoint collisions occur.
DistanceMatrix random_matrix(Engine& eng, std::size_t n);

/// Largest order-preserving match with entries < delta, by enumeration.
std::size_t brute_force_match(const DistanceMatrix& d, double delta);

bool witness_valid(const DistanceMatrix& d, double delta,
                   const std::vector<MatchPair>& witness);

/// d_FK by scanning every breakpoint interval (no monotonicity assumption).
double fk_by_definition(const DistanceMatrix& d);

/// Minimum number of candidate sets covering at least `required` points,
/// by enumeration of subsets in increasing size. Needs <= 24 candidates.
std::size_t brute_force_cover(const Coverage& cov, std::size_t required);

}  // namespace fkdim::oracles
