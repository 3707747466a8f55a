#include "fkdim/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fkdim/errors.hpp"

namespace fkdim::oracles {

DistanceMatrix random_matrix(Engine& eng, std::size_t n) {
  std::vector<double> e(n * n);
  for (auto& v : e) {
    v = 1.3 * uniform01(eng);
    if (uniform_below(eng, 2) == 0) v = std::round(v * 10.0) / 10.0;
  }
  return DistanceMatrix(n, std::move(e));
}

namespace {

std::size_t best_from(const DistanceMatrix& d, double delta, std::size_t i,
                      std::size_t j_min) {
  if (i == d.n()) return 0;
  std::size_t best = best_from(d, delta, i + 1, j_min);  // row i unmatched
  for (std::size_t j = j_min; j < d.n(); ++j)
    if (d(i, j) < delta) best = std::max(best, 1 + best_from(d, delta, i + 1, j + 1));
  return best;
}

}  // namespace

std::size_t brute_force_match(const DistanceMatrix& d, double delta) {
  return best_from(d, delta, 0, 0);
}

bool witness_valid(const DistanceMatrix& d, double delta,
                   const std::vector<MatchPair>& witness) {
  for (std::size_t k = 0; k < witness.size(); ++k) {
    const auto& p = witness[k];
    if (p.i >= d.n() || p.j >= d.n() || !(d(p.i, p.j) < delta)) return false;
    if (k > 0 && !(witness[k - 1].i < p.i && witness[k - 1].j < p.j)) return false;
  }
  return true;
}

double fk_by_definition(const DistanceMatrix& d) {
  if (d.n() == 0) return 0.0;
  std::vector<double> b = d.entries();
  std::sort(b.begin(), b.end());
  b.erase(std::unique(b.begin(), b.end()), b.end());
  b.insert(b.begin(), 0.0);
  double best = 1.0;
  for (std::size_t k = 0; k < b.size(); ++k) {
    const double lo = b[k];
    const double hi = k + 1 < b.size() ? b[k + 1] : std::numeric_limits<double>::infinity();
    if (!(lo < hi)) continue;
    // Any delta in (lo, hi] admits exactly the entries <= lo.
    std::size_t size = 0;
    {
      const double probe = std::nextafter(lo, hi);
      size = max_match_size(d, probe).size;
    }
    const double g = fbar_value(size, d.n());
    if (g < hi) best = std::min(best, std::max(lo, g));
  }
  return best;
}

std::size_t brute_force_cover(const Coverage& cov, std::size_t required) {
  const std::size_t c = cov.sets.size();
  if (c > 24) throw ValidationError("candidates", "brute force needs <= 24 candidates");
  for (std::size_t k = 1; k <= c; ++k) {
    std::vector<char> pick(c, 0);
    std::fill(pick.begin(), pick.begin() + static_cast<std::ptrdiff_t>(k), 1);
    do {
      std::vector<char> hit(cov.universe_size, 0);
      std::size_t count = 0;
      for (std::size_t s = 0; s < c; ++s) {
        if (!pick[s]) continue;
        for (auto u : cov.sets[s])
          if (!hit[u]) { hit[u] = 1; ++count; }
      }
      if (count >= required) return k;
    } while (std::prev_permutation(pick.begin(), pick.end()));
  }
  throw InfeasibleCoverError(0, "no subset of candidates reaches the requirement");
}

}  // namespace fkdim::oracles
