#pragma once

// Combinatorial model: truncated reflected random walks f_n : [k_{n+1}] -> [k_n]
// starting from k_0 = 2, their finite inverse-limit threads, and the relation
// R (threads related when every coordinate differs by at most 1).

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

namespace chaincont {

struct Walk {
  std::vector<std::uint32_t> values;  // values[x - 1] = f(x)
  std::uint32_t codomain = 0;         // k

  std::size_t domain_size() const noexcept { return values.size(); }
  std::uint32_t operator()(std::size_t x) const { return values.at(x - 1); }
};

// Returns a description of the first violated walk invariant, if any.
std::optional<std::string> check_walk(const Walk& walk);

// Walk on [k]: f(1) = 1, f(2x) = f(2x - 1), fair +-1 steps strictly inside
// (1, k), reflection at the ends, stop at the first hit of k. Coin flips come
// from `rng`. Throws kTruncationFailure when max_steps positions are used
// without reaching k.
Walk generate_walk(std::uint32_t k, std::mt19937_64& rng, std::uint64_t max_steps);

struct WalkTower {
  std::uint64_t seed = 0;
  std::vector<std::uint64_t> sizes;  // k_0 = 2, k_1, ...
  std::vector<Walk> walks;           // walks[n] = f_n : [k_{n+1}] -> [k_n]
  std::optional<int> truncated_level;  // level whose walk hit max_steps

  int depth() const noexcept { return static_cast<int>(walks.size()); }
};

// Level n draws its coins from mt19937_64(derive_seed(seed, n)).
// Throws kTruncationFailure (naming the level) if a walk does not terminate.
WalkTower generate_tower(std::uint64_t seed, int depth, std::uint64_t max_steps);
// Same, but stops at the failing level and records it instead of throwing.
WalkTower generate_tower_partial(std::uint64_t seed, int depth, std::uint64_t max_steps);

// Empty string when every walk is valid and consistent with the sizes.
std::optional<std::string> check_tower(const WalkTower& tower);

// Threads (x_1, ..., x_m), x_i in [k_i], f_i(x_{i+1}) = x_i, stored row-major.
struct FiniteThreadSet {
  int depth = 0;
  std::vector<std::uint32_t> coords;  // count() * depth entries, lexicographic
  std::vector<std::pair<std::uint32_t, std::uint32_t>> r_edges;  // a < b

  std::size_t count() const noexcept {
    return depth == 0 ? 0 : coords.size() / static_cast<std::size_t>(depth);
  }
  std::uint32_t at(std::size_t thread, int level) const {
    return coords[thread * static_cast<std::size_t>(depth) + static_cast<std::size_t>(level - 1)];
  }
};

// Backward preimage expansion from x_1. Throws kEnumerationOverflow when the
// number of threads would exceed cap.
FiniteThreadSet enumerate_threads(const WalkTower& tower, int m, std::size_t cap);

struct RGraphStats {
  std::size_t thread_count = 0;
  std::size_t edge_count = 0;
  std::size_t components = 0;
  std::size_t max_clique = 0;
  std::size_t triple_count = 0;  // x R y R z, distinct, x_m + 1 = y_m = z_m - 1
  std::size_t triple_threads = 0;  // threads taking part in such a triple

  double triple_fraction() const noexcept {
    return thread_count == 0 ? 0.0
                             : static_cast<double>(triple_threads) /
                                   static_cast<double>(thread_count);
  }
};

RGraphStats r_graph(const FiniteThreadSet& threads);

nlohmann::json tower_to_json(const WalkTower& tower);

}  // namespace chaincont
