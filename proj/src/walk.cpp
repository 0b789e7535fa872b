#include "chaincont/walk.hpp"

#include <algorithm>
#include <functional>
#include <limits>
#include <numeric>

#include "chaincont/error.hpp"
#include "chaincont/rng.hpp"

namespace chaincont {
namespace {

class CoinSource {
 public:
  explicit CoinSource(std::mt19937_64& rng) : rng_(rng) {}

  bool flip() {
    if (left_ == 0) {
      bits_ = rng_();
      left_ = 64;
    }
    const bool heads = (bits_ & 1U) != 0;
    bits_ >>= 1;
    --left_;
    return heads;
  }

 private:
  std::mt19937_64& rng_;
  std::uint64_t bits_ = 0;
  int left_ = 0;
};

// Preimage lists of a walk in CSR form: positions x with f(x) = v are
// positions[offsets[v - 1] .. offsets[v]).
struct Preimages {
  std::vector<std::uint32_t> offsets;
  std::vector<std::uint32_t> positions;

  explicit Preimages(const Walk& walk) : offsets(walk.codomain + 1, 0) {
    for (std::uint32_t v : walk.values) ++offsets[v];
    std::partial_sum(offsets.begin(), offsets.end(), offsets.begin());
    positions.resize(walk.values.size());
    std::vector<std::uint32_t> cursor(offsets.begin(), offsets.end() - 1);
    for (std::size_t x = 0; x < walk.values.size(); ++x) {
      positions[cursor[walk.values[x] - 1]++] = static_cast<std::uint32_t>(x + 1);
    }
  }

  std::size_t count(std::uint32_t v) const { return offsets[v] - offsets[v - 1]; }
};

class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n) {
    std::iota(parent_.begin(), parent_.end(), std::size_t{0});
  }
  std::size_t find(std::size_t x) {
    while (parent_[x] != x) x = parent_[x] = parent_[parent_[x]];
    return x;
  }
  bool unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    parent_[std::max(a, b)] = std::min(a, b);
    return true;
  }

 private:
  std::vector<std::size_t> parent_;
};

}  // namespace

std::optional<std::string> check_walk(const Walk& walk) {
  const auto& f = walk.values;
  const std::uint32_t k = walk.codomain;
  if (k < 1) return "codomain is empty";
  if (f.empty()) return "domain is empty";
  if (f.front() != 1) return "f(1) != 1";
  std::vector<bool> seen(k + 1, false);
  for (std::size_t x = 0; x < f.size(); ++x) {
    if (f[x] < 1 || f[x] > k) return "value outside [k] at x=" + std::to_string(x + 1);
    seen[f[x]] = true;
    if (x + 1 < f.size()) {
      const auto a = static_cast<std::int64_t>(f[x]);
      const auto b = static_cast<std::int64_t>(f[x + 1]);
      if (std::abs(a - b) > 1) return "step larger than 1 at x=" + std::to_string(x + 1);
    }
    // f(2x) = f(2x - 1): 1-based even positions repeat their predecessor.
    if ((x + 1) % 2 == 0 && f[x] != f[x - 1]) {
      return "f(2x) != f(2x-1) at x=" + std::to_string(x + 1);
    }
    if (x + 1 < f.size() && f[x] == k) return "k reached before the end at x=" + std::to_string(x + 1);
  }
  if (f.back() != k) return "walk does not end at k";
  for (std::uint32_t v = 1; v <= k; ++v) {
    if (!seen[v]) return "not surjective: " + std::to_string(v) + " missed";
  }
  return std::nullopt;
}

Walk generate_walk(std::uint32_t k, std::mt19937_64& rng, std::uint64_t max_steps) {
  if (k < 2) throw Error(ErrorCode::kInvalidArgument, "walk codomain must be at least 2");
  if (max_steps < 3 || max_steps > std::numeric_limits<std::uint32_t>::max()) {
    throw Error(ErrorCode::kInvalidArgument, "max_steps must lie in [3, 2^32)");
  }
  CoinSource coins(rng);
  Walk walk;
  walk.codomain = k;
  walk.values.push_back(1);
  std::uint32_t v = 1;
  while (v != k) {
    if (walk.values.size() + 2 > max_steps) {
      throw Error(ErrorCode::kTruncationFailure,
                  "walk on [" + std::to_string(k) + "] did not reach k within " +
                      std::to_string(max_steps) + " steps");
    }
    walk.values.push_back(v);
    if (v == 1) {
      v = 2;
    } else {
      v = coins.flip() ? v + 1 : v - 1;
    }
    walk.values.push_back(v);
  }
  return walk;
}

WalkTower generate_tower_partial(std::uint64_t seed, int depth, std::uint64_t max_steps) {
  if (depth < 1) throw Error(ErrorCode::kInvalidArgument, "walk tower depth must be positive");
  WalkTower tower;
  tower.seed = seed;
  tower.sizes.push_back(2);
  for (int n = 0; n < depth; ++n) {
    std::mt19937_64 rng(derive_seed(seed, static_cast<std::uint64_t>(n)));
    try {
      tower.walks.push_back(
          generate_walk(static_cast<std::uint32_t>(tower.sizes.back()), rng, max_steps));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kTruncationFailure) throw;
      tower.truncated_level = n;
      break;
    }
    tower.sizes.push_back(tower.walks.back().domain_size());
  }
  return tower;
}

WalkTower generate_tower(std::uint64_t seed, int depth, std::uint64_t max_steps) {
  WalkTower tower = generate_tower_partial(seed, depth, max_steps);
  if (tower.truncated_level) {
    throw Error(ErrorCode::kTruncationFailure,
                "walk at level " + std::to_string(*tower.truncated_level) +
                    " exceeded max_steps=" + std::to_string(max_steps));
  }
  return tower;
}

std::optional<std::string> check_tower(const WalkTower& tower) {
  if (tower.sizes.empty() || tower.sizes.front() != 2) return "k_0 != 2";
  if (tower.sizes.size() != tower.walks.size() + 1) return "sizes and walks disagree";
  for (std::size_t n = 0; n < tower.walks.size(); ++n) {
    const Walk& w = tower.walks[n];
    if (w.codomain != tower.sizes[n]) return "walk " + std::to_string(n) + " codomain != k_n";
    if (w.domain_size() != tower.sizes[n + 1]) {
      return "walk " + std::to_string(n) + " domain != k_{n+1}";
    }
    if (auto err = check_walk(w)) return "walk " + std::to_string(n) + ": " + *err;
  }
  return std::nullopt;
}

FiniteThreadSet enumerate_threads(const WalkTower& tower, int m, std::size_t cap) {
  if (m < 1 || m > tower.depth()) {
    throw Error(ErrorCode::kInvalidArgument, "thread depth " + std::to_string(m) +
                                                 " outside 1.." + std::to_string(tower.depth()));
  }
  const std::uint64_t k1 = tower.sizes[1];
  if (k1 > cap) {
    throw Error(ErrorCode::kEnumerationOverflow, "more than " + std::to_string(cap) +
                                                     " threads at depth 1; lower m");
  }
  FiniteThreadSet set;
  set.depth = 1;
  set.coords.resize(k1);
  std::iota(set.coords.begin(), set.coords.end(), std::uint32_t{1});

  for (int level = 1; level < m; ++level) {
    const Preimages pre(tower.walks[static_cast<std::size_t>(level)]);
    const std::size_t width = static_cast<std::size_t>(set.depth);
    const std::size_t rows = set.count();
    std::size_t next = 0;
    for (std::size_t r = 0; r < rows; ++r) next += pre.count(set.coords[r * width + width - 1]);
    if (next > cap) {
      throw Error(ErrorCode::kEnumerationOverflow,
                  std::to_string(next) + " threads at depth " + std::to_string(level + 1) +
                      " exceed cap " + std::to_string(cap) + "; lower m");
    }
    std::vector<std::uint32_t> grown;
    grown.reserve(next * (width + 1));
    for (std::size_t r = 0; r < rows; ++r) {
      const auto row = set.coords.begin() + static_cast<std::ptrdiff_t>(r * width);
      const std::uint32_t last = row[static_cast<std::ptrdiff_t>(width - 1)];
      for (std::uint32_t i = pre.offsets[last - 1]; i < pre.offsets[last]; ++i) {
        grown.insert(grown.end(), row, row + static_cast<std::ptrdiff_t>(width));
        grown.push_back(pre.positions[i]);
      }
    }
    set.coords = std::move(grown);
    set.depth = level + 1;
  }

  // R-edges: related threads differ by at most 1 in the last coordinate, so
  // only neighbouring buckets need comparing.
  const std::size_t count = set.count();
  const std::uint64_t km = tower.sizes[static_cast<std::size_t>(m)];
  std::vector<std::vector<std::uint32_t>> buckets(km + 2);
  for (std::size_t t = 0; t < count; ++t) buckets[set.at(t, m)].push_back(static_cast<std::uint32_t>(t));
  auto related = [&](std::size_t a, std::size_t b) {
    for (int level = 1; level <= m; ++level) {
      const auto x = static_cast<std::int64_t>(set.at(a, level));
      const auto y = static_cast<std::int64_t>(set.at(b, level));
      if (std::abs(x - y) > 1) return false;
    }
    return true;
  };
  for (std::size_t t = 0; t < count; ++t) {
    const std::uint32_t v = set.at(t, m);
    for (std::uint32_t b : buckets[v]) {
      if (b > t && related(t, b)) set.r_edges.emplace_back(static_cast<std::uint32_t>(t), b);
    }
    for (std::uint32_t b : buckets[v + 1]) {
      if (related(t, b)) {
        set.r_edges.emplace_back(std::min<std::uint32_t>(static_cast<std::uint32_t>(t), b),
                                 std::max<std::uint32_t>(static_cast<std::uint32_t>(t), b));
      }
    }
  }
  std::sort(set.r_edges.begin(), set.r_edges.end());
  return set;
}

RGraphStats r_graph(const FiniteThreadSet& threads) {
  const std::size_t n = threads.count();
  if (n == 0) throw Error(ErrorCode::kInvalidArgument, "thread set is empty");
  const int m = threads.depth;

  RGraphStats stats;
  stats.thread_count = n;
  stats.edge_count = threads.r_edges.size();

  std::vector<std::vector<std::uint32_t>> adj(n);
  DisjointSets sets(n);
  std::size_t components = n;
  for (const auto& [a, b] : threads.r_edges) {
    adj[a].push_back(b);
    adj[b].push_back(a);
    if (sets.unite(a, b)) --components;
  }
  stats.components = components;

  // Max clique: members of a clique share a window of width 1 in the last
  // coordinate, so search each window {v, v + 1} separately.
  std::uint32_t top = 0;
  for (std::size_t t = 0; t < n; ++t) top = std::max(top, threads.at(t, m));
  std::vector<std::vector<std::uint32_t>> buckets(top + 2);
  for (std::size_t t = 0; t < n; ++t) buckets[threads.at(t, m)].push_back(static_cast<std::uint32_t>(t));
  auto adjacent = [&](std::uint32_t a, std::uint32_t b) {
    return std::binary_search(threads.r_edges.begin(), threads.r_edges.end(),
                              std::make_pair(std::min(a, b), std::max(a, b)));
  };
  std::vector<std::uint32_t> window;
  std::vector<std::uint32_t> clique;
  std::function<void(std::size_t)> grow = [&](std::size_t from) {
    stats.max_clique = std::max(stats.max_clique, clique.size());
    for (std::size_t i = from; i < window.size(); ++i) {
      if (clique.size() + (window.size() - i) <= stats.max_clique) return;
      const bool ok = std::all_of(clique.begin(), clique.end(),
                                  [&](std::uint32_t c) { return adjacent(c, window[i]); });
      if (!ok) continue;
      clique.push_back(window[i]);
      grow(i + 1);
      clique.pop_back();
    }
  };
  for (std::uint32_t v = 1; v <= top; ++v) {
    window = buckets[v];
    window.insert(window.end(), buckets[v + 1].begin(), buckets[v + 1].end());
    if (window.size() <= stats.max_clique) continue;
    clique.clear();
    grow(0);
  }

  std::vector<bool> in_triple(n, false);
  for (std::size_t y = 0; y < n; ++y) {
    const std::uint32_t ym = threads.at(y, m);
    std::size_t below = 0;
    std::size_t above = 0;
    for (std::uint32_t x : adj[y]) {
      const std::uint32_t xm = threads.at(x, m);
      below += xm + 1 == ym;
      above += xm == ym + 1;
    }
    if (below == 0 || above == 0) continue;
    stats.triple_count += below * above;
    in_triple[y] = true;
    for (std::uint32_t x : adj[y]) {
      const std::uint32_t xm = threads.at(x, m);
      if (xm + 1 == ym || xm == ym + 1) in_triple[x] = true;
    }
  }
  stats.triple_threads = static_cast<std::size_t>(std::count(in_triple.begin(), in_triple.end(), true));
  return stats;
}

nlohmann::json tower_to_json(const WalkTower& tower) {
  nlohmann::json walks = nlohmann::json::array();
  for (const Walk& w : tower.walks) walks.push_back(w.values);
  nlohmann::json out{{"seed", tower.seed}, {"k", tower.sizes}, {"walks", std::move(walks)}};
  if (tower.truncated_level) out["truncated_level"] = *tower.truncated_level;
  return out;
}

}  // namespace chaincont
