#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "chaincont/interval.hpp"
#include "chaincont/path.hpp"

namespace chaincont {

// Estimate of one determined interval I_k from finite compositions.
struct LimitEstimate {
  int k = 0;
  Interval interval;  // deepest composition image of the first probe
  // probe_dists[n][p] = dist(image of probe p, image of probe 0) under
  // B_k o ... o B_{k+n}.
  std::vector<std::vector<double>> probe_dists;
  bool converged = false;
  bool resolution_limited = false;  // length below 4 * step
  int depth_used = 0;               // deepest path index composed

  double cross_probe_dist() const;              // at the final depth
  double cross_probe_dist_at(int depth) const;  // depth = k + n
};

struct Thread {
  std::vector<double> coords;  // x_1..x_m
  std::size_t depth() const noexcept { return coords.size(); }
};

// Finite prefix (B_1, ..., B_N) of a sequence of continuous paths fixing 0.
//
// Brownian towers derive path i from master_seed as derive_seed(master_seed, i)
// and the bridge subseed of path i as derive_seed(master_seed ^ kSubseedSalt, i).
class CompositionTower {
 public:
  static constexpr std::uint64_t kSubseedSalt = 0xa0761d6478bd642fULL;

  static CompositionTower brownian(std::uint64_t master_seed, int depth, ExtremaKind kind,
                                   double step, double base_step = 1.0);
  // Paths[i] becomes B_{i+1}; all must satisfy f(0) = 0.
  static CompositionTower from_paths(std::vector<std::unique_ptr<PathSource>> paths,
                                     ExtremaKind kind, double step);
  // Tower of analytic paths. For sin_pi_n the i-th path uses n = i.
  static CompositionTower deterministic(const std::string& formula, int depth,
                                        double param = 1.0, double step = 1e-4);

  int depth() const noexcept { return static_cast<int>(paths_.size()); }
  std::uint64_t master_seed() const noexcept { return master_seed_; }
  ExtremaKind kind() const noexcept { return kind_; }
  double step() const noexcept { return step_; }
  PathSource& path(int index);  // 1-based

  // Image of j under B_from o ... o B_to, innermost first.
  Interval compose_image(int k_from, int k_to, const Interval& j);

  // Computes Î_k for k = 1..max_k (default: all N) from every probe.
  const std::vector<LimitEstimate>& estimate_limit_intervals(std::span<const Interval> probes,
                                                             double tol, std::size_t window,
                                                             int max_k = 0);
  const std::vector<LimitEstimate>& limit_estimates() const noexcept { return estimates_; }

  std::vector<double> witness_sequence(int count) const;

  Thread sample_thread(double x_final, int m);
  std::vector<double> thread_unit_coords(const Thread& thread) const;

  // length(W_k([0, t])).
  double oscillation_sample(int k, double t);

 private:
  CompositionTower(std::vector<std::unique_ptr<PathSource>> paths, std::uint64_t master_seed,
                   ExtremaKind kind, double step);

  Interval image_of(int index, const Interval& j);
  const LimitEstimate& estimate_for(int k) const;

  struct MemoKey {
    int index;
    double lo;
    double hi;
    bool operator==(const MemoKey&) const = default;
  };
  struct MemoHash {
    std::size_t operator()(const MemoKey& key) const noexcept;
  };

  std::vector<std::unique_ptr<PathSource>> paths_;
  std::vector<ExtremaMode> modes_;
  std::uint64_t master_seed_ = 0;
  ExtremaKind kind_ = ExtremaKind::kBridgeExact;
  double step_ = 0.0;
  std::unordered_map<MemoKey, Interval, MemoHash> memo_;
  std::vector<LimitEstimate> estimates_;
};

}  // namespace chaincont
