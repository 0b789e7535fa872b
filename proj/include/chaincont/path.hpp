#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "chaincont/interval.hpp"

namespace chaincont {

enum class ExtremaKind { kGrid, kBridgeExact };

// How a path computes the image of an interval. `step` is the requested grid
// spacing; Brownian paths round it down to the next dyadic fraction of their
// base step. `subseed` keys the bridge-extremum draws.
struct ExtremaMode {
  ExtremaKind kind = ExtremaKind::kBridgeExact;
  double step = 0x1.0p-8;
  std::uint64_t subseed = 0;

  static ExtremaMode grid(double step) { return {ExtremaKind::kGrid, step, 0}; }
  static ExtremaMode bridge_exact(double step, std::uint64_t subseed) {
    return {ExtremaKind::kBridgeExact, step, subseed};
  }
};

const char* to_string(ExtremaKind kind);
ExtremaKind extrema_kind_from_string(const std::string& name);

struct Extrema {
  double min = 0.0;
  double max = 0.0;
};

// A continuous function R -> R with f(0) = 0 that can report values and
// interval images. Queries may mutate internal caches, hence non-const.
class PathSource {
 public:
  virtual ~PathSource() = default;

  virtual double value_at(double t) = 0;
  virtual Extrema extrema(const Interval& i, const ExtremaMode& mode) = 0;

  Interval image(const Interval& i, const ExtremaMode& mode) {
    const Extrema e = extrema(i, mode);
    return Interval(e.min, e.max);
  }
};

// Sample path of a two-sided Brownian motion, generated lazily.
//
// Values on the base grid k * base_step come from Gaussian increments; finer
// dyadic points are filled in by Levy midpoint refinement (bridge mean plus
// sd = sqrt(parent span) / 2). Each Gaussian is a pure function of
// (side stream, level, base cell, index), so the path is identical no matter
// in which order or at which resolution it is queried. The negative half-line
// uses the stream mix64(seed ^ kNegativeSideSalt), the positive one mix64(seed).
class LazyBrownianPath final : public PathSource {
 public:
  static constexpr std::uint64_t kNegativeSideSalt = 0x5bd1e9955bd1e995ULL;
  static constexpr int kMaxLevel = 62;

  explicit LazyBrownianPath(std::uint64_t seed, double base_step = 1.0);

  std::uint64_t seed() const noexcept { return seed_; }
  double base_step() const noexcept { return base_step_; }
  // Current materialized window is [-horizon, horizon].
  double horizon() const noexcept;

  // Exact value at t; every finite double is a dyadic rational, so this
  // descends the midpoint construction until t is hit (truncated below
  // 2^-62 base steps).
  double value_at(double t) override;

  // Materialize all dyadic points of spacing <= step inside i.
  void refine(const Interval& i, double step);

  Extrema extrema(const Interval& i, const ExtremaMode& mode) override;

  // Dyadic level used for a requested step, and the step it yields.
  int level_for(double step) const;
  double step_at(int level) const;

  // Number of materialized (time, value) nodes.
  std::size_t node_count() const;
  // All materialized nodes, sorted by time.
  std::vector<std::pair<double, double>> nodes() const;
  // CSV "time,value" rows sorted by time.
  void dump_csv(std::ostream& out) const;

 private:
  struct Cell {
    int level = -1;
    std::vector<double> values;  // 2^level + 1 samples across the cell
  };
  struct Side {
    std::uint64_t stream = 0;
    std::vector<double> base;  // B(k * base_step), k = 0..cells
    std::vector<Cell> cells;
  };

  Side& side_for(double t) { return t < 0.0 ? neg_ : pos_; }
  void ensure_cells(Side& side, std::size_t count);
  const Cell& materialize(Side& side, std::size_t k, int level);
  double side_value(Side& side, double u);
  void side_extrema(Side& side, double ua, double ub, int level, const ExtremaMode& mode,
                    Extrema& acc);

  std::uint64_t seed_;
  double base_step_;
  double sqrt_base_;
  std::array<double, kMaxLevel + 1> mid_sd_{};
  Side pos_;
  Side neg_;
};

// Analytic paths used as oracles. All satisfy f(0) = 0 and compute images in
// closed form, independent of the extrema mode.
class DeterministicPath final : public PathSource {
 public:
  enum class Kind { kIdentity, kSinPiN, kZigzag, kAffine };

  DeterministicPath(Kind kind, double param);

  Kind kind() const noexcept { return kind_; }
  double param() const noexcept { return param_; }

  double value_at(double t) override;
  Extrema extrema(const Interval& i, const ExtremaMode& mode) override;

 private:
  Kind kind_;
  double param_;
};

// identity, sin_pi_n (f(t) = sin(pi n t)), zigzag (unit triangle wave of the
// given period), affine (f(t) = a t). Unknown names throw kInvalidArgument.
std::unique_ptr<PathSource> make_deterministic(const std::string& formula, double param = 1.0);

std::unique_ptr<LazyBrownianPath> make_brownian(std::uint64_t seed, double base_step = 1.0);

}  // namespace chaincont
