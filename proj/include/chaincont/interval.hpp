#pragma once

#include <cstddef>
#include <span>

namespace chaincont {

// Closed bounded real interval [lo, hi]; degenerate intervals are allowed.
class Interval {
 public:
  constexpr Interval() = default;
  // Throws Error(kInvalidArgument) on lo > hi or non-finite endpoints.
  Interval(double lo, double hi);

  static constexpr Interval point(double x) noexcept { return Interval(x, x, Unchecked{}); }

  constexpr double lo() const noexcept { return lo_; }
  constexpr double hi() const noexcept { return hi_; }
  constexpr double length() const noexcept { return hi_ - lo_; }
  constexpr double center() const noexcept { return 0.5 * (lo_ + hi_); }
  constexpr bool degenerate() const noexcept { return lo_ == hi_; }
  constexpr bool contains(double x) const noexcept { return lo_ <= x && x <= hi_; }
  constexpr bool contains(const Interval& o) const noexcept {
    return lo_ <= o.lo_ && o.hi_ <= hi_;
  }

  friend constexpr bool operator==(const Interval&, const Interval&) = default;

 private:
  struct Unchecked {};
  constexpr Interval(double lo, double hi, Unchecked) noexcept : lo_(lo), hi_(hi) {}

  double lo_ = 0.0;
  double hi_ = 0.0;
};

// Hausdorff distance between two intervals: max of the endpoint gaps.
double dist(const Interval& a, const Interval& b) noexcept;

// Interval with the same center and c times the length. c must be > 0.
Interval scale(double c, const Interval& i);

// min(hi, -lo). Positive exactly when 0 is interior; may be negative.
double witness_w(const Interval& i) noexcept;

// Non-degenerate and containing 0.
bool is_suitable(const Interval& i) noexcept;

// True iff every pair among the last `window` entries is closer than tol.
// Throws kInsufficientData when window exceeds the sequence length.
bool cauchy_converged(std::span<const Interval> seq, double tol, std::size_t window);

}  // namespace chaincont
