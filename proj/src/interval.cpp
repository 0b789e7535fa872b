#include "chaincont/interval.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "chaincont/error.hpp"

namespace chaincont {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kOk: return "ok";
    case ErrorCode::kInvalidArgument: return "invalid-argument";
    case ErrorCode::kInsufficientData: return "insufficient-data";
    case ErrorCode::kOutOfDomain: return "out-of-domain";
    case ErrorCode::kDegenerateInterval: return "degenerate-interval";
    case ErrorCode::kTruncationFailure: return "truncation-failure";
    case ErrorCode::kEnumerationOverflow: return "enumeration-overflow";
    case ErrorCode::kIo: return "io";
  }
  return "unknown";
}

Interval::Interval(double lo, double hi) : lo_(lo), hi_(hi) {
  if (!std::isfinite(lo) || !std::isfinite(hi)) {
    throw Error(ErrorCode::kInvalidArgument, "interval endpoints must be finite");
  }
  if (lo > hi) {
    throw Error(ErrorCode::kInvalidArgument,
                "interval lo > hi: [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
  }
}

double dist(const Interval& a, const Interval& b) noexcept {
  return std::max(std::abs(a.lo() - b.lo()), std::abs(a.hi() - b.hi()));
}

Interval scale(double c, const Interval& i) {
  if (!(c > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "scale factor must be positive");
  }
  const double half = 0.5 * c * i.length();
  const double mid = i.center();
  return Interval(mid - half, mid + half);
}

double witness_w(const Interval& i) noexcept { return std::min(i.hi(), -i.lo()); }

bool is_suitable(const Interval& i) noexcept {
  return i.lo() < i.hi() && i.lo() <= 0.0 && 0.0 <= i.hi();
}

bool cauchy_converged(std::span<const Interval> seq, double tol, std::size_t window) {
  if (seq.empty() || window == 0 || window > seq.size()) {
    throw Error(ErrorCode::kInsufficientData,
                "cauchy window " + std::to_string(window) + " exceeds sequence length " +
                    std::to_string(seq.size()));
  }
  const auto tail = seq.subspan(seq.size() - window);
  for (std::size_t a = 0; a < tail.size(); ++a) {
    for (std::size_t b = a + 1; b < tail.size(); ++b) {
      if (!(dist(tail[a], tail[b]) < tol)) return false;
    }
  }
  return true;
}

}  // namespace chaincont
