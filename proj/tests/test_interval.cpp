#include <cmath>
#include <vector>

#include "doctest.h"

#include "chaincont/error.hpp"
#include "chaincont/interval.hpp"

using chaincont::Error;
using chaincont::ErrorCode;
using chaincont::Interval;

namespace {

// Hausdorff distance by brute force over a fine grid of both sets.
double hausdorff_oracle(const Interval& a, const Interval& b) {
  auto sample = [](const Interval& i) {
    std::vector<double> pts;
    for (int s = 0; s <= 400; ++s) pts.push_back(i.lo() + i.length() * s / 400.0);
    return pts;
  };
  auto directed = [](const std::vector<double>& from, const std::vector<double>& to) {
    double worst = 0.0;
    for (double x : from) {
      double best = INFINITY;
      for (double y : to) best = std::min(best, std::abs(x - y));
      worst = std::max(worst, best);
    }
    return worst;
  };
  const auto pa = sample(a);
  const auto pb = sample(b);
  return std::max(directed(pa, pb), directed(pb, pa));
}

}  // namespace

TEST_CASE("interval construction validates endpoints") {
  CHECK_NOTHROW(Interval(0.0, 0.0));
  CHECK_THROWS_AS(Interval(1.0, 0.0), Error);
  CHECK_THROWS_AS(Interval(0.0, INFINITY), Error);
  CHECK_THROWS_AS(Interval(NAN, 1.0), Error);
  try {
    Interval(2.0, 1.0);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kInvalidArgument);
  }
}

TEST_CASE("dist matches the brute-force Hausdorff distance") {
  const std::vector<Interval> cases{{0, 1}, {-1, 1}, {0.25, 0.5}, {-3, -2}, {2, 2}, {-0.5, 4}};
  for (const auto& a : cases) {
    for (const auto& b : cases) {
      CHECK(chaincont::dist(a, b) == doctest::Approx(hausdorff_oracle(a, b)).epsilon(1e-2));
    }
  }
  CHECK(chaincont::dist(Interval(0, 1), Interval(0, 1)) == 0.0);
  CHECK(chaincont::dist(Interval(0, 1), Interval(-1, 3)) == 2.0);
}

TEST_CASE("scale keeps the center") {
  const auto r = chaincont::scale(2.0, Interval(1.0, 3.0));
  CHECK(r.lo() == 0.0);
  CHECK(r.hi() == 4.0);
  CHECK(chaincont::scale(0.5, Interval(-1, 1)) == Interval(-0.5, 0.5));
  CHECK_THROWS_AS(chaincont::scale(0.0, Interval(0, 1)), Error);
  CHECK_THROWS_AS(chaincont::scale(-1.0, Interval(0, 1)), Error);
}

TEST_CASE("witness statistic and suitability") {
  CHECK(chaincont::witness_w(Interval(-1, 3)) == 1.0);
  CHECK(chaincont::witness_w(Interval(-2, 0.5)) == 0.5);
  CHECK(chaincont::witness_w(Interval(0, 3)) == 0.0);
  CHECK(chaincont::witness_w(Interval(1, 3)) < 0.0);
  CHECK(chaincont::is_suitable(Interval(-1, 1)));
  CHECK(chaincont::is_suitable(Interval(0, 1)));
  CHECK_FALSE(chaincont::is_suitable(Interval(0, 0)));
  CHECK_FALSE(chaincont::is_suitable(Interval(0.1, 1)));
}

TEST_CASE("cauchy window") {
  std::vector<Interval> seq{{-2, 2}, {-1, 1.5}, {-1, 1.001}, {-1, 1.0}, {-1.0005, 1.0}};
  CHECK(chaincont::cauchy_converged(seq, 0.01, 3));
  CHECK_FALSE(chaincont::cauchy_converged(seq, 0.01, 4));
  CHECK_FALSE(chaincont::cauchy_converged(seq, 1e-4, 2));
  CHECK_THROWS_AS(chaincont::cauchy_converged(seq, 0.01, 6), Error);
  try {
    chaincont::cauchy_converged(seq, 0.01, 6);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kInsufficientData);
  }
}
