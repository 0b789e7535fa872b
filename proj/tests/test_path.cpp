#include <cmath>
#include <numbers>
#include <sstream>
#include <vector>

#include "doctest.h"

#include "chaincont/error.hpp"
#include "chaincont/path.hpp"
#include "chaincont/rng.hpp"
#include "chaincont/stats.hpp"

using chaincont::Error;
using chaincont::ExtremaMode;
using chaincont::Interval;
using chaincont::LazyBrownianPath;

namespace {

// Extrema over the grid points j*h inside [a, b] plus both endpoints, read
// one point at a time through value_at.
chaincont::Extrema grid_oracle(LazyBrownianPath& path, double a, double b, double h) {
  chaincont::Extrema e{path.value_at(a), path.value_at(a)};
  auto take = [&](double t) {
    const double v = path.value_at(t);
    e.min = std::min(e.min, v);
    e.max = std::max(e.max, v);
  };
  take(b);
  for (double j = std::ceil(a / h); j * h <= b; j += 1.0) take(j * h);
  return e;
}

}  // namespace

TEST_CASE("Brownian path is pinned at zero and seed-deterministic") {
  LazyBrownianPath p(7);
  CHECK(p.value_at(0.0) == 0.0);
  LazyBrownianPath q(7);
  const std::vector<double> ts{3.25, -0.125, 0.7, 1e-9, -5.5, 0.333333};
  std::vector<double> forward;
  for (double t : ts) forward.push_back(p.value_at(t));
  for (std::size_t i = ts.size(); i-- > 0;) CHECK(q.value_at(ts[i]) == forward[i]);
  LazyBrownianPath other(8);
  CHECK(other.value_at(3.25) != forward[0]);
}

TEST_CASE("values do not depend on refinement history") {
  LazyBrownianPath coarse(11);
  LazyBrownianPath fine(11);
  fine.refine(Interval(-2, 2), 0x1.0p-12);
  CHECK(fine.node_count() > coarse.node_count());
  for (double t : {-1.5, -0.0078125, 0.5, 1.2345678, 1.999}) {
    CHECK(coarse.value_at(t) == fine.value_at(t));
  }
  // extrema queries at different resolutions leave values untouched
  const double before = coarse.value_at(0.3);
  coarse.extrema(Interval(-1, 1), ExtremaMode::grid(0x1.0p-14));
  CHECK(coarse.value_at(0.3) == before);
}

TEST_CASE("grid extrema match the pointwise oracle") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    LazyBrownianPath path(seed);
    for (const auto& [a, b] : std::vector<std::pair<double, double>>{
             {0.0, 1.0}, {-1.0, 0.5}, {-0.3, 0.3}, {0.1, 2.71}, {-3.3, -1.1}}) {
      const double h = 0x1.0p-8;
      const auto e = path.extrema(Interval(a, b), ExtremaMode::grid(h));
      const auto o = grid_oracle(path, a, b, h);
      CHECK(e.min == o.min);
      CHECK(e.max == o.max);
    }
  }
}

TEST_CASE("bridge-exact extrema enclose the grid extrema") {
  LazyBrownianPath path(21);
  for (const auto& [a, b] :
       std::vector<std::pair<double, double>>{{0.0, 1.0}, {-2.0, 0.5}, {0.01, 0.02}}) {
    const auto g = path.extrema(Interval(a, b), ExtremaMode::grid(0x1.0p-8));
    const auto x = path.extrema(Interval(a, b), ExtremaMode::bridge_exact(0x1.0p-8, 5));
    CHECK(x.max >= g.max);
    CHECK(x.min <= g.min);
    const auto again = path.extrema(Interval(a, b), ExtremaMode::bridge_exact(0x1.0p-8, 5));
    CHECK(again.max == x.max);
    CHECK(again.min == x.min);
  }
  const auto pt = path.extrema(Interval::point(0.5), ExtremaMode::bridge_exact(0x1.0p-8, 5));
  CHECK(pt.min == path.value_at(0.5));
  CHECK(pt.max == path.value_at(0.5));
}

TEST_CASE("marginals are standard normal across seeds") {
  constexpr int n = 4000;
  std::vector<double> pos;
  std::vector<double> neg;
  std::vector<double> half_incr;
  for (int s = 0; s < n; ++s) {
    LazyBrownianPath p(chaincont::derive_seed(99, s));
    pos.push_back(p.value_at(1.0));
    neg.push_back(p.value_at(-1.0));
    half_incr.push_back((p.value_at(0.75) - p.value_at(0.25)) / std::sqrt(0.5));
  }
  for (const auto* xs : {&pos, &neg, &half_incr}) {
    CHECK(std::abs(chaincont::mean(*xs)) < 4.0 / std::sqrt(n));
    CHECK(std::abs(chaincont::variance(*xs) - 1.0) < 4.0 * std::sqrt(2.0 / n));
  }
  // the two sides are independent
  double cov = 0.0;
  for (int i = 0; i < n; ++i) cov += pos[i] * neg[i];
  CHECK(std::abs(cov / n) < 4.0 / std::sqrt(n));
}

TEST_CASE("bridge-exact maximum follows the reflection law") {
  constexpr int n = 4000;
  int above = 0;
  for (int s = 0; s < n; ++s) {
    LazyBrownianPath p(chaincont::derive_seed(123, s));
    above += p.extrema(Interval(0, 1), ExtremaMode::bridge_exact(0x1.0p-6, s)).max > 1.0;
  }
  const double expected = 2.0 * (1.0 - chaincont::normal_cdf(1.0));
  const double se = std::sqrt(expected * (1 - expected) / n);
  CHECK(std::abs(static_cast<double>(above) / n - expected) < 4.0 * se);
}

TEST_CASE("step rounding to dyadic levels") {
  LazyBrownianPath p(1, 0.5);
  CHECK(p.step_at(p.level_for(0.5)) == 0.5);
  CHECK(p.step_at(p.level_for(0.1)) == 0.0625);
  CHECK(p.step_at(p.level_for(0x1.0p-10)) == 0x1.0p-10);
}

TEST_CASE("node dump is sorted CSV") {
  LazyBrownianPath p(3);
  p.refine(Interval(-1, 1), 0.25);
  const auto nodes = p.nodes();
  REQUIRE(nodes.size() == p.node_count());
  for (std::size_t i = 1; i < nodes.size(); ++i) CHECK(nodes[i - 1].first < nodes[i].first);
  std::ostringstream out;
  p.dump_csv(out);
  CHECK(out.str().rfind("time,value\n", 0) == 0);
}

TEST_CASE("analytic paths") {
  auto sin3 = chaincont::make_deterministic("sin_pi_n", 3);
  const auto mode = ExtremaMode::grid(1e-3);
  CHECK(sin3->value_at(0.0) == 0.0);
  CHECK(sin3->value_at(1.0 / 6.0) == doctest::Approx(1.0));
  auto img = sin3->image(Interval(0, 1.0 / 6.0), mode);
  CHECK(img.lo() == doctest::Approx(0.0));
  CHECK(img.hi() == doctest::Approx(1.0));
  img = sin3->image(Interval(0.01, 0.05), mode);
  CHECK(img.lo() == doctest::Approx(std::sin(std::numbers::pi * 0.03)));
  CHECK(img.hi() == doctest::Approx(std::sin(std::numbers::pi * 0.15)));
  CHECK(sin3->image(Interval(-1, 1), mode) == Interval(-1, 1));

  auto id = chaincont::make_deterministic("identity");
  CHECK(id->image(Interval(-0.3, 2), mode) == Interval(-0.3, 2));
  auto aff = chaincont::make_deterministic("affine", -2.0);
  CHECK(aff->image(Interval(-1, 0.5), mode) == Interval(-1, 2));

  auto zz = chaincont::make_deterministic("zigzag", 1.0);
  CHECK(zz->value_at(0.25) == doctest::Approx(1.0));
  CHECK(zz->value_at(-0.25) == doctest::Approx(-1.0));
  img = zz->image(Interval(0.0, 0.2), mode);
  CHECK(img.hi() == doctest::Approx(0.8));
  CHECK(zz->image(Interval(0, 1), mode) == Interval(-1, 1));

  CHECK_THROWS_AS(chaincont::make_deterministic("cosine"), Error);
}
