#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"

#include "chaincont/error.hpp"
#include "chaincont/stats.hpp"

using chaincont::Error;
using chaincont::SampleSet;

namespace {

// Sup of |F_a - F_b| evaluated at every observed value, O(n^2).
double ks_oracle(const std::vector<double>& a, const std::vector<double>& b) {
  auto ecdf = [](const std::vector<double>& xs, double t) {
    return static_cast<double>(std::count_if(xs.begin(), xs.end(), [&](double x) { return x <= t; })) /
           static_cast<double>(xs.size());
  };
  double d = 0.0;
  for (const auto* xs : {&a, &b}) {
    for (double t : *xs) d = std::max(d, std::abs(ecdf(a, t) - ecdf(b, t)));
  }
  return d;
}

SampleSet normals(std::uint64_t seed, std::size_t n, double shift = 0.0, double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(shift, scale);
  SampleSet s;
  for (std::size_t i = 0; i < n; ++i) s.values.push_back(nd(rng));
  return s;
}

}  // namespace

TEST_CASE("normal cdf and quantile") {
  CHECK(chaincont::normal_cdf(0.0) == doctest::Approx(0.5));
  CHECK(chaincont::normal_cdf(1.0) == doctest::Approx(0.8413447460685429));
  CHECK(chaincont::normal_cdf(-2.0) == doctest::Approx(0.022750131948179195));
  CHECK(chaincont::normal_quantile(0.995) == doctest::Approx(2.5758293035489).epsilon(1e-10));
  for (double p : {1e-6, 0.01, 0.3, 0.5, 0.9, 0.999999}) {
    CHECK(chaincont::normal_cdf(chaincont::normal_quantile(p)) == doctest::Approx(p).epsilon(1e-9));
  }
  CHECK_THROWS_AS(chaincont::normal_quantile(1.0), Error);
}

TEST_CASE("descriptive statistics") {
  const std::vector<double> xs{1, 2, 3, 4, 10};
  CHECK(chaincont::mean(xs) == doctest::Approx(4.0));
  CHECK(chaincont::variance(xs) == doctest::Approx(12.5));
  CHECK(chaincont::median(xs) == 3.0);
  CHECK(chaincont::median({4, 1, 3, 2}) == 2.5);
  CHECK_THROWS_AS(chaincont::mean(std::vector<double>{}), Error);
  CHECK_THROWS_AS(chaincont::variance(std::vector<double>{1.0}), Error);
}

TEST_CASE("KS statistic matches the brute-force oracle") {
  CHECK(chaincont::ks_coefficient(0.01) == doctest::Approx(1.6276).epsilon(1e-4));
  CHECK(chaincont::ks_coefficient(0.05) == doctest::Approx(1.3581).epsilon(1e-4));
  const auto a = normals(1, 300);
  const auto b = normals(2, 450, 0.1);
  const auto r = chaincont::ks_two_sample(a, b, 0.01);
  CHECK(r.statistic == doctest::Approx(ks_oracle(a.values, b.values)).epsilon(1e-12));
  CHECK(r.threshold == doctest::Approx(1.6276 * std::sqrt((300.0 + 450.0) / (300.0 * 450.0))).epsilon(1e-4));

  // ties across and within samples
  SampleSet ta;
  SampleSet tb;
  for (int i = 0; i < 200; ++i) ta.values.push_back(i % 7);
  for (int i = 0; i < 150; ++i) tb.values.push_back(i % 5);
  CHECK(chaincont::ks_two_sample(ta, tb, 0.01).statistic ==
        doctest::Approx(ks_oracle(ta.values, tb.values)).epsilon(1e-12));
}

TEST_CASE("KS decisions") {
  CHECK(chaincont::ks_two_sample(normals(3, 2000), normals(4, 2000), 0.01).pass);
  CHECK_FALSE(chaincont::ks_two_sample(normals(3, 2000), normals(4, 2000, 0.0, 1.5), 0.01).pass);
  CHECK_THROWS_AS(chaincont::ks_two_sample(normals(3, 99), normals(4, 200), 0.01), Error);
}

TEST_CASE("mean confidence interval") {
  const auto s = normals(9, 10000, 2.0);
  const auto ci = chaincont::mean_ci(s, 0.99);
  CHECK(std::abs(ci.mean - 2.0) < ci.half_width);
  CHECK(ci.half_width == doctest::Approx(2.5758 / 100.0).epsilon(0.05));
  CHECK_THROWS_AS(chaincont::mean_ci(normals(1, 10), 0.99), Error);
}

TEST_CASE("log-moment slope recovers a planted exponent") {
  // X = t^0.25 * exp(noise): E log X = 0.25 log t + const
  std::mt19937_64 rng(5);
  std::normal_distribution<double> nd(0.0, 0.3);
  std::vector<chaincont::TimedSamples> groups;
  for (double t : {0.25, 1.0, 4.0}) {
    chaincont::TimedSamples g{t, {}};
    for (int i = 0; i < 5000; ++i) g.samples.values.push_back(std::pow(t, 0.25) * std::exp(nd(rng)));
    groups.push_back(g);
  }
  const auto est = chaincont::log_moment_slope(groups, 2);
  CHECK(est.expected == 0.25);
  CHECK(est.contains_expected());
  CHECK(est.std_error == doctest::Approx(0.3 / std::sqrt(5000.0) / std::sqrt(2.0) / std::log(4.0)).epsilon(0.1));
  const auto wrong = chaincont::log_moment_slope(groups, 1);
  CHECK_FALSE(wrong.contains_expected());

  groups.pop_back();
  CHECK_THROWS_AS(chaincont::log_moment_slope(groups, 2), Error);
}
