#include "chaincont/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "chaincont/error.hpp"

namespace chaincont {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "normal_quantile needs p in (0, 1)");
  }
  // Bracket then polish with Newton; erfc is accurate to a few ulps.
  double lo = -40.0;
  double hi = 40.0;
  for (int i = 0; i < 200 && hi - lo > 1e-12; ++i) {
    const double mid = 0.5 * (lo + hi);
    (normal_cdf(mid) < p ? lo : hi) = mid;
  }
  double x = 0.5 * (lo + hi);
  for (int i = 0; i < 3; ++i) {
    const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
    if (pdf <= 0.0) break;
    x -= (normal_cdf(x) - p) / pdf;
  }
  return x;
}

double mean(std::span<const double> xs) {
  if (xs.empty()) throw Error(ErrorCode::kInsufficientData, "mean of empty sample");
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double variance(std::span<const double> xs) {
  if (xs.size() < 2) throw Error(ErrorCode::kInsufficientData, "variance needs two values");
  const double m = mean(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  return ss / static_cast<double>(xs.size() - 1);
}

double median(std::vector<double> xs) {
  if (xs.empty()) throw Error(ErrorCode::kInsufficientData, "median of empty sample");
  std::sort(xs.begin(), xs.end());
  const std::size_t n = xs.size();
  return n % 2 == 1 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

double ks_coefficient(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "alpha must lie in (0, 1)");
  }
  return std::sqrt(-0.5 * std::log(alpha / 2.0));
}

KsResult ks_two_sample(const SampleSet& a, const SampleSet& b, double alpha) {
  constexpr std::size_t kMinSize = 100;
  if (a.size() < kMinSize || b.size() < kMinSize) {
    throw Error(ErrorCode::kInsufficientData, "KS test needs at least 100 values per sample");
  }
  std::vector<double> x = a.values;
  std::vector<double> y = b.values;
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  const double n = static_cast<double>(x.size());
  const double m = static_cast<double>(y.size());

  // Merge walk; ties are consumed on both sides before comparing CDFs.
  std::size_t i = 0;
  std::size_t j = 0;
  double d = 0.0;
  while (i < x.size() && j < y.size()) {
    const double v = std::min(x[i], y[j]);
    while (i < x.size() && x[i] == v) ++i;
    while (j < y.size() && y[j] == v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / n - static_cast<double>(j) / m));
  }

  KsResult r;
  r.statistic = d;
  r.threshold = ks_coefficient(alpha) * std::sqrt((n + m) / (n * m));
  r.pass = r.statistic < r.threshold;
  return r;
}

MeanCi mean_ci(const SampleSet& a, double level) {
  if (a.size() < 30) throw Error(ErrorCode::kInsufficientData, "mean_ci needs 30 values");
  if (!(level > 0.0 && level < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "confidence level must lie in (0, 1)");
  }
  const double z = normal_quantile(0.5 + 0.5 * level);
  const double se = std::sqrt(variance(a.values) / static_cast<double>(a.size()));
  return {mean(a.values), z * se};
}

SlopeEstimate log_moment_slope(std::span<const TimedSamples> samples_by_t, int k) {
  std::set<double> distinct;
  for (const auto& g : samples_by_t) distinct.insert(g.t);
  if (distinct.size() < 3 || distinct.size() != samples_by_t.size()) {
    throw Error(ErrorCode::kInvalidArgument, "log-moment regression needs >= 3 distinct t");
  }
  std::vector<double> xs;
  std::vector<double> ys;
  std::vector<double> vars;
  for (const auto& g : samples_by_t) {
    if (!(g.t > 0.0)) throw Error(ErrorCode::kInvalidArgument, "t must be positive");
    if (g.samples.size() < 1000) {
      throw Error(ErrorCode::kInsufficientData, "each t needs at least 1000 samples");
    }
    std::vector<double> logs;
    logs.reserve(g.samples.size());
    for (double v : g.samples.values) {
      if (!(v > 0.0)) throw Error(ErrorCode::kInvalidArgument, "samples must be positive");
      logs.push_back(std::log(v));
    }
    xs.push_back(std::log(g.t));
    ys.push_back(mean(logs));
    vars.push_back(variance(logs) / static_cast<double>(logs.size()));
  }
  const double xbar = mean(xs);
  double sxx = 0.0;
  for (double x : xs) sxx += (x - xbar) * (x - xbar);

  SlopeEstimate est;
  double var = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double w = (xs[i] - xbar) / sxx;
    est.slope += w * ys[i];
    var += w * w * vars[i];
  }
  est.std_error = std::sqrt(var);
  const double z = normal_quantile(0.995);
  est.ci_lo = est.slope - z * est.std_error;
  est.ci_hi = est.slope + z * est.std_error;
  est.expected = std::ldexp(1.0, -k);
  return est;
}

}  // namespace chaincont
