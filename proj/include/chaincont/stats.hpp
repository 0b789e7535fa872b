#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

namespace chaincont {

struct SampleSet {
  std::vector<double> values;
  std::string label;
  std::map<std::string, std::string> params;

  std::size_t size() const noexcept { return values.size(); }
};

double normal_cdf(double x);
// Inverse of normal_cdf on (0, 1).
double normal_quantile(double p);

double mean(std::span<const double> xs);
// Unbiased sample variance.
double variance(std::span<const double> xs);
double median(std::vector<double> xs);

struct KsResult {
  double statistic = 0.0;
  double threshold = 0.0;
  bool pass = false;
};

// Asymptotic coefficient c(alpha) = sqrt(-ln(alpha / 2) / 2).
double ks_coefficient(double alpha);

// Two-sample Kolmogorov-Smirnov test. Each sample needs at least 100 values.
KsResult ks_two_sample(const SampleSet& a, const SampleSet& b, double alpha);

struct MeanCi {
  double mean = 0.0;
  double half_width = 0.0;
};

// Normal-approximation confidence interval; needs at least 30 values.
MeanCi mean_ci(const SampleSet& a, double level);

struct SlopeEstimate {
  double slope = 0.0;
  double std_error = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  double expected = 0.0;  // 2^-k

  bool contains_expected() const noexcept { return ci_lo <= expected && expected <= ci_hi; }
};

struct TimedSamples {
  double t = 0.0;
  SampleSet samples;
};

// Least-squares slope of mean log(samples) against log t, with a 99% interval
// from the sampling variance of each mean (the t-groups must be independent).
SlopeEstimate log_moment_slope(std::span<const TimedSamples> samples_by_t, int k);

}  // namespace chaincont
