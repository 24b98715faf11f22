#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

namespace sushi {

inline constexpr double kDefaultLevel = 0.01;

/// Outcome of one hypothesis test. reject == (p_value < level).
struct TestReport {
  std::string name;
  double target = 0;
  double estimate = 0;
  double stderr_ = 0;
  double statistic = 0;
  double p_value = 1;
  double level = kDefaultLevel;
  bool reject = false;
  std::uint64_t seed = 0;
  long replicates = 0;
  /// Test-specific extras (degrees of freedom, bins, ...), in insertion order.
  std::vector<std::pair<std::string, double>> extra;

  void decide() { reject = p_value < level; }
};

nlohmann::ordered_json to_json(const TestReport& r);

double mean(const std::vector<double>& x);
/// Unbiased sample variance (divisor n - 1).
double variance(const std::vector<double>& x);
double covariance(const std::vector<double>& x, const std::vector<double>& y);
double correlation(const std::vector<double>& x, const std::vector<double>& y);

/// Two-sided normal p-value of (estimate - target) / stderr. A zero stderr
/// gives p = 1 when the difference is zero and p = 0 otherwise.
TestReport z_test(std::string name, double estimate, double stderr_, double target, double level = kDefaultLevel);

/// Pearson chi-square against Poisson(mean). Bins are grown from the left
/// until each holds expected count >= 5; the last bin absorbs the upper tail.
/// Needs >= 1000 counts and at least two bins.
TestReport poisson_gof(const std::vector<long>& counts, double mean, double level = kDefaultLevel);

/// Fisher index-of-dispersion test: D = sum (x - xbar)^2 / xbar against
/// chi-square(R - 1), two-sided.
TestReport dispersion_test(const std::vector<long>& counts, double level = kDefaultLevel);

/// Chi-square homogeneity test of two samples of (integer-valued) counts.
/// Adjacent values are merged until every column holds >= 10 observations.
TestReport two_sample_test(const std::vector<double>& a, const std::vector<double>& b, double level = kDefaultLevel);

/// Upper tail of chi-square(df) at x.
double chi_square_sf(double x, double df);

/// Per-test level for a battery of m tests at family level `level`.
double bonferroni(double level, std::size_t m);

}  // namespace sushi
