#include "sushi/stats.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/poisson.hpp>

namespace sushi {

nlohmann::ordered_json to_json(const TestReport& r) {
  nlohmann::ordered_json j;
  j["name"] = r.name;
  j["target"] = r.target;
  j["estimate"] = r.estimate;
  j["stderr"] = r.stderr_;
  j["statistic"] = r.statistic;
  j["p_value"] = r.p_value;
  j["decision"] = r.reject ? "reject" : "retain";
  j["level"] = r.level;
  j["seed"] = r.seed;
  j["R"] = r.replicates;
  if (!r.extra.empty()) {
    nlohmann::ordered_json extra = nlohmann::ordered_json::object();
    for (const auto& [k, v] : r.extra) extra[k] = v;
    j["extra"] = std::move(extra);
  }
  return j;
}

double mean(const std::vector<double>& x) {
  if (x.empty()) throw std::invalid_argument("mean of an empty sample");
  double s = 0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

double covariance(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("covariance: need two samples of equal size >= 2");
  const double mx = mean(x);
  const double my = mean(y);
  double s = 0;
  for (std::size_t i = 0; i < x.size(); ++i) s += (x[i] - mx) * (y[i] - my);
  return s / static_cast<double>(x.size() - 1);
}

double variance(const std::vector<double>& x) { return covariance(x, x); }

double correlation(const std::vector<double>& x, const std::vector<double>& y) {
  const double vx = variance(x);
  const double vy = variance(y);
  if (vx == 0 || vy == 0) return 0;
  return covariance(x, y) / std::sqrt(vx * vy);
}

double chi_square_sf(double x, double df) {
  if (x <= 0) return 1.0;
  boost::math::chi_squared_distribution<double> chi(df);
  return boost::math::cdf(boost::math::complement(chi, x));
}

double bonferroni(double level, std::size_t m) { return m == 0 ? level : level / static_cast<double>(m); }

TestReport z_test(std::string name, double estimate, double stderr_, double target, double level) {
  TestReport r;
  r.name = std::move(name);
  r.target = target;
  r.estimate = estimate;
  r.stderr_ = stderr_;
  r.level = level;
  const double diff = estimate - target;
  if (stderr_ > 0) {
    r.statistic = diff / stderr_;
    r.p_value = std::erfc(std::abs(r.statistic) / std::sqrt(2.0));
  } else {
    r.statistic = diff == 0 ? 0.0 : std::copysign(INFINITY, diff);
    r.p_value = diff == 0 ? 1.0 : 0.0;
  }
  r.decide();
  return r;
}

TestReport poisson_gof(const std::vector<long>& counts, double mean_, double level) {
  if (counts.size() < 1000) throw std::invalid_argument("poisson_gof: need at least 1000 counts");
  if (!(mean_ > 0)) throw std::invalid_argument("poisson_gof: mean must be positive");
  const double n = static_cast<double>(counts.size());
  boost::math::poisson_distribution<double> pois(mean_);

  // Right edges (inclusive) of the bins; the last bin is open to +inf.
  std::vector<long> edges;
  std::vector<double> expected;
  double acc = 0;
  for (long k = 0;; ++k) {
    acc += n * boost::math::pdf(pois, static_cast<double>(k));
    const double tail = n * boost::math::cdf(boost::math::complement(pois, static_cast<double>(k)));
    if (tail < 5) {
      expected.push_back(acc + tail);
      edges.push_back(k);
      break;
    }
    if (acc >= 5) {
      expected.push_back(acc);
      edges.push_back(k);
      acc = 0;
    }
  }
  if (expected.size() >= 2 && expected.back() < 5) {
    expected[expected.size() - 2] += expected.back();
    expected.pop_back();
    edges.pop_back();
  }
  if (expected.size() < 2) throw std::invalid_argument("poisson_gof: degenerate histogram (fewer than two bins)");

  std::vector<double> observed(expected.size(), 0.0);
  for (long c : counts) {
    if (c < 0) throw std::invalid_argument("poisson_gof: negative count");
    auto it = std::lower_bound(edges.begin(), edges.end() - 1, c);
    observed[static_cast<std::size_t>(it - edges.begin())] += 1;
  }
  double chi2 = 0;
  for (std::size_t i = 0; i < expected.size(); ++i) {
    const double d = observed[i] - expected[i];
    chi2 += d * d / expected[i];
  }
  double sum = 0;
  for (long c : counts) sum += static_cast<double>(c);

  TestReport r;
  r.name = "poisson_gof";
  r.target = mean_;
  r.estimate = sum / n;
  r.stderr_ = std::sqrt(mean_ / n);
  r.statistic = chi2;
  const double df = static_cast<double>(expected.size() - 1);
  r.p_value = chi_square_sf(chi2, df);
  r.level = level;
  r.replicates = static_cast<long>(counts.size());
  r.extra = {{"df", df}, {"bins", static_cast<double>(expected.size())}};
  r.decide();
  return r;
}

TestReport dispersion_test(const std::vector<long>& counts, double level) {
  if (counts.size() < 2) throw std::invalid_argument("dispersion_test: need at least two counts");
  std::vector<double> x(counts.begin(), counts.end());
  const double m = mean(x);
  if (!(m > 0)) throw std::invalid_argument("dispersion_test: all counts are zero");
  double ss = 0;
  for (double v : x) ss += (v - m) * (v - m);
  const double d = ss / m;
  const double df = static_cast<double>(x.size() - 1);
  boost::math::chi_squared_distribution<double> chi(df);
  const double lower = boost::math::cdf(chi, d);
  const double upper = boost::math::cdf(boost::math::complement(chi, d));

  TestReport r;
  r.name = "dispersion";
  r.target = 1.0;
  r.estimate = d / df;
  r.stderr_ = std::sqrt(2.0 / df);
  r.statistic = d;
  r.p_value = std::min(1.0, 2 * std::min(lower, upper));
  r.level = level;
  r.replicates = static_cast<long>(x.size());
  r.extra = {{"df", df}};
  r.decide();
  return r;
}

TestReport two_sample_test(const std::vector<double>& a, const std::vector<double>& b, double level) {
  if (a.size() < 50 || b.size() < 50) throw std::invalid_argument("two_sample_test: need at least 50 values per sample");
  std::map<double, std::pair<double, double>> table;
  for (double v : a) table[v].first += 1;
  for (double v : b) table[v].second += 1;

  std::vector<std::pair<double, double>> cols;
  std::pair<double, double> cur{0, 0};
  for (const auto& [v, c] : table) {
    cur.first += c.first;
    cur.second += c.second;
    if (cur.first + cur.second >= 10) {
      cols.push_back(cur);
      cur = {0, 0};
    }
  }
  if (cur.first + cur.second > 0) {
    if (cols.empty()) {
      cols.push_back(cur);
    } else {
      cols.back().first += cur.first;
      cols.back().second += cur.second;
    }
  }

  TestReport r;
  r.name = "two_sample";
  r.level = level;
  r.replicates = static_cast<long>(a.size() + b.size());
  r.estimate = mean(a);
  r.target = mean(b);
  if (cols.size() < 2) {
    // Both samples sit on one value class: nothing distinguishes them.
    r.statistic = 0;
    r.p_value = 1;
    r.extra = {{"df", 0}};
    r.decide();
    return r;
  }
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  const double n = na + nb;
  double chi2 = 0;
  for (const auto& [oa, ob] : cols) {
    const double col = oa + ob;
    const double ea = col * na / n;
    const double eb = col * nb / n;
    chi2 += (oa - ea) * (oa - ea) / ea + (ob - eb) * (ob - eb) / eb;
  }
  const double df = static_cast<double>(cols.size() - 1);
  r.statistic = chi2;
  r.p_value = chi_square_sf(chi2, df);
  r.stderr_ = std::sqrt(variance(a) / na + variance(b) / nb);
  r.extra = {{"df", df}};
  r.decide();
  return r;
}

}  // namespace sushi
