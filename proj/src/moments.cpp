#include "sushi/moments.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "sushi/parallel.hpp"

namespace sushi {

namespace {

void require_replicates(long R, const char* what) {
  if (R < 100) throw std::invalid_argument(std::string(what) + ": need R >= 100 replicates");
}

double product_of_counts(const WeightedConfig& c, const WindowTuple& windows) {
  double p = 1;
  for (const auto& w : windows) {
    if (w.empty()) return 0;
    p *= count(c, w);
  }
  return p;
}

double stderr_of_mean(const std::vector<double>& x) {
  return std::sqrt(variance(x) / static_cast<double>(x.size()));
}

std::vector<double> column(const std::vector<std::vector<double>>& rows, std::size_t j) {
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r[j]);
  return out;
}

}  // namespace

std::string describe_tuple(const WindowTuple& windows) {
  std::string out = "M_" + std::to_string(windows.size()) + "(";
  for (std::size_t i = 0; i < windows.size(); ++i) {
    if (i) out += " x ";
    out += windows[i].str();
  }
  return out + ")";
}

std::vector<std::vector<double>> replicate_products(const Sampler& sampler, const std::vector<WindowTuple>& tuples,
                                                    long R, const Rng& rng) {
  std::vector<std::vector<double>> rows(static_cast<std::size_t>(R));
  parallel_for(rows.size(), [&](std::size_t r) {
    Rng stream = rng.substream(r);
    WeightedConfig c = sampler(stream);
    auto& row = rows[r];
    row.reserve(tuples.size());
    for (const auto& t : tuples) row.push_back(product_of_counts(c, t));
  });
  return rows;
}

MomentEstimate estimate_moment(const Sampler& sampler, const WindowTuple& windows, long R, const Rng& rng) {
  require_replicates(R, "estimate_moment");
  MomentEstimate est{0, 0, R, describe_tuple(windows)};
  for (const auto& w : windows) {
    if (w.empty()) return est;
  }
  auto x = column(replicate_products(sampler, {windows}, R, rng), 0);
  est.value = mean(x);
  est.stderr_ = stderr_of_mean(x);
  return est;
}

Matrix<Rat> design_matrix(int n, const std::vector<WindowTuple>& design) {
  const auto parts = partitions(n);
  Matrix<Rat> x(design.size(), parts.size());
  const IntensitySpec unit(Rat(1));
  for (std::size_t r = 0; r < design.size(); ++r) {
    if (design[r].size() != static_cast<std::size_t>(n)) {
      throw std::invalid_argument("design tuple " + std::to_string(r) + " does not have " + std::to_string(n) +
                                  " windows");
    }
    for (std::size_t c = 0; c < parts.size(); ++c) x(r, c) = m_pi(parts[c], design[r], unit);
  }
  return x;
}

void require_full_rank(int n, const Matrix<Rat>& x) {
  const auto parts = partitions(n);
  const auto pivots = x.pivot_columns();
  if (pivots.size() == parts.size()) return;
  std::string names;
  std::size_t next = 0;
  for (std::size_t c = 0; c < parts.size(); ++c) {
    if (next < pivots.size() && pivots[next] == c) {
      ++next;
      continue;
    }
    if (!names.empty()) names += ", ";
    names += parts[c].str();
  }
  throw std::invalid_argument("design is rank deficient (rank " + std::to_string(pivots.size()) + " of " +
                              std::to_string(parts.size()) + "); unidentifiable partitions: " + names);
}

std::vector<WindowTuple> default_design(int n) {
  // One tuple per partition: index i gets the unit window [b, b+1) of its
  // block b. m_pi' of that tuple is 1 when pi' refines pi and 0 otherwise,
  // so the matrix is unitriangular in refinement order.
  std::vector<WindowTuple> design;
  for (const auto& p : partitions(n)) {
    WindowTuple t(static_cast<std::size_t>(n));
    for (std::size_t b = 0; b < p.blocks.size(); ++b) {
      const long lo = static_cast<long>(b);
      for (int i : p.blocks[b]) t[static_cast<std::size_t>(i - 1)] = Window(Interval(Rat(lo), Rat(lo + 1)));
    }
    design.push_back(std::move(t));
  }
  return design;
}

double DecompositionFit::coefficient(const Partition& p) const {
  for (std::size_t i = 0; i < partitions.size(); ++i) {
    if (partitions[i] == p) return coefficients[i];
  }
  throw std::out_of_range("no coefficient for partition " + p.str());
}

double DecompositionFit::stderr_of(const Partition& p) const {
  for (std::size_t i = 0; i < partitions.size(); ++i) {
    if (partitions[i] == p) return std::sqrt(covariance(i, i));
  }
  throw std::out_of_range("no coefficient for partition " + p.str());
}

DecompositionFit fit_partition_decomposition(const Sampler& sampler, int n, const std::vector<WindowTuple>& design,
                                             long R, const Rng& rng) {
  if (n < 1 || n > 4) throw std::out_of_range("fit_partition_decomposition: n must be in [1, 4]");
  require_replicates(R, "fit_partition_decomposition");
  const Matrix<Rat> exact = design_matrix(n, design);
  require_full_rank(n, exact);
  const Matrix<double> x = to_double(exact);
  const std::size_t m = design.size();
  const std::size_t p = x.cols();

  const auto rows = replicate_products(sampler, design, R, rng);
  std::vector<std::vector<double>> cols;
  for (std::size_t j = 0; j < m; ++j) cols.push_back(column(rows, j));

  DecompositionFit fit;
  fit.n = n;
  fit.partitions = partitions(n);
  fit.replicates = R;
  Matrix<double> sigma(m, m);  // covariance of the moment means
  for (std::size_t i = 0; i < m; ++i) {
    fit.moments.push_back(mean(cols[i]));
    for (std::size_t j = 0; j <= i; ++j) {
      sigma(i, j) = sigma(j, i) = covariance(cols[i], cols[j]) / static_cast<double>(R);
    }
  }
  for (std::size_t i = 0; i < m; ++i) fit.moment_stderr.push_back(std::sqrt(sigma(i, i)));

  if (m == p) {
    const Matrix<double> inv = x.inverse();
    fit.coefficients = inv.apply(fit.moments);
    fit.covariance = inv * sigma * inv.transpose();
    return fit;
  }

  const Matrix<double> w = sigma.inverse();
  const Matrix<double> xt = x.transpose();
  const Matrix<double> info = xt * w * x;
  fit.covariance = info.inverse();
  fit.coefficients = (fit.covariance * xt * w).apply(fit.moments);

  const auto fitted = x.apply(fit.coefficients);
  std::vector<double> resid(m);
  for (std::size_t i = 0; i < m; ++i) resid[i] = fit.moments[i] - fitted[i];
  const auto wr = w.apply(resid);
  for (std::size_t i = 0; i < m; ++i) fit.residual_chi2 += resid[i] * wr[i];
  fit.residual_df = static_cast<double>(m - p);
  fit.residual_p = chi_square_sf(fit.residual_chi2, fit.residual_df);
  // Residual covariance: sigma - X cov X^T.
  const Matrix<double> explained = x * fit.covariance * xt;
  for (std::size_t i = 0; i < m; ++i) {
    double v = sigma(i, i) - explained(i, i);
    if (!(v > 0)) v = sigma(i, i);
    fit.standardized_residuals.push_back(v > 0 ? resid[i] / std::sqrt(v) : 0.0);
  }
  return fit;
}

std::map<Partition, Rat> fit_exact(int n, const std::vector<WindowTuple>& design, const std::vector<Rat>& moments) {
  const Matrix<Rat> x = design_matrix(n, design);
  require_full_rank(n, x);
  if (moments.size() != design.size()) throw std::invalid_argument("fit_exact: one moment per design tuple");
  const Matrix<Rat> xt = x.transpose();
  const auto coef = ((xt * x).inverse() * xt).apply(moments);
  std::map<Partition, Rat> out;
  const auto parts = partitions(n);
  for (std::size_t i = 0; i < parts.size(); ++i) out.emplace(parts[i], coef[i]);
  return out;
}

DiagonalEstimate diagonal_weight(const Sampler& sampler, const Window& a, int n, int depth, long R, const Rng& rng) {
  if (depth < 0 || depth > 12) throw std::out_of_range("diagonal_weight: depth must be in [0, 12]");
  if (n < 1) throw std::invalid_argument("diagonal_weight: n must be >= 1");
  require_replicates(R, "diagonal_weight");
  if (a.empty()) throw std::invalid_argument("diagonal_weight: empty window");
  const long fine = 1L << depth;
  const auto parts = a.parts();
  const std::size_t levels = static_cast<std::size_t>(depth) + 1;

  std::vector<std::vector<double>> sums(static_cast<std::size_t>(R), std::vector<double>(levels, 0.0));
  parallel_for(sums.size(), [&](std::size_t r) {
    Rng stream = rng.substream(r);
    const WeightedConfig c = sampler(stream);
    if (!c.window().contains(a)) throw std::invalid_argument("diagonal_weight: window outside the sampled region");
    std::vector<double> bins(parts.size() * static_cast<std::size_t>(fine), 0.0);
    for (const auto& atom : c.atoms()) {
      for (std::size_t p = 0; p < parts.size(); ++p) {
        if (!parts[p].contains(atom.point)) continue;
        Rat rel = (atom.point - parts[p].lo) * Rat(fine) / parts[p].length();
        const long idx = rel.floor().get_si();
        bins[p * static_cast<std::size_t>(fine) + static_cast<std::size_t>(idx)] += atom.weight;
        break;
      }
    }
    // Coarsen by pairwise aggregation inside each part.
    for (std::size_t l = levels; l-- > 0;) {
      double s = 0;
      for (double b : bins) s += std::pow(b, n);
      sums[r][l] = s;
      if (l == 0) break;
      std::vector<double> coarse(bins.size() / 2);
      for (std::size_t i = 0; i < coarse.size(); ++i) coarse[i] = bins[2 * i] + bins[2 * i + 1];
      bins = std::move(coarse);
    }
  });

  DiagonalEstimate out;
  for (std::size_t l = 0; l < levels; ++l) {
    auto x = column(sums, l);
    out.levels.push_back({mean(x), stderr_of_mean(x), R,
                          "level " + std::to_string(l) + " refinement sum of N^" + std::to_string(n) + " on " + a.str()});
  }
  out.value = out.levels.back().value;
  out.stderr_ = out.levels.back().stderr_;
  return out;
}

TestReport covariance_check(const Sampler& sampler, const Window& a, const Window& b, double target, long R,
                            const Rng& rng, double level) {
  require_replicates(R, "covariance_check");
  const auto rows = replicate_products(sampler, {{a}, {b}}, R, rng);
  const auto x = column(rows, 0);
  const auto y = column(rows, 1);
  const double mx = mean(x);
  const double my = mean(y);
  std::vector<double> z(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) z[i] = (x[i] - mx) * (y[i] - my);
  TestReport r = z_test("covariance " + a.str() + " " + b.str(), covariance(x, y), stderr_of_mean(z), target, level);
  r.seed = rng.seed();
  r.replicates = R;
  return r;
}

TestReport mixed_moment_factorization(const JointSampler& sampler, const std::vector<WindowTuple>& groups, long R,
                                      const Rng& rng, double level) {
  require_replicates(R, "mixed_moment_factorization");
  if (groups.empty()) throw std::invalid_argument("mixed_moment_factorization: no components");
  for (const auto& g : groups) {
    if (g.empty()) throw std::invalid_argument("mixed_moment_factorization: empty group");
  }
  const std::size_t k = groups.size();
  std::vector<std::vector<double>> y(static_cast<std::size_t>(R), std::vector<double>(k, 0.0));
  parallel_for(y.size(), [&](std::size_t r) {
    Rng stream = rng.substream(r);
    const auto comps = sampler(stream);
    if (comps.size() != k) throw std::invalid_argument("mixed_moment_factorization: sampler returned wrong arity");
    for (std::size_t j = 0; j < k; ++j) y[r][j] = product_of_counts(comps[j], groups[j]);
  });

  std::vector<double> ybar(k);
  for (std::size_t j = 0; j < k; ++j) ybar[j] = mean(column(y, j));
  double product = 1;
  for (double v : ybar) product *= v;

  std::vector<double> joint(y.size());
  std::vector<double> phi(y.size());
  for (std::size_t r = 0; r < y.size(); ++r) {
    double jr = 1;
    for (double v : y[r]) jr *= v;
    joint[r] = jr;
    double lin = 0;
    for (std::size_t j = 0; j < k; ++j) {
      double others = 1;
      for (std::size_t l = 0; l < k; ++l) {
        if (l != j) others *= ybar[l];
      }
      lin += others * y[r][j];
    }
    phi[r] = jr - lin;
  }
  const double est = k == 1 ? ybar[0] : mean(joint);
  TestReport rep = z_test("mixed_moment_factorization", est, stderr_of_mean(phi), product, level);
  rep.seed = rng.seed();
  rep.replicates = R;
  rep.extra = {{"components", static_cast<double>(k)}};
  return rep;
}

Window cesaro_window(const TransformHandle& t, const WindowTuple& windows, const std::vector<int>& kept, long L,
                     int max_stage) {
  if (auto dom = t.domain()) return *dom;
  Window out;
  for (std::size_t i = 0; i < windows.size(); ++i) {
    out = unite(out, windows[i]);
    if (std::find(kept.begin(), kept.end(), static_cast<int>(i)) != kept.end()) continue;
    for (long k = 1; k <= L; ++k) out = unite(out, image_window(t, windows[i], -k, max_stage));
  }
  return out;
}

CesaroResult cesaro_factorization(const Sampler& sampler, const TransformHandle& t, const WindowTuple& windows,
                                  const std::vector<int>& kept, long L, long R, const Rng& rng, double correction,
                                  double level) {
  require_replicates(R, "cesaro_factorization");
  if (L < 1) throw std::invalid_argument("cesaro_factorization: L must be >= 1");
  std::vector<bool> in_k(windows.size(), false);
  for (int i : kept) {
    if (i < 0 || static_cast<std::size_t>(i) >= windows.size()) {
      throw std::out_of_range("cesaro_factorization: index " + std::to_string(i) + " outside the tuple");
    }
    in_k[static_cast<std::size_t>(i)] = true;
  }
  WindowTuple k_windows;
  WindowTuple rest;
  for (std::size_t i = 0; i < windows.size(); ++i) (in_k[i] ? k_windows : rest).push_back(windows[i]);

  // Per replicate: a = prod_K N(A_i), b = prod_{K^c} N(A_i), then the L shifted terms.
  struct Row {
    double a = 0;
    double b = 0;
    std::vector<double> terms;
  };
  std::vector<Row> rows(static_cast<std::size_t>(R));
  parallel_for(rows.size(), [&](std::size_t r) {
    Rng stream = rng.substream(r);
    const WeightedConfig c = sampler(stream);
    Row& row = rows[r];
    row.a = product_of_counts(c, k_windows);
    row.b = product_of_counts(c, rest);
    row.terms.assign(static_cast<std::size_t>(L), 0.0);
    if (row.a == 0) return;
    for (long k = 1; k <= L; ++k) {
      row.terms[static_cast<std::size_t>(k - 1)] = row.a * product_of_counts(push_forward(c, t, k), rest);
    }
  });

  CesaroResult out;
  std::vector<double> a(rows.size()), b(rows.size()), g(rows.size());
  out.terms.assign(static_cast<std::size_t>(L), 0.0);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    a[r] = rows[r].a;
    b[r] = rows[r].b;
    double s = 0;
    for (std::size_t k = 0; k < rows[r].terms.size(); ++k) {
      out.terms[k] += rows[r].terms[k];
      s += rows[r].terms[k];
    }
    g[r] = s / static_cast<double>(L);
  }
  double running = 0;
  for (std::size_t k = 0; k < out.terms.size(); ++k) {
    out.terms[k] /= static_cast<double>(R);
    running += out.terms[k];
    out.averages.push_back(running / static_cast<double>(k + 1));
  }
  const double abar = mean(a);
  const double bbar = mean(b);
  std::vector<double> phi(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) phi[r] = g[r] - bbar * a[r] - abar * b[r];
  out.report = z_test("cesaro_factorization", mean(g) - correction, stderr_of_mean(phi), abar * bbar, level);
  out.report.seed = rng.seed();
  out.report.replicates = R;
  out.report.extra = {{"L", static_cast<double>(L)}, {"correction", correction}};
  return out;
}

}  // namespace sushi
