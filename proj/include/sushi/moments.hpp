#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sushi/dynamics.hpp"
#include "sushi/matrix.hpp"
#include "sushi/partition.hpp"
#include "sushi/point_process.hpp"
#include "sushi/stats.hpp"

namespace sushi {

/// One realization per call; must depend on nothing but the Rng it is given,
/// since replicates are drawn concurrently.
using Sampler = std::function<WeightedConfig(Rng&)>;
/// Jointly drawn components N_1, ..., N_k.
using JointSampler = std::function<std::vector<WeightedConfig>(Rng&)>;

using WindowTuple = std::vector<Window>;

struct MomentEstimate {
  double value = 0;
  double stderr_ = 0;
  long replicates = 0;
  std::string target;  // e.g. "M_2([0,1) x [1,2))"
};

std::string describe_tuple(const WindowTuple& windows);

/// Per-replicate products prod_i N(A_i), one row per replicate and one
/// column per tuple; every tuple is evaluated on the same realization.
/// Replicate r draws from rng.substream(r).
std::vector<std::vector<double>> replicate_products(const Sampler& sampler, const std::vector<WindowTuple>& tuples,
                                                    long R, const Rng& rng);

/// Sample mean of prod_i N(A_i) over R >= 100 replicates with its plug-in
/// standard error. Exactly zero when some A_i is empty.
MomentEstimate estimate_moment(const Sampler& sampler, const WindowTuple& windows, long R, const Rng& rng);

/// Exact design matrix [m_pi(tuple)] with unit intensity; rows are tuples,
/// columns follow partitions(n).
Matrix<Rat> design_matrix(int n, const std::vector<WindowTuple>& design);

/// Throws std::invalid_argument naming the partitions whose columns depend
/// on earlier ones.
void require_full_rank(int n, const Matrix<Rat>& x);

/// Shipped designs: n = 2 uses (A,A), (A,B); n = 3 five tuples over A, B, C
/// = [0,1), [1,2), [2,3) with an invertible 5 x 5 matrix.
std::vector<WindowTuple> default_design(int n);

struct DecompositionFit {
  int n = 0;
  std::vector<Partition> partitions;
  std::vector<double> coefficients;
  Matrix<double> covariance;
  std::vector<double> moments;  // estimated M_n on each design tuple
  std::vector<double> moment_stderr;
  /// Standardized residuals per tuple, and their chi-square with
  /// (tuples - partitions) degrees of freedom; empty and 0 when exactly
  /// identified.
  std::vector<double> standardized_residuals;
  double residual_chi2 = 0;
  double residual_df = 0;
  double residual_p = 1;
  long replicates = 0;

  double coefficient(const Partition& p) const;
  double stderr_of(const Partition& p) const;
};

/// Generalized least squares of the estimated moments on [m_pi]; the weight
/// matrix is the estimated covariance of the moment estimates. n <= 4.
DecompositionFit fit_partition_decomposition(const Sampler& sampler, int n, const std::vector<WindowTuple>& design,
                                             long R, const Rng& rng);

/// Same linear algebra on moments known exactly: least squares in rational
/// arithmetic.
std::map<Partition, Rat> fit_exact(int n, const std::vector<WindowTuple>& design, const std::vector<Rat>& moments);

struct DiagonalEstimate {
  /// Level l: E[sum_i N(A_i^l)^n] over the 2^l equal pieces of A.
  std::vector<MomentEstimate> levels;
  double value = 0;  // finest level
  double stderr_ = 0;
};

DiagonalEstimate diagonal_weight(const Sampler& sampler, const Window& a, int n, int depth, long R, const Rng& rng);

/// z-test of the empirical Cov(N(A), N(B)) against `target`.
TestReport covariance_check(const Sampler& sampler, const Window& a, const Window& b, double target, long R,
                            const Rng& rng, double level = kDefaultLevel);

/// Tests E[prod_j Y_j] = prod_j E[Y_j], Y_j = prod_{A in groups[j]} N_j(A),
/// with a delta-method standard error.
TestReport mixed_moment_factorization(const JointSampler& sampler, const std::vector<WindowTuple>& groups, long R,
                                      const Rng& rng, double level = kDefaultLevel);

struct CesaroResult {
  std::vector<double> terms;    // E[prod_K N(A_i) prod_{K^c} N(T^{-k} A_i)], k = 1..L
  std::vector<double> averages; // running Cesaro means of terms
  TestReport report;
};

/// Observation window that keeps every T^{-k} A_i, 0 <= k <= L, i in K^c,
/// and every A_i, in view.
Window cesaro_window(const TransformHandle& t, const WindowTuple& windows, const std::vector<int>& shifted_indices,
                     long L, int max_stage = kDefaultMaxStage);

/// Cesaro average of the shifted mixed moments (shift realized by
/// push_forward) against M_{#K} * M_{n-#K}. `correction` is subtracted from
/// the average before testing (known diagonal contribution, if any).
/// `kept` lists the 0-based indices in K; the rest are shifted.
CesaroResult cesaro_factorization(const Sampler& sampler, const TransformHandle& t, const WindowTuple& windows,
                                  const std::vector<int>& kept, long L, long R, const Rng& rng, double correction = 0,
                                  double level = kDefaultLevel);

}  // namespace sushi
