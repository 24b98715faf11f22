#pragma once

#include <map>
#include <vector>

#include "sushi/dynamics.hpp"
#include "sushi/point_process.hpp"

namespace sushi {

/// Finitely supported weight sequence k -> a_k > 0 placed along an orbit.
using WeightSequence = std::map<long, double>;

struct ClusterEntry {
  WeightSequence weights;
  double prob;
};

/// Finite catalog of weight sequences with probabilities: the cluster law.
class ClusterLaw {
 public:
  explicit ClusterLaw(std::vector<ClusterEntry> catalog);

  const std::vector<ClusterEntry>& catalog() const { return catalog_; }
  std::vector<double> probabilities() const;
  /// E[sum_k a_k].
  double mean_total_weight() const;
  /// max |k| over all supports.
  long support_bound() const;
  /// Every offset k used by some entry.
  std::vector<long> offsets() const;

 private:
  std::vector<ClusterEntry> catalog_;
};

/// Cluster measure built on Poisson(c * length) ground points.
struct SushiSpec {
  double c;
  ClusterLaw law;
  TransformHandle transform;
};

/// Cluster-form Levy data; the drift is always zero.
struct LevyData {
  double c;
  ClusterLaw law;
  TransformHandle transform;
};

/// Region whose ground points can reach `core` through T^k, k in offsets.
Window cluster_reach_window(const TransformHandle& t, const std::vector<long>& offsets, const Window& core,
                            int max_stage = kDefaultMaxStage);

WeightedConfig sample_sushi(const SushiSpec& spec, const Window& core, Rng& rng);

/// Removes atoms with weight strictly below eps.
WeightedConfig truncate_weights(const WeightedConfig& v, double eps);
/// Support of v with unit weights.
PointConfig simplify(const WeightedConfig& v);

/// One orbit group: origin plus weights beta_k at T^k(origin).
struct EncodedCluster {
  Rat origin;
  WeightSequence weights;

  friend bool operator==(const EncodedCluster&, const EncodedCluster&) = default;
};

struct EncodedMeasure {
  Window window;
  std::vector<EncodedCluster> clusters;  // sorted by origin
  std::size_t dropped_groups = 0;

  friend bool operator==(const EncodedMeasure&, const EncodedMeasure&) = default;
};

enum class BoundaryPolicy { kThrow, kDrop };

/// Groups the support into orbit segments linked by T^j, 0 < j <= k_max, and
/// encodes each group from its first point of maximal weight. A group with a
/// point whose k_max-neighbourhood leaves the window is incomplete: it
/// raises, or is dropped and counted under BoundaryPolicy::kDrop.
EncodedMeasure phi_encode(const WeightedConfig& v, const TransformHandle& t, long k_max,
                          BoundaryPolicy policy = BoundaryPolicy::kThrow, int max_stage = kDefaultMaxStage);
WeightedConfig phi_decode(const EncodedMeasure& enc, const TransformHandle& t, int max_stage = kDefaultMaxStage);

/// c with 1/c = E[sum_k a_k].
double unit_intensity_c(const ClusterLaw& law);

/// Same law as sample_sushi, drawn as a Poisson process of clusters per
/// catalog entry and integrated.
WeightedConfig sample_id_measure(const LevyData& levy, const Window& core, Rng& rng);

/// E[N(A)] = c E[sum a_k] |A|.
double cluster_mean(double c, const ClusterLaw& law, const Window& a);
/// Var N(A) = integral of xi(A)^2 against the Levy measure,
/// c sum_e p_e sum_{k,l} a_k a_l |T^{-(k-l)}A ∩ A|.
double cluster_variance(double c, const ClusterLaw& law, const TransformHandle& t, const Window& a,
                        int max_stage = kDefaultMaxStage);
/// Cov(N(A), N(B)) = c sum_e p_e sum_{k,l} a_k a_l |T^{-(k-l)}A ∩ B|.
double cluster_covariance(double c, const ClusterLaw& law, const TransformHandle& t, const Window& a, const Window& b,
                          int max_stage = kDefaultMaxStage);

}  // namespace sushi
