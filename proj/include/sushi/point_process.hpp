#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "sushi/dynamics.hpp"
#include "sushi/rational.hpp"
#include "sushi/rng.hpp"
#include "sushi/window.hpp"

namespace sushi {

/// Simple counting measure observed on a window: distinct points, sorted.
class PointConfig {
 public:
  explicit PointConfig(Window window, std::vector<Rat> points = {});

  const Window& window() const { return window_; }
  const std::vector<Rat>& points() const { return points_; }
  std::size_t size() const { return points_.size(); }
  bool empty() const { return points_.empty(); }
  bool contains_point(const Rat& x) const;

  friend bool operator==(const PointConfig&, const PointConfig&) = default;

 private:
  Window window_;
  std::vector<Rat> points_;
};

struct Atom {
  Rat point;
  double weight;

  friend bool operator==(const Atom&, const Atom&) = default;
};

/// Discrete measure with positive weights on distinct points of a window.
class WeightedConfig {
 public:
  /// Atoms may come unsorted; repeated points are rejected.
  explicit WeightedConfig(Window window, std::vector<Atom> atoms = {});

  const Window& window() const { return window_; }
  const std::vector<Atom>& atoms() const { return atoms_; }
  std::size_t size() const { return atoms_.size(); }
  bool empty() const { return atoms_.empty(); }
  double total_weight() const;
  /// Index of the atom at x, if any.
  std::optional<std::size_t> find(const Rat& x) const;

  friend bool operator==(const WeightedConfig&, const WeightedConfig&) = default;

 private:
  Window window_;
  std::vector<Atom> atoms_;
};

WeightedConfig to_weighted(const PointConfig& c);

/// Poisson(alpha * |part|) points per part, uniform within the part and
/// snapped to the 2^-53 dyadic grid.
PointConfig sample_poisson(const IntensitySpec& intensity, const Window& window, Rng& rng);

PointConfig push_forward(const PointConfig& c, const TransformHandle& t, long k, int max_stage = kDefaultMaxStage);
WeightedConfig push_forward(const WeightedConfig& c, const TransformHandle& t, long k,
                            int max_stage = kDefaultMaxStage);

/// Measure sum on a common window. Simple inputs stay simple unless they
/// share a point, in which case the result carries weight 2 there.
std::variant<PointConfig, WeightedConfig> superpose(const PointConfig& a, const PointConfig& b);
WeightedConfig superpose(const WeightedConfig& a, const WeightedConfig& b);

/// N(A); A must lie inside the observed window.
long count(const PointConfig& c, const Window& a);
double count(const WeightedConfig& c, const Window& a);

/// No support point is mapped onto another by T^k, 0 < |k| <= K.
bool free_check(const PointConfig& c, const TransformHandle& t, long K, int max_stage = kDefaultMaxStage);
/// No point of c1 meets a point of c2 under T^k, |k| <= K (k = 0 included).
bool dissociation_check(const PointConfig& c1, const PointConfig& c2, const TransformHandle& t, long K,
                        int max_stage = kDefaultMaxStage);

/// Provenance recorded in the header of a config dump.
struct DumpHeader {
  std::uint64_t seed = 0;
  std::uint64_t stream_id = 0;
  std::string intensity;
};

std::string to_csv(const PointConfig& c, const DumpHeader& h);
std::string to_csv(const WeightedConfig& c, const DumpHeader& h);

std::string format_double(double v);

}  // namespace sushi
