#pragma once

#include <cstdint>
#include <random>
#include <span>

namespace sushi {

/// Seeded random stream. The output is a pure function of (seed, stream_id);
/// distinct stream ids are hashed apart before seeding the engine.
class Rng {
 public:
  Rng(std::uint64_t seed, std::uint64_t stream_id);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

  /// Independent child stream, e.g. one per Monte Carlo replicate.
  Rng substream(std::uint64_t index) const;

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Poisson(mean) by inversion of one uniform.
  long poisson(double mean);
  /// Index i with probability probs[i] (probabilities summing to 1).
  std::size_t categorical(std::span<const double> probs);

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::mt19937_64 engine_;
};

/// Smallest k with P(Poisson(mean) <= k) > u.
long poisson_quantile(double mean, double u);

std::uint64_t mix64(std::uint64_t x);

}  // namespace sushi
