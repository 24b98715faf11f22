#include "sushi/rng.hpp"

#include <boost/math/distributions/poisson.hpp>

#include <cmath>
#include <stdexcept>

namespace sushi {

std::uint64_t mix64(std::uint64_t x) {
  // splitmix64 finalizer
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

Rng::Rng(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed), stream_id_(stream_id), engine_(mix64(seed ^ mix64(stream_id ^ 0x5851f42d4c957f2dULL))) {}

Rng Rng::substream(std::uint64_t index) const {
  return Rng(seed_, mix64(stream_id_ * 0x9e3779b97f4a7c15ULL + index + 1));
}

double Rng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

long Rng::poisson(double mean) {
  if (mean < 0 || !std::isfinite(mean)) throw std::invalid_argument("poisson mean must be finite and >= 0");
  if (mean == 0) return 0;
  return poisson_quantile(mean, uniform());
}

std::size_t Rng::categorical(std::span<const double> probs) {
  if (probs.empty()) throw std::invalid_argument("categorical: no categories");
  double u = uniform();
  double cum = 0;
  for (std::size_t i = 0; i + 1 < probs.size(); ++i) {
    cum += probs[i];
    if (u < cum) return i;
  }
  return probs.size() - 1;
}

long poisson_quantile(double mean, double u) {
  if (mean < 600) {
    double p = std::exp(-mean);
    double cdf = p;
    long k = 0;
    while (u >= cdf) {
      ++k;
      p *= mean / static_cast<double>(k);
      if (p == 0) break;  // numerically exhausted upper tail
      cdf += p;
    }
    return k;
  }
  using namespace boost::math::policies;
  using Dist = boost::math::poisson_distribution<double, policy<discrete_quantile<integer_round_up>>>;
  return static_cast<long>(boost::math::quantile(Dist(mean), u));
}

}  // namespace sushi
