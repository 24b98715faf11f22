#include "sushi/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>

#include "sushi/split_mark.hpp"

namespace sushi {

ClusterLaw::ClusterLaw(std::vector<ClusterEntry> catalog) : catalog_(std::move(catalog)) {
  if (catalog_.empty()) throw std::invalid_argument("cluster law: empty catalog");
  for (const auto& e : catalog_) {
    if (e.weights.empty()) throw std::invalid_argument("cluster law: entry without weights");
    for (const auto& [k, a] : e.weights) {
      if (!(a > 0) || !std::isfinite(a)) throw std::invalid_argument("cluster law: weights must be positive and finite");
    }
  }
  validate_probabilities(probabilities(), "cluster law");
}

std::vector<double> ClusterLaw::probabilities() const {
  std::vector<double> p;
  p.reserve(catalog_.size());
  for (const auto& e : catalog_) p.push_back(e.prob);
  return p;
}

double ClusterLaw::mean_total_weight() const {
  double total = 0;
  for (const auto& e : catalog_) {
    double s = 0;
    for (const auto& [k, a] : e.weights) s += a;
    total += e.prob * s;
  }
  return total;
}

long ClusterLaw::support_bound() const {
  long bound = 0;
  for (const auto& e : catalog_) {
    for (const auto& [k, a] : e.weights) bound = std::max(bound, std::labs(k));
  }
  return bound;
}

std::vector<long> ClusterLaw::offsets() const {
  std::set<long> ks;
  for (const auto& e : catalog_) {
    for (const auto& [k, a] : e.weights) ks.insert(k);
  }
  return {ks.begin(), ks.end()};
}

Window cluster_reach_window(const TransformHandle& t, const std::vector<long>& offsets, const Window& core,
                            int max_stage) {
  if (auto dom = t.domain()) {
    if (!dom->contains(core)) throw std::invalid_argument("core " + core.str() + " leaves the phase space");
    return *dom;
  }
  Window reach;
  for (long k : offsets) reach = unite(reach, image_window(t, core, -k, max_stage));
  return reach;
}

namespace {

void add_cluster(std::map<Rat, double>& acc, const TransformHandle& t, const Rat& x, const WeightSequence& w,
                 const Window& core) {
  for (const auto& [k, a] : w) {
    Rat y = apply(t, x, k);
    if (core.contains(y)) acc[y] += a;
  }
}

WeightedConfig to_config(const Window& core, const std::map<Rat, double>& acc) {
  std::vector<Atom> atoms;
  atoms.reserve(acc.size());
  for (const auto& [p, w] : acc) atoms.push_back({p, w});
  return WeightedConfig(core, std::move(atoms));
}

Rat uniform_in(const Window& w, Rng& rng) {
  std::vector<double> lengths;
  double total = 0;
  for (const auto& part : w.parts()) total += lengths.emplace_back(part.length().to_double());
  for (double& l : lengths) l /= total;
  const Interval& part = w.parts()[rng.categorical(lengths)];
  const double lo = part.lo.to_double();
  const double len = part.length().to_double();
  for (int attempt = 0; attempt < 64; ++attempt) {
    Rat x = Rat::snap_dyadic(lo + rng.uniform() * len);
    if (part.contains(x)) return x;
  }
  throw std::runtime_error("uniform_in: part " + Window(part).str() + " too narrow for the dyadic grid");
}

}  // namespace

WeightedConfig sample_sushi(const SushiSpec& spec, const Window& core, Rng& rng) {
  if (!(spec.c > 0)) throw std::invalid_argument("sample_sushi: c must be positive");
  Window ground_window = cluster_reach_window(spec.transform, spec.law.offsets(), core);
  PointConfig ground = sample_poisson(IntensitySpec(Rat::from_double(spec.c)), ground_window, rng);
  const auto probs = spec.law.probabilities();
  std::map<Rat, double> acc;
  for (const auto& x : ground.points()) {
    const auto& entry = spec.law.catalog()[rng.categorical(probs)];
    add_cluster(acc, spec.transform, x, entry.weights, core);
  }
  return to_config(core, acc);
}

WeightedConfig truncate_weights(const WeightedConfig& v, double eps) {
  if (!(eps > 0)) throw std::invalid_argument("truncate_weights: eps must be positive");
  std::vector<Atom> kept;
  for (const auto& a : v.atoms()) {
    if (!(a.weight < eps)) kept.push_back(a);
  }
  return WeightedConfig(v.window(), std::move(kept));
}

PointConfig simplify(const WeightedConfig& v) {
  std::vector<Rat> pts;
  pts.reserve(v.size());
  for (const auto& a : v.atoms()) pts.push_back(a.point);
  return PointConfig(v.window(), std::move(pts));
}

EncodedMeasure phi_encode(const WeightedConfig& v, const TransformHandle& t, long k_max, BoundaryPolicy policy,
                          int max_stage) {
  if (k_max < 1) throw std::invalid_argument("phi_encode: k_max must be >= 1");
  const auto& atoms = v.atoms();
  const std::size_t n = atoms.size();

  // Union-find over atoms linked by T^j, remembering relative orbit positions.
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  std::vector<std::vector<std::pair<std::size_t, long>>> links(n);
  std::vector<bool> guarded(n, true);
  auto root = [&](std::size_t i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  };
  for (std::size_t i = 0; i < n; ++i) {
    for (long j = 1; j <= k_max; ++j) {
      for (long k : {j, -j}) {
        Rat y = apply(t, atoms[i].point, k, max_stage);
        if (!v.window().contains(y)) {
          guarded[i] = false;
          continue;
        }
        if (k < 0) continue;
        if (auto hit = v.find(y)) {
          links[i].push_back({*hit, k});
          links[*hit].push_back({i, -k});
          parent[root(i)] = root(*hit);
        }
      }
    }
  }

  std::map<std::size_t, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < n; ++i) groups[root(i)].push_back(i);

  EncodedMeasure out{v.window(), {}, 0};
  std::vector<long> position(n, 0);
  std::vector<bool> seen(n, false);
  for (const auto& [r, members] : groups) {
    bool complete = std::all_of(members.begin(), members.end(), [&](std::size_t i) { return guarded[i]; });
    if (!complete) {
      if (policy == BoundaryPolicy::kThrow) {
        throw std::runtime_error("phi_encode: orbit group near " + atoms[members.front()].point.str() +
                                 " touches the window boundary");
      }
      ++out.dropped_groups;
      continue;
    }
    // Orbit positions relative to the first member.
    std::vector<std::size_t> queue{members.front()};
    seen[members.front()] = true;
    position[members.front()] = 0;
    for (std::size_t q = 0; q < queue.size(); ++q) {
      std::size_t i = queue[q];
      for (auto [j, step] : links[i]) {
        if (seen[j]) {
          if (position[j] != position[i] + step) {
            throw std::runtime_error("phi_encode: inconsistent orbit positions (periodic orbit?)");
          }
          continue;
        }
        seen[j] = true;
        position[j] = position[i] + step;
        queue.push_back(j);
      }
    }
    std::size_t origin = members.front();
    for (std::size_t i : members) {
      const double wi = atoms[i].weight;
      const double wo = atoms[origin].weight;
      if (wi > wo || (wi == wo && position[i] < position[origin])) origin = i;
    }
    EncodedCluster cl{atoms[origin].point, {}};
    for (std::size_t i : members) cl.weights[position[i] - position[origin]] = atoms[i].weight;
    out.clusters.push_back(std::move(cl));
  }
  std::sort(out.clusters.begin(), out.clusters.end(),
            [](const EncodedCluster& a, const EncodedCluster& b) { return a.origin < b.origin; });
  return out;
}

WeightedConfig phi_decode(const EncodedMeasure& enc, const TransformHandle& t, int max_stage) {
  std::map<Rat, double> acc;
  for (const auto& cl : enc.clusters) {
    auto at0 = cl.weights.find(0);
    if (at0 == cl.weights.end() || !(at0->second > 0)) {
      throw std::invalid_argument("phi_decode: cluster at " + cl.origin.str() + " lacks a positive origin weight");
    }
    for (const auto& [k, b] : cl.weights) {
      if ((k < 0 && !(b < at0->second)) || (k > 0 && b > at0->second)) {
        throw std::invalid_argument("phi_decode: cluster at " + cl.origin.str() + " violates the origin rule");
      }
      if (!(b > 0)) continue;
      Rat y = apply(t, cl.origin, k, max_stage);
      if (!acc.emplace(y, b).second) {
        throw std::runtime_error("phi_decode: clusters collide at " + y.str());
      }
    }
  }
  return to_config(enc.window, acc);
}

double unit_intensity_c(const ClusterLaw& law) {
  double m = law.mean_total_weight();
  if (!(m > 0)) throw std::domain_error("unit_intensity_c: expected total weight is zero");
  return 1.0 / m;
}

WeightedConfig sample_id_measure(const LevyData& levy, const Window& core, Rng& rng) {
  if (!(levy.c > 0)) throw std::invalid_argument("sample_id_measure: c must be positive");
  std::map<Rat, double> acc;
  for (const auto& entry : levy.law.catalog()) {
    std::vector<long> ks;
    for (const auto& [k, a] : entry.weights) ks.push_back(k);
    // Clusters of this type that charge the core: a Poisson number of them,
    // each with a uniform ground point on the reach window.
    Window reach = cluster_reach_window(levy.transform, ks, core);
    double rho_mass = levy.c * entry.prob * reach.length().to_double();
    long n = rng.poisson(rho_mass);
    for (long i = 0; i < n; ++i) add_cluster(acc, levy.transform, uniform_in(reach, rng), entry.weights, core);
  }
  return to_config(core, acc);
}

double cluster_mean(double c, const ClusterLaw& law, const Window& a) {
  return c * law.mean_total_weight() * a.length().to_double();
}

double cluster_covariance(double c, const ClusterLaw& law, const TransformHandle& t, const Window& a, const Window& b,
                          int max_stage) {
  std::map<long, double> overlap;
  auto ov = [&](long d) {
    auto it = overlap.find(d);
    if (it == overlap.end()) it = overlap.emplace(d, overlap_measure(t, a, b, d, max_stage).to_double()).first;
    return it->second;
  };
  double total = 0;
  for (const auto& e : law.catalog()) {
    double s = 0;
    for (const auto& [k, ak] : e.weights) {
      for (const auto& [l, al] : e.weights) s += ak * al * ov(k - l);
    }
    total += e.prob * s;
  }
  return c * total;
}

double cluster_variance(double c, const ClusterLaw& law, const TransformHandle& t, const Window& a, int max_stage) {
  return cluster_covariance(c, law, t, a, a, max_stage);
}

}  // namespace sushi
