#include <doctest.h>

#include <cmath>

#include "sushi/cluster.hpp"
#include "sushi/stats.hpp"

using namespace sushi;

namespace {

Window W(const char* s) { return Window::parse(s); }

ClusterLaw single() { return ClusterLaw({{{{0, 1.0}}, 1.0}}); }
ClusterLaw pair() { return ClusterLaw({{{{0, 1.0}, {1, 1.0}}, 1.0}}); }
ClusterLaw mixed() { return ClusterLaw({{{{0, 2.0}}, 0.5}, {{{0, 1.0}, {1, 1.0}}, 0.5}}); }
ClusterLaw spread() { return ClusterLaw({{{{-1, 0.5}, {0, 2.0}, {2, 1.0}}, 0.4}, {{{0, 1.0}, {1, 3.0}}, 0.6}}); }

template <class F>
std::vector<double> replicate(long R, std::uint64_t seed, F&& f) {
  Rng root(seed, 0);
  std::vector<double> out;
  for (long r = 0; r < R; ++r) {
    Rng s = root.substream(static_cast<std::uint64_t>(r));
    out.push_back(f(s));
  }
  return out;
}

}  // namespace

TEST_CASE("cluster law validation and summaries") {
  CHECK_THROWS(ClusterLaw({}));
  CHECK_THROWS(ClusterLaw({{{}, 1.0}}));
  CHECK_THROWS(ClusterLaw({{{{0, -1.0}}, 1.0}}));
  CHECK_THROWS(ClusterLaw({{{{0, 1.0}}, 0.5}}));
  CHECK(spread().support_bound() == 2);
  CHECK(spread().offsets() == std::vector<long>{-1, 0, 1, 2});
  CHECK(mixed().mean_total_weight() == doctest::Approx(2.0));
}

TEST_CASE("unit_intensity_c") {
  CHECK(unit_intensity_c(single()) == 1.0);
  CHECK(unit_intensity_c(pair()) == 0.5);
  ClusterLaw l({{{{0, 2.0}}, 0.5}, {{{0, 1.0}, {1, 3.0}}, 0.5}});
  CHECK(unit_intensity_c(l) == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("cluster reach window") {
  auto t = TransformHandle::translation(Rat(1));
  CHECK(cluster_reach_window(t, {-1, 0, 2}, W("[0,10)")) == W("[-2,11)"));
  auto chacon = TransformHandle::rank_one(RankOneRecipe::chacon3());
  CHECK(cluster_reach_window(chacon, {0, 1}, W("[0,1)")) == W("[0,3/2)"));
}

TEST_CASE("degenerate one-point clusters are a simple Poisson process") {
  SushiSpec spec{1.0, single(), TransformHandle::translation(Rat(1))};
  Rng rng(1, 1);
  auto v = sample_sushi(spec, W("[0,10)"), rng);
  for (const auto& a : v.atoms()) CHECK(a.weight == 1.0);
  auto n = replicate(2000, 3, [&](Rng& s) { return sample_sushi(spec, W("[0,10)"), s).total_weight(); });
  std::vector<long> counts(n.begin(), n.end());
  CHECK_FALSE(poisson_gof(counts, 10.0).reject);
}

TEST_CASE("unit intensity from the pair law") {
  SushiSpec spec{0.5, pair(), TransformHandle::translation(Rat(1))};
  const long R = 4000;
  auto n = replicate(R, 4, [&](Rng& s) { return count(sample_sushi(spec, W("[0,20)"), s), W("[0,20)")); });
  CHECK(std::abs(mean(n) - 20) < 3 * std::sqrt(variance(n) / R));
}

TEST_CASE("mixed law has weight 2 per unit length") {
  SushiSpec spec{1.0, mixed(), TransformHandle::translation(Rat(1))};
  const long R = 10000;
  auto n = replicate(R, 5, [&](Rng& s) { return sample_sushi(spec, W("[0,30)"), s).total_weight() / 30; });
  CHECK(std::abs(mean(n) - 2) < 3 * std::sqrt(variance(n) / R));
}

TEST_CASE("truncate_weights and simplify") {
  WeightedConfig v(W("[0,2)"), {{Rat(0), 0.1}, {Rat(1), 2.0}});
  CHECK(truncate_weights(v, 0.05) == v);
  CHECK(truncate_weights(v, 1.0).atoms() == std::vector<Atom>{{Rat(1), 2.0}});
  CHECK(truncate_weights(v, 0.1) == v);
  CHECK_THROWS(truncate_weights(v, 0));
  WeightedConfig u(W("[0,2)"), {{Rat(0), 2.0}, {Rat(1), 1.0}});
  CHECK(simplify(u) == PointConfig(W("[0,2)"), {Rat(0), Rat(1)}));
  CHECK(simplify(WeightedConfig(W("[0,2)"))).empty());
}

TEST_CASE("truncation bound and monotonicity on SuShi samples") {
  SushiSpec spec{1.0, spread(), TransformHandle::translation(Rat(1, 2))};
  Rng root(6, 0);
  for (int r = 0; r < 200; ++r) {
    Rng s = root.substream(static_cast<std::uint64_t>(r));
    auto v = sample_sushi(spec, W("[0,10)"), s);
    for (double eps : {0.5, 1.0, 2.5}) {
      CHECK(static_cast<double>(simplify(truncate_weights(v, eps)).size()) <= v.total_weight() / eps + 1e-9);
    }
    auto fine = truncate_weights(v, 0.6);
    auto coarse = truncate_weights(v, 2.1);
    for (const auto& a : coarse.atoms()) CHECK(fine.find(a.point));
  }
}

TEST_CASE("phi_encode examples") {
  auto t = TransformHandle::translation(Rat(1));
  WeightedConfig v(W("[-5,6)"), {{Rat(0), 2.0}, {Rat(1), 1.0}});
  auto e = phi_encode(v, t, 2);
  REQUIRE(e.clusters.size() == 1);
  CHECK(e.clusters[0] == EncodedCluster{Rat(0), {{0, 2.0}, {1, 1.0}}});
  WeightedConfig tie(W("[-5,6)"), {{Rat(0), 1.0}, {Rat(1), 1.0}});
  CHECK(phi_encode(tie, t, 2).clusters[0].origin == Rat(0));
  WeightedConfig later(W("[-5,6)"), {{Rat(0), 1.0}, {Rat(1), 3.0}});
  CHECK(phi_encode(later, t, 2).clusters[0] == EncodedCluster{Rat(1), {{-1, 1.0}, {0, 3.0}}});
}

TEST_CASE("phi_encode boundary guard") {
  auto t = TransformHandle::translation(Rat(1));
  WeightedConfig v(W("[0,10)"), {{Rat(1, 2), 2.0}, {Rat(5), 1.0}});
  CHECK_THROWS(phi_encode(v, t, 2));
  auto e = phi_encode(v, t, 2, BoundaryPolicy::kDrop);
  CHECK(e.dropped_groups == 1);
  REQUIRE(e.clusters.size() == 1);
  CHECK(e.clusters[0].origin == Rat(5));
}

TEST_CASE("phi_decode") {
  auto t = TransformHandle::translation(Rat(1));
  CHECK(phi_decode(EncodedMeasure{W("[0,5)"), {}, 0}, t).empty());
  auto v = phi_decode(EncodedMeasure{W("[-5,6)"), {{Rat(0), {{0, 2.0}, {1, 1.0}}}}, 0}, t);
  CHECK(v.atoms() == std::vector<Atom>{{Rat(0), 2.0}, {Rat(1), 1.0}});
  CHECK_THROWS(phi_decode(EncodedMeasure{W("[-5,6)"), {{Rat(0), {{0, 2.0}}}, {Rat(0), {{0, 1.0}}}}, 0}, t));
  // Origin rule violations.
  CHECK_THROWS(phi_decode(EncodedMeasure{W("[-5,6)"), {{Rat(0), {{-1, 2.0}, {0, 2.0}}}}, 0}, t));
  CHECK_THROWS(phi_decode(EncodedMeasure{W("[-5,6)"), {{Rat(0), {{0, 1.0}, {1, 2.0}}}}, 0}, t));
}

TEST_CASE("phi round trip on SuShi realizations") {
  auto tr = TransformHandle::translation(Rat(1));
  auto chacon = TransformHandle::rank_one(RankOneRecipe::chacon3());
  Rng root(8, 0);
  for (int r = 0; r < 200; ++r) {
    Rng s = root.substream(static_cast<std::uint64_t>(r));
    {
      SushiSpec spec{0.7, spread(), tr};
      auto v = sample_sushi(spec, W("[0,20)"), s);
      auto e = phi_encode(v, tr, 4, BoundaryPolicy::kDrop);
      auto guarded = phi_decode(e, tr);
      CHECK(phi_encode(guarded, tr, 4, BoundaryPolicy::kDrop) == EncodedMeasure{e.window, e.clusters, 0});
      CHECK(phi_decode(phi_encode(guarded, tr, 4), tr) == guarded);
      if (e.dropped_groups == 0) CHECK(guarded == v);
    }
    {
      SushiSpec spec{2.0, spread(), chacon};
      auto v = sample_sushi(spec, W("[0,3/2)"), s);
      auto e = phi_encode(v, chacon, 4);
      CHECK(e.dropped_groups == 0);
      CHECK(phi_decode(e, chacon) == v);
      CHECK(phi_encode(phi_decode(e, chacon), chacon, 4) == e);
    }
  }
}

TEST_CASE("pushing a SuShi realization forward moves every cluster origin") {
  auto t = TransformHandle::translation(Rat(1, 3));
  SushiSpec spec{1.0, spread(), t};
  Rng root(9, 0);
  for (int r = 0; r < 100; ++r) {
    Rng s = root.substream(static_cast<std::uint64_t>(r));
    auto v = sample_sushi(spec, W("[0,12)"), s);
    auto e = phi_encode(v, t, 4, BoundaryPolicy::kDrop);
    const long k = 5;
    EncodedMeasure moved{image_window(t, e.window, k), {}, 0};
    for (auto cl : e.clusters) {
      cl.origin = apply(t, cl.origin, k);
      moved.clusters.push_back(cl);
    }
    CHECK(phi_decode(moved, t) == push_forward(phi_decode(e, t), t, k));
  }
}

TEST_CASE("ID measure matches the cluster construction") {
  auto t = TransformHandle::translation(Rat(1));
  const double c = unit_intensity_c(spread());
  SushiSpec spec{c, spread(), t};
  LevyData levy{c, spread(), t};
  const Window a = W("[0,5)");
  const long R = 4000;
  auto id = replicate(R, 10, [&](Rng& s) { return count(sample_id_measure(levy, a, s), a); });
  auto su = replicate(R, 11, [&](Rng& s) { return count(sample_sushi(spec, a, s), a); });
  CHECK(std::abs(mean(id) - 5.0) < 3 * std::sqrt(variance(id) / R));
  CHECK(cluster_mean(c, spread(), a) == doctest::Approx(5.0));
  const double var = cluster_variance(c, spread(), t, a);
  // Fourth moments are bounded here; 4 s.e. of the sample variance.
  std::vector<double> sq;
  const double m = mean(id);
  for (double x : id) sq.push_back((x - m) * (x - m));
  CHECK(std::abs(variance(id) - var) < 4 * std::sqrt(variance(sq) / R));
  CHECK_FALSE(two_sample_test(id, su, 0.001).reject);
}

TEST_CASE("cluster_variance by hand") {
  // Pair law, T = +1, A = [0,1): c (|A|+|A|+|T^-1 A ∩ A|+|T A ∩ A|) = 2c.
  auto t = TransformHandle::translation(Rat(1));
  CHECK(cluster_variance(0.5, pair(), t, W("[0,1)")) == doctest::Approx(1.0));
  // A = [0,2): overlaps 2, 2, 1, 1 -> 6c.
  CHECK(cluster_variance(0.5, pair(), t, W("[0,2)")) == doctest::Approx(3.0));
}
