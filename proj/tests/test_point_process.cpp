#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "sushi/point_process.hpp"
#include "sushi/stats.hpp"

using namespace sushi;

namespace {

Window W(const char* s) { return Window::parse(s); }

PointConfig pc(const char* window, std::vector<Rat> pts) { return PointConfig(W(window), std::move(pts)); }

}  // namespace

TEST_CASE("config invariants") {
  auto c = pc("[0,4)", {Rat(3), Rat(0), Rat(1, 2)});
  CHECK(c.points() == std::vector<Rat>{Rat(0), Rat(1, 2), Rat(3)});
  CHECK_THROWS(pc("[0,1)", {Rat(0), Rat(0)}));
  CHECK_THROWS(pc("[0,1)", {Rat(1)}));
  CHECK_THROWS(WeightedConfig(W("[0,1)"), {{Rat(0), 0.0}}));
  CHECK_THROWS(WeightedConfig(W("[0,1)"), {{Rat(0), 1.0}, {Rat(0), 2.0}}));
}

TEST_CASE("count") {
  auto c = pc("[-1,4)", {Rat(0), Rat(1, 2), Rat(3)});
  CHECK(count(c, W("empty")) == 0);
  CHECK(count(c, W("[0,1)")) == 2);
  WeightedConfig v(W("[0,1)"), {{Rat(0), 2.0}, {Rat(1, 2), 1.0}});
  CHECK(count(v, W("[0,1)")) == 3.0);
  CHECK_THROWS_AS(count(c, W("[0,5)")), std::out_of_range);
}

TEST_CASE("sample_poisson basics") {
  Rng rng(1, 0);
  CHECK(sample_poisson(IntensitySpec(Rat(1)), W("empty"), rng).empty());
  CHECK(sample_poisson(IntensitySpec(Rat(0)), W("[0,100)"), rng).empty());
  auto c = sample_poisson(IntensitySpec(Rat(3)), W("[0,1)+[5,7)"), rng);
  for (const auto& p : c.points()) {
    CHECK(c.window().contains(p));
    CHECK(p.den() <= (mpz_class(1) << 53));
  }
}

TEST_CASE("sample_poisson is a function of (seed, stream_id)") {
  Rng a(42, 7);
  Rng b(42, 7);
  Rng c(42, 8);
  auto x = sample_poisson(IntensitySpec(Rat(2)), W("[0,10)"), a);
  CHECK(x == sample_poisson(IntensitySpec(Rat(2)), W("[0,10)"), b));
  CHECK_FALSE(x == sample_poisson(IntensitySpec(Rat(2)), W("[0,10)"), c));
}

TEST_CASE("alpha changes only the count layer") {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Rng a(seed, 3);
    Rng b(seed, 3);
    auto lo = sample_poisson(IntensitySpec(Rat(1)), W("[0,10)"), a);
    auto hi = sample_poisson(IntensitySpec(Rat(3)), W("[0,10)"), b);
    const auto& small = lo.size() <= hi.size() ? lo.points() : hi.points();
    const auto& large = lo.size() <= hi.size() ? hi.points() : lo.points();
    CHECK(std::includes(large.begin(), large.end(), small.begin(), small.end()));
  }
}

TEST_CASE("Poisson count moments over replicates") {
  const long R = 4000;
  Rng root(2024, 0);
  std::vector<double> n;
  for (long r = 0; r < R; ++r) {
    Rng s = root.substream(static_cast<std::uint64_t>(r));
    n.push_back(static_cast<double>(sample_poisson(IntensitySpec(Rat(1)), W("[0,10)"), s).size()));
  }
  const double m = mean(n);
  const double v = variance(n);
  CHECK(std::abs(m - 10) < 4 * std::sqrt(10.0 / R));
  // Var of the sample variance for Poisson(10): (mu + 2 mu^2) / R roughly.
  CHECK(std::abs(v - 10) < 4 * std::sqrt((10.0 + 2 * 100.0) / R));
}

TEST_CASE("push_forward") {
  auto t = TransformHandle::translation(Rat(1));
  auto c = pc("[0,1)", {Rat(0), Rat(1, 2)});
  auto moved = push_forward(c, t, 2);
  CHECK(moved == pc("[2,3)", {Rat(2), Rat(5, 2)}));
  CHECK(push_forward(c, t, 0) == c);
  CHECK(push_forward(moved, t, -2) == c);
  WeightedConfig v(W("[0,1)"), {{Rat(0), 2.5}});
  CHECK(push_forward(v, t, 3).atoms().front() == Atom{Rat(3), 2.5});
}

TEST_CASE("equivariance: N(A) after S^k equals N(T^{-k} A)") {
  auto t = TransformHandle::translation(Rat(1, 3));
  auto chacon = TransformHandle::rank_one(RankOneRecipe::chacon3());
  Rng root(9, 1);
  for (int r = 0; r < 100; ++r) {
    Rng s = root.substream(static_cast<std::uint64_t>(r));
    auto c = sample_poisson(IntensitySpec(Rat(2)), W("[0,6)"), s);
    for (long k : {-4L, -1L, 1L, 3L}) {
      Window a = W("[1,2)+[5/2,3)");
      CHECK(count(push_forward(c, t, k), a) == count(c, image_window(t, a, -k)));
    }
    auto d = sample_poisson(IntensitySpec(Rat(2)), W("[0,3/2)"), s);
    for (long k : {-11L, -3L, 1L}) {
      Window a = W("[1/3,4/9)");
      CHECK(count(push_forward(d, chacon, k), a) == count(d, image_window(chacon, a, -k)));
    }
  }
}

TEST_CASE("Poisson additivity over disjoint windows") {
  Rng root(3, 3);
  for (int r = 0; r < 100; ++r) {
    Rng s = root.substream(static_cast<std::uint64_t>(r));
    auto c = sample_poisson(IntensitySpec(Rat(1)), W("[0,10)"), s);
    CHECK(count(c, W("[0,3)")) + count(c, W("[3,7/2)+[8,10)")) + count(c, W("[7/2,8)")) == count(c, W("[0,10)")));
  }
}

TEST_CASE("superpose") {
  auto a = pc("[0,2)", {Rat(0)});
  auto empty = pc("[0,2)", {});
  CHECK(std::get<PointConfig>(superpose(a, empty)) == a);
  CHECK(std::get<PointConfig>(superpose(a, pc("[0,2)", {Rat(1)}))) == pc("[0,2)", {Rat(0), Rat(1)}));
  auto w = std::get<WeightedConfig>(superpose(a, a));
  CHECK(w.atoms() == std::vector<Atom>{{Rat(0), 2.0}});
  CHECK_THROWS(superpose(a, pc("[0,3)", {})));
}

TEST_CASE("free_check and dissociation_check") {
  auto t = TransformHandle::translation(Rat(1));
  CHECK(free_check(pc("[-10,10)", {Rat(0), Rat(1, 2)}), t, 3));
  CHECK_FALSE(free_check(pc("[-10,10)", {Rat(0), Rat(1)}), t, 3));
  CHECK(dissociation_check(pc("[-5,5)", {Rat(0)}), pc("[-5,5)", {Rat(1, 2)}), t, 2));
  CHECK_FALSE(dissociation_check(pc("[-5,5)", {Rat(0)}), pc("[-5,5)", {Rat(2)}), t, 2));
  CHECK_FALSE(dissociation_check(pc("[-5,5)", {Rat(0)}), pc("[-5,5)", {Rat(0)}), t, 2));
}

TEST_CASE("Poisson samples are free") {
  auto t = TransformHandle::translation(Rat(1));
  Rng root(77, 0);
  for (int r = 0; r < 500; ++r) {
    Rng s = root.substream(static_cast<std::uint64_t>(r));
    CHECK(free_check(sample_poisson(IntensitySpec(Rat(1)), W("[0,20)"), s), t, 8));
  }
}

TEST_CASE("csv dump") {
  auto c = pc("[0,1)", {Rat(1, 4)});
  std::string csv = to_csv(c, {5, 6, "1"});
  CHECK(csv == "# seed=5\n# stream_id=6\n# window=[0,1)\n# intensity=1\npoint\n1/4\n");
  WeightedConfig v(W("[0,1)"), {{Rat(1, 2), 0.1}});
  CHECK(to_csv(v, {1, 2, "1/2"}).find("1/2,0.10000000000000001\n") != std::string::npos);
}
