#include <doctest.h>

#include <cmath>

#include "sushi/split_mark.hpp"
#include "sushi/stats.hpp"

using namespace sushi;

namespace {

Window W(const char* s) { return Window::parse(s); }

}  // namespace

TEST_CASE("bernoulli_split degenerate coin") {
  Rng rng(1, 1);
  auto c = sample_poisson(IntensitySpec(Rat(1)), W("[0,20)"), rng);
  auto parts = bernoulli_split(c, {1.0, 0.0}, rng);
  REQUIRE(parts.size() == 2);
  CHECK(parts[0] == c);
  CHECK(parts[1].empty());
  CHECK_THROWS(bernoulli_split(c, {0.5, 0.6}, rng));
  CHECK_THROWS(bernoulli_split(c, {-0.5, 1.5}, rng));
}

TEST_CASE("bernoulli_split components superpose to the input") {
  Rng root(2, 2);
  for (int r = 0; r < 200; ++r) {
    Rng s = root.substream(static_cast<std::uint64_t>(r));
    auto c = sample_poisson(IntensitySpec(Rat(1)), W("[0,20)"), s);
    auto parts = bernoulli_split(c, {0.2, 0.3, 0.5}, s);
    auto ab = std::get<PointConfig>(superpose(parts[0], parts[1]));
    CHECK(std::get<PointConfig>(superpose(ab, parts[2])) == c);
  }
}

TEST_CASE("split component counts are uncorrelated") {
  const long R = 20000;
  Rng root(3, 0);
  std::vector<double> x, y;
  for (long r = 0; r < R; ++r) {
    Rng s = root.substream(static_cast<std::uint64_t>(r));
    auto parts = bernoulli_split(sample_poisson(IntensitySpec(Rat(1)), W("[0,20)"), s), {0.5, 0.5}, s);
    x.push_back(static_cast<double>(parts[0].size()));
    y.push_back(static_cast<double>(parts[1].size()));
  }
  CHECK(std::abs(correlation(x, y)) < 3 / std::sqrt(static_cast<double>(R)));
  std::vector<long> xc(x.begin(), x.end());
  CHECK_FALSE(poisson_gof(xc, 10.0).reject);
}

TEST_CASE("separation_thin") {
  Window core = W("[0,10)");
  Window buf = buffered(core, Rat(1));
  CHECK(buf == W("[-1,11)"));
  CHECK(separation_thin(PointConfig(buf, {Rat(0), Rat(5), Rat(10, 1) - Rat(1, 2)}), Rat(1), core).size() == 3);
  auto kept = separation_thin(PointConfig(buf, {Rat(0), Rat(1, 2), Rat(5)}), Rat(1), core);
  CHECK(kept.points() == std::vector<Rat>{Rat(5)});
  // A neighbour at exactly kappa blocks.
  CHECK(separation_thin(PointConfig(buf, {Rat(2), Rat(3)}), Rat(1), core).empty());
  // A neighbour in the buffer blocks too.
  CHECK(separation_thin(PointConfig(buf, {Rat(-1, 2), Rat(1, 4)}), Rat(1), core).empty());
  CHECK_THROWS_AS(separation_thin(PointConfig(W("[0,10)"), {}), Rat(1), core), std::invalid_argument);
}

TEST_CASE("separation_thin commutes with translation") {
  auto t = TransformHandle::translation(Rat(3, 2));
  Window core = W("[0,10)");
  Rat kappa(1);
  Rng root(4, 4);
  for (int r = 0; r < 1000; ++r) {
    Rng s = root.substream(static_cast<std::uint64_t>(r));
    auto c = sample_poisson(IntensitySpec(Rat(1)), buffered(core, kappa), s);
    const long k = static_cast<long>(r % 7) - 3;
    auto lhs = push_forward(separation_thin(c, kappa, core), t, k);
    auto rhs = separation_thin(push_forward(c, t, k), kappa, image_window(t, core, k));
    CHECK(lhs == rhs);
  }
}

TEST_CASE("marks") {
  Rng rng(5, 5);
  auto c = sample_poisson(IntensitySpec(Rat(1)), W("[0,20)"), rng);
  auto one = attach_marks(c, {1.0}, rng);
  for (const auto& a : one.atoms()) CHECK(a.mark == 0);
  CHECK(one.ground() == c);

  auto mc = attach_marks(c, {0.5, 0.25, 0.25}, rng);
  CHECK(project_mark_set(mc, {0, 1, 2}) == c);
  CHECK(project_mark_set(mc, {}).empty());
  auto sum = std::get<PointConfig>(superpose(project_mark_set(mc, {0}), project_mark_set(mc, {1, 2})));
  CHECK(sum == c);
  CHECK_THROWS(project_mark_set(mc, {3}));
}

TEST_CASE("marking then projecting reproduces the split exactly") {
  Rng root(6, 6);
  for (int r = 0; r < 200; ++r) {
    Rng s = root.substream(static_cast<std::uint64_t>(r));
    auto c = sample_poisson(IntensitySpec(Rat(1)), W("[0,20)"), s);
    Rng a = s;
    Rng b = s;
    auto parts = bernoulli_split(c, {0.3, 0.7}, a);
    auto mc = attach_marks(c, {0.3, 0.7}, b);
    CHECK(project_mark_set(mc, {0}) == parts[0]);
    CHECK(project_mark_set(mc, {1}) == parts[1]);
  }
}

TEST_CASE("marked csv") {
  MarkedConfig mc(W("[0,1)"), 2, {{Rat(1, 2), 1}});
  CHECK(to_csv(mc, {1, 2, "1"}).ends_with("point,mark\n1/2,1\n"));
}
