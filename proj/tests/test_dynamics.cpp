#include <doctest.h>

#include <random>
#include <thread>

#include "sushi/dynamics.hpp"

using namespace sushi;

namespace {

Window W(const char* s) { return Window::parse(s); }

// Cutting and stacking carried out literally: every level of every stage is
// stored. Independent of the implicit tower in RankOneMachine.
struct ExplicitTower {
  std::vector<Interval> levels;
  Rat width;
  Rat top;  // right end of the space built so far

  ExplicitTower(const RankOneRecipe& r, int stages) : width(r.base_width), top(r.base_width) {
    levels.emplace_back(Rat(0), r.base_width);
    for (int s = 0; s < stages; ++s) {
      const auto& st = r.stage(s);
      Rat w = width / Rat(st.cuts);
      const long h = static_cast<long>(levels.size());
      std::vector<Interval> next;
      for (int j = 0; j < st.cuts; ++j) {
        for (const auto& lv : levels) next.emplace_back(lv.lo + w * Rat(j), lv.lo + w * Rat(j + 1));
        const long spacers = st.spacers[static_cast<std::size_t>(j)].height_mult * h + st.spacers[static_cast<std::size_t>(j)].add;
        for (long k = 0; k < spacers; ++k) {
          next.emplace_back(top, top + w);
          top += w;
        }
      }
      levels = std::move(next);
      width = w;
    }
  }

  std::optional<long> level_of(const Rat& x) const {
    for (std::size_t i = 0; i < levels.size(); ++i) {
      if (levels[i].contains(x)) return static_cast<long>(i);
    }
    return std::nullopt;
  }
};

RankOneRecipe growing() {
  RankOneRecipe r;
  r.stages.push_back(RankOneStage{3, {{0, 0}, {0, 1}, {1, 0}}});
  return r;
}

RankOneRecipe mixed_schedule() {
  RankOneRecipe r;
  r.base_width = Rat(1, 2);
  r.stages.push_back(RankOneStage{2, {{0, 1}, {0, 0}}});
  r.stages.push_back(RankOneStage{4, {{0, 0}, {0, 2}, {0, 0}, {0, 1}}});
  r.stages.push_back(RankOneStage{3, {{0, 0}, {0, 1}, {0, 0}}});
  return r;
}

}  // namespace

TEST_CASE("translation apply and image") {
  auto t = TransformHandle::translation(Rat(1));
  CHECK(apply(t, Rat(1, 2), 3) == Rat(7, 2));
  CHECK(apply(t, Rat(1, 2), 0) == Rat(1, 2));
  CHECK(image_window(t, W("[0,1)"), -2) == W("[-2,-1)"));
  CHECK(image_window(t, W("[0,1)+[5,7)"), 0) == W("[0,1)+[5,7)"));
  CHECK(!t.domain());
}

TEST_CASE("cesaro_overlap for translation") {
  auto t = TransformHandle::translation(Rat(1));
  auto a = cesaro_overlap(t, W("[0,1)"), W("[0,1)"), 5);
  CHECK(a == std::vector<Rat>(5, Rat(0)));
  auto b = cesaro_overlap(t, W("[0,2)"), W("[0,2)"), 4);
  CHECK(b == std::vector<Rat>{Rat(1), Rat(1, 2), Rat(1, 3), Rat(1, 4)});
  CHECK_THROWS(cesaro_overlap(t, W("[0,2)"), W("[0,2)"), 0));
}

TEST_CASE("chacon3 stage bookkeeping") {
  RankOneMachine m(RankOneRecipe::chacon3());
  CHECK(m.height(1) == 4);
  CHECK(m.height(2) == 13);
  CHECK(m.width(2) == Rat(1, 9));
  CHECK(m.space_measure(1) == Rat(4, 3));
  REQUIRE(m.total_measure());
  CHECK(*m.total_measure() == Rat(3, 2));
  CHECK(!RankOneMachine(growing()).total_measure());
}

TEST_CASE("rank-one apply matches an explicitly stacked tower") {
  for (const auto& recipe : {RankOneRecipe::chacon3(), growing(), mixed_schedule()}) {
    const int stages = 5;
    ExplicitTower tower(recipe, stages);
    auto t = TransformHandle::rank_one(recipe);
    const long h = static_cast<long>(tower.levels.size());
    CHECK(t.as_rank_one().height(stages) == h);
    for (long i = 0; i < h; ++i) {
      CHECK(t.as_rank_one().level(stages, i) == tower.levels[static_cast<std::size_t>(i)]);
    }
    std::mt19937_64 gen(5);
    for (int trial = 0; trial < 300; ++trial) {
      const long i = static_cast<long>(gen() % static_cast<unsigned long>(h));
      const auto& lv = tower.levels[static_cast<std::size_t>(i)];
      Rat x = lv.lo + lv.length() * Rat(static_cast<long>(gen() % 97), 97);
      for (long k = -i; k < h - i; k += 1 + static_cast<long>(gen() % 7)) {
        const auto& target = tower.levels[static_cast<std::size_t>(i + k)];
        CHECK(apply(t, x, k) == target.lo + (x - lv.lo));
      }
    }
  }
}

TEST_CASE("chacon3 first step from 0") {
  // Explicit stage-1 column: [0,1/3) [1/3,2/3) [1,4/3) [2/3,1).
  ExplicitTower tower(RankOneRecipe::chacon3(), 1);
  auto t = TransformHandle::rank_one(RankOneRecipe::chacon3());
  CHECK(apply(t, Rat(0), 1) == tower.levels[1].lo);
  CHECK(apply(t, Rat(0), 1) == Rat(1, 3));
  CHECK(apply(t, Rat(1, 2), 1) == Rat(7, 6));
}

TEST_CASE("stage refinement never contradicts the coarser map") {
  RankOneMachine m(RankOneRecipe::chacon3());
  for (int s = 0; s < 4; ++s) {
    auto coarse = m.pieces(s);
    auto fine = m.pieces(s + 1);
    for (const auto& [src, off] : coarse) {
      for (const auto& [fsrc, foff] : fine) {
        if (src.contains(fsrc.lo)) CHECK(foff == off);
      }
    }
    Rat src_len(0);
    for (const auto& [src, off] : coarse) src_len += src.length();
    Window images;
    for (const auto& [src, off] : coarse) images = unite(images, Window(Interval(src.lo + off, src.hi + off)));
    CHECK(length(images) == src_len);
  }
}

TEST_CASE("on each piece the rank-one map is the translation by its offset") {
  RankOneRecipe r;
  r.stages.push_back(RankOneStage{2, {{0, 0}, {0, 0}}});
  auto t = TransformHandle::rank_one(r);
  for (const auto& [src, off] : t.as_rank_one().pieces(4)) {
    auto tr = TransformHandle::translation(off);
    for (long j = 0; j < 5; ++j) {
      Rat x = src.lo + src.length() * Rat(j, 5);
      CHECK(apply(t, x, 1) == apply(tr, x, 1));
      CHECK(image_window(t, Window(src), 1) == image_window(tr, Window(src), 1));
    }
  }
}

TEST_CASE("image_window of levels and the phase space") {
  auto t = TransformHandle::rank_one(RankOneRecipe::chacon3());
  CHECK(image_window(t, W("[0,1/3)"), 1) == W("[1/3,2/3)"));
  CHECK(image_window(t, W("[0,1/3)"), 2) == W("[1,4/3)"));
  CHECK(image_window(t, W("[0,3/2)"), 5) == W("[0,3/2)"));
  // The base level meets the singular top, so its image has infinitely many pieces.
  CHECK_THROWS_AS(image_window(t, W("[0,1)"), 1), OrbitError);
  // Stage-2 levels 1 and 4 of the 13-level column; stay inside the column.
  Window w = W("[1/9,2/9)+[1/3,4/9)");
  for (long k = -1; k <= 8; ++k) {
    Window img = image_window(t, w, k);
    CHECK(length(img) == length(w));
    CHECK(image_window(t, img, -k) == w);
  }
}

TEST_CASE("image_window agrees with per-piece translation") {
  RankOneMachine m(RankOneRecipe::chacon3());
  auto t = TransformHandle::rank_one(RankOneRecipe::chacon3());
  const auto pieces = m.pieces(3);
  for (std::size_t i = 0; i + 1 < pieces.size(); i += 3) {
    const auto& [src, off] = pieces[i];
    Window w(Interval(src.lo, src.lo + src.length() / Rat(2)));
    CHECK(image_window(t, w, 1) == translate(w, off));
  }
}

TEST_CASE("OrbitError carries the point and the power") {
  auto t = TransformHandle::rank_one(RankOneRecipe::chacon3());
  Rat x = Rat(1) - Rat(1, 3000000);
  try {
    apply(t, x, 1, 5);
    FAIL("expected OrbitError");
  } catch (const OrbitError& e) {
    CHECK(e.point() == x);
    CHECK(e.requested_power() == 1);
    CHECK(e.max_stage() == 5);
  }
  CHECK_THROWS_AS(apply(t, Rat(-1), 1), std::out_of_range);
  CHECK_THROWS_AS(apply(t, Rat(2), 1), std::out_of_range);
}

TEST_CASE("exact invertibility on dyadic points") {
  for (const auto& recipe : {RankOneRecipe::chacon3(), growing()}) {
    auto t = TransformHandle::rank_one(recipe);
    std::mt19937_64 gen(17);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 400; ++i) {
      Rat x = Rat::snap_dyadic(u(gen));
      long k = static_cast<long>(gen() % 65) - 32;
      CHECK(apply(t, apply(t, x, k), -k) == x);
    }
  }
}

TEST_CASE("overlap_measure matches tower bounds") {
  // V_S counts levels i < h_S - d of the explicit tower that land in A; the
  // unresolved top d levels add at most d * w_S.
  for (const auto& recipe : {RankOneRecipe::chacon3(), growing(), mixed_schedule()}) {
    auto t = TransformHandle::rank_one(recipe);
    const int stages = 7;
    ExplicitTower tower(recipe, stages);
    RankOneMachine m(recipe);
    const Window a(Interval(Rat(0), recipe.base_width));
    const Window b(Interval(Rat(0), recipe.base_width / Rat(recipe.stage(0).cuts)));
    for (long d : {1L, 2L, 3L, 5L, 8L, 13L, 21L}) {
      Rat lower(0);
      const long h = static_cast<long>(tower.levels.size());
      for (long i = 0; i + d < h; ++i) {
        const auto& from = tower.levels[static_cast<std::size_t>(i)];
        const auto& to = tower.levels[static_cast<std::size_t>(i + d)];
        if (b.contains(from.lo) && a.contains(to.lo)) lower += tower.width;
      }
      Rat v = overlap_measure(t, a, b, d);
      CHECK(lower <= v);
      CHECK(v <= lower + Rat(d) * tower.width);
      // mu(T^{-d} A ∩ B) = mu(A ∩ T^{d} B).
      CHECK(overlap_measure(t, b, a, -d) == v);
    }
  }
}

TEST_CASE("overlap_measure for translation") {
  auto t = TransformHandle::translation(Rat(1, 2));
  CHECK(overlap_measure(t, W("[0,1)"), W("[0,1)"), 1) == Rat(1, 2));
  CHECK(overlap_measure(t, W("[0,1)"), W("[0,1)"), 2) == Rat(0));
  CHECK(overlap_measure(t, W("[0,1)"), W("[-1,0)"), 2) == Rat(1));
}

TEST_CASE("overlap_measure against the whole chacon3 space") {
  auto t = TransformHandle::rank_one(RankOneRecipe::chacon3());
  const Window x = W("[0,3/2)");
  const Window b = W("[1/3,4/9)+[1,7/6)");
  for (long d : {-5L, -1L, 1L, 2L, 9L}) {
    CHECK(overlap_measure(t, x, b, d) == b.length());
    CHECK(overlap_measure(t, b, x, d) == b.length());
  }
  CHECK(overlap_measure(t, x, x, 3) == Rat(3, 2));
}

TEST_CASE("chacon3 cesaro sequence regression") {
  auto t = TransformHandle::rank_one(RankOneRecipe::chacon3());
  auto seq = cesaro_overlap(t, W("[0,1)"), W("[0,1)"), 64);
  REQUIRE(seq.size() == 64);
  CHECK(seq[0] == Rat(1, 2));
  CHECK(seq[1] == Rat(7, 12));
  CHECK(seq[63] == Rat(3443, 5184));
  // Finite total measure 3/2: the averages approach mu(A)^2 / M = 2/3.
  CHECK(abs(seq[63] - Rat(2, 3)) < Rat(1, 100));
}

TEST_CASE("concurrent growth is deterministic") {
  auto t = TransformHandle::rank_one(growing());
  std::vector<Rat> xs;
  for (int i = 1; i < 64; ++i) xs.push_back(Rat(i, 64));
  std::vector<Rat> serial;
  {
    auto t2 = TransformHandle::rank_one(growing());
    for (const auto& x : xs) serial.push_back(apply(t2, x, 25));
  }
  std::vector<Rat> par(xs.size());
  std::vector<std::thread> pool;
  for (int th = 0; th < 4; ++th) {
    pool.emplace_back([&, th] {
      for (std::size_t i = static_cast<std::size_t>(th); i < xs.size(); i += 4) par[i] = apply(t, xs[i], 25);
    });
  }
  for (auto& th : pool) th.join();
  CHECK(par == serial);
}

TEST_CASE("orbit rows") {
  auto t = TransformHandle::translation(Rat(1, 3));
  auto rows = orbit(t, Rat(0), -1, 2);
  REQUIRE(rows.size() == 4);
  CHECK(rows[0].x == Rat(-1, 3));
  CHECK(orbit_csv(rows) == "k,x\n-1,-1/3\n0,0\n1,1/3\n2,2/3\n");
}
