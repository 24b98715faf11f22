#include <doctest.h>

#include <random>

#include "sushi/window.hpp"

using namespace sushi;

namespace {

Window W(const char* s) { return Window::parse(s); }

// Random canonical window with small rational endpoints.
Window random_window(std::mt19937_64& gen) {
  std::uniform_int_distribution<long> num(-40, 40);
  std::uniform_int_distribution<int> parts(0, 3);
  std::vector<Interval> v;
  int n = parts(gen);
  for (int i = 0; i < n; ++i) {
    Rat a(num(gen), 4);
    Rat b(num(gen), 4);
    if (a == b) continue;
    v.emplace_back(min(a, b), max(a, b));
  }
  return Window::from_parts(std::move(v));
}

}  // namespace

TEST_CASE("Rat arithmetic is exact and canonical") {
  CHECK(Rat(2, 4) == Rat(1, 2));
  CHECK(Rat(1, -3).den() == 3);
  CHECK((Rat(1, 3) + Rat(1, 6)).str() == "1/2");
  CHECK(Rat::parse("-7/21") == Rat(-1, 3));
  CHECK(Rat::parse("0.125") == Rat(1, 8));
  CHECK(Rat::parse("-2.5") == Rat(-5, 2));
  CHECK(Rat::parse("12") == Rat(12));
  CHECK_THROWS(Rat::parse("1/0"));
  CHECK_THROWS(Rat::parse("x"));
  CHECK_THROWS(Rat(1) / Rat(0));
  CHECK(Rat::from_double(0.1) != Rat(1, 10));
  CHECK(Rat::from_double(0.75) == Rat(3, 4));
  CHECK(Rat::snap_dyadic(0.75) == Rat(3, 4));
  CHECK(Rat(7, 2).floor() == 3);
  CHECK(Rat(-7, 2).floor() == -4);
}

TEST_CASE("length") {
  CHECK(length(W("empty")) == Rat(0));
  CHECK(length(W("[0,1)+[2,4)")) == Rat(3));
  CHECK(length(W("[1/3,1/2)")) == Rat(1, 6));
}

TEST_CASE("intersect") {
  CHECK(intersect(W("[0,2)"), W("[1,3)")) == W("[1,2)"));
  CHECK(intersect(W("[0,1)"), W("[1,2)")).empty());
  CHECK(intersect(W("[0,4)"), W("[1,2)+[3,5)")) == W("[1,2)+[3,4)"));
}

TEST_CASE("translate") {
  CHECK(translate(W("[0,1)"), Rat(1)) == W("[1,2)"));
  CHECK(translate(W("[0,1)"), Rat(0)) == W("[0,1)"));
  CHECK(translate(W("[0,1)+[2,3)"), Rat(-1, 2)) == W("[-1/2,1/2)+[3/2,5/2)"));
}

TEST_CASE("window literal round trip and canonical form") {
  for (const char* s : {"empty", "[0,1)", "[-1/2,1/2)+[3/2,5/2)", "[1/3,7/9)+[1,2)+[5,11/2)"}) {
    CHECK(W(s).str() == s);
  }
  CHECK(W("[1,2)+[0,1)") == W("[0,2)"));
  CHECK(W("[0,2)+[1,3)") == W("[0,3)"));
  CHECK_THROWS(W("[1,1)"));
  CHECK_THROWS(W("[0,1]"));
  CHECK(W("[0,1)+[2,3)").contains(Rat(2)));
  CHECK_FALSE(W("[0,1)+[2,3)").contains(Rat(1)));
  CHECK(subtract(W("[0,3)"), W("[1,2)")) == W("[0,1)+[2,3)"));
  CHECK(unite(W("[0,1)"), W("[1,2)")) == W("[0,2)"));
}

TEST_CASE("intensity mass") {
  IntensitySpec mu(Rat(1, 2));
  CHECK(mu.mass(W("[0,3)")) == Rat(3, 2));
  CHECK_THROWS(IntensitySpec(Rat(-1)));
}

TEST_CASE("set algebra properties on random windows") {
  std::mt19937_64 gen(11);
  for (int i = 0; i < 500; ++i) {
    Window a = random_window(gen);
    Window b = random_window(gen);
    Window c = random_window(gen);
    Window ab = intersect(a, b);
    CHECK(length(ab) <= min(length(a), length(b)));
    CHECK(ab == intersect(b, a));
    CHECK(intersect(ab, c) == intersect(a, intersect(b, c)));
    CHECK(intersect(a, a) == a);
    Rat t(static_cast<long>(gen() % 41) - 20, 3);
    CHECK(length(translate(a, t)) == length(a));
    CHECK(length(unite(a, b)) + length(ab) == length(a) + length(b));
    CHECK(length(subtract(a, b)) == length(a) - length(ab));
    CHECK(Window::parse(a.str()) == a);
  }
}
