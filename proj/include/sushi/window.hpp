#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sushi/rational.hpp"

namespace sushi {

/// Half-open interval [lo, hi) with lo < hi.
struct Interval {
  Rat lo;
  Rat hi;

  Interval(Rat lo_, Rat hi_);

  Rat length() const { return hi - lo; }
  bool contains(const Rat& x) const { return lo <= x && x < hi; }

  friend bool operator==(const Interval&, const Interval&) = default;
};

/// Finite disjoint union of half-open intervals, kept in canonical form:
/// parts sorted by lo and separated by gaps (touching parts are merged).
/// Structural equality is set equality.
class Window {
 public:
  Window() = default;
  explicit Window(Interval part);
  /// Canonicalizes an arbitrary collection (overlaps allowed).
  static Window from_parts(std::vector<Interval> parts);

  /// Parses the literal syntax "[a/b,c/d)+[e,f)"; "empty" is the empty window.
  static Window parse(std::string_view text);
  std::string str() const;

  std::span<const Interval> parts() const { return parts_; }
  bool empty() const { return parts_.empty(); }
  Rat length() const;
  Rat lo() const;  ///< infimum; window must be nonempty
  Rat hi() const;  ///< supremum; window must be nonempty

  bool contains(const Rat& x) const;
  bool contains(const Window& other) const;

  friend bool operator==(const Window&, const Window&) = default;

 private:
  std::vector<Interval> parts_;
};

Rat length(const Window& w);
Window intersect(const Window& a, const Window& b);
Window unite(const Window& a, const Window& b);
/// Set difference a \ b.
Window subtract(const Window& a, const Window& b);
Window translate(const Window& w, const Rat& t);
/// Splits every part into `pieces` equal half-open subintervals.
std::vector<Window> subdivide(const Window& w, long pieces);

/// Reference intensity: alpha times length measure.
struct IntensitySpec {
  Rat alpha{1};

  explicit IntensitySpec(Rat alpha_ = Rat(1));
  Rat mass(const Window& w) const { return alpha * w.length(); }
};

}  // namespace sushi
