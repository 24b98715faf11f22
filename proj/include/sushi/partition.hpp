#pragma once

#include <string>
#include <vector>

#include "sushi/window.hpp"

namespace sushi {

/// Set partition of {1, ..., n}; blocks ordered by their minimum element.
struct Partition {
  int n = 0;
  std::vector<std::vector<int>> blocks;

  std::size_t size() const { return blocks.size(); }
  /// "{1,2}{3}"
  std::string str() const;
  static Partition parse(const std::string& text);

  friend bool operator==(const Partition&, const Partition&) = default;
  friend auto operator<=>(const Partition&, const Partition&) = default;
};

/// All partitions of {1..n}, 1 <= n <= 6, in restricted-growth-string order
/// (the single block first, the all-singletons partition last).
std::vector<Partition> partitions(int n);

/// m_pi(A_1 x ... x A_n) = prod over blocks P of alpha * |intersection of A_i, i in P|.
Rat m_pi(const Partition& pi, const std::vector<Window>& windows, const IntensitySpec& intensity);

}  // namespace sushi
