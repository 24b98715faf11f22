#include "sushi/partition.hpp"

#include <algorithm>
#include <stdexcept>

namespace sushi {

std::string Partition::str() const {
  std::string out;
  for (const auto& b : blocks) {
    out += '{';
    for (std::size_t i = 0; i < b.size(); ++i) {
      if (i) out += ',';
      out += std::to_string(b[i]);
    }
    out += '}';
  }
  return out;
}

Partition Partition::parse(const std::string& text) {
  Partition p;
  std::size_t pos = 0;
  while (pos < text.size()) {
    if (text[pos] != '{') throw std::invalid_argument("partition literal: expected '{' in '" + text + "'");
    auto close = text.find('}', pos);
    if (close == std::string::npos) throw std::invalid_argument("partition literal: unbalanced braces");
    std::vector<int> block;
    std::size_t i = pos + 1;
    while (i < close) {
      std::size_t used = 0;
      block.push_back(std::stoi(text.substr(i, close - i), &used));
      i += used;
      if (i < close && text[i] == ',') ++i;
    }
    if (block.empty()) throw std::invalid_argument("partition literal: empty block");
    std::sort(block.begin(), block.end());
    p.blocks.push_back(std::move(block));
    pos = close + 1;
  }
  std::sort(p.blocks.begin(), p.blocks.end());
  std::vector<int> all;
  for (const auto& b : p.blocks) all.insert(all.end(), b.begin(), b.end());
  std::sort(all.begin(), all.end());
  p.n = static_cast<int>(all.size());
  for (int i = 0; i < p.n; ++i) {
    if (all[static_cast<std::size_t>(i)] != i + 1) throw std::invalid_argument("partition literal: blocks must cover 1..n once");
  }
  return p;
}

std::vector<Partition> partitions(int n) {
  if (n < 1 || n > 6) throw std::out_of_range("partitions: n must be in [1, 6]");
  std::vector<Partition> out;
  // Restricted growth strings: a[0] = 0, a[i] <= 1 + max(a[0..i-1]).
  std::vector<int> a(static_cast<std::size_t>(n), 0);
  while (true) {
    Partition p{n, {}};
    for (int i = 0; i < n; ++i) {
      auto b = static_cast<std::size_t>(a[static_cast<std::size_t>(i)]);
      if (b == p.blocks.size()) p.blocks.emplace_back();
      p.blocks[b].push_back(i + 1);
    }
    out.push_back(std::move(p));

    int i = n - 1;
    for (; i > 0; --i) {
      int prefix_max = *std::max_element(a.begin(), a.begin() + i);
      if (a[static_cast<std::size_t>(i)] <= prefix_max) break;
    }
    if (i == 0) break;
    ++a[static_cast<std::size_t>(i)];
    std::fill(a.begin() + i + 1, a.end(), 0);
  }
  return out;
}

Rat m_pi(const Partition& pi, const std::vector<Window>& windows, const IntensitySpec& intensity) {
  if (windows.size() != static_cast<std::size_t>(pi.n)) throw std::invalid_argument("m_pi: need one window per index");
  Rat product(1);
  for (const auto& block : pi.blocks) {
    Window meet = windows[static_cast<std::size_t>(block.front() - 1)];
    for (std::size_t i = 1; i < block.size(); ++i) meet = intersect(meet, windows[static_cast<std::size_t>(block[i] - 1)]);
    product *= intensity.mass(meet);
  }
  return product;
}

}  // namespace sushi
