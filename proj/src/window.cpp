#include "sushi/window.hpp"

#include <algorithm>
#include <stdexcept>

namespace sushi {

Interval::Interval(Rat lo_, Rat hi_) : lo(std::move(lo_)), hi(std::move(hi_)) {
  if (!(lo < hi)) {
    throw std::invalid_argument("interval needs lo < hi, got [" + lo.str() + "," + hi.str() + ")");
  }
}

Window::Window(Interval part) { parts_.push_back(std::move(part)); }

Window Window::from_parts(std::vector<Interval> parts) {
  std::sort(parts.begin(), parts.end(),
            [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
  Window w;
  for (auto& p : parts) {
    if (!w.parts_.empty() && p.lo <= w.parts_.back().hi) {
      if (w.parts_.back().hi < p.hi) w.parts_.back().hi = std::move(p.hi);
    } else {
      w.parts_.push_back(std::move(p));
    }
  }
  return w;
}

Window Window::parse(std::string_view text) {
  while (!text.empty() && text.front() == ' ') text.remove_prefix(1);
  while (!text.empty() && text.back() == ' ') text.remove_suffix(1);
  if (text == "empty") return {};

  std::vector<Interval> parts;
  std::size_t pos = 0;
  while (pos < text.size()) {
    if (text[pos] != '[') throw std::invalid_argument("window literal: expected '[' in '" + std::string(text) + "'");
    auto comma = text.find(',', pos);
    auto close = text.find(')', pos);
    if (comma == std::string_view::npos || close == std::string_view::npos || comma > close) {
      throw std::invalid_argument("window literal: malformed part in '" + std::string(text) + "'");
    }
    parts.emplace_back(Rat::parse(text.substr(pos + 1, comma - pos - 1)),
                       Rat::parse(text.substr(comma + 1, close - comma - 1)));
    pos = close + 1;
    if (pos < text.size()) {
      if (text[pos] != '+') throw std::invalid_argument("window literal: expected '+' between parts");
      ++pos;
      if (pos == text.size()) throw std::invalid_argument("window literal: trailing '+'");
    }
  }
  if (parts.empty()) throw std::invalid_argument("window literal: no parts");
  return from_parts(std::move(parts));
}

std::string Window::str() const {
  if (parts_.empty()) return "empty";
  std::string out;
  for (const auto& p : parts_) {
    if (!out.empty()) out += '+';
    out += '[' + p.lo.str() + ',' + p.hi.str() + ')';
  }
  return out;
}

Rat Window::length() const {
  Rat total(0);
  for (const auto& p : parts_) total += p.length();
  return total;
}

Rat Window::lo() const {
  if (parts_.empty()) throw std::logic_error("lo() of empty window");
  return parts_.front().lo;
}

Rat Window::hi() const {
  if (parts_.empty()) throw std::logic_error("hi() of empty window");
  return parts_.back().hi;
}

bool Window::contains(const Rat& x) const {
  auto it = std::upper_bound(parts_.begin(), parts_.end(), x,
                             [](const Rat& v, const Interval& p) { return v < p.lo; });
  if (it == parts_.begin()) return false;
  return std::prev(it)->contains(x);
}

bool Window::contains(const Window& other) const { return intersect(*this, other) == other; }

Rat length(const Window& w) { return w.length(); }

Window intersect(const Window& a, const Window& b) {
  std::vector<Interval> out;
  auto pa = a.parts();
  auto pb = b.parts();
  std::size_t i = 0, j = 0;
  while (i < pa.size() && j < pb.size()) {
    Rat lo = max(pa[i].lo, pb[j].lo);
    Rat hi = min(pa[i].hi, pb[j].hi);
    if (lo < hi) out.emplace_back(std::move(lo), std::move(hi));
    if (pa[i].hi < pb[j].hi) ++i; else ++j;
  }
  return Window::from_parts(std::move(out));
}

Window unite(const Window& a, const Window& b) {
  std::vector<Interval> all(a.parts().begin(), a.parts().end());
  all.insert(all.end(), b.parts().begin(), b.parts().end());
  return Window::from_parts(std::move(all));
}

Window subtract(const Window& a, const Window& b) {
  std::vector<Interval> out;
  auto pb = b.parts();
  std::size_t j = 0;
  for (const auto& part : a.parts()) {
    Rat cursor = part.lo;
    while (j < pb.size() && pb[j].hi <= cursor) ++j;
    std::size_t k = j;
    while (k < pb.size() && pb[k].lo < part.hi) {
      if (cursor < pb[k].lo) out.emplace_back(cursor, pb[k].lo);
      cursor = max(cursor, pb[k].hi);
      ++k;
    }
    if (cursor < part.hi) out.emplace_back(cursor, part.hi);
  }
  return Window::from_parts(std::move(out));
}

Window translate(const Window& w, const Rat& t) {
  std::vector<Interval> out;
  out.reserve(w.parts().size());
  for (const auto& p : w.parts()) out.emplace_back(p.lo + t, p.hi + t);
  return Window::from_parts(std::move(out));
}

std::vector<Window> subdivide(const Window& w, long pieces) {
  if (pieces < 1) throw std::invalid_argument("subdivide: pieces must be >= 1");
  std::vector<Window> out;
  for (const auto& p : w.parts()) {
    Rat step = p.length() / Rat(pieces);
    for (long i = 0; i < pieces; ++i) {
      Rat lo = p.lo + step * Rat(i);
      Rat hi = i + 1 == pieces ? p.hi : lo + step;
      out.emplace_back(Interval(std::move(lo), std::move(hi)));
    }
  }
  return out;
}

IntensitySpec::IntensitySpec(Rat alpha_) : alpha(std::move(alpha_)) {
  if (alpha.sign() < 0) throw std::invalid_argument("intensity alpha must be >= 0");
}

}  // namespace sushi
