#include "sushi/point_process.hpp"

#include <algorithm>
#include <cstdio>
#include <stdexcept>

namespace sushi {

PointConfig::PointConfig(Window window, std::vector<Rat> points)
    : window_(std::move(window)), points_(std::move(points)) {
  std::sort(points_.begin(), points_.end());
  for (std::size_t i = 0; i < points_.size(); ++i) {
    if (i > 0 && points_[i] == points_[i - 1]) {
      throw std::invalid_argument("point config: repeated point " + points_[i].str());
    }
    if (!window_.contains(points_[i])) {
      throw std::invalid_argument("point config: " + points_[i].str() + " outside " + window_.str());
    }
  }
}

bool PointConfig::contains_point(const Rat& x) const {
  return std::binary_search(points_.begin(), points_.end(), x);
}

WeightedConfig::WeightedConfig(Window window, std::vector<Atom> atoms)
    : window_(std::move(window)), atoms_(std::move(atoms)) {
  std::sort(atoms_.begin(), atoms_.end(), [](const Atom& a, const Atom& b) { return a.point < b.point; });
  for (std::size_t i = 0; i < atoms_.size(); ++i) {
    if (i > 0 && atoms_[i].point == atoms_[i - 1].point) {
      throw std::invalid_argument("weighted config: repeated point " + atoms_[i].point.str());
    }
    if (!(atoms_[i].weight > 0)) throw std::invalid_argument("weighted config: weights must be positive");
    if (!window_.contains(atoms_[i].point)) {
      throw std::invalid_argument("weighted config: " + atoms_[i].point.str() + " outside " + window_.str());
    }
  }
}

double WeightedConfig::total_weight() const {
  double total = 0;
  for (const auto& a : atoms_) total += a.weight;
  return total;
}

std::optional<std::size_t> WeightedConfig::find(const Rat& x) const {
  auto it = std::lower_bound(atoms_.begin(), atoms_.end(), x,
                             [](const Atom& a, const Rat& v) { return a.point < v; });
  if (it == atoms_.end() || it->point != x) return std::nullopt;
  return static_cast<std::size_t>(it - atoms_.begin());
}

WeightedConfig to_weighted(const PointConfig& c) {
  std::vector<Atom> atoms;
  atoms.reserve(c.size());
  for (const auto& p : c.points()) atoms.push_back({p, 1.0});
  return WeightedConfig(c.window(), std::move(atoms));
}

namespace {

Rat draw_in(const Interval& part, double lo, double len, Rng& rng) {
  for (int attempt = 0; attempt < 64; ++attempt) {
    Rat x = Rat::snap_dyadic(lo + rng.uniform() * len);
    if (part.contains(x)) return x;
  }
  throw std::runtime_error("sample_poisson: part " + Window(part).str() + " too narrow for the dyadic grid");
}

}  // namespace

PointConfig sample_poisson(const IntensitySpec& intensity, const Window& window, Rng& rng) {
  std::vector<Rat> points;
  const double alpha = intensity.alpha.to_double();
  for (const auto& part : window.parts()) {
    const double len = part.length().to_double();
    const long n = rng.poisson(alpha * len);
    const double lo = part.lo.to_double();
    std::vector<Rat> local;
    local.reserve(static_cast<std::size_t>(n));
    for (long i = 0; i < n; ++i) local.push_back(draw_in(part, lo, len, rng));
    std::sort(local.begin(), local.end());
    for (std::size_t i = 1; i < local.size(); ++i) {
      if (local[i] != local[i - 1]) continue;
      // Coincident draws: one redraw, then give up.
      local[i] = draw_in(part, lo, len, rng);
      std::sort(local.begin(), local.end());
      if (std::adjacent_find(local.begin(), local.end()) != local.end()) {
        throw std::runtime_error("sample_poisson: coincident points after resampling");
      }
      break;
    }
    points.insert(points.end(), local.begin(), local.end());
  }
  return PointConfig(window, std::move(points));
}

PointConfig push_forward(const PointConfig& c, const TransformHandle& t, long k, int max_stage) {
  if (k == 0) return c;
  std::vector<Rat> moved;
  moved.reserve(c.size());
  for (const auto& p : c.points()) moved.push_back(apply(t, p, k, max_stage));
  return PointConfig(image_window(t, c.window(), k, max_stage), std::move(moved));
}

WeightedConfig push_forward(const WeightedConfig& c, const TransformHandle& t, long k, int max_stage) {
  if (k == 0) return c;
  std::vector<Atom> moved;
  moved.reserve(c.size());
  for (const auto& a : c.atoms()) moved.push_back({apply(t, a.point, k, max_stage), a.weight});
  return WeightedConfig(image_window(t, c.window(), k, max_stage), std::move(moved));
}

std::variant<PointConfig, WeightedConfig> superpose(const PointConfig& a, const PointConfig& b) {
  if (a.window() != b.window()) throw std::invalid_argument("superpose: windows differ");
  std::vector<Rat> merged;
  merged.reserve(a.size() + b.size());
  std::merge(a.points().begin(), a.points().end(), b.points().begin(), b.points().end(),
             std::back_inserter(merged));
  if (std::adjacent_find(merged.begin(), merged.end()) == merged.end()) {
    return PointConfig(a.window(), std::move(merged));
  }
  return superpose(to_weighted(a), to_weighted(b));
}

WeightedConfig superpose(const WeightedConfig& a, const WeightedConfig& b) {
  if (a.window() != b.window()) throw std::invalid_argument("superpose: windows differ");
  std::vector<Atom> out;
  out.reserve(a.size() + b.size());
  auto ia = a.atoms().begin();
  auto ib = b.atoms().begin();
  while (ia != a.atoms().end() || ib != b.atoms().end()) {
    if (ib == b.atoms().end() || (ia != a.atoms().end() && ia->point < ib->point)) {
      out.push_back(*ia++);
    } else if (ia == a.atoms().end() || ib->point < ia->point) {
      out.push_back(*ib++);
    } else {
      out.push_back({ia->point, ia->weight + ib->weight});
      ++ia;
      ++ib;
    }
  }
  return WeightedConfig(a.window(), std::move(out));
}

namespace {

void require_observed(const Window& observed, const Window& a) {
  if (!observed.contains(a)) {
    throw std::out_of_range("count: " + a.str() + " leaves the observed window " + observed.str());
  }
}

}  // namespace

long count(const PointConfig& c, const Window& a) {
  require_observed(c.window(), a);
  long n = 0;
  const auto& pts = c.points();
  for (const auto& part : a.parts()) {
    auto lo = std::lower_bound(pts.begin(), pts.end(), part.lo);
    auto hi = std::lower_bound(lo, pts.end(), part.hi);
    n += hi - lo;
  }
  return n;
}

double count(const WeightedConfig& c, const Window& a) {
  require_observed(c.window(), a);
  double total = 0;
  const auto& atoms = c.atoms();
  auto less = [](const Atom& at, const Rat& v) { return at.point < v; };
  for (const auto& part : a.parts()) {
    auto lo = std::lower_bound(atoms.begin(), atoms.end(), part.lo, less);
    auto hi = std::lower_bound(lo, atoms.end(), part.hi, less);
    for (auto it = lo; it != hi; ++it) total += it->weight;
  }
  return total;
}

bool free_check(const PointConfig& c, const TransformHandle& t, long K, int max_stage) {
  // x = T^{-k} y is the same event as y = T^k x, so positive powers suffice.
  for (const auto& x : c.points()) {
    for (long k = 1; k <= K; ++k) {
      Rat y = apply(t, x, k, max_stage);
      if (c.window().contains(y) && c.contains_point(y)) return false;
    }
  }
  return true;
}

bool dissociation_check(const PointConfig& c1, const PointConfig& c2, const TransformHandle& t, long K,
                        int max_stage) {
  for (const auto& x : c1.points()) {
    for (long k = -K; k <= K; ++k) {
      Rat y = apply(t, x, k, max_stage);
      if (c2.window().contains(y) && c2.contains_point(y)) return false;
    }
  }
  return true;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

std::string header_lines(const Window& w, const DumpHeader& h) {
  return "# seed=" + std::to_string(h.seed) + "\n# stream_id=" + std::to_string(h.stream_id) +
         "\n# window=" + w.str() + "\n# intensity=" + h.intensity + "\n";
}

}  // namespace

std::string to_csv(const PointConfig& c, const DumpHeader& h) {
  std::string out = header_lines(c.window(), h) + "point\n";
  for (const auto& p : c.points()) out += p.str() + "\n";
  return out;
}

std::string to_csv(const WeightedConfig& c, const DumpHeader& h) {
  std::string out = header_lines(c.window(), h) + "point,weight\n";
  for (const auto& a : c.atoms()) out += a.point.str() + "," + format_double(a.weight) + "\n";
  return out;
}

}  // namespace sushi
