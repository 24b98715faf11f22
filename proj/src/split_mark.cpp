#include "sushi/split_mark.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace sushi {

void validate_probabilities(const std::vector<double>& probs, const char* what) {
  if (probs.empty()) throw std::invalid_argument(std::string(what) + ": no probabilities");
  double total = 0;
  for (double p : probs) {
    if (!(p >= 0) || !std::isfinite(p)) throw std::invalid_argument(std::string(what) + ": probabilities must be >= 0");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-12) throw std::invalid_argument(std::string(what) + ": probabilities must sum to 1");
}

MarkedConfig::MarkedConfig(Window window, int mark_count, std::vector<MarkedAtom> atoms)
    : window_(std::move(window)), mark_count_(mark_count), atoms_(std::move(atoms)) {
  if (mark_count_ < 1) throw std::invalid_argument("marked config: need at least one mark");
  std::sort(atoms_.begin(), atoms_.end(), [](const auto& a, const auto& b) { return a.point < b.point; });
  for (std::size_t i = 0; i < atoms_.size(); ++i) {
    if (atoms_[i].mark < 0 || atoms_[i].mark >= mark_count_) throw std::invalid_argument("marked config: mark out of range");
    if (i > 0 && atoms_[i].point == atoms_[i - 1].point) throw std::invalid_argument("marked config: repeated point");
  }
}

PointConfig MarkedConfig::ground() const {
  std::vector<Rat> pts;
  pts.reserve(atoms_.size());
  for (const auto& a : atoms_) pts.push_back(a.point);
  return PointConfig(window_, std::move(pts));
}

std::vector<PointConfig> bernoulli_split(const PointConfig& c, const std::vector<double>& probs, Rng& rng) {
  validate_probabilities(probs, "bernoulli_split");
  std::vector<std::vector<Rat>> parts(probs.size());
  for (const auto& p : c.points()) parts[rng.categorical(probs)].push_back(p);
  std::vector<PointConfig> out;
  out.reserve(parts.size());
  for (auto& pts : parts) out.emplace_back(c.window(), std::move(pts));
  return out;
}

Window buffered(const Window& core, const Rat& margin) {
  std::vector<Interval> parts;
  for (const auto& p : core.parts()) parts.emplace_back(p.lo - margin, p.hi + margin);
  return Window::from_parts(std::move(parts));
}

PointConfig separation_thin(const PointConfig& c, const Rat& kappa, const Window& core) {
  if (kappa.sign() <= 0) throw std::invalid_argument("separation_thin: kappa must be positive");
  if (!c.window().contains(buffered(core, kappa))) {
    throw std::invalid_argument("separation_thin: window " + c.window().str() + " lacks a " + kappa.str() +
                                " buffer around " + core.str());
  }
  const auto& pts = c.points();
  std::vector<Rat> kept;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (!core.contains(pts[i])) continue;
    bool isolated = (i == 0 || pts[i] - pts[i - 1] > kappa) && (i + 1 == pts.size() || pts[i + 1] - pts[i] > kappa);
    if (isolated) kept.push_back(pts[i]);
  }
  return PointConfig(core, std::move(kept));
}

MarkedConfig attach_marks(const PointConfig& c, const std::vector<double>& mark_probs, Rng& rng) {
  validate_probabilities(mark_probs, "attach_marks");
  std::vector<MarkedAtom> atoms;
  atoms.reserve(c.size());
  for (const auto& p : c.points()) atoms.push_back({p, static_cast<int>(rng.categorical(mark_probs))});
  return MarkedConfig(c.window(), static_cast<int>(mark_probs.size()), std::move(atoms));
}

PointConfig project_mark_set(const MarkedConfig& mc, const std::set<int>& marks) {
  std::vector<Rat> pts;
  for (int m : marks) {
    if (m < 0 || m >= mc.mark_count()) throw std::invalid_argument("project_mark_set: mark out of range");
  }
  for (const auto& a : mc.atoms()) {
    if (marks.count(a.mark)) pts.push_back(a.point);
  }
  return PointConfig(mc.window(), std::move(pts));
}

std::string to_csv(const MarkedConfig& mc, const DumpHeader& h) {
  std::string out = "# seed=" + std::to_string(h.seed) + "\n# stream_id=" + std::to_string(h.stream_id) +
                    "\n# window=" + mc.window().str() + "\n# intensity=" + h.intensity +
                    "\n# marks=" + std::to_string(mc.mark_count()) + "\npoint,mark\n";
  for (const auto& a : mc.atoms()) out += a.point.str() + "," + std::to_string(a.mark) + "\n";
  return out;
}

}  // namespace sushi
