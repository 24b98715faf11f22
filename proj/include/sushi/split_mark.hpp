#pragma once

#include <set>
#include <vector>

#include "sushi/point_process.hpp"

namespace sushi {

struct MarkedAtom {
  Rat point;
  int mark;

  friend bool operator==(const MarkedAtom&, const MarkedAtom&) = default;
};

/// Point configuration on X x {0, ..., K-1}.
class MarkedConfig {
 public:
  MarkedConfig(Window window, int mark_count, std::vector<MarkedAtom> atoms = {});

  const Window& window() const { return window_; }
  int mark_count() const { return mark_count_; }
  const std::vector<MarkedAtom>& atoms() const { return atoms_; }
  /// Ground process, marks forgotten.
  PointConfig ground() const;

  friend bool operator==(const MarkedConfig&, const MarkedConfig&) = default;

 private:
  Window window_;
  int mark_count_;
  std::vector<MarkedAtom> atoms_;
};

/// Independent assignment of every point to component i with probability probs[i].
std::vector<PointConfig> bernoulli_split(const PointConfig& c, const std::vector<double>& probs, Rng& rng);

/// Keeps the points of `core` whose nearest neighbour in c is farther than
/// kappa (a neighbour at exactly kappa blocks). c must be observed on the
/// core widened by kappa on both sides.
PointConfig separation_thin(const PointConfig& c, const Rat& kappa, const Window& core);

/// Core widened by `margin` on both sides of every part.
Window buffered(const Window& core, const Rat& margin);

/// i.i.d. marks with law mark_probs. Draws one categorical per point, in
/// point order, exactly as bernoulli_split does.
MarkedConfig attach_marks(const PointConfig& c, const std::vector<double>& mark_probs, Rng& rng);

PointConfig project_mark_set(const MarkedConfig& mc, const std::set<int>& marks);

std::string to_csv(const MarkedConfig& mc, const DumpHeader& h);

void validate_probabilities(const std::vector<double>& probs, const char* what);

}  // namespace sushi
