#pragma once

#include <array>
#include <atomic>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "sushi/rational.hpp"
#include "sushi/window.hpp"

namespace sushi {

inline constexpr int kDefaultMaxStage = 40;
inline constexpr int kStageLimit = 64;

/// Raised when T^k x needs more tower stages than the caller allowed.
class OrbitError : public std::runtime_error {
 public:
  OrbitError(Rat point, long requested_power, int max_stage);

  const Rat& point() const { return point_; }
  long requested_power() const { return requested_power_; }
  int max_stage() const { return max_stage_; }

 private:
  Rat point_;
  long requested_power_;
  int max_stage_;
};

/// Spacer count over one subcolumn: height_mult * (current height) + add.
struct SpacerRule {
  long height_mult = 0;
  long add = 0;

  mpz_class count(const mpz_class& height) const { return height * height_mult + add; }
  friend bool operator==(const SpacerRule&, const SpacerRule&) = default;
};

struct RankOneStage {
  int cuts = 3;
  std::vector<SpacerRule> spacers;  // one per subcolumn

  friend bool operator==(const RankOneStage&, const RankOneStage&) = default;
};

/// Cutting-and-stacking schedule. Stage s -> s+1 uses stages[min(s, size-1)],
/// so the last listed stage repeats forever.
struct RankOneRecipe {
  Rat base_width{1};
  std::vector<RankOneStage> stages;

  /// Classical Chacon: three cuts, one spacer over the middle subcolumn.
  static RankOneRecipe chacon3();
  void validate() const;
  const RankOneStage& stage(int s) const;
};

/// Lazily built rank-one tower. Stage s is a column of height h_s whose
/// levels are half-open intervals of width w_s tiling [0, M_s); T maps each
/// level onto the next one by translation. Levels are never materialized:
/// positions are recovered from the recipe, so heights can be astronomically
/// large. Stage tables are built on demand under an internal lock; reads of
/// already built stages are lock-free.
class RankOneMachine {
 public:
  explicit RankOneMachine(RankOneRecipe recipe);

  const RankOneRecipe& recipe() const { return recipe_; }
  int stages_built() const { return built_.load(std::memory_order_acquire); }

  mpz_class height(int s) const { return table(s).height; }
  Rat width(int s) const { return table(s).width; }
  /// Total measure M_s of the stage-s space [0, M_s).
  Rat space_measure(int s) const { return table(s).measure; }
  /// Measure of the limit space, when it is finite.
  std::optional<Rat> total_measure() const;

  Rat level_lo(int s, const mpz_class& level) const;
  Interval level(int s, const mpz_class& level) const;

  struct Location {
    int stage;
    mpz_class level;
    Rat offset;  ///< x minus the left end of its level
  };
  /// Position of x in the column of the first stage whose space contains it.
  Location locate(const Rat& x, int max_stage) const;
  /// Moves a location one stage deeper.
  Location descend(const Location& loc) const;

  Rat apply(const Rat& x, long k, int max_stage) const;
  Window image_window(const Window& w, long k, int max_stage) const;

  /// Explicit partial map at a small stage: (level, offset to the next level).
  std::vector<std::pair<Interval, Rat>> pieces(int s) const;

  /// If both windows are unions of levels of one stage with at most
  /// `max_height` levels, returns that stage.
  std::optional<int> common_level_stage(const Window& a, const Window& b, long max_height = 4096) const;
  /// Level membership flags of a window at stage s (window must be a union of levels).
  std::vector<bool> level_flags(const Window& w, int s) const;
  /// Exact mu{x in P : T^distance x in Q} for P, Q unions of stage-s levels.
  Rat pair_measure(int s, const std::vector<bool>& p_levels, const std::vector<bool>& q_levels,
                   long distance) const;

 private:
  struct StageTable {
    mpz_class height;
    Rat width;
    Rat measure;
    // transition from stage s-1 (empty at stage 0)
    std::vector<mpz_class> spacers;
    std::vector<mpz_class> start;          // level index where subcolumn j begins
    std::vector<mpz_class> spacers_before;  // spacers added in subcolumns < j
  };

  const StageTable& table(int s) const;
  void build_until(int s) const;

  RankOneRecipe recipe_;
  mutable std::mutex grow_mu_;
  mutable std::array<std::unique_ptr<StageTable>, kStageLimit + 1> tables_;
  mutable std::atomic<int> built_{0};
};

struct Translation {
  Rat step;
};

/// Invertible piecewise-translation map T, cheap to copy.
class TransformHandle {
 public:
  static TransformHandle translation(Rat step);
  static TransformHandle rank_one(RankOneRecipe recipe);

  bool is_translation() const { return std::holds_alternative<Translation>(kind_); }
  const Translation& as_translation() const { return std::get<Translation>(kind_); }
  const RankOneMachine& as_rank_one() const { return *std::get<std::shared_ptr<const RankOneMachine>>(kind_); }

  /// Whole phase space when it is a bounded window (rank-one with finite measure).
  std::optional<Window> domain() const;
  std::string describe() const;

 private:
  explicit TransformHandle(std::variant<Translation, std::shared_ptr<const RankOneMachine>> kind)
      : kind_(std::move(kind)) {}

  std::variant<Translation, std::shared_ptr<const RankOneMachine>> kind_;
};

Rat apply(const TransformHandle& t, const Rat& x, long k, int max_stage = kDefaultMaxStage);
Window image_window(const TransformHandle& t, const Window& w, long k, int max_stage = kDefaultMaxStage);
/// Exact mu(T^{-d} A ∩ B).
Rat overlap_measure(const TransformHandle& t, const Window& a, const Window& b, long d,
                    int max_stage = kDefaultMaxStage);
/// ((1/l) sum_{k=1..l} mu(T^{-k} A ∩ B)) for l = 1..L, exact.
std::vector<Rat> cesaro_overlap(const TransformHandle& t, const Window& a, const Window& b, long L,
                                int max_stage = kDefaultMaxStage);

struct OrbitRow {
  long k;
  Rat x;
};
std::vector<OrbitRow> orbit(const TransformHandle& t, const Rat& x, long k_lo, long k_hi,
                            int max_stage = kDefaultMaxStage);
/// CSV rows "k,x" with exact rational strings.
std::string orbit_csv(const std::vector<OrbitRow>& rows);

}  // namespace sushi
