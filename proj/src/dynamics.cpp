#include "sushi/dynamics.hpp"

#include <algorithm>
#include <sstream>

namespace sushi {

OrbitError::OrbitError(Rat point, long requested_power, int max_stage)
    : std::runtime_error("orbit undefined: T^" + std::to_string(requested_power) + "(" + point.str() +
                         ") needs more than " + std::to_string(max_stage) + " stages"),
      point_(std::move(point)),
      requested_power_(requested_power),
      max_stage_(max_stage) {}

RankOneRecipe RankOneRecipe::chacon3() {
  RankOneRecipe r;
  r.stages.push_back(RankOneStage{3, {{0, 0}, {0, 1}, {0, 0}}});
  return r;
}

void RankOneRecipe::validate() const {
  if (base_width.sign() <= 0) throw std::invalid_argument("rank-one recipe: base width must be positive");
  if (stages.empty()) throw std::invalid_argument("rank-one recipe: at least one stage is required");
  for (std::size_t s = 0; s < stages.size(); ++s) {
    const auto& st = stages[s];
    if (st.cuts < 2) throw std::invalid_argument("rank-one recipe: stage " + std::to_string(s) + " needs cuts >= 2");
    if (st.spacers.size() != static_cast<std::size_t>(st.cuts)) {
      throw std::invalid_argument("rank-one recipe: stage " + std::to_string(s) +
                                  " needs one spacer rule per subcolumn");
    }
    for (const auto& rule : st.spacers) {
      if (rule.height_mult < 0 || rule.add < 0) {
        throw std::invalid_argument("rank-one recipe: spacer counts must be nonnegative");
      }
    }
  }
}

const RankOneStage& RankOneRecipe::stage(int s) const {
  return stages[std::min<std::size_t>(static_cast<std::size_t>(s), stages.size() - 1)];
}

RankOneMachine::RankOneMachine(RankOneRecipe recipe) : recipe_(std::move(recipe)) {
  recipe_.validate();
  auto t0 = std::make_unique<StageTable>();
  t0->height = 1;
  t0->width = recipe_.base_width;
  t0->measure = recipe_.base_width;
  tables_[0] = std::move(t0);
  built_.store(1, std::memory_order_release);
}

const RankOneMachine::StageTable& RankOneMachine::table(int s) const {
  if (s < 0 || s > kStageLimit) throw std::out_of_range("rank-one stage " + std::to_string(s) + " out of range");
  if (s >= built_.load(std::memory_order_acquire)) build_until(s);
  return *tables_[s];
}

void RankOneMachine::build_until(int s) const {
  std::lock_guard<std::mutex> lock(grow_mu_);
  int built = built_.load(std::memory_order_relaxed);
  for (; built <= s; ++built) {
    const StageTable& prev = *tables_[built - 1];
    const RankOneStage& st = recipe_.stage(built - 1);
    auto t = std::make_unique<StageTable>();
    t->width = prev.width / Rat(st.cuts);
    mpz_class total = 0;
    mpz_class start = 0;
    for (int j = 0; j < st.cuts; ++j) {
      mpz_class sp = st.spacers[j].count(prev.height);
      t->start.push_back(start);
      t->spacers_before.push_back(total);
      t->spacers.push_back(sp);
      start += prev.height + sp;
      total += sp;
    }
    t->height = prev.height * st.cuts + total;
    t->measure = prev.measure + Rat(total) * t->width;
    tables_[built] = std::move(t);
    built_.store(built + 1, std::memory_order_release);
  }
}

std::optional<Rat> RankOneMachine::total_measure() const {
  const RankOneStage& last = recipe_.stages.back();
  long added = 0;
  for (const auto& rule : last.spacers) {
    if (rule.height_mult != 0) return std::nullopt;
    added += rule.add;
  }
  // Stationary from the last listed stage on: widths shrink geometrically.
  int s = static_cast<int>(recipe_.stages.size()) - 1;
  return space_measure(s) + Rat(added) * width(s) / Rat(last.cuts - 1);
}

Rat RankOneMachine::level_lo(int s, const mpz_class& level) const {
  if (level < 0 || level >= table(s).height) {
    throw std::out_of_range("level " + level.get_str() + " outside stage " + std::to_string(s));
  }
  Rat lo(0);
  mpz_class i = level;
  while (s > 0) {
    const StageTable& tab = table(s);
    const StageTable& prev = table(s - 1);
    auto it = std::upper_bound(tab.start.begin(), tab.start.end(), i);
    auto j = static_cast<std::size_t>(std::distance(tab.start.begin(), it) - 1);
    mpz_class rel = i - tab.start[j];
    if (rel < prev.height) {
      lo += Rat(static_cast<long>(j)) * tab.width;
      i = rel;
      --s;
    } else {
      mpz_class t = rel - prev.height;
      return lo + prev.measure + Rat(mpz_class(tab.spacers_before[j] + t)) * tab.width;
    }
  }
  return lo;
}

Interval RankOneMachine::level(int s, const mpz_class& level) const {
  Rat lo = level_lo(s, level);
  Rat hi = lo + width(s);
  return Interval(std::move(lo), std::move(hi));
}

RankOneMachine::Location RankOneMachine::locate(const Rat& x, int max_stage) const {
  if (x.sign() < 0) throw std::out_of_range("point " + x.str() + " is outside the rank-one phase space");
  int e = 0;
  while (!(x < table(e).measure)) {
    if (e >= max_stage) {
      if (auto total = total_measure(); total && !(x < *total)) {
        throw std::out_of_range("point " + x.str() + " is outside the rank-one phase space");
      }
      throw OrbitError(x, 0, max_stage);
    }
    ++e;
  }
  if (e == 0) return {0, mpz_class(0), x};

  const StageTable& tab = table(e);
  const StageTable& prev = table(e - 1);
  Rat rel = (x - prev.measure) / tab.width;
  mpz_class q = rel.floor();
  std::size_t j = 0;
  while (!(q < tab.spacers_before[j] + tab.spacers[j])) ++j;
  mpz_class t = q - tab.spacers_before[j];
  Rat offset = x - (prev.measure + Rat(q) * tab.width);
  return {e, tab.start[j] + prev.height + t, std::move(offset)};
}

RankOneMachine::Location RankOneMachine::descend(const Location& loc) const {
  const StageTable& tab = table(loc.stage + 1);
  mpz_class j = (loc.offset / tab.width).floor();
  Rat offset = loc.offset - Rat(j) * tab.width;
  return {loc.stage + 1, tab.start[j.get_ui()] + loc.level, std::move(offset)};
}

namespace {

bool in_column(const mpz_class& level, long k, const mpz_class& height) {
  mpz_class target = level + k;
  return target >= 0 && target < height;
}

}  // namespace

Rat RankOneMachine::apply(const Rat& x, long k, int max_stage) const {
  if (k == 0) return x;
  Location loc = locate(x, max_stage);
  while (!in_column(loc.level, k, table(loc.stage).height)) {
    if (loc.stage >= max_stage) throw OrbitError(x, k, max_stage);
    loc = descend(loc);
  }
  return level_lo(loc.stage, loc.level + k) + loc.offset;
}

Window RankOneMachine::image_window(const Window& w, long k, int max_stage) const {
  if (k == 0) return w;
  std::vector<Interval> out;
  for (const auto& part : w.parts()) {
    Rat cursor = part.lo;
    while (cursor < part.hi) {
      Location loc = locate(cursor, max_stage);
      while (!in_column(loc.level, k, table(loc.stage).height)) {
        if (loc.stage >= max_stage) throw OrbitError(cursor, k, max_stage);
        loc = descend(loc);
      }
      Rat level_start = cursor - loc.offset;
      Rat piece_end = min(part.hi, level_start + table(loc.stage).width);
      Rat shift = level_lo(loc.stage, loc.level + k) - level_start;
      out.emplace_back(cursor + shift, piece_end + shift);
      cursor = std::move(piece_end);
    }
  }
  return Window::from_parts(std::move(out));
}

std::vector<std::pair<Interval, Rat>> RankOneMachine::pieces(int s) const {
  mpz_class h = table(s).height;
  if (h > (1L << 20)) throw std::length_error("pieces(): stage " + std::to_string(s) + " is too tall to enumerate");
  std::vector<std::pair<Interval, Rat>> out;
  long n = h.get_si();
  Rat lo = level_lo(s, 0);
  for (long i = 0; i + 1 < n; ++i) {
    Rat next = level_lo(s, i + 1);
    out.emplace_back(Interval(lo, lo + width(s)), next - lo);
    lo = std::move(next);
  }
  return out;
}

std::vector<bool> RankOneMachine::level_flags(const Window& w, int s) const {
  long n = table(s).height.get_si();
  std::vector<bool> flags(static_cast<std::size_t>(n), false);
  Rat covered(0);
  Rat wd = width(s);
  for (long i = 0; i < n; ++i) {
    Rat inside = intersect(w, Window(level(s, i))).length();
    if (inside.sign() == 0) continue;
    if (inside != wd) throw std::invalid_argument("window " + w.str() + " is not a union of stage-" + std::to_string(s) + " levels");
    flags[static_cast<std::size_t>(i)] = true;
    covered += wd;
  }
  if (covered != w.length()) {
    throw std::invalid_argument("window " + w.str() + " leaves the stage-" + std::to_string(s) + " space");
  }
  return flags;
}

std::optional<int> RankOneMachine::common_level_stage(const Window& a, const Window& b, long max_height) const {
  for (int s = 0; s <= kStageLimit && table(s).height <= max_height; ++s) {
    try {
      level_flags(a, s);
      level_flags(b, s);
      return s;
    } catch (const std::invalid_argument&) {
    }
  }
  return std::nullopt;
}

Rat RankOneMachine::pair_measure(int s, const std::vector<bool>& p_levels, const std::vector<bool>& q_levels,
                                 long distance) const {
  if (distance < 0) throw std::invalid_argument("pair_measure: distance must be >= 0");
  Rat w = width(s);
  if (distance == 0) {
    long both = 0;
    for (std::size_t i = 0; i < p_levels.size(); ++i) both += p_levels[i] && q_levels[i];
    return Rat(both) * w;
  }
  const auto d = static_cast<std::size_t>(distance);
  constexpr std::uint8_t kP = 1, kQ = 2;

  // Column word over {P, Q, neither}. Runs of spacers longer than d are cut
  // to d: no pair at distance d can straddle such a run either way.
  std::vector<std::uint8_t> word(p_levels.size());
  for (std::size_t i = 0; i < word.size(); ++i) word[i] = (p_levels[i] ? kP : 0) | (q_levels[i] ? kQ : 0);
  mpz_class h = table(s).height;
  int stage = s;

  auto capped = [&](const SpacerRule& rule) {
    mpz_class c = rule.count(h);
    return c < distance ? static_cast<std::size_t>(c.get_ui()) : d;
  };
  auto advance = [&](const RankOneStage& st) {
    mpz_class total = 0;
    for (const auto& rule : st.spacers) total += rule.count(h);
    h = h * st.cuts + total;
    w /= Rat(st.cuts);
    ++stage;
  };

  while (word.size() < 4 * d + 4) {
    const RankOneStage& st = recipe_.stage(stage);
    std::vector<std::uint8_t> next;
    for (int j = 0; j < st.cuts; ++j) {
      next.insert(next.end(), word.begin(), word.end());
      next.insert(next.end(), capped(st.spacers[j]), std::uint8_t{0});
    }
    word = std::move(next);
    advance(st);
  }

  mpz_class count = 0;
  for (std::size_t i = 0; i + d < word.size(); ++i) {
    if ((word[i] & kP) && (word[i + d] & kQ)) ++count;
  }
  std::vector<std::uint8_t> prefix(word.begin(), word.begin() + static_cast<long>(d));
  std::vector<std::uint8_t> suffix(word.end() - static_cast<long>(d), word.end());

  // Pairs straddling the seam between consecutive copies of the column.
  auto cross = [&](std::size_t gap) {
    long c = 0;
    for (std::size_t p = gap; p < d; ++p) {
      if ((suffix[p] & kP) && (prefix[p - gap] & kQ)) ++c;
    }
    return c;
  };

  const int stationary_from = static_cast<int>(recipe_.stages.size()) - 1;
  for (int guard = 0; guard < 100000; ++guard) {
    const RankOneStage& st = recipe_.stage(stage);
    long seam = 0;
    bool rules_settled = true;
    for (int j = 0; j < st.cuts; ++j) {
      std::size_t gap = capped(st.spacers[j]);
      if (j + 1 < st.cuts) seam += cross(gap);
      if (st.spacers[j].height_mult != 0 && gap != d) rules_settled = false;
    }
    std::size_t top_gap = capped(st.spacers.back());
    std::vector<std::uint8_t> next_suffix(d, 0);
    if (top_gap < d) std::copy(suffix.begin() + static_cast<long>(top_gap), suffix.end(), next_suffix.begin());

    if (stage >= stationary_from && rules_settled && next_suffix == suffix) {
      // Every later stage adds the same seam count; widths shrink by 1/cuts.
      return Rat(count) * w + Rat(seam) * w / Rat(st.cuts - 1);
    }
    count = count * st.cuts + seam;
    suffix = std::move(next_suffix);
    advance(st);
  }
  throw std::logic_error("pair_measure: column words failed to stabilize");
}

TransformHandle TransformHandle::translation(Rat step) { return TransformHandle(Translation{std::move(step)}); }

TransformHandle TransformHandle::rank_one(RankOneRecipe recipe) {
  return TransformHandle(std::make_shared<const RankOneMachine>(std::move(recipe)));
}

std::optional<Window> TransformHandle::domain() const {
  if (is_translation()) return std::nullopt;
  auto total = as_rank_one().total_measure();
  if (!total) return std::nullopt;
  return Window(Interval(Rat(0), *total));
}

std::string TransformHandle::describe() const {
  if (is_translation()) return "translation(" + as_translation().step.str() + ")";
  const auto& rec = as_rank_one().recipe();
  std::ostringstream os;
  os << "rank-one(base=" << rec.base_width << ", stages=" << rec.stages.size() << ")";
  return os.str();
}

Rat apply(const TransformHandle& t, const Rat& x, long k, int max_stage) {
  if (t.is_translation()) return x + Rat(k) * t.as_translation().step;
  return t.as_rank_one().apply(x, k, max_stage);
}

Window image_window(const TransformHandle& t, const Window& w, long k, int max_stage) {
  if (t.is_translation()) return translate(w, Rat(k) * t.as_translation().step);
  // The whole phase space is invariant, although T^k cuts it into infinitely many pieces.
  if (auto dom = t.domain(); dom && *dom == w) return w;
  return t.as_rank_one().image_window(w, k, max_stage);
}

Rat overlap_measure(const TransformHandle& t, const Window& a, const Window& b, long d, int max_stage) {
  if (d == 0) return intersect(a, b).length();
  if (t.is_translation()) return intersect(image_window(t, a, -d), b).length();
  const RankOneMachine& m = t.as_rank_one();
  // T^{-d} of the whole space is the whole space, and T preserves measure.
  if (auto dom = t.domain()) {
    if (a.contains(*dom)) return intersect(*dom, b).length();
    if (b.contains(*dom)) return intersect(*dom, a).length();
  }
  if (auto s = m.common_level_stage(a, b)) {
    auto fa = m.level_flags(a, *s);
    auto fb = m.level_flags(b, *s);
    // mu{x in B : T^d x in A}; for d < 0 substitute y = T^d x.
    return d > 0 ? m.pair_measure(*s, fb, fa, d) : m.pair_measure(*s, fa, fb, -d);
  }
  return intersect(m.image_window(a, -d, max_stage), b).length();
}

std::vector<Rat> cesaro_overlap(const TransformHandle& t, const Window& a, const Window& b, long L, int max_stage) {
  if (L < 1) throw std::invalid_argument("cesaro_overlap: L must be >= 1");
  std::vector<Rat> out;
  out.reserve(static_cast<std::size_t>(L));
  Rat sum(0);
  for (long l = 1; l <= L; ++l) {
    sum += overlap_measure(t, a, b, l, max_stage);
    out.push_back(sum / Rat(l));
  }
  return out;
}

std::vector<OrbitRow> orbit(const TransformHandle& t, const Rat& x, long k_lo, long k_hi, int max_stage) {
  std::vector<OrbitRow> rows;
  for (long k = k_lo; k <= k_hi; ++k) rows.push_back({k, apply(t, x, k, max_stage)});
  return rows;
}

std::string orbit_csv(const std::vector<OrbitRow>& rows) {
  std::string out = "k,x\n";
  for (const auto& r : rows) out += std::to_string(r.k) + "," + r.x.str() + "\n";
  return out;
}

}  // namespace sushi
