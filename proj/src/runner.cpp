#include "sushi/runner.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "sushi/moments.hpp"
#include "sushi/parallel.hpp"
#include "sushi/split_mark.hpp"

namespace sushi {

namespace {

using json = nlohmann::json;

// ---- parsing helpers ------------------------------------------------------

Rat rat_field(const json& j, const std::string& field) {
  try {
    if (j.is_string()) return Rat::parse(j.get<std::string>());
    if (j.is_number_integer()) return Rat(j.get<long>());
    if (j.is_number()) return Rat::from_double(j.get<double>());
  } catch (const std::exception& e) {
    throw SpecError(field, e.what());
  }
  throw SpecError(field, "expected a rational literal");
}

Window window_field(const json& j, const std::string& field) {
  if (!j.is_string()) throw SpecError(field, "expected a window literal such as \"[0,1)+[2,3)\"");
  try {
    return Window::parse(j.get<std::string>());
  } catch (const std::exception& e) {
    throw SpecError(field, e.what());
  }
}

long long_field(const json& j, const std::string& field) {
  if (!j.is_number_integer()) throw SpecError(field, "expected an integer");
  return j.get<long>();
}

std::vector<double> probs_field(const json& j, const std::string& field) {
  if (!j.is_array() || j.empty()) throw SpecError(field, "expected a nonempty array of probabilities");
  std::vector<double> p;
  for (const auto& v : j) {
    if (!v.is_number()) throw SpecError(field, "probabilities must be numbers");
    p.push_back(v.get<double>());
  }
  try {
    validate_probabilities(p, field.c_str());
  } catch (const std::exception& e) {
    throw SpecError(field, e.what());
  }
  return p;
}

const std::map<std::string, Construction>& construction_names() {
  static const std::map<std::string, Construction> names{
      {"poisson", Construction::kPoisson}, {"split", Construction::kSplit}, {"thin", Construction::kThin},
      {"mark", Construction::kMark},       {"sushi", Construction::kSushi}, {"id", Construction::kId}};
  return names;
}

std::string construction_name(Construction c) {
  for (const auto& [name, value] : construction_names()) {
    if (value == c) return name;
  }
  return "?";
}

std::string class_name(TestClass c) {
  switch (c) {
    case TestClass::kMustPass: return "must_pass";
    case TestClass::kMustReject: return "must_reject";
    case TestClass::kInformational: return "informational";
  }
  return "?";
}

RankOneRecipe growing_recipe() {
  RankOneRecipe r;
  r.stages.push_back(RankOneStage{3, {{0, 0}, {0, 1}, {1, 0}}});
  return r;
}

SpacerRule spacer_field(const json& j, const std::string& field) {
  if (j.is_number_integer()) return SpacerRule{0, j.get<long>()};
  if (j.is_object()) {
    SpacerRule r;
    if (j.contains("mult")) r.height_mult = long_field(j["mult"], field + ".mult");
    if (j.contains("add")) r.add = long_field(j["add"], field + ".add");
    return r;
  }
  throw SpecError(field, "spacer must be an integer or {\"mult\": m, \"add\": a}");
}

// ---- constructions --------------------------------------------------------

using Realizer = std::function<std::vector<WeightedConfig>(Rng&)>;

struct Context {
  const ExperimentSpec& spec;
  Realizer realize;
  Window observed;                 // window of every component
  std::vector<double> rates;       // expected intensity per component
  bool poisson_like = true;        // components are Poisson processes
  std::optional<ClusterLaw> law;   // sushi / id
  double c = 0;
};

double sushi_c(const json& params, const ClusterLaw& law) {
  if (!params.contains("c") || (params["c"].is_string() && params["c"] == "unit")) return unit_intensity_c(law);
  if (!params["c"].is_number() || !(params["c"].get<double>() > 0)) throw SpecError("params.c", "expected a positive number or \"unit\"");
  return params["c"].get<double>();
}

Context make_context(const ExperimentSpec& spec) {
  Context ctx{spec, {}, spec.window, {}, true, std::nullopt, 0};
  const IntensitySpec intensity = spec.intensity;
  const Window window = spec.window;
  const double alpha = intensity.alpha.to_double();
  const json& p = spec.params;
  switch (spec.construction) {
    case Construction::kPoisson:
      ctx.rates = {alpha};
      ctx.realize = [=](Rng& rng) { return std::vector<WeightedConfig>{to_weighted(sample_poisson(intensity, window, rng))}; };
      break;
    case Construction::kSplit: {
      auto probs = probs_field(p["probs"], "params.probs");
      for (double q : probs) ctx.rates.push_back(alpha * q);
      ctx.realize = [=](Rng& rng) {
        std::vector<WeightedConfig> out;
        for (auto& c : bernoulli_split(sample_poisson(intensity, window, rng), probs, rng)) out.push_back(to_weighted(c));
        return out;
      };
      break;
    }
    case Construction::kMark: {
      auto probs = probs_field(p["probs"], "params.probs");
      for (double q : probs) ctx.rates.push_back(alpha * q);
      ctx.realize = [=](Rng& rng) {
        auto mc = attach_marks(sample_poisson(intensity, window, rng), probs, rng);
        std::vector<WeightedConfig> out;
        for (int j = 0; j < mc.mark_count(); ++j) out.push_back(to_weighted(project_mark_set(mc, {j})));
        return out;
      };
      break;
    }
    case Construction::kThin: {
      const Rat kappa = rat_field(p["kappa"], "params.kappa");
      const Window core = window_field(p["core"], "params.core");
      ctx.observed = core;
      ctx.poisson_like = false;
      ctx.rates = {alpha * std::exp(-2 * alpha * kappa.to_double())};
      ctx.realize = [=](Rng& rng) {
        return std::vector<WeightedConfig>{to_weighted(separation_thin(sample_poisson(intensity, window, rng), kappa, core))};
      };
      break;
    }
    case Construction::kSushi:
    case Construction::kId: {
      ClusterLaw law = parse_cluster_law(p["law"]);
      const double c = sushi_c(p, law);
      ctx.poisson_like = false;
      ctx.law = law;
      ctx.c = c;
      ctx.rates = {c * law.mean_total_weight()};
      const TransformHandle t = spec.transform;
      if (spec.construction == Construction::kSushi) {
        SushiSpec s{c, law, t};
        ctx.realize = [=](Rng& rng) { return std::vector<WeightedConfig>{sample_sushi(s, window, rng)}; };
      } else {
        LevyData levy{c, law, t};
        ctx.realize = [=](Rng& rng) { return std::vector<WeightedConfig>{sample_id_measure(levy, window, rng)}; };
      }
      break;
    }
  }
  return ctx;
}

// ---- tests ----------------------------------------------------------------

struct TestOutput {
  std::vector<TestReport> reports;
  std::string raw_header;
  std::vector<std::string> raw_rows;
};

struct TestEnv {
  const Context& ctx;
  const BatteryTest& entry;
  std::string field;  // "battery[i]"
  Rng rng;
  double level;
  long R;

  const json& params() const { return entry.params; }
  bool has(const char* key) const { return entry.params.contains(key); }

  int component(const char* key = "component", int fallback = 0) const {
    int c = has(key) ? static_cast<int>(long_field(params()[key], field + "." + key)) : fallback;
    if (c < 0 || static_cast<std::size_t>(c) >= ctx.rates.size()) {
      throw SpecError(field + "." + key, "component " + std::to_string(c) + " does not exist");
    }
    return c;
  }
  Window window(const char* key, const Window& fallback) const {
    Window w = has(key) ? window_field(params()[key], field + "." + key) : fallback;
    if (!ctx.observed.contains(w)) {
      throw SpecError(field + "." + key, "window " + w.str() + " is not inside the observed window " + ctx.observed.str());
    }
    return w;
  }
  long integer(const char* key, long fallback) const {
    return has(key) ? long_field(params()[key], field + "." + key) : fallback;
  }
  Window unit_window() const {
    const Rat lo = ctx.observed.lo();
    return Window(Interval(lo, lo + Rat(1)));
  }
  Window last_unit_window() const {
    const Rat hi = ctx.observed.hi();
    return Window(Interval(hi - Rat(1), hi));
  }
  void require(bool cond, const std::string& what) const {
    if (!cond) throw SpecError(field + ".test", "'" + entry.test + "' " + what);
  }

  TestReport finish(TestReport r) const {
    r.seed = ctx.spec.seed;
    r.replicates = R;
    r.level = level;
    r.decide();
    return r;
  }

  /// Per-replicate values f(realization), drawn from substreams of rng.
  std::vector<std::vector<double>> collect(const std::function<std::vector<double>(const std::vector<WeightedConfig>&)>& f) const {
    std::vector<std::vector<double>> out(static_cast<std::size_t>(R));
    parallel_for(out.size(), [&](std::size_t r) {
      Rng s = rng.substream(r);
      out[r] = f(ctx.realize(s));
    });
    return out;
  }
};

std::vector<double> col(const std::vector<std::vector<double>>& rows, std::size_t j) {
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r[j]);
  return out;
}

std::vector<std::string> rows_of(const std::vector<std::vector<double>>& rows) {
  std::vector<std::string> out;
  out.reserve(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    std::string line = std::to_string(r);
    for (double v : rows[r]) line += "," + format_double(v);
    out.push_back(std::move(line));
  }
  return out;
}

std::vector<long> as_counts(const std::vector<double>& x, const TestEnv& env) {
  std::vector<long> out;
  out.reserve(x.size());
  for (double v : x) {
    const double r = std::round(v);
    if (std::abs(v - r) > 1e-9) throw SpecError(env.field + ".test", "'" + env.entry.test + "' needs integer-valued counts");
    out.push_back(static_cast<long>(r));
  }
  return out;
}

TestOutput test_gof(const TestEnv& env) {
  const int comp = env.component();
  const Window a = env.window("window", env.ctx.observed);
  const bool matched = env.has("mean") && env.params()["mean"] == "matched";
  auto rows = env.collect([&](const auto& cs) { return std::vector<double>{count(cs[static_cast<std::size_t>(comp)], a)}; });
  auto x = col(rows, 0);
  const double m = matched ? mean(x) : env.ctx.rates[static_cast<std::size_t>(comp)] * a.length().to_double();
  TestReport r = poisson_gof(as_counts(x, env), m, env.level);
  r.name = "gof component " + std::to_string(comp) + " " + a.str() + (matched ? " matched mean" : "");
  return {{env.finish(r)}, "replicate,count", rows_of(rows)};
}

TestOutput test_dispersion(const TestEnv& env) {
  const int comp = env.component();
  const Window a = env.window("window", env.ctx.observed);
  auto rows = env.collect([&](const auto& cs) { return std::vector<double>{count(cs[static_cast<std::size_t>(comp)], a)}; });
  TestReport r = dispersion_test(as_counts(col(rows, 0), env), env.level);
  r.name = "dispersion component " + std::to_string(comp) + " " + a.str();
  return {{env.finish(r)}, "replicate,count", rows_of(rows)};
}

TestOutput test_mean(const TestEnv& env) {
  const int comp = env.component();
  const Window a = env.window("window", env.ctx.observed);
  auto rows = env.collect([&](const auto& cs) { return std::vector<double>{count(cs[static_cast<std::size_t>(comp)], a)}; });
  auto x = col(rows, 0);
  const double target = env.ctx.rates[static_cast<std::size_t>(comp)] * a.length().to_double();
  TestReport r = z_test("mean component " + std::to_string(comp) + " " + a.str(), mean(x),
                        std::sqrt(variance(x) / static_cast<double>(x.size())), target, env.level);
  r.extra = {{"rate_estimate", mean(x) / a.length().to_double()}, {"rate_target", env.ctx.rates[static_cast<std::size_t>(comp)]}};
  return {{env.finish(r)}, "replicate,count", rows_of(rows)};
}

double covariance_target(const TestEnv& env, int comp, const Window& a, const Window& b) {
  if (env.ctx.law) return cluster_covariance(env.ctx.c, *env.ctx.law, env.ctx.spec.transform, a, b);
  env.require(env.ctx.poisson_like, "has no closed-form target for this construction");
  return env.ctx.rates[static_cast<std::size_t>(comp)] * intersect(a, b).length().to_double();
}

TestOutput test_variance(const TestEnv& env) {
  const int comp = env.component();
  const Window a = env.window("window", env.ctx.observed);
  const double target = covariance_target(env, comp, a, a);
  auto rows = env.collect([&](const auto& cs) { return std::vector<double>{count(cs[static_cast<std::size_t>(comp)], a)}; });
  auto x = col(rows, 0);
  const double m = mean(x);
  std::vector<double> sq;
  for (double v : x) sq.push_back((v - m) * (v - m));
  TestReport r = z_test("variance component " + std::to_string(comp) + " " + a.str(), variance(x),
                        std::sqrt(variance(sq) / static_cast<double>(x.size())), target, env.level);
  return {{env.finish(r)}, "replicate,count", rows_of(rows)};
}

TestOutput test_covariance(const TestEnv& env) {
  const int comp = env.component();
  const Window a = env.window("A", env.ctx.observed);
  const Window b = env.window("B", a);
  const double target = covariance_target(env, comp, a, b);
  Sampler s = [&](Rng& rng) { return env.ctx.realize(rng)[static_cast<std::size_t>(comp)]; };
  TestReport r = covariance_check(s, a, b, target, env.R, env.rng, env.level);
  return {{env.finish(r)}, "", {}};
}

TestOutput test_correlation(const TestEnv& env) {
  const int i = env.component("first", 0);
  const int j = env.component("second", 1);
  const Window a = env.window("window", env.ctx.observed);
  auto rows = env.collect([&](const auto& cs) {
    return std::vector<double>{count(cs[static_cast<std::size_t>(i)], a), count(cs[static_cast<std::size_t>(j)], a)};
  });
  const double rho = correlation(col(rows, 0), col(rows, 1));
  TestReport r = z_test("correlation components " + std::to_string(i) + "," + std::to_string(j), rho,
                        1 / std::sqrt(static_cast<double>(env.R)), 0.0, env.level);
  return {{env.finish(r)}, "replicate,count_first,count_second", rows_of(rows)};
}

TestOutput test_independence(const TestEnv& env) {
  const int i = env.component("first", 0);
  const int j = env.component("second", 1);
  const Window a = env.window("window", env.ctx.observed);
  JointSampler s = [&](Rng& rng) {
    auto cs = env.ctx.realize(rng);
    return std::vector<WeightedConfig>{cs[static_cast<std::size_t>(i)], cs[static_cast<std::size_t>(j)]};
  };
  TestReport r = mixed_moment_factorization(s, {{a}, {a}}, env.R, env.rng, env.level);
  r.name = "independence components " + std::to_string(i) + "," + std::to_string(j);
  return {{env.finish(r)}, "", {}};
}

TestReport failure_count_report(std::string name, long failures, const TestEnv& env) {
  TestReport r;
  r.name = std::move(name);
  r.statistic = static_cast<double>(failures);
  r.estimate = static_cast<double>(failures);
  r.target = 0;
  r.p_value = failures == 0 ? 1.0 : 0.0;
  return env.finish(r);
}

TestOutput test_dissociation(const TestEnv& env) {
  env.require(env.ctx.rates.size() >= 2, "needs a construction with at least two components");
  const long K = env.integer("K", 8);
  const auto& t = env.ctx.spec.transform;
  auto rows = env.collect([&](const auto& cs) {
    return std::vector<double>{dissociation_check(simplify(cs[0]), simplify(cs[1]), t, K) ? 0.0 : 1.0};
  });
  long failures = 0;
  for (const auto& row : rows) failures += static_cast<long>(row[0]);
  return {{failure_count_report("dissociation K=" + std::to_string(K), failures, env)}, "replicate,failed", rows_of(rows)};
}

TestOutput test_free(const TestEnv& env) {
  const int comp = env.component();
  const long K = env.integer("K", 8);
  const auto& t = env.ctx.spec.transform;
  auto rows = env.collect([&](const auto& cs) {
    return std::vector<double>{free_check(simplify(cs[static_cast<std::size_t>(comp)]), t, K) ? 0.0 : 1.0};
  });
  long failures = 0;
  for (const auto& row : rows) failures += static_cast<long>(row[0]);
  return {{failure_count_report("free K=" + std::to_string(K), failures, env)}, "replicate,failed", rows_of(rows)};
}

TestOutput test_decomposition(const TestEnv& env) {
  env.require(env.ctx.poisson_like, "compares against Poisson coefficients and needs a Poisson construction");
  const int comp = env.component();
  const long n = env.integer("n", 2);
  if (n < 1 || n > 4) throw SpecError(env.field + ".n", "must be in [1, 4]");
  const Rat shift = env.ctx.observed.lo();
  std::vector<WindowTuple> design;
  for (auto t : default_design(static_cast<int>(n))) {
    for (auto& w : t) w = env.window("design", translate(w, shift));
    design.push_back(std::move(t));
  }
  Sampler s = [&](Rng& rng) { return env.ctx.realize(rng)[static_cast<std::size_t>(comp)]; };
  auto fit = fit_partition_decomposition(s, static_cast<int>(n), design, env.R, env.rng);
  const double rate = env.ctx.rates[static_cast<std::size_t>(comp)];
  TestOutput out;
  for (std::size_t i = 0; i < fit.partitions.size(); ++i) {
    const auto& p = fit.partitions[i];
    TestReport r = z_test("decomposition alpha" + p.str(), fit.coefficients[i], std::sqrt(fit.covariance(i, i)),
                          std::pow(rate, static_cast<double>(p.size())), env.level);
    out.reports.push_back(env.finish(r));
  }
  return out;
}

TestOutput test_diagonal(const TestEnv& env) {
  const int comp = env.component();
  const long n = env.integer("n", 2);
  const long depth = env.integer("depth", 8);
  const Window a = env.window("window", env.unit_window());
  Sampler s = [&](Rng& rng) { return env.ctx.realize(rng)[static_cast<std::size_t>(comp)]; };
  auto d = diagonal_weight(s, a, static_cast<int>(n), static_cast<int>(depth), env.R, env.rng);
  TestReport r = z_test("diagonal n=" + std::to_string(n) + " " + a.str(), d.value, d.stderr_,
                        env.ctx.rates[static_cast<std::size_t>(comp)] * a.length().to_double(), env.level);
  for (std::size_t l = 0; l < d.levels.size(); ++l) r.extra.emplace_back("level_" + std::to_string(l), d.levels[l].value);
  return {{env.finish(r)}, "", {}};
}

TestOutput test_cesaro(const TestEnv& env) {
  env.require(env.ctx.poisson_like, "uses the Poisson diagonal correction and needs a Poisson construction");
  const int comp = env.component();
  const long L = env.integer("L", 8);
  const Window a1 = env.window("A1", env.last_unit_window());
  const Window a2 = env.window("A2", a1);
  const auto& t = env.ctx.spec.transform;
  const Window needed = cesaro_window(t, {a1, a2}, {0}, L);
  if (!env.ctx.observed.contains(needed)) {
    throw SpecError(env.field + ".L", "the observed window must contain " + needed.str() + " for L=" + std::to_string(L));
  }
  const double rate = env.ctx.rates[static_cast<std::size_t>(comp)];
  const double correction = rate * cesaro_overlap(t, a2, a1, L).back().to_double();
  Sampler s = [&](Rng& rng) { return env.ctx.realize(rng)[static_cast<std::size_t>(comp)]; };
  auto res = cesaro_factorization(s, t, {a1, a2}, {0}, L, env.R, env.rng, correction, env.level);
  TestReport r = res.report;
  r.name = "cesaro L=" + std::to_string(L) + " " + a1.str() + " " + a2.str();
  for (std::size_t k = 0; k < res.averages.size(); ++k) r.extra.emplace_back("average_" + std::to_string(k + 1), res.averages[k]);
  return {{env.finish(r)}, "", {}};
}

TestOutput test_two_sample(const TestEnv& env) {
  env.require(env.ctx.law.has_value(), "compares the cluster and ID routes and needs construction sushi or id");
  const Window a = env.window("window", env.ctx.observed);
  const auto& spec = env.ctx.spec;
  SushiSpec sushi{env.ctx.c, *env.ctx.law, spec.transform};
  LevyData levy{env.ctx.c, *env.ctx.law, spec.transform};
  const Window window = spec.window;
  // The other route draws from a separate stream family.
  const Rng other(spec.seed, env.rng.stream_id() + (std::uint64_t{1} << 32));
  std::vector<std::vector<double>> rows(static_cast<std::size_t>(env.R));
  parallel_for(rows.size(), [&](std::size_t r) {
    Rng s1 = env.rng.substream(r);
    Rng s2 = other.substream(r);
    rows[r] = {count(sample_sushi(sushi, window, s1), a), count(sample_id_measure(levy, window, s2), a)};
  });
  TestReport r = two_sample_test(col(rows, 0), col(rows, 1), env.level);
  r.name = "two_sample sushi vs id " + a.str();
  return {{env.finish(r)}, "replicate,sushi,id", rows_of(rows)};
}

TestOutput test_roundtrip(const TestEnv& env) {
  env.require(env.ctx.law.has_value(), "needs construction sushi or id");
  const auto& t = env.ctx.spec.transform;
  const long k_max = env.integer("k_max", std::max(1L, 2 * env.ctx.law->support_bound()));
  auto rows = env.collect([&](const auto& cs) {
    const auto& v = cs[0];
    auto e = phi_encode(v, t, k_max, BoundaryPolicy::kDrop);
    auto guarded = phi_decode(e, t);
    bool ok = phi_encode(guarded, t, k_max) == EncodedMeasure{e.window, e.clusters, 0};
    ok = ok && phi_decode(phi_encode(guarded, t, k_max), t) == guarded;
    if (e.dropped_groups == 0) ok = ok && guarded == v;
    return std::vector<double>{ok ? 0.0 : 1.0, static_cast<double>(e.dropped_groups)};
  });
  long failures = 0;
  double dropped = 0;
  for (const auto& row : rows) {
    failures += static_cast<long>(row[0]);
    dropped += row[1];
  }
  TestReport r = failure_count_report("phi round trip k_max=" + std::to_string(k_max), failures, env);
  r.extra = {{"dropped_groups", dropped}};
  return {{r}, "replicate,failed,dropped_groups", rows_of(rows)};
}

using TestFn = TestOutput (*)(const TestEnv&);

const std::map<std::string, TestFn>& test_table() {
  static const std::map<std::string, TestFn> table{
      {"gof", test_gof},
      {"dispersion", test_dispersion},
      {"mean", test_mean},
      {"variance", test_variance},
      {"covariance", test_covariance},
      {"correlation", test_correlation},
      {"independence", test_independence},
      {"dissociation", test_dissociation},
      {"free", test_free},
      {"decomposition", test_decomposition},
      {"diagonal", test_diagonal},
      {"cesaro", test_cesaro},
      {"two_sample", test_two_sample},
      {"roundtrip", test_roundtrip},
  };
  return table;
}

TestEnv make_env(const Context& ctx, std::size_t index) {
  const auto& spec = ctx.spec;
  const auto& entry = spec.battery[index];
  const std::string field = "battery[" + std::to_string(index) + "]";
  double level = bonferroni(spec.family_level, spec.battery.size());
  if (entry.params.contains("level")) {
    if (!entry.params["level"].is_number()) throw SpecError(field + ".level", "expected a number");
    level = entry.params["level"].get<double>();
  }
  long R = spec.replicates;
  if (entry.params.contains("replicates")) {
    R = long_field(entry.params["replicates"], field + ".replicates");
    if (R < 100) throw SpecError(field + ".replicates", "must be >= 100");
  }
  return TestEnv{ctx, entry, field, Rng(spec.seed, 1000 + index), level, R};
}

BatteryTest bt(std::string test, TestClass cls, json params = json::object()) {
  return BatteryTest{std::move(test), cls, std::move(params)};
}

void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + p.string());
  f << text;
}

std::string slug(const std::string& s) {
  std::string out;
  for (char ch : s) out += std::isalnum(static_cast<unsigned char>(ch)) ? ch : '_';
  return out;
}

}  // namespace

// ---- public ----------------------------------------------------------------

ConstructionSampler construction_sampler(const ExperimentSpec& spec) {
  Context ctx = make_context(spec);
  return ConstructionSampler{ctx.realize, ctx.observed, ctx.rates};
}

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

TransformHandle transformation_preset(const std::string& name) {
  if (name == "translation") return TransformHandle::translation(Rat(1));
  if (name == "chacon3") return TransformHandle::rank_one(RankOneRecipe::chacon3());
  if (name == "rank1-growing") return TransformHandle::rank_one(growing_recipe());
  throw SpecError("transformation", "unknown preset '" + name + "'");
}

TransformHandle parse_transformation(const json& j) {
  if (j.is_string()) return transformation_preset(j.get<std::string>());
  if (!j.is_object() || j.size() != 1) throw SpecError("transformation", "expected a preset name or a one-key object");
  if (j.contains("preset")) return transformation_preset(j["preset"].get<std::string>());
  if (j.contains("translation")) {
    Rat step = rat_field(j["translation"], "transformation.translation");
    if (step.sign() == 0) throw SpecError("transformation.translation", "step must be nonzero");
    return TransformHandle::translation(step);
  }
  if (j.contains("rank_one")) {
    const json& r = j["rank_one"];
    RankOneRecipe recipe;
    if (r.contains("base")) recipe.base_width = rat_field(r["base"], "transformation.rank_one.base");
    if (!r.contains("stages") || !r["stages"].is_array()) throw SpecError("transformation.rank_one.stages", "expected an array");
    for (std::size_t s = 0; s < r["stages"].size(); ++s) {
      const json& st = r["stages"][s];
      const std::string f = "transformation.rank_one.stages[" + std::to_string(s) + "]";
      RankOneStage stage;
      stage.cuts = static_cast<int>(long_field(st.value("cuts", json()), f + ".cuts"));
      if (!st.contains("spacers") || !st["spacers"].is_array()) throw SpecError(f + ".spacers", "expected an array");
      for (std::size_t i = 0; i < st["spacers"].size(); ++i) {
        stage.spacers.push_back(spacer_field(st["spacers"][i], f + ".spacers[" + std::to_string(i) + "]"));
      }
      recipe.stages.push_back(std::move(stage));
    }
    try {
      recipe.validate();
    } catch (const std::exception& e) {
      throw SpecError("transformation.rank_one", e.what());
    }
    return TransformHandle::rank_one(std::move(recipe));
  }
  throw SpecError("transformation", "unknown kind; use \"preset\", \"translation\" or \"rank_one\"");
}

ClusterLaw parse_cluster_law(const json& j) {
  if (!j.is_array() || j.empty()) throw SpecError("params.law", "expected a nonempty array of {prob, weights}");
  std::vector<ClusterEntry> entries;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string f = "params.law[" + std::to_string(i) + "]";
    const json& e = j[i];
    if (!e.contains("prob") || !e["prob"].is_number()) throw SpecError(f + ".prob", "expected a number");
    if (!e.contains("weights") || !e["weights"].is_object()) throw SpecError(f + ".weights", "expected an object k -> a_k");
    ClusterEntry entry{{}, e["prob"].get<double>()};
    for (const auto& [k, a] : e["weights"].items()) {
      long key = 0;
      try {
        std::size_t used = 0;
        key = std::stol(k, &used);
        if (used != k.size()) throw std::invalid_argument(k);
      } catch (const std::exception&) {
        throw SpecError(f + ".weights", "offset '" + k + "' is not an integer");
      }
      if (!a.is_number()) throw SpecError(f + ".weights." + k, "expected a number");
      entry.weights[key] = a.get<double>();
    }
    entries.push_back(std::move(entry));
  }
  try {
    return ClusterLaw(std::move(entries));
  } catch (const std::exception& e) {
    throw SpecError("params.law", e.what());
  }
}

std::vector<BatteryTest> battery_preset(const std::string& name) {
  using C = TestClass;
  if (name == "poisson-calibration") {
    return {bt("gof", C::kMustPass), bt("mean", C::kMustPass), bt("dispersion", C::kMustPass)};
  }
  if (name == "splitting-independence") {
    return {bt("gof", C::kMustPass, {{"component", 0}}), bt("gof", C::kMustPass, {{"component", 1}}),
            bt("independence", C::kMustPass), bt("correlation", C::kMustPass),
            bt("dissociation", C::kMustPass, {{"K", 8}})};
  }
  if (name == "thinning-counterexample") {
    return {bt("mean", C::kMustPass), bt("dispersion", C::kMustReject),
            bt("gof", C::kMustReject, {{"mean", "matched"}})};
  }
  if (name == "marking") {
    return {bt("gof", C::kMustPass, {{"component", 0}}), bt("gof", C::kMustPass, {{"component", 1}}),
            bt("correlation", C::kMustPass)};
  }
  if (name == "sushi-identities") {
    return {bt("mean", C::kMustPass), bt("variance", C::kMustPass), bt("roundtrip", C::kMustPass)};
  }
  if (name == "id-identities") {
    return {bt("mean", C::kMustPass), bt("variance", C::kMustPass), bt("two_sample", C::kMustPass)};
  }
  if (name == "moment-decomposition") {
    return {bt("decomposition", C::kMustPass, {{"n", 2}}), bt("diagonal", C::kMustPass, {{"n", 2}, {"depth", 8}}),
            bt("covariance", C::kMustPass), bt("cesaro", C::kMustPass, {{"L", 8}})};
  }
  throw SpecError("battery", "unknown battery preset '" + name + "'");
}

std::vector<Preset> list_presets() {
  return {
      {"translation", "transformation", "x -> x + step on the real line (step 1 by default)"},
      {"chacon3", "transformation", "classical Chacon: 3 cuts, one spacer on the middle subcolumn; measure 3/2"},
      {"rank-one", "transformation", "configurable cutting and stacking: per-stage cuts and spacers {mult, add}"},
      {"rank1-growing", "transformation", "3 cuts, spacers (0, 1, h): infinite-measure rank-one schedule"},
      {"poisson-calibration", "battery", "GOF, mean and dispersion of Poisson counts"},
      {"splitting-independence", "battery", "Bernoulli split: per-component GOF, independence, correlation, dissociation"},
      {"thinning-counterexample", "battery", "kappa-separation thinning: kept rate, expected rejections of Poissonness"},
      {"marking", "battery", "i.i.d. marks: per-mark GOF and cross-mark correlation"},
      {"sushi-identities", "battery", "cluster intensity, closed-form variance, encode/decode round trip"},
      {"id-identities", "battery", "ID route: intensity, variance, two-sample match with the cluster route"},
      {"moment-decomposition", "battery", "partition decomposition fit, diagonal weight, covariance, Cesaro factorization"},
  };
}

ExperimentSpec parse_spec(const json& j) {
  if (!j.is_object()) throw SpecError("<root>", "expected a JSON object");
  static const std::set<std::string> known{"name",  "transformation", "intensity", "window", "construction",
                                           "params", "battery",       "replicates", "seed",  "level"};
  for (const auto& [k, v] : j.items()) {
    if (!known.count(k)) throw SpecError(k, "unknown field");
  }
  ExperimentSpec spec;
  spec.canonical = j.dump();
  if (!j.contains("name") || !j["name"].is_string()) throw SpecError("name", "expected a string");
  spec.name = j["name"].get<std::string>();
  spec.transform = parse_transformation(j.value("transformation", json("translation")));
  try {
    spec.intensity = IntensitySpec(j.contains("intensity") ? rat_field(j["intensity"], "intensity") : Rat(1));
  } catch (const SpecError&) {
    throw;
  } catch (const std::exception& e) {
    throw SpecError("intensity", e.what());
  }
  if (!j.contains("window")) throw SpecError("window", "required");
  spec.window = window_field(j["window"], "window");
  if (spec.window.empty()) throw SpecError("window", "must be nonempty");
  if (auto dom = spec.transform.domain(); dom && !dom->contains(spec.window)) {
    throw SpecError("window", spec.window.str() + " leaves the phase space " + dom->str());
  }
  if (!j.contains("construction") || !j["construction"].is_string()) throw SpecError("construction", "expected a string");
  auto it = construction_names().find(j["construction"].get<std::string>());
  if (it == construction_names().end()) {
    throw SpecError("construction", "unknown construction '" + j["construction"].get<std::string>() + "'");
  }
  spec.construction = it->second;
  spec.params = j.value("params", json::object());
  if (!spec.params.is_object()) throw SpecError("params", "expected an object");
  if (!j.contains("replicates")) throw SpecError("replicates", "required");
  spec.replicates = long_field(j["replicates"], "replicates");
  if (spec.replicates < 100) throw SpecError("replicates", "must be >= 100");
  if (!j.contains("seed") || !j["seed"].is_number_integer() || (!j["seed"].is_number_unsigned() && j["seed"].get<long>() < 0)) {
    throw SpecError("seed", "expected a nonnegative integer");
  }
  spec.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("level")) {
    if (!j["level"].is_number() || !(j["level"].get<double>() > 0) || !(j["level"].get<double>() < 1)) {
      throw SpecError("level", "expected a number in (0, 1)");
    }
    spec.family_level = j["level"].get<double>();
  }

  // Construction preconditions.
  const json& p = spec.params;
  switch (spec.construction) {
    case Construction::kPoisson:
      break;
    case Construction::kSplit:
    case Construction::kMark:
      if (!p.contains("probs")) throw SpecError("params.probs", "required for " + construction_name(spec.construction));
      probs_field(p["probs"], "params.probs");
      break;
    case Construction::kThin: {
      if (!p.contains("kappa")) throw SpecError("params.kappa", "required for thin");
      if (!p.contains("core")) throw SpecError("params.core", "required for thin");
      Rat kappa = rat_field(p["kappa"], "params.kappa");
      if (kappa.sign() <= 0) throw SpecError("params.kappa", "must be positive");
      Window core = window_field(p["core"], "params.core");
      if (core.empty()) throw SpecError("params.core", "must be nonempty");
      if (!spec.window.contains(buffered(core, kappa))) {
        throw SpecError("window", spec.window.str() + " lacks the kappa buffer: it must contain " +
                                      buffered(core, kappa).str());
      }
      break;
    }
    case Construction::kSushi:
    case Construction::kId: {
      if (p.contains("drift")) {
        if (!p["drift"].is_number() || p["drift"].get<double>() != 0.0) {
          throw SpecError("params.drift", "only the zero drift is supported for point-process valued ID measures");
        }
      }
      if (!p.contains("law")) throw SpecError("params.law", "required for " + construction_name(spec.construction));
      sushi_c(p, parse_cluster_law(p["law"]));
      break;
    }
  }

  // Battery.
  if (!j.contains("battery")) throw SpecError("battery", "required");
  const json& b = j["battery"];
  if (b.is_string()) {
    spec.battery = battery_preset(b.get<std::string>());
  } else if (b.is_array()) {
    for (std::size_t i = 0; i < b.size(); ++i) {
      const std::string f = "battery[" + std::to_string(i) + "]";
      if (b[i].is_string()) {
        spec.battery.push_back(bt(b[i].get<std::string>(), TestClass::kMustPass));
        continue;
      }
      if (!b[i].is_object() || !b[i].contains("test") || !b[i]["test"].is_string()) {
        throw SpecError(f, "expected a test name or {\"test\": name, ...}");
      }
      BatteryTest t;
      t.test = b[i]["test"].get<std::string>();
      const std::string cls = b[i].value("class", std::string("must_pass"));
      if (cls == "must_pass") {
        t.cls = TestClass::kMustPass;
      } else if (cls == "must_reject") {
        t.cls = TestClass::kMustReject;
      } else if (cls == "informational") {
        t.cls = TestClass::kInformational;
      } else {
        throw SpecError(f + ".class", "expected must_pass, must_reject or informational");
      }
      t.params = b[i];
      t.params.erase("test");
      t.params.erase("class");
      spec.battery.push_back(std::move(t));
    }
  } else {
    throw SpecError("battery", "expected a preset name or an array of tests");
  }
  if (spec.battery.empty()) throw SpecError("battery", "must contain at least one test");
  for (std::size_t i = 0; i < spec.battery.size(); ++i) {
    if (!test_table().count(spec.battery[i].test)) {
      throw SpecError("battery[" + std::to_string(i) + "].test", "unknown test '" + spec.battery[i].test + "'");
    }
  }
  return spec;
}

ExperimentSpec load_spec(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw SpecError("<file>", "cannot open " + path.string());
  json j;
  try {
    j = json::parse(f);
  } catch (const json::parse_error& e) {
    throw SpecError("<file>", e.what());
  }
  return parse_spec(j);
}

nlohmann::ordered_json RunManifest::to_json(bool with_wall_time) const {
  nlohmann::ordered_json j;
  j["name"] = name;
  j["spec_hash"] = spec_hash;
  j["version"] = version;
  j["seed"] = seed;
  nlohmann::ordered_json reps = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < reports.size(); ++i) {
    auto r = sushi::to_json(reports[i]);
    r["class"] = report_classes[i];
    reps.push_back(std::move(r));
  }
  j["reports"] = std::move(reps);
  if (with_wall_time) j["wall_time_s"] = wall_time;
  j["exit_status"] = exit_status;
  return j;
}

RunManifest run(const ExperimentSpec& spec, const std::optional<std::filesystem::path>& out) {
  const auto start = std::chrono::steady_clock::now();
  const Context ctx = make_context(spec);
  // Resolve every test's parameters before any sampling.
  std::vector<TestEnv> envs;
  for (std::size_t i = 0; i < spec.battery.size(); ++i) envs.push_back(make_env(ctx, i));

  RunManifest m;
  m.name = spec.name;
  m.spec_hash = fnv1a_hex(spec.canonical);
  m.version = kArtifactVersion;
  m.seed = spec.seed;

  if (out) {
    std::filesystem::create_directories(*out / "reports");
    std::filesystem::create_directories(*out / "raw");
    Rng first = Rng(spec.seed, 0).substream(0);
    auto sample = ctx.realize(first);
    for (std::size_t c = 0; c < sample.size(); ++c) {
      DumpHeader h{spec.seed, first.stream_id(), spec.intensity.alpha.str()};
      write_file(*out / "raw" / ("realization_" + std::to_string(c) + ".csv"), to_csv(sample[c], h));
    }
  }

  for (std::size_t i = 0; i < spec.battery.size(); ++i) {
    const auto& entry = spec.battery[i];
    TestOutput res = test_table().at(entry.test)(envs[i]);
    for (std::size_t k = 0; k < res.reports.size(); ++k) {
      const auto& r = res.reports[k];
      m.reports.push_back(r);
      m.report_classes.push_back(class_name(entry.cls));
      if ((entry.cls == TestClass::kMustPass && r.reject) || (entry.cls == TestClass::kMustReject && !r.reject)) {
        m.exit_status = 1;
      }
      if (out) {
        auto j = to_json(r);
        j["class"] = class_name(entry.cls);
        std::string stem = std::to_string(i) + "_" + entry.test + (res.reports.size() > 1 ? "_" + std::to_string(k) : "");
        write_file(*out / "reports" / (stem + ".json"), j.dump(2) + "\n");
      }
    }
    if (out && !res.raw_rows.empty()) {
      std::string text = "# seed=" + std::to_string(spec.seed) + "\n# stream_id=" + std::to_string(envs[i].rng.stream_id()) +
                         "\n" + res.raw_header + "\n";
      for (const auto& row : res.raw_rows) text += row + "\n";
      write_file(*out / "raw" / (std::to_string(i) + "_" + slug(entry.test) + ".csv"), text);
    }
  }
  m.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (out) write_file(*out / "manifest.json", m.to_json().dump(2) + "\n");
  return m;
}

}  // namespace sushi
