#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "sushi/cluster.hpp"
#include "sushi/parallel.hpp"
#include "sushi/runner.hpp"
#include "sushi/stats.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace sushi;

namespace {

constexpr int kExitFailed = 1;
constexpr int kExitInvalid = 2;
constexpr int kExitOrbit = 3;

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + p.string());
  f << text;
}

// Options shared by the sampling subcommands.
struct SampleOptions {
  std::string intensity = "1";
  std::string window = "[0,10)";
  std::string transform = "translation";
  std::uint64_t seed = 1;
  long replicates = 2000;
  std::string out = ".";
};

void add_sample_options(CLI::App* cmd, SampleOptions& o) {
  cmd->add_option("--intensity", o.intensity, "Poisson intensity alpha (rational literal)");
  cmd->add_option("--window", o.window, "sampling window literal");
  cmd->add_option("--seed", o.seed, "master seed");
  cmd->add_option("-R,--replicates", o.replicates, "replicates for the JSON summary (>= 100)");
  cmd->add_option("--out", o.out, "output directory");
}

json base_spec(const std::string& name, const std::string& construction, const SampleOptions& o) {
  return json{{"name", name},
              {"transformation", o.transform},
              {"intensity", o.intensity},
              {"window", o.window},
              {"construction", construction},
              {"params", json::object()},
              {"battery", json::array({"mean"})},
              {"replicates", o.replicates},
              {"seed", o.seed}};
}

/// Writes component_<i>.csv for replicate 0 and summary.json over all
/// replicates: per-component rate and dispersion index, pairwise correlations.
nlohmann::ordered_json sample_and_summarize(const json& j, const SampleOptions& o, bool with_variance) {
  const ExperimentSpec spec = parse_spec(j);
  const ConstructionSampler cs = construction_sampler(spec);
  const fs::path out(o.out);
  fs::create_directories(out);

  Rng first = Rng(spec.seed, 0).substream(0);
  const auto sample = cs.draw(first);
  for (std::size_t c = 0; c < sample.size(); ++c) {
    DumpHeader h{spec.seed, first.stream_id(), spec.intensity.alpha.str()};
    write_text(out / ("component_" + std::to_string(c) + ".csv"), to_csv(sample[c], h));
  }

  const Rng base(spec.seed, 1);
  std::vector<std::vector<double>> counts(static_cast<std::size_t>(spec.replicates));
  parallel_for(counts.size(), [&](std::size_t r) {
    Rng s = base.substream(r);
    for (const auto& comp : cs.draw(s)) counts[r].push_back(count(comp, cs.observed));
  });
  const std::size_t k = sample.size();
  std::vector<std::vector<double>> cols(k);
  for (const auto& row : counts) {
    for (std::size_t c = 0; c < k; ++c) cols[c].push_back(row[c]);
  }

  const double len = cs.observed.length().to_double();
  nlohmann::ordered_json summary;
  summary["name"] = spec.name;
  summary["seed"] = spec.seed;
  summary["R"] = spec.replicates;
  summary["observed_window"] = cs.observed.str();
  nlohmann::ordered_json comps = nlohmann::ordered_json::array();
  for (std::size_t c = 0; c < k; ++c) {
    const double m = mean(cols[c]);
    const double v = variance(cols[c]);
    nlohmann::ordered_json e;
    e["component"] = c;
    e["rate"] = m / len;
    e["expected_rate"] = cs.rates[c];
    e["dispersion_index"] = m > 0 ? v / m : 0.0;
    if (with_variance) e["variance"] = v;
    comps.push_back(std::move(e));
  }
  summary["components"] = std::move(comps);
  nlohmann::ordered_json corr = nlohmann::ordered_json::array();
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t b = a + 1; b < k; ++b) {
      corr.push_back({{"pair", {a, b}}, {"correlation", correlation(cols[a], cols[b])}});
    }
  }
  summary["correlations"] = std::move(corr);
  write_text(out / "summary.json", summary.dump(2) + "\n");
  return summary;
}

json parse_probs(const std::string& text) {
  json p = json::parse("[" + text + "]", nullptr, false);
  if (p.is_discarded()) throw SpecError("params.probs", "expected comma-separated numbers");
  return p;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sushi-lab: equivariant point process simulation and verification"};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "worker threads (default: hardware concurrency)");

  auto* run_cmd = app.add_subcommand("run", "run an experiment spec");
  std::string spec_path;
  std::optional<std::string> out_dir;
  run_cmd->add_option("spec", spec_path, "spec JSON file")->required();
  run_cmd->add_option("--threads", threads, "worker threads");
  run_cmd->add_option("--out", out_dir, "output directory for manifest, reports and raw CSVs");

  auto* presets_cmd = app.add_subcommand("presets", "list transformation and battery presets");

  auto* orbit_cmd = app.add_subcommand("orbit", "print x, Tx, ..., T^k x as CSV");
  std::string orbit_preset;
  std::string orbit_x;
  long orbit_k = 0;
  orbit_cmd->add_option("preset", orbit_preset, "transformation preset")->required();
  orbit_cmd->add_option("x", orbit_x, "starting point (rational literal)")->required();
  orbit_cmd->add_option("k", orbit_k, "last power (negative walks backwards)")->required();

  SampleOptions split_o, thin_o, mark_o, sushi_o;
  std::string split_probs = "0.5,0.5";
  auto* split_cmd = app.add_subcommand("split", "Bernoulli split of a Poisson process");
  add_sample_options(split_cmd, split_o);
  split_cmd->add_option("--probs", split_probs, "component probabilities, comma separated");

  std::string kappa = "1";
  std::string core = "[1,9)";
  auto* thin_cmd = app.add_subcommand("thin-separation", "kappa-separation thinning of a Poisson process");
  add_sample_options(thin_cmd, thin_o);
  thin_cmd->add_option("--kappa", kappa, "separation distance");
  thin_cmd->add_option("--core", core, "evaluation window; the sampling window must contain it plus kappa");

  std::string mark_probs = "0.5,0.5";
  auto* mark_cmd = app.add_subcommand("mark", "i.i.d. marks on a Poisson process");
  add_sample_options(mark_cmd, mark_o);
  mark_cmd->add_option("--probs", mark_probs, "mark probabilities, comma separated");

  std::string law_path;
  std::string c_text = "unit";
  auto* sushi_cmd = app.add_subcommand("sushi", "cluster (SuShi) process of a ClusterLaw");
  add_sample_options(sushi_cmd, sushi_o);
  sushi_cmd->add_option("--law", law_path, "JSON file holding the ClusterLaw list")->required();
  sushi_cmd->add_option("--c", c_text, "Poisson rate of cluster origins, or \"unit\"");
  sushi_cmd->add_option("--transform", sushi_o.transform, "transformation preset");

  CLI11_PARSE(app, argc, argv);
  if (threads > 0) set_worker_threads(threads);

  try {
    if (*run_cmd) {
      const ExperimentSpec spec = load_spec(spec_path);
      std::optional<fs::path> out;
      if (out_dir) out = fs::path(*out_dir);
      const RunManifest m = run(spec, out);
      for (std::size_t i = 0; i < m.reports.size(); ++i) {
        const auto& r = m.reports[i];
        std::cout << (r.reject ? "reject " : "retain ") << m.report_classes[i] << "  " << r.name
                  << "  p=" << r.p_value << "\n";
      }
      std::cout << "exit_status " << m.exit_status << "  wall_time_s " << m.wall_time << "\n";
      return m.exit_status == 0 ? 0 : kExitFailed;
    }
    if (*presets_cmd) {
      for (const auto& p : list_presets()) std::cout << p.kind << "\t" << p.name << "\t" << p.description << "\n";
      return 0;
    }
    if (*orbit_cmd) {
      const TransformHandle t = transformation_preset(orbit_preset);
      const Rat x = Rat::parse(orbit_x);
      std::cout << orbit_csv(orbit(t, x, std::min(0L, orbit_k), std::max(0L, orbit_k)));
      return 0;
    }
    if (*split_cmd) {
      json j = base_spec("split", "split", split_o);
      j["params"]["probs"] = parse_probs(split_probs);
      std::cout << sample_and_summarize(j, split_o, false).dump(2) << "\n";
      return 0;
    }
    if (*thin_cmd) {
      json j = base_spec("thin-separation", "thin", thin_o);
      j["params"] = {{"kappa", kappa}, {"core", core}};
      std::cout << sample_and_summarize(j, thin_o, false).dump(2) << "\n";
      return 0;
    }
    if (*mark_cmd) {
      json j = base_spec("mark", "mark", mark_o);
      j["params"]["probs"] = parse_probs(mark_probs);
      std::cout << sample_and_summarize(j, mark_o, false).dump(2) << "\n";
      return 0;
    }
    if (*sushi_cmd) {
      std::ifstream f(law_path);
      if (!f) throw SpecError("--law", "cannot open " + law_path);
      json law = json::parse(f, nullptr, false);
      if (law.is_discarded()) throw SpecError("--law", "not valid JSON");
      json j = base_spec("sushi", "sushi", sushi_o);
      j["params"]["law"] = law;
      if (c_text == "unit") {
        j["params"]["c"] = "unit";
      } else {
        j["params"]["c"] = std::stod(c_text);
      }
      auto summary = sample_and_summarize(j, sushi_o, true);
      const ExperimentSpec spec = parse_spec(j);
      const ClusterLaw cl = parse_cluster_law(law);
      const double c = c_text == "unit" ? unit_intensity_c(cl) : std::stod(c_text);
      summary["closed_form"]["c"] = c;
      summary["closed_form"]["intensity"] = c * cl.mean_total_weight();
      summary["closed_form"]["variance"] = cluster_variance(c, cl, spec.transform, spec.window);
      write_text(fs::path(sushi_o.out) / "summary.json", summary.dump(2) + "\n");
      std::cout << summary.dump(2) << "\n";
      return 0;
    }
  } catch (const OrbitError& e) {
    std::cerr << "orbit error: point " << e.point().str() << ", power " << e.requested_power() << ", max stage "
              << e.max_stage() << ": " << e.what() << "\n";
    return kExitOrbit;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid: " << e.what() << "\n";
    return kExitInvalid;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailed;
  }
  return 0;
}
