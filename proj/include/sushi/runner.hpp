#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sushi/cluster.hpp"
#include "sushi/dynamics.hpp"
#include "sushi/point_process.hpp"
#include "sushi/stats.hpp"

namespace sushi {

inline constexpr const char* kArtifactVersion = "0.1.0";

/// Invalid experiment spec; the message starts with the offending field.
class SpecError : public std::invalid_argument {
 public:
  SpecError(const std::string& field, const std::string& message)
      : std::invalid_argument("field '" + field + "': " + message), field_(field) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

enum class Construction { kPoisson, kSplit, kThin, kMark, kSushi, kId };

/// must_pass fails the run when the test rejects; must_reject fails it when
/// the test retains (counterexample batteries); informational never does.
enum class TestClass { kMustPass, kMustReject, kInformational };

struct BatteryTest {
  std::string test;
  TestClass cls = TestClass::kMustPass;
  nlohmann::json params = nlohmann::json::object();
};

struct ExperimentSpec {
  std::string name;
  TransformHandle transform = TransformHandle::translation(Rat(1));
  IntensitySpec intensity;
  Window window;
  Construction construction = Construction::kPoisson;
  nlohmann::json params = nlohmann::json::object();
  std::vector<BatteryTest> battery;
  long replicates = 0;
  std::uint64_t seed = 0;
  double family_level = kDefaultLevel;
  /// Canonical JSON text the spec was parsed from (hashed into the manifest).
  std::string canonical;
};

/// Parses and validates a spec; every precondition that can be checked
/// before sampling is checked here.
ExperimentSpec parse_spec(const nlohmann::json& j);
ExperimentSpec load_spec(const std::filesystem::path& path);

TransformHandle parse_transformation(const nlohmann::json& j);
ClusterLaw parse_cluster_law(const nlohmann::json& j);

struct RunManifest {
  std::string name;
  std::string spec_hash;
  std::string version;
  std::uint64_t seed = 0;
  std::vector<TestReport> reports;
  std::vector<std::string> report_classes;  // parallel to reports
  double wall_time = 0;
  int exit_status = 0;

  nlohmann::ordered_json to_json(bool with_wall_time = true) const;
};

/// Runs the construction and its battery. With `out`, writes manifest.json,
/// reports/*.json and raw/*.csv below it.
RunManifest run(const ExperimentSpec& spec, const std::optional<std::filesystem::path>& out = std::nullopt);

/// The construction of a validated spec as a sampler of its components.
struct ConstructionSampler {
  std::function<std::vector<WeightedConfig>(Rng&)> draw;
  Window observed;            // window every component is read on
  std::vector<double> rates;  // expected intensity per component
};
ConstructionSampler construction_sampler(const ExperimentSpec& spec);

struct Preset {
  std::string name;
  std::string kind;  // "transformation" or "battery"
  std::string description;
};
std::vector<Preset> list_presets();

/// Transformation preset by name ("translation", "chacon3", "rank1-growing").
TransformHandle transformation_preset(const std::string& name);
/// Battery preset by name; throws SpecError for unknown names.
std::vector<BatteryTest> battery_preset(const std::string& name);

std::string fnv1a_hex(const std::string& text);

}  // namespace sushi
