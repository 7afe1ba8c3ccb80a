#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "carnot/group.hpp"

namespace carnot {

inline constexpr const char* kToolkitVersion = "0.1.0";

using Json = nlohmann::json;

struct ExperimentConfig {
  std::string group;       // preset name or "spec:<path>"
  std::string experiment;  // catalog name
  Json params = Json::object();
  std::uint64_t seed = 0;
  std::string outdir;

  static ExperimentConfig from_json(const Json& j);
  static ExperimentConfig from_file(const std::string& path);
  Json to_json() const;
};

struct CheckResult {
  std::string name;
  bool pass = false;
  double measured = 0.0;
  double tolerance = 0.0;
  std::string comparison;  // "<=", ">=", "|.-x|<="
  std::string anchor;      // paper anchor of the statement under test
  std::string detail;
};

struct RunManifest {
  ExperimentConfig config;
  std::string toolkit_version = kToolkitVersion;
  double wall_seconds = 0.0;
  std::string timestamp;  // isolated here; never in CSV outputs
  std::vector<CheckResult> checks;
  bool all_pass = true;

  Json to_json() const;
  std::string summary() const;
};

struct ExperimentInfo {
  std::string name;
  std::string anchor;
  std::string description;
};

const std::vector<ExperimentInfo>& experiment_catalog();

// Central tolerance policy; every entry can be overridden per run through
// params["tol"][name].
const std::map<std::string, double>& tolerance_defaults();

CarnotGroup group_from_name(const std::string& name);

// Executes the named campaign, writing manifest.json, per-experiment CSV
// and plot series under config.outdir.
RunManifest run_experiment(const ExperimentConfig& config);

}  // namespace carnot
