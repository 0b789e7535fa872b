#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "chaincont/manifest.hpp"

namespace chaincont {

enum ExitStatus : int {
  kExitPass = 0,
  kExitStatisticalFailure = 1,
  kExitUsage = 2,
  kExitResourceCap = 3,
};

struct RunOptions {
  std::filesystem::path out_dir = ".";
  unsigned workers = 1;
};

// One pass/fail gate, serialized as {test, params, statistic, threshold, pass, seeds}.
struct Check {
  std::string test;
  nlohmann::json params = nlohmann::json::object();
  double statistic = 0.0;
  double threshold = 0.0;
  bool pass = false;
  nlohmann::json seeds = nlohmann::json::object();

  nlohmann::json to_json() const;
};

struct ExperimentOutcome {
  int exit_status = kExitPass;
  std::vector<Check> checks;
  nlohmann::json summary = nlohmann::json::object();
  std::vector<std::filesystem::path> files;

  const Check* find(const std::string& test) const;
};

// Runs the manifest's experiment, writes its outputs under opts.out_dir and
// returns the checks. Results do not depend on opts.workers.
ExperimentOutcome run_experiment(const Manifest& manifest, const RunOptions& opts);

}  // namespace chaincont
