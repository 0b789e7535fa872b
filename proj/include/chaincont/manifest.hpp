#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "chaincont/interval.hpp"
#include "chaincont/path.hpp"

namespace chaincont {

// Everything that determines an experiment run. Loaded from a JSON file and
// layered over the per-experiment defaults from default_manifest_json().
struct Manifest {
  std::string experiment;
  std::uint64_t master_seed = 42;
  std::size_t replications = 0;
  int depth = 1;
  double step = 0x1.0p-8;
  ExtremaKind mode = ExtremaKind::kBridgeExact;
  std::vector<Interval> probes;
  double tol = 0.01;
  double alpha = 0.01;
  std::size_t window = 3;
  nlohmann::json params = nlohmann::json::object();  // experiment-specific knobs
  std::string output_prefix;

  nlohmann::json to_json() const;
  // FNV-1a 64 over the canonical JSON form, as 16 hex digits.
  std::string hash() const;
};

const std::vector<std::string>& experiment_names();

nlohmann::json default_manifest_json(const std::string& experiment);

// Throws Error(kInvalidArgument) with the offending field named.
Manifest parse_manifest(const nlohmann::json& doc);
Manifest load_manifest(const std::filesystem::path& path);
// Defaults for `experiment` with no overrides.
Manifest default_manifest(const std::string& experiment);

}  // namespace chaincont
