#include "chaincont/manifest.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>

#include "chaincont/error.hpp"

namespace chaincont {
namespace {

using nlohmann::json;

[[noreturn]] void field_error(const std::string& field, const std::string& what) {
  throw Error(ErrorCode::kInvalidArgument, "manifest field '" + field + "': " + what);
}

json probes_json(std::initializer_list<std::pair<double, double>> probes) {
  json out = json::array();
  for (const auto& [lo, hi] : probes) out.push_back({lo, hi});
  return out;
}

json base_defaults(const std::string& experiment) {
  return json{
      {"experiment", experiment},
      {"master_seed", 42},
      {"replications", 1000},
      {"tower",
       {{"depth", 1},
        {"step", 0x1.0p-8},
        {"mode", "bridge_exact"},
        {"probes", probes_json({{0.0, 0.5}, {-1.0, 1.0}, {-0.1, 2.0}})}}},
      {"thresholds", {{"tol", 0.01}, {"alpha", 0.01}, {"window", 3}}},
      {"params", json::object()},
      {"output", {{"prefix", experiment}}},
  };
}

template <typename T>
T get_field(const json& node, const std::string& key, const std::string& path) {
  if (!node.contains(key)) field_error(path, "missing");
  try {
    return node.at(key).get<T>();
  } catch (const json::exception&) {
    field_error(path, "has the wrong type");
  }
}

void reject_unknown(const json& node, const json& reference, const std::string& path) {
  for (const auto& [key, value] : node.items()) {
    if (!reference.contains(key)) field_error(path + key, "unknown key");
    if (value.is_object() && reference.at(key).is_object() && !reference.at(key).empty()) {
      reject_unknown(value, reference.at(key), path + key + ".");
    }
  }
}

}  // namespace

const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names{
      "limit-interval", "witness", "oscillation-law", "log-moments",
      "reflection",     "claim2-tails", "walk-model",  "threads"};
  return names;
}

json default_manifest_json(const std::string& experiment) {
  const auto& names = experiment_names();
  if (std::find(names.begin(), names.end(), experiment) == names.end()) {
    throw Error(ErrorCode::kInvalidArgument, "unknown experiment '" + experiment + "'");
  }
  json m = base_defaults(experiment);
  json& p = m["params"];
  json& tower = m["tower"];
  if (experiment == "reflection") {
    m["replications"] = 100000;
    p = {{"cases", json::array({json::array({1.0, 0.5}), json::array({1.0, 1.0}),
                                json::array({2.0, 1.0})})},
         {"oracle_case", json::array({1.0, 1.0})},
         {"se_multiplier", 3.0}};
  } else if (experiment == "oscillation-law") {
    m["replications"] = 10000;
    p = {{"levels", json::array({2, 3})}, {"times", json::array({1.0})}};
  } else if (experiment == "log-moments") {
    m["replications"] = 10000;
    p = {{"levels", json::array({1, 2, 3})},
         {"times", json::array({0.25, 1.0, 4.0})},
         {"abs_log_small", 10000},
         {"abs_log_large", 100000},
         {"se_multiplier", 3.0}};
  } else if (experiment == "claim2-tails") {
    m["replications"] = 10000;
    p = {{"scales", json::array({6, 7, 8, 9, 10})}, {"points_per_scale", 256}};
  } else if (experiment == "limit-interval") {
    m["replications"] = 200;
    tower["depth"] = 16;
    tower["step"] = 0x1.0p-10;
    p = {{"depths", json::array({4, 8, 12, 16})},
         {"max_k", 8},
         {"monotone_fraction", 0.9}};
  } else if (experiment == "witness") {
    m["replications"] = 200;
    tower["depth"] = 16;
    tower["step"] = 0x1.0p-10;
    p = {{"max_k", 8}, {"all_positive_fraction", 1.0}, {"first_positive_fraction", 0.95}};
  } else if (experiment == "walk-model") {
    m["replications"] = 500;
    tower["depth"] = 8;
    p = {{"max_steps", 10000000},
         {"enumeration_cap", 1000000},
         {"k2_replications", 10000},
         {"se_multiplier", 3.0},
         {"dump_towers", 3}};
  } else if (experiment == "threads") {
    m["replications"] = 5;
    tower["depth"] = 16;
    tower["step"] = 0x1.0p-10;
    p = {{"thread_depth", 8}, {"points", 11}};
  }
  return m;
}

Manifest parse_manifest(const json& doc) {
  if (!doc.is_object()) field_error("<root>", "must be an object");
  const std::string experiment = get_field<std::string>(doc, "experiment", "experiment");
  json merged = default_manifest_json(experiment);
  reject_unknown(doc, merged, "");
  merged.merge_patch(doc);

  Manifest m;
  m.experiment = experiment;
  m.master_seed = get_field<std::uint64_t>(merged, "master_seed", "master_seed");
  const auto reps = get_field<std::int64_t>(merged, "replications", "replications");
  if (reps <= 0) field_error("replications", "must be positive");
  m.replications = static_cast<std::size_t>(reps);

  const json& tower = merged.at("tower");
  m.depth = get_field<int>(tower, "depth", "tower.depth");
  if (m.depth < 1) field_error("tower.depth", "must be positive");
  m.step = get_field<double>(tower, "step", "tower.step");
  if (!(m.step > 0.0)) field_error("tower.step", "must be positive");
  try {
    m.mode = extrema_kind_from_string(get_field<std::string>(tower, "mode", "tower.mode"));
  } catch (const Error& e) {
    field_error("tower.mode", e.what());
  }
  const json& probes = tower.at("probes");
  if (!probes.is_array() || probes.size() < 2) field_error("tower.probes", "need >= 2 probes");
  for (const auto& p : probes) {
    if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number()) {
      field_error("tower.probes", "each probe must be [lo, hi]");
    }
    const double lo = p[0].get<double>();
    const double hi = p[1].get<double>();
    if (!(lo < hi) || lo > 0.0 || hi < 0.0) {
      field_error("tower.probes", "probes must be non-degenerate and contain 0");
    }
    m.probes.emplace_back(lo, hi);
  }

  const json& th = merged.at("thresholds");
  m.tol = get_field<double>(th, "tol", "thresholds.tol");
  if (!(m.tol > 0.0)) field_error("thresholds.tol", "must be positive");
  m.alpha = get_field<double>(th, "alpha", "thresholds.alpha");
  if (!(m.alpha > 0.0 && m.alpha < 1.0)) field_error("thresholds.alpha", "must lie in (0, 1)");
  const auto window = get_field<std::int64_t>(th, "window", "thresholds.window");
  if (window < 1) field_error("thresholds.window", "must be positive");
  m.window = static_cast<std::size_t>(window);

  m.params = merged.at("params");
  m.output_prefix = get_field<std::string>(merged.at("output"), "prefix", "output.prefix");
  if (m.output_prefix.empty() || m.output_prefix.find('/') != std::string::npos) {
    field_error("output.prefix", "must be a plain file-name prefix");
  }
  return m;
}

Manifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open manifest " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kInvalidArgument, "manifest is not valid JSON: " + std::string(e.what()));
  }
  return parse_manifest(doc);
}

Manifest default_manifest(const std::string& experiment) {
  return parse_manifest(json{{"experiment", experiment}});
}

json Manifest::to_json() const {
  json probes_out = json::array();
  for (const auto& p : probes) probes_out.push_back({p.lo(), p.hi()});
  return json{
      {"experiment", experiment},
      {"master_seed", master_seed},
      {"replications", replications},
      {"tower",
       {{"depth", depth}, {"step", step}, {"mode", to_string(mode)}, {"probes", probes_out}}},
      {"thresholds", {{"tol", tol}, {"alpha", alpha}, {"window", window}}},
      {"params", params},
      {"output", {{"prefix", output_prefix}}},
  };
}

std::string Manifest::hash() const {
  const std::string canonical = to_json().dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : canonical) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace chaincont
