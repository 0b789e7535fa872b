// chaincont run <experiment> [--manifest file] [--out dir] [--workers n] [--seed u64]
#include <cstdint>
#include <cstdio>
#include <algorithm>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "chaincont/chaincont.h"

namespace {

constexpr int kExitUsage = 2;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Random chainable continua: experiment runner"};
  app.set_version_flag("--version", std::string(cc_version()));
  app.require_subcommand(1);

  CLI::App* run = app.add_subcommand("run", "Run one experiment");
  std::string experiment;
  std::string manifest;
  std::string out_dir;
  unsigned workers = 0;
  std::uint64_t seed = 0;

  std::vector<std::string> names;
  for (size_t i = 0; i < cc_experiment_count(); ++i) names.emplace_back(cc_experiment_name(i));
  run->add_option("experiment", experiment, "Experiment name")
      ->required()
      ->check(CLI::IsMember(names));
  run->add_option("--manifest", manifest, "JSON manifest (defaults are used when omitted)")
      ->check(CLI::ExistingFile);
  run->add_option("--out", out_dir, "Output directory (default $CHAINCONT_OUT_DIR or .)");
  run->add_option("--workers", workers, "Worker threads (default: hardware concurrency)")
      ->check(CLI::Range(1u, 1024u));
  CLI::Option* seed_opt = run->add_option("--seed", seed, "Override the manifest master seed");

  CLI::App* list = app.add_subcommand("list", "List experiment names");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  if (list->parsed()) {
    for (const auto& n : names) std::printf("%s\n", n.c_str());
    return 0;
  }

  if (out_dir.empty()) {
    const char* env = std::getenv("CHAINCONT_OUT_DIR");
    out_dir = env != nullptr && *env != '\0' ? env : ".";
  }
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());

  int exit_status = kExitUsage;
  const cc_status st =
      cc_run_experiment(experiment.c_str(), manifest.empty() ? nullptr : manifest.c_str(),
                        out_dir.c_str(), workers, seed_opt->count() > 0 ? 1 : 0, seed,
                        &exit_status);
  if (st != CC_OK) std::fprintf(stderr, "chaincont: %s\n", cc_last_error());
  static const char* const kStatus[] = {"pass", "statistical failure", "usage error",
                                        "resource cap reached"};
  std::printf("%s: %s (see %s)\n", experiment.c_str(),
              exit_status >= 0 && exit_status <= 3 ? kStatus[exit_status] : "unknown",
              out_dir.c_str());
  return exit_status;
}
