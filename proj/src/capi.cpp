#include "chaincont/chaincont.h"

#include <cstring>
#include <exception>
#include <memory>
#include <string>
#include <vector>

#include "chaincont/error.hpp"
#include "chaincont/experiments.hpp"
#include "chaincont/interval.hpp"
#include "chaincont/manifest.hpp"
#include "chaincont/path.hpp"
#include "chaincont/stats.hpp"
#include "chaincont/tower.hpp"
#include "chaincont/walk.hpp"

struct cc_path {
  std::unique_ptr<chaincont::PathSource> source;
  chaincont::LazyBrownianPath* brownian = nullptr;  // non-owning view of source
};

struct cc_tower {
  chaincont::CompositionTower tower;
};

struct cc_walk_tower {
  chaincont::WalkTower tower;
};

namespace {

thread_local std::string last_error;

cc_status fail(cc_status status, const std::string& what) {
  last_error = what;
  return status;
}

template <typename Fn>
cc_status guarded(Fn&& fn) {
  try {
    fn();
    last_error.clear();
    return CC_OK;
  } catch (const chaincont::Error& e) {
    return fail(static_cast<cc_status>(e.code()), e.what());
  } catch (const std::exception& e) {
    return fail(CC_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(CC_ERR_INTERNAL, "unknown exception");
  }
}

void require(bool ok, const char* what) {
  if (!ok) throw chaincont::Error(chaincont::ErrorCode::kInvalidArgument, what);
}

chaincont::ExtremaKind to_kind(cc_extrema_kind kind) {
  require(kind == CC_EXTREMA_GRID || kind == CC_EXTREMA_BRIDGE_EXACT, "unknown extrema kind");
  return kind == CC_EXTREMA_GRID ? chaincont::ExtremaKind::kGrid
                                 : chaincont::ExtremaKind::kBridgeExact;
}

chaincont::LazyBrownianPath& brownian_of(cc_path* path) {
  require(path != nullptr, "null path");
  require(path->brownian != nullptr, "operation needs a Brownian path");
  return *path->brownian;
}

}  // namespace

extern "C" {

const char* cc_version(void) { return "1.0.0"; }

const char* cc_last_error(void) { return last_error.c_str(); }

cc_status cc_interval_dist(double a_lo, double a_hi, double b_lo, double b_hi, double* out) {
  return guarded([&] {
    require(out != nullptr, "null output");
    *out = chaincont::dist(chaincont::Interval(a_lo, a_hi), chaincont::Interval(b_lo, b_hi));
  });
}

cc_status cc_interval_scale(double c, double lo, double hi, double* out_lo, double* out_hi) {
  return guarded([&] {
    require(out_lo != nullptr && out_hi != nullptr, "null output");
    const auto r = chaincont::scale(c, chaincont::Interval(lo, hi));
    *out_lo = r.lo();
    *out_hi = r.hi();
  });
}

cc_status cc_interval_witness(double lo, double hi, double* out) {
  return guarded([&] {
    require(out != nullptr, "null output");
    *out = chaincont::witness_w(chaincont::Interval(lo, hi));
  });
}

cc_status cc_path_new_brownian(uint64_t seed, double base_step, cc_path** out) {
  return guarded([&] {
    require(out != nullptr, "null output");
    auto path = std::make_unique<cc_path>();
    auto source = chaincont::make_brownian(seed, base_step);
    path->brownian = source.get();
    path->source = std::move(source);
    *out = path.release();
  });
}

cc_status cc_path_new_deterministic(const char* formula, double param, cc_path** out) {
  return guarded([&] {
    require(out != nullptr && formula != nullptr, "null argument");
    auto path = std::make_unique<cc_path>();
    path->source = chaincont::make_deterministic(formula, param);
    *out = path.release();
  });
}

void cc_path_free(cc_path* path) { delete path; }

cc_status cc_path_value_at(cc_path* path, double t, double* out) {
  return guarded([&] {
    require(path != nullptr && out != nullptr, "null argument");
    *out = path->source->value_at(t);
  });
}

cc_status cc_path_refine(cc_path* path, double lo, double hi, double step) {
  return guarded([&] { brownian_of(path).refine(chaincont::Interval(lo, hi), step); });
}

cc_status cc_path_extrema(cc_path* path, double lo, double hi, cc_extrema_kind kind,
                          double step, uint64_t subseed, double* out_min, double* out_max) {
  return guarded([&] {
    require(path != nullptr && out_min != nullptr && out_max != nullptr, "null argument");
    require(step > 0.0, "step must be positive");
    const auto e = path->source->extrema(chaincont::Interval(lo, hi),
                                         chaincont::ExtremaMode{to_kind(kind), step, subseed});
    *out_min = e.min;
    *out_max = e.max;
  });
}

cc_status cc_path_node_count(cc_path* path, size_t* out) {
  return guarded([&] {
    require(out != nullptr, "null output");
    *out = brownian_of(path).node_count();
  });
}

cc_status cc_path_dump_csv(cc_path* path, const char* file) {
  return guarded([&] {
    require(file != nullptr, "null file name");
    auto& b = brownian_of(path);
    std::FILE* f = std::fopen(file, "wb");
    if (f == nullptr) throw chaincont::Error(chaincont::ErrorCode::kIo, std::string("cannot open ") + file);
    std::fputs("time,value\n", f);
    for (const auto& [t, v] : b.nodes()) std::fprintf(f, "%.17g,%.17g\n", t, v);
    std::fclose(f);
  });
}

cc_status cc_tower_new_brownian(uint64_t master_seed, int depth, cc_extrema_kind kind,
                                double step, cc_tower** out) {
  return guarded([&] {
    require(out != nullptr, "null output");
    *out = new cc_tower{chaincont::CompositionTower::brownian(master_seed, depth, to_kind(kind), step)};
  });
}

cc_status cc_tower_new_deterministic(const char* formula, int depth, double param, double step,
                                     cc_tower** out) {
  return guarded([&] {
    require(out != nullptr && formula != nullptr, "null argument");
    *out = new cc_tower{chaincont::CompositionTower::deterministic(formula, depth, param, step)};
  });
}

void cc_tower_free(cc_tower* tower) { delete tower; }

cc_status cc_tower_compose_image(cc_tower* tower, int k_from, int k_to, double lo, double hi,
                                 double* out_lo, double* out_hi) {
  return guarded([&] {
    require(tower != nullptr && out_lo != nullptr && out_hi != nullptr, "null argument");
    const auto r = tower->tower.compose_image(k_from, k_to, chaincont::Interval(lo, hi));
    *out_lo = r.lo();
    *out_hi = r.hi();
  });
}

cc_status cc_tower_estimate_limits(cc_tower* tower, const double* probes, size_t n_probes,
                                   double tol, size_t window, int max_k) {
  return guarded([&] {
    require(tower != nullptr && probes != nullptr, "null argument");
    std::vector<chaincont::Interval> list;
    for (size_t i = 0; i < n_probes; ++i) list.emplace_back(probes[2 * i], probes[2 * i + 1]);
    tower->tower.estimate_limit_intervals(list, tol, window, max_k);
  });
}

cc_status cc_tower_limit_interval(const cc_tower* tower, int k, double* out_lo, double* out_hi,
                                  int* out_converged, double* out_cross_probe_dist) {
  return guarded([&] {
    require(tower != nullptr, "null tower");
    const auto& est = tower->tower.limit_estimates();
    if (k < 1 || k > static_cast<int>(est.size())) {
      throw chaincont::Error(chaincont::ErrorCode::kInsufficientData, "no estimate for k");
    }
    const auto& e = est[static_cast<size_t>(k - 1)];
    if (out_lo) *out_lo = e.interval.lo();
    if (out_hi) *out_hi = e.interval.hi();
    if (out_converged) *out_converged = e.converged ? 1 : 0;
    if (out_cross_probe_dist) *out_cross_probe_dist = e.cross_probe_dist();
  });
}

cc_status cc_tower_witness_sequence(const cc_tower* tower, int count, double* out) {
  return guarded([&] {
    require(tower != nullptr && out != nullptr, "null argument");
    const auto w = tower->tower.witness_sequence(count);
    std::copy(w.begin(), w.end(), out);
  });
}

cc_status cc_tower_sample_thread(cc_tower* tower, double x_final, int m, double* out) {
  return guarded([&] {
    require(tower != nullptr && out != nullptr, "null argument");
    const auto th = tower->tower.sample_thread(x_final, m);
    std::copy(th.coords.begin(), th.coords.end(), out);
  });
}

cc_status cc_tower_thread_unit_coords(const cc_tower* tower, const double* coords, int m,
                                      double* out) {
  return guarded([&] {
    require(tower != nullptr && coords != nullptr && out != nullptr && m >= 1, "bad argument");
    chaincont::Thread th;
    th.coords.assign(coords, coords + m);
    const auto u = tower->tower.thread_unit_coords(th);
    std::copy(u.begin(), u.end(), out);
  });
}

cc_status cc_tower_oscillation(cc_tower* tower, int k, double t, double* out) {
  return guarded([&] {
    require(tower != nullptr && out != nullptr, "null argument");
    *out = tower->tower.oscillation_sample(k, t);
  });
}

cc_status cc_walk_tower_generate(uint64_t seed, int depth, uint64_t max_steps,
                                 cc_walk_tower** out) {
  return guarded([&] {
    require(out != nullptr, "null output");
    *out = new cc_walk_tower{chaincont::generate_tower(seed, depth, max_steps)};
  });
}

void cc_walk_tower_free(cc_walk_tower* tower) { delete tower; }

int cc_walk_tower_depth(const cc_walk_tower* tower) {
  return tower == nullptr ? 0 : tower->tower.depth();
}

cc_status cc_walk_tower_size(const cc_walk_tower* tower, int n, uint64_t* out) {
  return guarded([&] {
    require(tower != nullptr && out != nullptr, "null argument");
    require(n >= 0 && n < static_cast<int>(tower->tower.sizes.size()), "level out of range");
    *out = tower->tower.sizes[static_cast<size_t>(n)];
  });
}

cc_status cc_walk_tower_value(const cc_walk_tower* tower, int n, uint64_t x, uint32_t* out) {
  return guarded([&] {
    require(tower != nullptr && out != nullptr, "null argument");
    require(n >= 0 && n < tower->tower.depth(), "level out of range");
    const auto& w = tower->tower.walks[static_cast<size_t>(n)];
    require(x >= 1 && x <= w.domain_size(), "position out of range");
    *out = w(static_cast<size_t>(x));
  });
}

cc_status cc_walk_tower_to_json(const cc_walk_tower* tower, char* buf, size_t* len) {
  if (tower == nullptr || len == nullptr) return fail(CC_ERR_INVALID_ARGUMENT, "null argument");
  std::string text;
  const cc_status st = guarded([&] { text = chaincont::tower_to_json(tower->tower).dump(); });
  if (st != CC_OK) return st;
  const size_t need = text.size() + 1;
  if (buf == nullptr || *len < need) {
    *len = need;
    return fail(CC_ERR_INSUFFICIENT_DATA, "buffer too small");
  }
  std::memcpy(buf, text.c_str(), need);
  *len = need;
  return CC_OK;
}

cc_status cc_walk_graph_stats(const cc_walk_tower* tower, int m, size_t cap, cc_graph_stats* out) {
  return guarded([&] {
    require(tower != nullptr && out != nullptr, "null argument");
    const auto s = chaincont::r_graph(chaincont::enumerate_threads(tower->tower, m, cap));
    *out = cc_graph_stats{s.thread_count, s.edge_count, s.components,
                          s.max_clique,   s.triple_count, s.triple_threads};
  });
}

cc_status cc_ks_two_sample(const double* a, size_t na, const double* b, size_t nb, double alpha,
                           double* out_statistic, double* out_threshold, int* out_pass) {
  return guarded([&] {
    require(a != nullptr && b != nullptr, "null sample");
    chaincont::SampleSet sa{{a, a + na}, "a", {}};
    chaincont::SampleSet sb{{b, b + nb}, "b", {}};
    const auto r = chaincont::ks_two_sample(sa, sb, alpha);
    if (out_statistic) *out_statistic = r.statistic;
    if (out_threshold) *out_threshold = r.threshold;
    if (out_pass) *out_pass = r.pass ? 1 : 0;
  });
}

cc_status cc_run_experiment(const char* experiment, const char* manifest_path,
                            const char* out_dir, unsigned workers, int has_seed_override,
                            uint64_t seed_override, int* out_exit_status) {
  int exit_status = chaincont::kExitUsage;
  const cc_status st = guarded([&] {
    require(experiment != nullptr, "null experiment name");
    chaincont::Manifest manifest = manifest_path == nullptr
                                       ? chaincont::default_manifest(experiment)
                                       : chaincont::load_manifest(manifest_path);
    if (manifest.experiment != experiment) {
      throw chaincont::Error(chaincont::ErrorCode::kInvalidArgument,
                             "manifest is for '" + manifest.experiment + "', not '" +
                                 experiment + "'");
    }
    if (has_seed_override) manifest.master_seed = seed_override;
    chaincont::RunOptions opts;
    opts.out_dir = out_dir == nullptr ? "." : out_dir;
    opts.workers = workers == 0 ? 1 : workers;
    exit_status = chaincont::run_experiment(manifest, opts).exit_status;
  });
  if (st != CC_OK) {
    exit_status = st == CC_ERR_INVALID_ARGUMENT || st == CC_ERR_IO ? chaincont::kExitUsage
                  : st == CC_ERR_ENUMERATION_OVERFLOW || st == CC_ERR_TRUNCATION_FAILURE
                      ? chaincont::kExitResourceCap
                      : chaincont::kExitStatisticalFailure;
  }
  if (out_exit_status) *out_exit_status = exit_status;
  return st;
}

size_t cc_experiment_count(void) { return chaincont::experiment_names().size(); }

const char* cc_experiment_name(size_t index) {
  const auto& names = chaincont::experiment_names();
  return index < names.size() ? names[index].c_str() : nullptr;
}

}  // extern "C"
