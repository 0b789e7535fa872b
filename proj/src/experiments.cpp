#include "chaincont/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "chaincont/error.hpp"
#include "chaincont/rng.hpp"
#include "chaincont/stats.hpp"
#include "chaincont/tower.hpp"
#include "chaincont/walk.hpp"

namespace chaincont {
namespace {

using nlohmann::json;

constexpr std::uint64_t kProductSalt = 0x70726f64756374ULL;  // "product"
constexpr std::uint64_t kSmallSampleSalt = 0x736d616c6cULL;  // "small"
constexpr std::uint64_t kLargeSampleSalt = 0x6c61726765ULL;  // "large"
constexpr std::uint64_t kK2Salt = 0x6b32ULL;                 // "k2"

// Runs fn(i) for i in [0, n) on `workers` threads. Slot i of the result only
// depends on i, so the outcome is independent of scheduling.
template <typename T>
std::vector<T> parallel_map(std::size_t n, unsigned workers, const std::function<T(std::size_t)>& fn) {
  std::vector<T> out(n);
  workers = std::max(1U, std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) out[i] = fn(i);
    return out;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          out[i] = fn(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
          next = n;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
  return out;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

class CsvWriter {
 public:
  CsvWriter(const std::string& hash, std::initializer_list<const char*> columns) {
    out_ << "# manifest_hash=" << hash << '\n';
    bool first = true;
    for (const char* c : columns) {
      out_ << (first ? "" : ",") << c;
      first = false;
    }
    out_ << '\n';
  }

  template <typename... Ts>
  void row(const Ts&... cells) {
    bool first = true;
    ((out_ << (first ? "" : ",") << cell(cells), first = false), ...);
    out_ << '\n';
  }

  std::string str() const { return out_.str(); }

 private:
  static std::string cell(double v) { return num(v); }
  static std::string cell(const std::string& s) { return s; }
  static std::string cell(const char* s) { return s; }
  static std::string cell(bool b) { return b ? "true" : "false"; }
  template <typename I>
    requires std::is_integral_v<I>
  static std::string cell(I v) {
    return std::to_string(v);
  }

  std::ostringstream out_;
};

// Shared state of one run: manifest, outputs, checks.
class Run {
 public:
  Run(const Manifest& m, const RunOptions& opts) : m_(m), opts_(opts), hash_(m.hash()) {
    std::error_code ec;
    std::filesystem::create_directories(opts.out_dir, ec);
    if (ec) throw Error(ErrorCode::kIo, "cannot create output directory " + opts.out_dir.string());
  }

  const Manifest& m() const { return m_; }
  const std::string& hash() const { return hash_; }
  unsigned workers() const { return opts_.workers; }

  json seeds(std::size_t count, const std::string& derivation) const {
    return json{{"master_seed", m_.master_seed},
                {"replications", count},
                {"derivation", derivation}};
  }

  void write(const std::string& suffix, const std::string& content) {
    const auto path = opts_.out_dir / (m_.output_prefix + suffix);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
    out << content;
    outcome_.files.push_back(path);
  }

  void check(std::string test, json params, double statistic, double threshold, bool pass,
             json seeds) {
    outcome_.checks.push_back(
        Check{std::move(test), std::move(params), statistic, threshold, pass, std::move(seeds)});
  }

  json& summary() { return outcome_.summary; }
  void hit_resource_cap() { resource_cap_ = true; }

  ExperimentOutcome finish() {
    const bool all_pass = std::all_of(outcome_.checks.begin(), outcome_.checks.end(),
                                      [](const Check& c) { return c.pass; });
    outcome_.exit_status = resource_cap_ ? kExitResourceCap
                           : all_pass    ? kExitPass
                                         : kExitStatisticalFailure;
    json checks = json::array();
    for (const auto& c : outcome_.checks) checks.push_back(c.to_json());
    const json report{{"experiment", m_.experiment},
                      {"manifest_hash", hash_},
                      {"manifest", m_.to_json()},
                      {"checks", checks},
                      {"summary", outcome_.summary},
                      {"pass", all_pass && !resource_cap_},
                      {"exit_status", outcome_.exit_status}};
    write("_report.json", report.dump(2) + "\n");
    return std::move(outcome_);
  }

 private:
  const Manifest& m_;
  const RunOptions& opts_;
  std::string hash_;
  ExperimentOutcome outcome_;
  bool resource_cap_ = false;
};

template <typename T>
std::vector<T> param_list(const Manifest& m, const char* key) {
  try {
    return m.params.at(key).get<std::vector<T>>();
  } catch (const json::exception&) {
    throw Error(ErrorCode::kInvalidArgument,
                std::string("manifest field 'params.") + key + "' has the wrong type");
  }
}

template <typename T>
T param(const Manifest& m, const char* key) {
  try {
    return m.params.at(key).get<T>();
  } catch (const json::exception&) {
    throw Error(ErrorCode::kInvalidArgument,
                std::string("manifest field 'params.") + key + "' has the wrong type");
  }
}

ExtremaMode replication_mode(const Manifest& m, std::uint64_t seed, double step) {
  return ExtremaMode{m.mode, step, derive_seed(seed ^ CompositionTower::kSubseedSalt, 0)};
}

// ---------------------------------------------------------------------------

void run_reflection(Run& run) {
  const Manifest& m = run.m();
  const auto cases = param_list<std::vector<double>>(m, "cases");
  const auto oracle = param_list<double>(m, "oracle_case");
  const double z = param<double>(m, "se_multiplier");
  std::set<double> times;
  for (const auto& c : cases) {
    if (c.size() != 2 || !(c[0] > 0.0) || !(c[1] > 0.0)) {
      throw Error(ErrorCode::kInvalidArgument, "manifest field 'params.cases': need [t, a] > 0");
    }
    times.insert(c[0]);
  }
  const std::vector<double> tlist(times.begin(), times.end());

  struct Sample {
    std::vector<double> max;
    std::vector<double> end;
  };
  const auto samples = parallel_map<Sample>(m.replications, run.workers(), [&](std::size_t r) {
    const std::uint64_t seed = derive_seed(m.master_seed, r);
    LazyBrownianPath path(seed);
    const ExtremaMode mode = replication_mode(m, seed, m.step);
    Sample s;
    for (double t : tlist) {
      s.max.push_back(path.extrema(Interval(0.0, t), mode).max);
      s.end.push_back(path.value_at(t));
    }
    return s;
  });

  const double n = static_cast<double>(m.replications);
  CsvWriter csv(run.hash(), {"t", "a", "p_max", "p_end", "two_p_end", "combined_se", "step"});
  json rows = json::array();
  for (const auto& c : cases) {
    const double t = c[0];
    const double a = c[1];
    const auto ti = static_cast<std::size_t>(
        std::find(tlist.begin(), tlist.end(), t) - tlist.begin());
    double hits_max = 0;
    double hits_end = 0;
    for (const auto& s : samples) {
      hits_max += s.max[ti] > a;
      hits_end += s.end[ti] > a;
    }
    const double pm = hits_max / n;
    const double pe = hits_end / n;
    const double se = std::sqrt(pm * (1 - pm) / n + 4.0 * pe * (1 - pe) / n);
    csv.row(t, a, pm, pe, 2 * pe, se, m.step);
    run.check("reflection_t" + num(t) + "_a" + num(a),
              {{"t", t}, {"a", a}, {"p_max", pm}, {"two_p_end", 2 * pe}, {"se_multiplier", z},
               {"relation", "|p_max - 2 p_end| <= se_multiplier * combined_se"}},
              std::abs(pm - 2 * pe), z * se, std::abs(pm - 2 * pe) <= z * se,
              run.seeds(m.replications, "derive_seed(master_seed, r)"));
    if (oracle.size() == 2 && oracle[0] == t && oracle[1] == a) {
      const double exact = 2.0 * (1.0 - normal_cdf(a / std::sqrt(t)));
      const double se_m = std::sqrt(pm * (1 - pm) / n);
      run.check("reflection_oracle_t" + num(t) + "_a" + num(a),
                {{"t", t}, {"a", a}, {"p_max", pm}, {"oracle", exact},
                 {"relation", "|p_max - 2(1 - Phi(a / sqrt t))| <= se_multiplier * se"}},
                std::abs(pm - exact), z * se_m, std::abs(pm - exact) <= z * se_m,
                run.seeds(m.replications, "derive_seed(master_seed, r)"));
    }
  }
  run.write("_rows.csv", csv.str());
}

// Delta_k(t) for replication r of a tower family keyed by `family`.
double oscillation(const Manifest& m, std::uint64_t family, std::size_t r, int k, double t) {
  CompositionTower tower =
      CompositionTower::brownian(derive_seed(family, r), k, m.mode, m.step);
  return tower.oscillation_sample(k, t);
}

void run_oscillation_law(Run& run) {
  const Manifest& m = run.m();
  const auto levels = param_list<int>(m, "levels");
  const auto times = param_list<double>(m, "times");
  CsvWriter csv(run.hash(), {"k", "t", "source", "replication", "delta"});
  for (int k : levels) {
    if (k < 1) throw Error(ErrorCode::kInvalidArgument, "manifest field 'params.levels': k >= 1");
    const std::uint64_t direct_family = derive_seed(m.master_seed, static_cast<std::uint64_t>(k));
    const std::uint64_t product_family =
        derive_seed(m.master_seed ^ kProductSalt, static_cast<std::uint64_t>(k));
    // D_i are independent copies of Delta_1(1).
    const auto d = parallel_map<std::vector<double>>(m.replications, run.workers(), [&](std::size_t r) {
      std::vector<double> out;
      for (int i = 0; i < k; ++i) {
        out.push_back(oscillation(m, product_family, r * static_cast<std::size_t>(k) + i, 1, 1.0));
      }
      return out;
    });
    for (double t : times) {
      if (!(t > 0.0)) throw Error(ErrorCode::kInvalidArgument, "manifest field 'params.times': t > 0");
      SampleSet direct{parallel_map<double>(m.replications, run.workers(),
                                            [&](std::size_t r) { return oscillation(m, direct_family, r, k, t); }),
                       "direct", {}};
      SampleSet product{{}, "product", {}};
      for (const auto& ds : d) {
        double v = std::pow(t, std::ldexp(1.0, -k));
        for (int i = 1; i <= k; ++i) v *= std::pow(ds[static_cast<std::size_t>(i - 1)], std::ldexp(1.0, -(i - 1)));
        product.values.push_back(v);
      }
      for (std::size_t r = 0; r < direct.size(); ++r) {
        csv.row(k, t, "direct", r, direct.values[r]);
        csv.row(k, t, "product", r, product.values[r]);
      }
      const KsResult ks = ks_two_sample(direct, product, m.alpha);
      run.check("oscillation_product_law_k" + std::to_string(k) + "_t" + num(t),
                {{"k", k}, {"t", t}, {"alpha", m.alpha}, {"n", m.replications},
                 {"relation", "KS statistic < c(alpha) sqrt((n+m)/(n m))"}},
                ks.statistic, ks.threshold, ks.pass,
                run.seeds(m.replications, "direct: derive_seed(derive_seed(master_seed, k), r); "
                                          "D_i: derive_seed(derive_seed(master_seed ^ product_salt, k), r*k + i)"));
    }
  }
  run.write("_rows.csv", csv.str());
}

void run_log_moments(Run& run) {
  const Manifest& m = run.m();
  const auto levels = param_list<int>(m, "levels");
  const auto times = param_list<double>(m, "times");
  const double z = param<double>(m, "se_multiplier");
  CsvWriter csv(run.hash(), {"k", "t", "n", "mean_log_delta", "var_log_delta", "step"});
  json slopes = json::array();
  for (int k : levels) {
    std::vector<TimedSamples> groups;
    for (std::size_t ti = 0; ti < times.size(); ++ti) {
      // Each t gets its own towers so the group means are independent.
      const std::uint64_t family =
          derive_seed(m.master_seed, 1000 * static_cast<std::uint64_t>(k) + ti);
      TimedSamples g;
      g.t = times[ti];
      g.samples.values = parallel_map<double>(m.replications, run.workers(), [&](std::size_t r) {
        return oscillation(m, family, r, k, times[ti]);
      });
      std::vector<double> logs;
      for (double v : g.samples.values) logs.push_back(std::log(v));
      csv.row(k, g.t, m.replications, mean(logs), variance(logs), m.step);
      groups.push_back(std::move(g));
    }
    const SlopeEstimate est = log_moment_slope(groups, k);
    const double half = 0.5 * (est.ci_hi - est.ci_lo);
    slopes.push_back({{"k", k}, {"slope", est.slope}, {"ci", {est.ci_lo, est.ci_hi}},
                      {"expected", est.expected}});
    run.check("log_moment_slope_k" + std::to_string(k),
              {{"k", k}, {"times", times}, {"slope", est.slope}, {"ci", {est.ci_lo, est.ci_hi}},
               {"expected", est.expected},
               {"relation", "|slope - 2^-k| <= 99% CI half-width"}},
              std::abs(est.slope - est.expected), half, est.contains_expected(),
              run.seeds(m.replications, "derive_seed(derive_seed(master_seed, 1000 k + t_index), r)"));
  }
  run.summary()["slopes"] = slopes;

  // Finite E|log Delta_1(1)|: independent small and large samples agree.
  const auto n_small = param<std::size_t>(m, "abs_log_small");
  const auto n_large = param<std::size_t>(m, "abs_log_large");
  auto abs_logs = [&](std::uint64_t salt, std::size_t n) {
    const std::uint64_t family = derive_seed(m.master_seed ^ salt, 1);
    return parallel_map<double>(n, run.workers(), [&](std::size_t r) {
      return std::abs(std::log(oscillation(m, family, r, 1, 1.0)));
    });
  };
  const auto small = abs_logs(kSmallSampleSalt, n_small);
  const auto large = abs_logs(kLargeSampleSalt, n_large);
  const double ms = mean(small);
  const double ml = mean(large);
  const double se = std::sqrt(variance(small) / static_cast<double>(small.size()) +
                              variance(large) / static_cast<double>(large.size()));
  run.summary()["abs_log_delta"] = {{"small_n", n_small}, {"small_mean", ms},
                                    {"large_n", n_large}, {"large_mean", ml}};
  run.check("abs_log_delta_finite",
            {{"small_mean", ms}, {"large_mean", ml},
             {"relation", "|mean_small - mean_large| <= se_multiplier * combined_se"}},
            std::abs(ms - ml), z * se, std::abs(ms - ml) <= z * se,
            run.seeds(n_small + n_large, "derive_seed(derive_seed(master_seed ^ salt, 1), r)"));
  run.write("_rows.csv", csv.str());
}

void run_claim2_tails(Run& run) {
  const Manifest& m = run.m();
  const auto scales = param_list<int>(m, "scales");
  const auto points = param<std::int64_t>(m, "points_per_scale");
  if (points < 1 || (points & (points - 1)) != 0) {
    throw Error(ErrorCode::kInvalidArgument,
                "manifest field 'params.points_per_scale': must be a power of two");
  }
  const int log_points = std::countr_zero(static_cast<std::uint64_t>(points));
  CsvWriter csv(run.hash(), {"n", "event", "probability", "bound", "replications"});
  for (int n : scales) {
    struct Events {
      bool escape = false;
      bool miss_right = false;
      bool miss_left = false;
    };
    const std::uint64_t family = derive_seed(m.master_seed, static_cast<std::uint64_t>(n));
    const auto events = parallel_map<Events>(m.replications, run.workers(), [&](std::size_t r) {
      const std::uint64_t seed = derive_seed(family, r);
      Events e;
      {
        // Resolution scales with the window: `points` base cells per 2^n.
        const double base = std::ldexp(1.0, n - log_points);
        LazyBrownianPath path(seed, base);
        const ExtremaMode mode = replication_mode(m, seed, base);
        const double big = std::ldexp(1.0, n);
        const Interval img = path.image(Interval(-big, big), mode);
        e.escape = !Interval(-big / 2, big / 2).contains(img);
      }
      {
        const double base = std::ldexp(1.0, -n - log_points);
        LazyBrownianPath path(seed ^ 0x1ULL, base);
        const ExtremaMode mode = replication_mode(m, seed ^ 0x1ULL, base);
        const double small = std::ldexp(1.0, -n);
        const Interval target(-2 * small, 2 * small);
        e.miss_right = !path.image(Interval(0.0, small), mode).contains(target);
        e.miss_left = !path.image(Interval(-small, 0.0), mode).contains(target);
      }
      return e;
    });
    const double reps = static_cast<double>(m.replications);
    double esc = 0, right = 0, left = 0;
    for (const auto& e : events) {
      esc += e.escape;
      right += e.miss_right;
      left += e.miss_left;
    }
    const double esc_bound = std::pow(2.0, -n / 2.0 + 4);
    const double cover_bound = std::pow(2.0, -n / 2.0 + 2);
    const auto seeds = run.seeds(m.replications, "derive_seed(derive_seed(master_seed, n), r)");
    auto record = [&](const char* event, double count, double bound) {
      const double p = count / reps;
      csv.row(n, event, p, bound, m.replications);
      run.check(std::string("claim2_") + event + "_n" + std::to_string(n),
                {{"n", n}, {"event", event}, {"relation", "probability < bound"}}, p, bound,
                p < bound, seeds);
    };
    record("escape", esc, esc_bound);
    record("noncover_right", right, cover_bound);
    record("noncover_left", left, cover_bound);
  }
  run.write("_rows.csv", csv.str());
}

struct TowerSummary {
  std::uint64_t seed = 0;
  std::vector<LimitEstimate> estimates;
  std::vector<double> depth_dists;  // k = 1 cross-probe dist at each requested depth
};

std::vector<TowerSummary> limit_towers(Run& run, int max_k, const std::vector<int>& depths) {
  const Manifest& m = run.m();
  for (int d : depths) {
    if (d < 1 || d > m.depth) {
      throw Error(ErrorCode::kInvalidArgument, "manifest field 'params.depths': outside 1..depth");
    }
  }
  return parallel_map<TowerSummary>(m.replications, run.workers(), [&](std::size_t r) {
    TowerSummary s;
    s.seed = derive_seed(m.master_seed, r);
    CompositionTower tower = CompositionTower::brownian(s.seed, m.depth, m.mode, m.step);
    s.estimates = tower.estimate_limit_intervals(m.probes, m.tol, m.window, max_k);
    for (int d : depths) s.depth_dists.push_back(s.estimates.front().cross_probe_dist_at(d));
    return s;
  });
}

std::string estimate_rows(const Run& run, const std::vector<TowerSummary>& towers) {
  const Manifest& m = run.m();
  CsvWriter csv(run.hash(), {"master_seed", "N", "step", "mode", "k", "I_lo", "I_hi", "witness",
                             "converged", "cross_probe_dist"});
  for (const auto& t : towers) {
    for (const auto& e : t.estimates) {
      csv.row(t.seed, m.depth, m.step, to_string(m.mode), e.k, e.interval.lo(), e.interval.hi(),
              witness_w(e.interval), e.converged, e.cross_probe_dist());
    }
  }
  return csv.str();
}

void run_limit_interval(Run& run) {
  const Manifest& m = run.m();
  const auto depths = param_list<int>(m, "depths");
  const int max_k = param<int>(m, "max_k");
  const double needed = param<double>(m, "monotone_fraction");
  if (depths.size() < 2) throw Error(ErrorCode::kInvalidArgument, "manifest field 'params.depths': need >= 2");
  const auto towers = limit_towers(run, max_k, depths);

  CsvWriter curve(run.hash(), {"master_seed", "depth", "cross_probe_dist"});
  std::vector<std::vector<double>> by_depth(depths.size());
  std::size_t decreasing = 0;
  std::size_t converged = 0;
  for (const auto& t : towers) {
    for (std::size_t i = 0; i < depths.size(); ++i) {
      curve.row(t.seed, depths[i], t.depth_dists[i]);
      by_depth[i].push_back(t.depth_dists[i]);
    }
    decreasing += t.depth_dists.back() <= t.depth_dists.front() &&
                  (t.depth_dists.back() < t.depth_dists.front() || t.depth_dists.front() == 0.0);
    converged += t.estimates.front().converged;
  }
  std::vector<double> medians;
  std::vector<double> means;
  std::vector<double> nonzero;
  for (const auto& v : by_depth) {
    medians.push_back(median(v));
    means.push_back(mean(v));
    nonzero.push_back(static_cast<double>(std::count_if(v.begin(), v.end(),
                                                        [](double x) { return x > 0.0; })) /
                      static_cast<double>(v.size()));
  }
  bool medians_monotone = true;
  for (std::size_t i = 1; i < medians.size(); ++i) medians_monotone &= medians[i] <= medians[i - 1];

  const double frac = static_cast<double>(decreasing) / static_cast<double>(towers.size());
  const auto seeds = run.seeds(m.replications, "derive_seed(master_seed, r)");
  run.summary()["depths"] = depths;
  run.summary()["median_cross_probe_dist"] = medians;
  run.summary()["mean_cross_probe_dist"] = means;
  run.summary()["nonzero_cross_probe_fraction"] = nonzero;
  run.summary()["converged_fraction_k1"] =
      static_cast<double>(converged) / static_cast<double>(towers.size());
  run.check("median_cross_probe_dist_decreases",
            {{"depths", {depths.front(), depths.back()}},
             {"relation", "median at deepest depth < median at shallowest depth"}},
            medians.back(), medians.front(), medians.back() < medians.front(), seeds);
  run.check("median_cross_probe_dist_monotone",
            {{"depths", depths}, {"medians", medians},
             {"relation", "medians non-increasing across depths"}},
            medians_monotone ? 1.0 : 0.0, 1.0, medians_monotone, seeds);
  run.check("tower_fraction_decreasing",
            {{"depths", {depths.front(), depths.back()}},
             {"relation", "fraction of towers with deepest dist below shallowest >= threshold"}},
            frac, needed, frac >= needed, seeds);
  run.write("_rows.csv", estimate_rows(run, towers));
  run.write("_curve.csv", curve.str());
}

void run_witness(Run& run) {
  const Manifest& m = run.m();
  const int max_k = param<int>(m, "max_k");
  const double need_all = param<double>(m, "all_positive_fraction");
  const double need_first = param<double>(m, "first_positive_fraction");
  if (max_k < 1 || max_k > m.depth) {
    throw Error(ErrorCode::kInvalidArgument, "manifest field 'params.max_k': outside 1..depth");
  }
  const auto towers = limit_towers(run, max_k, {m.depth});

  CsvWriter seq(run.hash(), {"master_seed", "k", "witness", "resolution_limited"});
  std::size_t any_positive = 0;
  std::size_t first_positive = 0;
  std::size_t first_counted = 0;
  std::size_t limited = 0;
  for (const auto& t : towers) {
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& e : t.estimates) {
      const double w = witness_w(e.interval);
      seq.row(t.seed, e.k, w, e.resolution_limited);
      if (e.resolution_limited) {
        ++limited;
        continue;
      }
      best = std::max(best, w);
    }
    any_positive += best > 0.0;
    if (!t.estimates.front().resolution_limited) {
      ++first_counted;
      first_positive += witness_w(t.estimates.front().interval) > 0.0;
    }
  }
  const double n = static_cast<double>(towers.size());
  const double frac_any = static_cast<double>(any_positive) / n;
  const double frac_first =
      first_counted == 0 ? 0.0 : static_cast<double>(first_positive) / static_cast<double>(first_counted);
  const auto seeds = run.seeds(m.replications, "derive_seed(master_seed, r)");
  run.summary()["resolution_limited_estimates"] = limited;
  run.check("witness_max_positive",
            {{"max_k", max_k}, {"relation", "fraction of towers with max_k w(I_k) > 0 >= threshold"}},
            frac_any, need_all, frac_any >= need_all, seeds);
  run.check("witness_first_positive",
            {{"relation", "fraction of towers with w(I_1) > 0 >= threshold"}}, frac_first,
            need_first, frac_first >= need_first, seeds);
  run.write("_rows.csv", estimate_rows(run, towers));
  run.write("_sequence.csv", seq.str());
}

void run_walk_model(Run& run) {
  const Manifest& m = run.m();
  const auto max_steps = param<std::uint64_t>(m, "max_steps");
  const auto cap = param<std::size_t>(m, "enumeration_cap");
  const auto k2_reps = param<std::size_t>(m, "k2_replications");
  const double z = param<double>(m, "se_multiplier");
  const auto dump = param<std::size_t>(m, "dump_towers");

  struct Level {
    int depth = 0;
    std::size_t threads = 0;
    std::size_t components = 0;
    std::size_t triples = 0;
    double triple_fraction = 0.0;
    bool overflow = false;
  };
  struct Result {
    WalkTower tower;
    std::optional<std::string> invalid;
    bool odd_sizes = true;
    std::vector<Level> levels;
  };
  const auto results = parallel_map<Result>(m.replications, run.workers(), [&](std::size_t r) {
    Result res;
    res.tower = generate_tower_partial(derive_seed(m.master_seed, r), m.depth, max_steps);
    res.invalid = check_tower(res.tower);
    for (std::size_t n = 1; n < res.tower.sizes.size(); ++n) res.odd_sizes &= res.tower.sizes[n] % 2 == 1;
    for (int d = 1; d <= res.tower.depth(); ++d) {
      Level lv;
      lv.depth = d;
      try {
        const auto threads = enumerate_threads(res.tower, d, cap);
        const auto stats = r_graph(threads);
        lv.threads = stats.thread_count;
        lv.components = stats.components;
        lv.triples = stats.triple_count;
        lv.triple_fraction = stats.triple_fraction();
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kEnumerationOverflow) throw;
        lv.overflow = true;
        res.levels.push_back(lv);
        break;
      }
      res.levels.push_back(lv);
    }
    // Towers are large; keep only what the dump needs.
    if (r >= dump) {
      for (auto& w : res.tower.walks) std::vector<std::uint32_t>().swap(w.values);
    }
    return res;
  });

  const auto k2 = parallel_map<std::uint64_t>(k2_reps, run.workers(), [&](std::size_t r) {
    const WalkTower t = generate_tower(derive_seed(m.master_seed ^ kK2Salt, r), 2, max_steps);
    if (auto err = check_tower(t)) throw Error(ErrorCode::kInvalidArgument, *err);
    return t.sizes[2];
  });

  CsvWriter csv(run.hash(), {"seed", "depth", "thread_count", "components", "triple_count"});
  json dumps = json::array();
  std::size_t k1_ok = 0;
  std::size_t valid = 0;
  std::size_t odd = 0;
  std::size_t truncated = 0;
  std::size_t overflowed = 0;
  std::size_t connected_pairs = 0;
  std::vector<double> frac_sum(static_cast<std::size_t>(m.depth) + 1, 0.0);
  std::vector<std::size_t> frac_n(static_cast<std::size_t>(m.depth) + 1, 0);
  std::map<int, std::size_t> truncated_at;
  for (std::size_t r = 0; r < results.size(); ++r) {
    const Result& res = results[r];
    k1_ok += res.tower.sizes.size() > 1 && res.tower.sizes[1] == 3;
    valid += !res.invalid.has_value();
    odd += res.odd_sizes;
    if (res.tower.truncated_level) {
      ++truncated;
      ++truncated_at[*res.tower.truncated_level];
    }
    for (const Level& lv : res.levels) {
      if (lv.overflow) {
        ++overflowed;
        continue;
      }
      csv.row(res.tower.seed, lv.depth, lv.threads, lv.components, lv.triples);
      connected_pairs += lv.components == 1;
      frac_sum[static_cast<std::size_t>(lv.depth)] += lv.triple_fraction;
      ++frac_n[static_cast<std::size_t>(lv.depth)];
    }
    if (r < dump) dumps.push_back(tower_to_json(res.tower));
  }
  std::size_t k2_five = 0;
  for (auto v : k2) k2_five += v == 5;

  const double reps = static_cast<double>(m.replications);
  const auto seeds = run.seeds(m.replications, "derive_seed(master_seed, r)");
  run.check("k1_forced",
            {{"relation", "fraction of towers with k_1 = 3 equals 1"}},
            static_cast<double>(k1_ok) / reps, 1.0, k1_ok == m.replications, seeds);
  const double p5 = static_cast<double>(k2_five) / static_cast<double>(k2_reps);
  const double se = std::sqrt(0.25 / static_cast<double>(k2_reps));
  run.check("k2_equals_5",
            {{"p", p5}, {"expected", 0.5}, {"relation", "|p - 1/2| <= se_multiplier * se"}},
            std::abs(p5 - 0.5), z * se, std::abs(p5 - 0.5) <= z * se,
            run.seeds(k2_reps, "derive_seed(master_seed ^ k2_salt, r)"));
  run.check("walk_invariants",
            {{"relation", "every generated walk satisfies the walk invariants"}},
            static_cast<double>(valid) / reps, 1.0, valid == m.replications, seeds);
  run.check("sizes_odd",
            {{"relation", "every k_{n+1} (n >= 0) is odd"}},
            static_cast<double>(odd) / reps, 1.0, odd == m.replications, seeds);
  const double required = reps * m.depth;
  run.check("r_graph_connected_all_depths",
            {{"depth", m.depth},
             {"relation", "connected R-graphs over all (tower, depth <= N) pairs = replications * N"}},
            static_cast<double>(connected_pairs), required,
            static_cast<double>(connected_pairs) == required, seeds);

  json trend = json::array();
  bool nonincreasing = true;
  double prev = std::numeric_limits<double>::infinity();
  for (int d = 1; d <= m.depth; ++d) {
    const auto di = static_cast<std::size_t>(d);
    if (frac_n[di] == 0) break;
    const double avg = frac_sum[di] / static_cast<double>(frac_n[di]);
    trend.push_back({{"depth", d}, {"towers", frac_n[di]}, {"mean_triple_fraction", avg}});
    nonincreasing &= avg <= prev;
    prev = avg;
  }
  run.check("triple_fraction_nonincreasing",
            {{"trend", trend}, {"relation", "mean triple fraction non-increasing in depth"}},
            nonincreasing ? 1.0 : 0.0, 1.0, nonincreasing, seeds);

  json trunc = json::object();
  for (const auto& [level, count] : truncated_at) trunc[std::to_string(level)] = count;
  run.summary()["truncated_towers"] = truncated;
  run.summary()["truncated_at_level"] = trunc;
  run.summary()["enumeration_overflows"] = overflowed;
  run.summary()["connected_pairs"] = connected_pairs;
  run.summary()["k2_p5"] = p5;
  if (truncated > 0 || overflowed > 0) run.hit_resource_cap();

  run.write("_graph.csv", csv.str());
  run.write("_towers.json",
            json{{"manifest_hash", run.hash()}, {"towers", std::move(dumps)}}.dump() + "\n");
}

void run_threads(Run& run) {
  const Manifest& m = run.m();
  const int depth = param<int>(m, "thread_depth");
  const int points = param<int>(m, "points");
  if (depth < 1 || depth > m.depth) {
    throw Error(ErrorCode::kInvalidArgument, "manifest field 'params.thread_depth': outside 1..depth");
  }
  if (points < 2) throw Error(ErrorCode::kInvalidArgument, "manifest field 'params.points': >= 2");

  struct Result {
    json threads = json::array();
    bool bonded = true;
    bool in_unit = true;
    bool degenerate = false;
  };
  const auto results = parallel_map<Result>(m.replications, run.workers(), [&](std::size_t r) {
    Result res;
    const std::uint64_t seed = derive_seed(m.master_seed, r);
    CompositionTower tower = CompositionTower::brownian(seed, m.depth, m.mode, m.step);
    tower.estimate_limit_intervals(m.probes, m.tol, m.window, depth);
    const Interval top = tower.limit_estimates()[static_cast<std::size_t>(depth - 1)].interval;
    for (int p = 0; p < points; ++p) {
      const double x = top.lo() + top.length() * p / (points - 1);
      const Thread th = tower.sample_thread(x, depth);
      for (int i = 1; i < depth; ++i) {
        res.bonded &= tower.path(i).value_at(th.coords[static_cast<std::size_t>(i)]) ==
                      th.coords[static_cast<std::size_t>(i - 1)];
      }
      json entry{{"seed", seed}, {"x_final", x}, {"coords", th.coords}};
      try {
        const auto unit = tower.thread_unit_coords(th);
        for (double u : unit) res.in_unit &= u >= 0.0 && u <= 1.0;
        entry["unit_coords"] = unit;
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kDegenerateInterval) throw;
        res.degenerate = true;
        entry["unit_coords"] = nullptr;
      }
      res.threads.push_back(std::move(entry));
    }
    return res;
  });

  json all = json::array();
  std::size_t bonded = 0;
  std::size_t in_unit = 0;
  std::size_t degenerate = 0;
  for (const auto& r : results) {
    for (const auto& t : r.threads) all.push_back(t);
    bonded += r.bonded;
    in_unit += r.in_unit;
    degenerate += r.degenerate;
  }
  const double reps = static_cast<double>(m.replications);
  const auto seeds = run.seeds(m.replications, "derive_seed(master_seed, r)");
  run.summary()["degenerate_towers"] = degenerate;
  run.check("thread_bonding_exact", {{"relation", "B_i(x_{i+1}) == x_i for every sampled thread"}},
            static_cast<double>(bonded) / reps, 1.0, bonded == m.replications, seeds);
  run.check("thread_unit_coords_in_range", {{"relation", "l_k(x_k) in [0, 1]"}},
            static_cast<double>(in_unit) / reps, 1.0, in_unit == m.replications, seeds);
  run.write("_threads.json", json{{"manifest_hash", run.hash()},
                                  {"depth", depth},
                                  {"threads", std::move(all)}}.dump() + "\n");
}

}  // namespace

json Check::to_json() const {
  return json{{"test", test},           {"params", params}, {"statistic", statistic},
              {"threshold", threshold}, {"pass", pass},     {"seeds", seeds}};
}

const Check* ExperimentOutcome::find(const std::string& test) const {
  for (const auto& c : checks) {
    if (c.test == test) return &c;
  }
  return nullptr;
}

ExperimentOutcome run_experiment(const Manifest& manifest, const RunOptions& opts) {
  Run run(manifest, opts);
  const std::string& e = manifest.experiment;
  if (e == "reflection") {
    run_reflection(run);
  } else if (e == "oscillation-law") {
    run_oscillation_law(run);
  } else if (e == "log-moments") {
    run_log_moments(run);
  } else if (e == "claim2-tails") {
    run_claim2_tails(run);
  } else if (e == "limit-interval") {
    run_limit_interval(run);
  } else if (e == "witness") {
    run_witness(run);
  } else if (e == "walk-model") {
    run_walk_model(run);
  } else if (e == "threads") {
    run_threads(run);
  } else {
    throw Error(ErrorCode::kInvalidArgument, "unknown experiment '" + e + "'");
  }
  return run.finish();
}

}  // namespace chaincont
