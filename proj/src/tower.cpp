#include "chaincont/tower.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <string>

#include "chaincont/error.hpp"
#include "chaincont/rng.hpp"

namespace chaincont {

double LimitEstimate::cross_probe_dist() const {
  if (probe_dists.empty()) return 0.0;
  const auto& last = probe_dists.back();
  return last.empty() ? 0.0 : *std::max_element(last.begin(), last.end());
}

double LimitEstimate::cross_probe_dist_at(int depth) const {
  const int n = depth - k;
  if (n < 0 || n >= static_cast<int>(probe_dists.size())) {
    throw Error(ErrorCode::kInvalidArgument,
                "depth " + std::to_string(depth) + " not covered by estimate for k=" +
                    std::to_string(k));
  }
  const auto& row = probe_dists[static_cast<std::size_t>(n)];
  return row.empty() ? 0.0 : *std::max_element(row.begin(), row.end());
}

std::size_t CompositionTower::MemoHash::operator()(const MemoKey& key) const noexcept {
  return static_cast<std::size_t>(hash_key(static_cast<std::uint64_t>(key.index),
                                           std::bit_cast<std::uint64_t>(key.lo),
                                           std::bit_cast<std::uint64_t>(key.hi), 0));
}

CompositionTower::CompositionTower(std::vector<std::unique_ptr<PathSource>> paths,
                                   std::uint64_t master_seed, ExtremaKind kind, double step)
    : paths_(std::move(paths)), master_seed_(master_seed), kind_(kind), step_(step) {
  if (paths_.empty()) throw Error(ErrorCode::kInvalidArgument, "tower depth must be positive");
  if (!(step > 0.0)) throw Error(ErrorCode::kInvalidArgument, "step must be positive");
  modes_.reserve(paths_.size());
  for (std::size_t i = 0; i < paths_.size(); ++i) {
    if (paths_[i]->value_at(0.0) != 0.0) {
      throw Error(ErrorCode::kInvalidArgument,
                  "path " + std::to_string(i + 1) + " does not fix 0");
    }
    const std::uint64_t subseed = derive_seed(master_seed ^ kSubseedSalt, i + 1);
    modes_.push_back(ExtremaMode{kind, step, subseed});
  }
}

CompositionTower CompositionTower::brownian(std::uint64_t master_seed, int depth,
                                            ExtremaKind kind, double step, double base_step) {
  if (depth < 1) throw Error(ErrorCode::kInvalidArgument, "tower depth must be positive");
  std::vector<std::unique_ptr<PathSource>> paths;
  paths.reserve(static_cast<std::size_t>(depth));
  for (int i = 1; i <= depth; ++i) {
    paths.push_back(make_brownian(derive_seed(master_seed, static_cast<std::uint64_t>(i)),
                                  base_step));
  }
  return CompositionTower(std::move(paths), master_seed, kind, step);
}

CompositionTower CompositionTower::from_paths(std::vector<std::unique_ptr<PathSource>> paths,
                                              ExtremaKind kind, double step) {
  return CompositionTower(std::move(paths), 0, kind, step);
}

CompositionTower CompositionTower::deterministic(const std::string& formula, int depth,
                                                 double param, double step) {
  if (depth < 1) throw Error(ErrorCode::kInvalidArgument, "tower depth must be positive");
  std::vector<std::unique_ptr<PathSource>> paths;
  for (int i = 1; i <= depth; ++i) {
    paths.push_back(make_deterministic(formula, formula == "sin_pi_n" ? i : param));
  }
  return CompositionTower(std::move(paths), 0, ExtremaKind::kGrid, step);
}

PathSource& CompositionTower::path(int index) {
  if (index < 1 || index > depth()) {
    throw Error(ErrorCode::kInvalidArgument, "path index " + std::to_string(index) +
                                                 " outside 1.." + std::to_string(depth()));
  }
  return *paths_[static_cast<std::size_t>(index - 1)];
}

Interval CompositionTower::image_of(int index, const Interval& j) {
  const MemoKey key{index, j.lo(), j.hi()};
  if (auto it = memo_.find(key); it != memo_.end()) return it->second;
  const Interval out =
      path(index).image(j, modes_[static_cast<std::size_t>(index - 1)]);
  memo_.emplace(key, out);
  return out;
}

Interval CompositionTower::compose_image(int k_from, int k_to, const Interval& j) {
  if (k_from < 1 || k_to > depth() || k_from > k_to) {
    throw Error(ErrorCode::kInvalidArgument,
                "composition range [" + std::to_string(k_from) + ", " + std::to_string(k_to) +
                    "] invalid for depth " + std::to_string(depth()));
  }
  Interval acc = j;
  for (int i = k_to; i >= k_from; --i) acc = image_of(i, acc);
  return acc;
}

const std::vector<LimitEstimate>& CompositionTower::estimate_limit_intervals(
    std::span<const Interval> probes, double tol, std::size_t window, int max_k) {
  if (probes.size() < 2) {
    throw Error(ErrorCode::kInvalidArgument, "at least two probe intervals are required");
  }
  for (const auto& p : probes) {
    if (!is_suitable(p)) {
      throw Error(ErrorCode::kInvalidArgument, "probe intervals must be suitable");
    }
  }
  if (!(tol > 0.0) || window == 0) {
    throw Error(ErrorCode::kInvalidArgument, "tol and window must be positive");
  }
  const int n_paths = depth();
  const int top_k = max_k <= 0 ? n_paths : std::min(max_k, n_paths);
  const std::size_t n_probes = probes.size();

  // images[p][k-1][e-1] = (B_k o ... o B_e)(probe p), built per end index e by
  // walking k downwards so each map is applied once.
  std::vector<std::vector<std::vector<Interval>>> images(
      n_probes, std::vector<std::vector<Interval>>(
                    static_cast<std::size_t>(top_k),
                    std::vector<Interval>(static_cast<std::size_t>(n_paths))));
  for (std::size_t p = 0; p < n_probes; ++p) {
    for (int e = 1; e <= n_paths; ++e) {
      Interval acc = probes[p];
      for (int k = e; k >= 1; --k) {
        acc = image_of(k, acc);
        if (k <= top_k) {
          images[p][static_cast<std::size_t>(k - 1)][static_cast<std::size_t>(e - 1)] = acc;
        }
      }
    }
  }

  estimates_.clear();
  for (int k = 1; k <= top_k; ++k) {
    const auto ki = static_cast<std::size_t>(k - 1);
    LimitEstimate est;
    est.k = k;
    est.depth_used = n_paths;
    std::vector<Interval> first;
    for (int e = k; e <= n_paths; ++e) {
      const auto ei = static_cast<std::size_t>(e - 1);
      first.push_back(images[0][ki][ei]);
      std::vector<double> row(n_probes);
      for (std::size_t p = 0; p < n_probes; ++p) {
        row[p] = dist(images[p][ki][ei], images[0][ki][ei]);
      }
      est.probe_dists.push_back(std::move(row));
    }
    est.interval = first.back();
    est.resolution_limited = est.interval.length() < 4.0 * step_;
    est.converged = first.size() >= window && cauchy_converged(first, tol, window) &&
                    est.cross_probe_dist() < tol;
    estimates_.push_back(std::move(est));
  }
  return estimates_;
}

const LimitEstimate& CompositionTower::estimate_for(int k) const {
  if (k < 1 || k > static_cast<int>(estimates_.size())) {
    throw Error(ErrorCode::kInsufficientData,
                "no limit estimate for k=" + std::to_string(k) +
                    "; run estimate_limit_intervals first");
  }
  return estimates_[static_cast<std::size_t>(k - 1)];
}

std::vector<double> CompositionTower::witness_sequence(int count) const {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(std::max(count, 0)));
  for (int k = 1; k <= count; ++k) out.push_back(witness_w(estimate_for(k).interval));
  return out;
}

Thread CompositionTower::sample_thread(double x_final, int m) {
  if (m < 1 || m > depth()) {
    throw Error(ErrorCode::kInvalidArgument, "thread depth outside tower");
  }
  const Interval& top = estimate_for(m).interval;
  if (x_final < top.lo() - step_ || x_final > top.hi() + step_) {
    throw Error(ErrorCode::kOutOfDomain, "x_final outside the estimated interval I_" +
                                             std::to_string(m));
  }
  Thread thread;
  thread.coords.assign(static_cast<std::size_t>(m), 0.0);
  thread.coords.back() = x_final;
  for (int i = m - 1; i >= 1; --i) {
    thread.coords[static_cast<std::size_t>(i - 1)] =
        path(i).value_at(thread.coords[static_cast<std::size_t>(i)]);
  }
  return thread;
}

std::vector<double> CompositionTower::thread_unit_coords(const Thread& thread) const {
  std::vector<double> out;
  out.reserve(thread.depth());
  for (std::size_t i = 0; i < thread.depth(); ++i) {
    const Interval& iv = estimate_for(static_cast<int>(i) + 1).interval;
    if (iv.degenerate()) {
      throw Error(ErrorCode::kDegenerateInterval,
                  "I_" + std::to_string(i + 1) + " is degenerate");
    }
    const double u = (thread.coords[i] - iv.lo()) / iv.length();
    out.push_back(std::clamp(u, 0.0, 1.0));
  }
  return out;
}

double CompositionTower::oscillation_sample(int k, double t) {
  if (!(t > 0.0)) throw Error(ErrorCode::kInvalidArgument, "t must be positive");
  return compose_image(1, k, Interval(0.0, t)).length();
}

}  // namespace chaincont
