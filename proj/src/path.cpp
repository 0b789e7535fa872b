#include "chaincont/path.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>

#include "chaincont/error.hpp"
#include "chaincont/rng.hpp"

namespace chaincont {
namespace {

constexpr int kMaxMaterializedLevel = 24;
constexpr std::uint64_t kMaxTag = 0x6d61;  // "ma"
constexpr std::uint64_t kMinTag = 0x6d69;  // "mi"
constexpr std::uint64_t kPartialCell = std::uint64_t{1} << 8;

// Levy midpoint: bridge mean plus scaled Gaussian. Shared by the cell filler
// and the point descent so both produce bit-identical values.
inline double midpoint(double left, double right, double sd, double z) noexcept {
  return 0.5 * (left + right) + sd * z;
}

// Exact draws from the maximum / minimum of a Brownian bridge of duration h
// between values a and b, by inverting
//   P(max <= m) = 1 - exp(-2 (m - a)(m - b) / h),  m >= max(a, b).
inline double bridge_max(double a, double b, double h, double u) noexcept {
  const double d = a - b;
  return 0.5 * ((a + b) + std::sqrt(d * d - 2.0 * h * std::log(u)));
}

inline double bridge_min(double a, double b, double h, double u) noexcept {
  const double d = a - b;
  return 0.5 * ((a + b) - std::sqrt(d * d - 2.0 * h * std::log(u)));
}

}  // namespace

const char* to_string(ExtremaKind kind) {
  return kind == ExtremaKind::kGrid ? "grid" : "bridge_exact";
}

ExtremaKind extrema_kind_from_string(const std::string& name) {
  if (name == "grid") return ExtremaKind::kGrid;
  if (name == "bridge_exact") return ExtremaKind::kBridgeExact;
  throw Error(ErrorCode::kInvalidArgument, "unknown extrema mode '" + name + "'");
}

// ---------------------------------------------------------------------------
// LazyBrownianPath

LazyBrownianPath::LazyBrownianPath(std::uint64_t seed, double base_step)
    : seed_(seed), base_step_(base_step) {
  if (!(base_step > 0.0) || !std::isfinite(base_step)) {
    throw Error(ErrorCode::kInvalidArgument, "base_step must be positive");
  }
  sqrt_base_ = std::sqrt(base_step);
  for (int l = 1; l <= kMaxLevel; ++l) {
    mid_sd_[l] = 0.5 * std::sqrt(std::ldexp(base_step, -(l - 1)));
  }
  pos_.stream = mix64(seed);
  neg_.stream = mix64(seed ^ kNegativeSideSalt);
  pos_.base.push_back(0.0);
  neg_.base.push_back(0.0);
}

double LazyBrownianPath::horizon() const noexcept {
  return static_cast<double>(std::max(pos_.cells.size(), neg_.cells.size())) * base_step_;
}

int LazyBrownianPath::level_for(double step) const {
  if (!(step > 0.0)) throw Error(ErrorCode::kInvalidArgument, "step must be positive");
  int level = 0;
  while (step_at(level) > step) {
    if (++level > kMaxMaterializedLevel) {
      throw Error(ErrorCode::kInvalidArgument,
                  "step too fine: more than 2^24 points per base cell");
    }
  }
  return level;
}

double LazyBrownianPath::step_at(int level) const { return std::ldexp(base_step_, -level); }

void LazyBrownianPath::ensure_cells(Side& side, std::size_t count) {
  if (side.cells.size() >= count) return;
  std::size_t target = std::max<std::size_t>(side.cells.size(), 1);
  while (target < count) target *= 2;
  side.base.reserve(target + 1);
  for (std::size_t k = side.cells.size(); k < target; ++k) {
    const double z = keyed_normal(hash_key(side.stream, 0, k, 0));
    side.base.push_back(side.base[k] + sqrt_base_ * z);
  }
  side.cells.resize(target);
}

const LazyBrownianPath::Cell& LazyBrownianPath::materialize(Side& side, std::size_t k, int level) {
  Cell& cell = side.cells[k];
  if (cell.level >= level) return cell;

  const std::size_t n = std::size_t{1} << level;
  std::vector<double> values(n + 1);
  int from = 0;
  if (cell.level >= 0) {
    const std::size_t stride = n >> cell.level;
    for (std::size_t p = 0; p < cell.values.size(); ++p) values[p * stride] = cell.values[p];
    from = cell.level;
  } else {
    values[0] = side.base[k];
    values[n] = side.base[k + 1];
  }
  for (int l = from + 1; l <= level; ++l) {
    const std::size_t stride = n >> l;
    for (std::size_t p = stride; p < n; p += 2 * stride) {
      const double z = keyed_normal(hash_key(side.stream, l, k, p / stride));
      values[p] = midpoint(values[p - stride], values[p + stride], mid_sd_[l], z);
    }
  }
  cell.level = level;
  cell.values = std::move(values);
  return cell;
}

// tau is time measured in base steps, tau >= 0.
double LazyBrownianPath::side_value(Side& side, double tau) {
  const double whole = std::floor(tau);
  const auto k = static_cast<std::size_t>(whole);
  ensure_cells(side, k + 1);
  const double frac = tau - whole;
  if (frac == 0.0) return side.base[k];

  // Fixed-point position inside the cell; positions below 2^-62 truncate.
  const auto x = static_cast<std::uint64_t>(std::ldexp(frac, kMaxLevel));
  if (x == 0) return side.base[k];

  const Cell& cell = side.cells[k];
  int level = 0;
  double left = side.base[k];
  double right = side.base[k + 1];
  std::uint64_t prefix = 0;
  if (cell.level > 0) {
    const int shift = kMaxLevel - cell.level;
    const std::uint64_t g = x >> shift;
    if ((x & ((std::uint64_t{1} << shift) - 1)) == 0) return cell.values[g];
    level = cell.level;
    left = cell.values[g];
    right = cell.values[g + 1];
    prefix = g << shift;
  }
  for (int l = level + 1; l <= kMaxLevel; ++l) {
    const int shift = kMaxLevel - l;
    const std::uint64_t mid = prefix + (std::uint64_t{1} << shift);
    const double z = keyed_normal(hash_key(side.stream, l, k, mid >> shift));
    const double v = midpoint(left, right, mid_sd_[l], z);
    if (x == mid) return v;
    if (x < mid) {
      right = v;
    } else {
      left = v;
      prefix = mid;
    }
  }
  return left;
}

double LazyBrownianPath::value_at(double t) {
  if (!std::isfinite(t)) throw Error(ErrorCode::kInvalidArgument, "time must be finite");
  if (t == 0.0) return 0.0;
  return side_value(side_for(t), std::abs(t) / base_step_);
}

void LazyBrownianPath::refine(const Interval& i, double step) {
  const int level = level_for(step);
  auto run = [&](Side& side, double ua, double ub) {
    if (!(ub > ua) && !(ua == 0.0 && ub == 0.0)) return;
    const double ta = ua / base_step_;
    const double tb = ub / base_step_;
    const auto ka = static_cast<std::size_t>(std::floor(ta));
    auto kb = static_cast<std::size_t>(std::ceil(tb));
    if (kb == ka) ++kb;
    ensure_cells(side, kb);
    for (std::size_t k = ka; k < kb; ++k) materialize(side, k, level);
  };
  if (i.hi() > 0.0) run(pos_, std::max(i.lo(), 0.0), i.hi());
  if (i.lo() < 0.0) run(neg_, std::max(-i.hi(), 0.0), -i.lo());
}

void LazyBrownianPath::side_extrema(Side& side, double ua, double ub, int level,
                                    const ExtremaMode& mode, Extrema& acc) {
  const double ta = ua / base_step_;
  const double tb = ub / base_step_;
  const double n = std::ldexp(1.0, level);
  const double spacing = std::ldexp(base_step_, -level);
  const auto per_cell = std::uint64_t{1} << level;

  const bool bridge = mode.kind == ExtremaKind::kBridgeExact;
  const std::uint64_t bstream = hash_combine(side.stream, mode.subseed);

  const auto ga = static_cast<std::uint64_t>(std::ceil(ta * n));
  const auto gb = static_cast<std::uint64_t>(std::floor(tb * n));

  double prev_t = ta;
  double prev_v = side_value(side, ta);
  bool prev_on_grid = static_cast<double>(ga) == ta * n;
  acc.min = std::min(acc.min, prev_v);
  acc.max = std::max(acc.max, prev_v);

  auto step_to = [&](double t, double v, bool on_grid, std::uint64_t g) {
    acc.min = std::min(acc.min, v);
    acc.max = std::max(acc.max, v);
    if (bridge) {
      double h;
      std::uint64_t key;
      if (prev_on_grid && on_grid) {
        h = spacing;
        key = hash_key(bstream, static_cast<std::uint64_t>(level), g, 0);
      } else {
        h = (t - prev_t) * base_step_;
        key = hash_key(bstream, static_cast<std::uint64_t>(level) | kPartialCell,
                       std::bit_cast<std::uint64_t>(prev_t), std::bit_cast<std::uint64_t>(t));
      }
      const double hi = bridge_max(prev_v, v, h, unit_open(hash_combine(key, kMaxTag)));
      const double lo = bridge_min(prev_v, v, h, unit_open(hash_combine(key, kMinTag)));
      acc.max = std::max(acc.max, hi);
      acc.min = std::min(acc.min, lo);
    }
    prev_t = t;
    prev_v = v;
    prev_on_grid = on_grid;
  };

  if (ga <= gb) {
    ensure_cells(side, static_cast<std::size_t>(gb / per_cell) + 1);
    for (std::uint64_t g = ga; g <= gb; ++g) {
      if (g == ga && prev_on_grid) continue;  // start point already counted
      const auto k = static_cast<std::size_t>(g / per_cell);
      const std::uint64_t p = g % per_cell;
      const double v = p == 0 ? side.base[k] : materialize(side, k, level).values[p];
      step_to(static_cast<double>(g) / n, v, true, g - 1);
    }
  }
  if (prev_t < tb) step_to(tb, side_value(side, tb), false, 0);
}

Extrema LazyBrownianPath::extrema(const Interval& i, const ExtremaMode& mode) {
  if (i.degenerate()) {
    const double v = value_at(i.lo());
    return {v, v};
  }
  const int level = level_for(mode.step);
  Extrema acc{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  if (i.hi() > 0.0) {
    side_extrema(pos_, std::max(i.lo(), 0.0), i.hi(), level, mode, acc);
  }
  if (i.lo() < 0.0) {
    side_extrema(neg_, std::max(-i.hi(), 0.0), -i.lo(), level, mode, acc);
  }
  return acc;
}

std::size_t LazyBrownianPath::node_count() const { return nodes().size(); }

std::vector<std::pair<double, double>> LazyBrownianPath::nodes() const {
  std::vector<std::pair<double, double>> out;
  auto collect = [&](const Side& side, double sign) {
    for (std::size_t k = 0; k < side.cells.size(); ++k) {
      const Cell& cell = side.cells[k];
      if (cell.level < 0) {
        out.emplace_back(sign * static_cast<double>(k) * base_step_, side.base[k]);
        continue;
      }
      const double n = std::ldexp(1.0, cell.level);
      for (std::size_t p = 0; p + 1 < cell.values.size(); ++p) {
        const double tau = static_cast<double>(k) + static_cast<double>(p) / n;
        out.emplace_back(sign * tau * base_step_, cell.values[p]);
      }
    }
    if (!side.cells.empty()) {
      out.emplace_back(sign * static_cast<double>(side.cells.size()) * base_step_,
                       side.base.back());
    }
  };
  collect(pos_, 1.0);
  collect(neg_, -1.0);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end(),
                        [](const auto& a, const auto& b) { return a.first == b.first; }),
            out.end());
  if (out.empty()) out.emplace_back(0.0, 0.0);
  return out;
}

void LazyBrownianPath::dump_csv(std::ostream& out) const {
  out << "time,value\n";
  out.precision(17);
  for (const auto& [t, v] : nodes()) out << t << ',' << v << '\n';
}

std::unique_ptr<LazyBrownianPath> make_brownian(std::uint64_t seed, double base_step) {
  return std::make_unique<LazyBrownianPath>(seed, base_step);
}

// ---------------------------------------------------------------------------
// DeterministicPath

DeterministicPath::DeterministicPath(Kind kind, double param) : kind_(kind), param_(param) {
  if (!std::isfinite(param)) throw Error(ErrorCode::kInvalidArgument, "parameter must be finite");
  if (kind == Kind::kZigzag && !(param > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "zigzag period must be positive");
  }
}

namespace {

// Unit triangle wave with period 1: 0 at 0, +1 at 1/4, -1 at 3/4.
double triangle(double s) {
  const double r = s - std::floor(s);
  if (r < 0.25) return 4.0 * r;
  if (r < 0.75) return 2.0 - 4.0 * r;
  return 4.0 * r - 4.0;
}

// Does some integer j satisfy lo <= j + offset <= hi with j of the given parity?
bool hits_lattice(double lo, double hi, double offset, int parity) {
  const double jmin = std::ceil(lo - offset);
  const double jmax = std::floor(hi - offset);
  if (jmin > jmax) return false;
  if (jmax > jmin) return true;  // two consecutive integers cover both parities
  return static_cast<long long>(std::fmod(std::abs(jmin), 2.0)) == parity;
}

}  // namespace

double DeterministicPath::value_at(double t) {
  switch (kind_) {
    case Kind::kIdentity: return t;
    case Kind::kAffine: return param_ * t;
    case Kind::kSinPiN: return t == 0.0 ? 0.0 : std::sin(std::numbers::pi * param_ * t);
    case Kind::kZigzag: return triangle(t / param_);
  }
  return 0.0;
}

Extrema DeterministicPath::extrema(const Interval& i, const ExtremaMode&) {
  const double a = value_at(i.lo());
  const double b = value_at(i.hi());
  Extrema e{std::min(a, b), std::max(a, b)};
  switch (kind_) {
    case Kind::kIdentity:
    case Kind::kAffine:
      break;
    case Kind::kSinPiN: {
      // Critical points where n t = j + 1/2: even j is a peak, odd j a trough.
      const double s0 = param_ * i.lo();
      const double s1 = param_ * i.hi();
      const double lo = std::min(s0, s1);
      const double hi = std::max(s0, s1);
      if (hits_lattice(lo, hi, 0.5, 0)) e.max = 1.0;
      if (hits_lattice(lo, hi, 0.5, 1)) e.min = -1.0;
      break;
    }
    case Kind::kZigzag: {
      const double lo = i.lo() / param_;
      const double hi = i.hi() / param_;
      if (std::ceil(lo - 0.25) <= std::floor(hi - 0.25)) e.max = 1.0;
      if (std::ceil(lo - 0.75) <= std::floor(hi - 0.75)) e.min = -1.0;
      break;
    }
  }
  return e;
}

std::unique_ptr<PathSource> make_deterministic(const std::string& formula, double param) {
  using Kind = DeterministicPath::Kind;
  if (formula == "identity") return std::make_unique<DeterministicPath>(Kind::kIdentity, 0.0);
  if (formula == "sin_pi_n") return std::make_unique<DeterministicPath>(Kind::kSinPiN, param);
  if (formula == "zigzag") return std::make_unique<DeterministicPath>(Kind::kZigzag, param);
  if (formula == "affine") return std::make_unique<DeterministicPath>(Kind::kAffine, param);
  throw Error(ErrorCode::kInvalidArgument, "unknown path formula '" + formula + "'");
}

}  // namespace chaincont
