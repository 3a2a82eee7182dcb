#include "con/grid.hpp"
#include "con/simd.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace con {

double normalize_angle(double a) {
  if (a >= -kPi && a < kPi) return a;
  double r = std::fmod(a + kPi, 2.0 * kPi);
  if (r < 0.0) r += 2.0 * kPi;
  double out = r - kPi;
  if (out >= kPi) out -= 2.0 * kPi;
  return out;
}

void GridSpec::validate() const {
  if (!(resolution > 0.0) || !std::isfinite(resolution)) {
    throw std::invalid_argument("GridSpec: resolution must be positive");
  }
  if (width < 1 || height < 1) {
    throw std::invalid_argument("GridSpec: width and height must be >= 1");
  }
}

namespace {

// Saturates far-away (or NaN) coordinates to an index that is out of bounds
// for every grid instead of overflowing.
int saturating_floor(double v) {
  constexpr double kLimit = 1e9;
  if (!(v > -kLimit)) return -1'000'000'000;
  if (v > kLimit) return 1'000'000'000;
  return static_cast<int>(std::floor(v));
}

}  // namespace

CellIndex world_to_cell(Vec2 p, const GridSpec& spec) {
  return {saturating_floor((p.x - spec.origin.x) / spec.resolution),
          saturating_floor((p.y - spec.origin.y) / spec.resolution)};
}

Vec2 cell_to_world(CellIndex c, const GridSpec& spec) {
  return {spec.origin.x + (c.ix + 0.5) * spec.resolution,
          spec.origin.y + (c.iy + 0.5) * spec.resolution};
}

SE2Transform se2_compose(const SE2Transform& a, const SE2Transform& b) {
  const double c = std::cos(a.rot);
  const double s = std::sin(a.rot);
  return {a.tx + c * b.tx - s * b.ty, a.ty + s * b.tx + c * b.ty,
          normalize_angle(a.rot + b.rot)};
}

SE2Transform se2_inverse(const SE2Transform& t) {
  const double c = std::cos(t.rot);
  const double s = std::sin(t.rot);
  return {-(c * t.tx + s * t.ty), -(-s * t.tx + c * t.ty), normalize_angle(-t.rot)};
}

Vec2 se2_apply(const SE2Transform& t, Vec2 p) {
  const double c = std::cos(t.rot);
  const double s = std::sin(t.rot);
  return {c * p.x - s * p.y + t.tx, s * p.x + c * p.y + t.ty};
}

PlaceClass pose_to_place_class(const Pose2D& pose) {
  PlaceClass pc;
  pc.cx = saturating_floor(pose.x / kPlaceCellSize);
  pc.cy = saturating_floor(pose.y / kPlaceCellSize);
  double wrapped = std::fmod(pose.theta + kPi, 2.0 * kPi);
  if (wrapped < 0.0) wrapped += 2.0 * kPi;
  const int sector = static_cast<int>(std::floor(wrapped / (kPi / 4.0)));
  pc.sector = std::clamp(sector, 0, kPlaceSectors - 1);
  return pc;
}

Pose2D place_class_center(const PlaceClass& pc) {
  return {(pc.cx + 0.5) * kPlaceCellSize, (pc.cy + 0.5) * kPlaceCellSize,
          normalize_angle(-kPi + (pc.sector + 0.5) * (kPi / 4.0))};
}

ScoredGrid::ScoredGrid(GridSpec spec) : spec_(spec) { spec_.validate(); }

CellScore ScoredGrid::get(CellIndex c) const {
  auto it = cells_.find(c);
  return it == cells_.end() ? CellScore{} : it->second;
}

namespace {

void check_cell(const GridSpec& spec, CellIndex c) {
  if (!in_bounds(spec, c)) throw std::out_of_range("ScoredGrid: cell out of bounds");
}

void check_score(CellScore s) {
  if (!(s.primary >= 0.0 && s.primary <= 1.0) || !(s.secondary >= 0.0) ||
      !std::isfinite(s.secondary)) {
    throw std::invalid_argument("ScoredGrid: score outside channel range");
  }
}

bool evictable(CellScore s) {
  return s.primary < kEvictionThreshold && s.secondary < kEvictionThreshold;
}

}  // namespace

void ScoredGrid::set(CellIndex c, CellScore s) {
  check_cell(spec_, c);
  check_score(s);
  if (evictable(s)) {
    cells_.erase(c);
  } else {
    cells_[c] = s;
  }
}

void ScoredGrid::fold(CellIndex c, CellScore s) {
  check_cell(spec_, c);
  check_score(s);
  auto it = cells_.find(c);
  if (it == cells_.end()) {
    if (!evictable(s)) cells_.emplace(c, s);
    return;
  }
  it->second.primary = std::max(it->second.primary, s.primary);
  it->second.secondary += s.secondary;
}

void ScoredGrid::prune_primary_below(double threshold) {
  std::erase_if(cells_, [threshold](const auto& kv) { return kv.second.primary < threshold; });
}

double ScoredGrid::max_primary() const {
  double m = 0.0;
  for (const auto& [c, s] : cells_) m = std::max(m, s.primary);
  return m;
}

double ScoredGrid::sum_secondary() const {
  double m = 0.0;
  for (const auto& [c, s] : cells_) m += s.secondary;
  return m;
}

DenseScores DenseScores::from_sparse(const ScoredGrid& g) {
  DenseScores d(g.spec());
  for (const auto& [c, s] : g) {
    const std::size_t i = flat_index(g.spec(), c);
    d.primary[i] = s.primary;
    d.secondary[i] = s.secondary;
  }
  return d;
}

ScoredGrid DenseScores::to_sparse() const {
  ScoredGrid g(spec);
  for (std::size_t i = 0; i < primary.size(); ++i) {
    const CellScore s{primary[i], secondary[i]};
    if (!evictable(s)) g.set(unflatten(spec, i), s);
  }
  return g;
}

void DenseScores::fold_from(const DenseScores& other) {
  if (!(other.spec == spec)) throw std::invalid_argument("DenseScores: spec mismatch");
  simd::max_sum_fold(primary, secondary, other.primary, other.secondary);
}

ScoredGrid transform_grid(const ScoredGrid& g, const SE2Transform& t,
                          const GridSpec& target_spec) {
  ScoredGrid out(target_spec);
  for (const auto& [c, s] : g) {
    const Vec2 mapped = se2_apply(t, cell_to_world(c, g.spec()));
    const CellIndex dst = world_to_cell(mapped, target_spec);
    if (!in_bounds(target_spec, dst)) continue;
    out.fold(dst, s);
  }
  return out;
}

}  // namespace con
