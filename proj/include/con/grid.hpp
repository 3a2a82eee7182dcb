#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <map>
#include <numbers>
#include <optional>
#include <vector>

namespace con {

inline constexpr double kPi = std::numbers::pi;

/// Object-map cell size in meters.
inline constexpr double kMapResolution = 0.1;

/// Place classes are 1 m x 1 m cells split into eight 45-degree heading sectors.
inline constexpr double kPlaceCellSize = 1.0;
inline constexpr int kPlaceSectors = 8;

/// Scores below this are evicted from sparse grids.
inline constexpr double kEvictionThreshold = 1e-9;

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Vec2&, const Vec2&) = default;
};

/// Wraps an angle into [-pi, pi).
double normalize_angle(double a);

struct GridSpec {
  double resolution = kMapResolution;
  int width = 1;
  int height = 1;
  Vec2 origin{};

  /// Throws std::invalid_argument on resolution <= 0 or empty extent.
  void validate() const;
  std::size_t cell_count() const {
    return static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  }
  friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

struct CellIndex {
  int ix = 0;
  int iy = 0;
  friend auto operator<=>(const CellIndex&, const CellIndex&) = default;
};

inline bool in_bounds(const GridSpec& spec, CellIndex c) {
  return c.ix >= 0 && c.iy >= 0 && c.ix < spec.width && c.iy < spec.height;
}

/// Row-major flat index; caller guarantees in_bounds.
inline std::size_t flat_index(const GridSpec& spec, CellIndex c) {
  return static_cast<std::size_t>(c.iy) * static_cast<std::size_t>(spec.width) +
         static_cast<std::size_t>(c.ix);
}

inline CellIndex unflatten(const GridSpec& spec, std::size_t i) {
  return {static_cast<int>(i % static_cast<std::size_t>(spec.width)),
          static_cast<int>(i / static_cast<std::size_t>(spec.width))};
}

CellIndex world_to_cell(Vec2 p, const GridSpec& spec);
/// Center of the cell.
Vec2 cell_to_world(CellIndex c, const GridSpec& spec);

struct Pose2D {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;  // [-pi, pi)

  Vec2 position() const { return {x, y}; }
  friend bool operator==(const Pose2D&, const Pose2D&) = default;
};

inline Pose2D make_pose(double x, double y, double theta) {
  return {x, y, normalize_angle(theta)};
}

/// Planar rigid motion: rotate by `rot`, then translate by (tx, ty).
struct SE2Transform {
  double tx = 0.0;
  double ty = 0.0;
  double rot = 0.0;

  static SE2Transform identity() { return {}; }
  static SE2Transform translation(double x, double y) { return {x, y, 0.0}; }
  static SE2Transform rotation(double r) { return {0.0, 0.0, normalize_angle(r)}; }
  /// The transform that maps the origin frame onto `p`.
  static SE2Transform from_pose(const Pose2D& p) { return {p.x, p.y, normalize_angle(p.theta)}; }

  friend bool operator==(const SE2Transform&, const SE2Transform&) = default;
};

/// (a * b)(p) = a(b(p)).
SE2Transform se2_compose(const SE2Transform& a, const SE2Transform& b);
SE2Transform se2_inverse(const SE2Transform& t);
Vec2 se2_apply(const SE2Transform& t, Vec2 p);

struct PlaceClass {
  int cx = 0;
  int cy = 0;
  int sector = 0;  // [0, 8); kNovelSector marks the novel class

  static constexpr int kNovelSector = -1;
  static PlaceClass novel() { return {0, 0, kNovelSector}; }
  bool is_novel() const { return sector == kNovelSector; }

  friend auto operator<=>(const PlaceClass&, const PlaceClass&) = default;
};

PlaceClass pose_to_place_class(const Pose2D& pose);
/// Pose at the center of the place bin (cell center, sector mid-angle).
Pose2D place_class_center(const PlaceClass& pc);

struct CellScore {
  double primary = 0.0;    // max-pooled, in [0, 1]
  double secondary = 0.0;  // sum-pooled, >= 0
  friend bool operator==(const CellScore&, const CellScore&) = default;
};

/// Sparse dual-channel grid of target-relevance scores. Only cells with a
/// score at or above kEvictionThreshold are stored; iteration is in
/// lexicographic (ix, iy) order.
class ScoredGrid {
 public:
  using Storage = std::map<CellIndex, CellScore>;

  ScoredGrid() = default;
  explicit ScoredGrid(GridSpec spec);

  const GridSpec& spec() const { return spec_; }
  std::size_t size() const { return cells_.size(); }
  bool empty() const { return cells_.empty(); }
  Storage::const_iterator begin() const { return cells_.begin(); }
  Storage::const_iterator end() const { return cells_.end(); }

  /// Zero score for cells not stored.
  CellScore get(CellIndex c) const;
  bool contains(CellIndex c) const { return cells_.contains(c); }

  /// Overwrites a cell. Throws std::out_of_range for out-of-bounds cells and
  /// std::invalid_argument for scores outside the channel ranges.
  void set(CellIndex c, CellScore s);
  /// primary = max(primary, s.primary); secondary += s.secondary.
  void fold(CellIndex c, CellScore s);
  /// fold(c, {value, value}).
  void accumulate(CellIndex c, double value) { fold(c, {value, value}); }

  /// Drops every cell whose primary is below `threshold`.
  void prune_primary_below(double threshold);

  double max_primary() const;
  double sum_secondary() const;

  friend bool operator==(const ScoredGrid&, const ScoredGrid&) = default;

 private:
  GridSpec spec_{};
  Storage cells_;
};

/// Dense mirror of a ScoredGrid for the vectorized fold paths.
struct DenseScores {
  GridSpec spec{};
  std::vector<double> primary;
  std::vector<double> secondary;

  DenseScores() = default;
  explicit DenseScores(const GridSpec& s)
      : spec(s), primary(s.cell_count(), 0.0), secondary(s.cell_count(), 0.0) {}

  static DenseScores from_sparse(const ScoredGrid& g);
  /// Drops cells with both channels below kEvictionThreshold.
  ScoredGrid to_sparse() const;
  void fold_from(const DenseScores& other);
};

/// Resamples `g` into `target_spec` under `t`: each source cell center is
/// mapped and lands in the target cell containing it. Collisions take the max
/// of primaries and the sum of secondaries; out-of-bounds cells are dropped.
ScoredGrid transform_grid(const ScoredGrid& g, const SE2Transform& t,
                          const GridSpec& target_spec);

}  // namespace con
