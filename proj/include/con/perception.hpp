#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "con/grid.hpp"
#include "con/raycast.hpp"
#include "con/rng.hpp"
#include "con/teacher.hpp"
#include "con/world.hpp"

namespace con {

inline constexpr int kDefaultDescriptorDim = 64;
/// Object-map cells whose primary score stays below this are dropped.
inline constexpr double kDefaultSparsityThreshold = 0.05;
inline constexpr int kDefaultHypotheses = 5;

/// View embedding. Unit norm when produced by ViewEmbedder.
struct ViewDescriptor {
  std::vector<double> values;

  std::size_t dim() const { return values.size(); }
  double norm() const;
  friend bool operator==(const ViewDescriptor&, const ViewDescriptor&) = default;
};

/// Clamped cosine similarity, max(0, cos(a, b)). Throws
/// std::invalid_argument on dimension mismatch.
double similarity(const ViewDescriptor& a, const ViewDescriptor& b);

struct EmbeddingParams {
  int dim = kDefaultDescriptorDim;
  /// Obstacle cells are pooled into square blocks of this many cells per side;
  /// each block is one feature.
  int block_cells = 5;
  /// Weight of a visible target relative to a single visible obstacle cell.
  double target_weight = 10.0;
  std::uint64_t seed = 7;
};

/// Synthetic stand-in for a learned view embedding. Every scene feature
/// (obstacle block, target object, or the empty view) owns a seeded random
/// unit vector; a view descriptor is the normalized, count-weighted sum of the
/// features it sees. Identical visible content gives identical descriptors.
class ViewEmbedder {
 public:
  ViewEmbedder(const World& world, const FovModel& fov, const EmbeddingParams& params = {});

  ViewDescriptor embed(const Pose2D& pose) const;
  /// Same as embed(), with the visible set already computed.
  ViewDescriptor embed_visible(std::span<const CellIndex> visible) const;

  /// Normalized weighted sum of features, features given as (id, weight).
  /// Empty input yields the empty-view feature vector.
  ViewDescriptor embed_features(std::span<const std::pair<int, double>> features) const;

  int feature_count() const { return static_cast<int>(bank_.size() / dim_); }
  int block_feature(CellIndex c) const;
  int target_feature(int target_id) const;
  int empty_feature() const { return feature_count() - 1; }
  const EmbeddingParams& params() const { return params_; }
  const FovModel& fov() const { return fov_; }

 private:
  const World* world_;
  FovModel fov_;
  EmbeddingParams params_;
  std::size_t dim_;
  int blocks_x_ = 0;
  int blocks_y_ = 0;
  std::map<int, int> target_feature_;
  std::vector<double> bank_;      // feature-major, dim_ values each
};

/// Convenience wrapper building a throwaway embedder.
ViewDescriptor embed_view(const World& world, const Pose2D& pose, const FovModel& fov,
                          const EmbeddingParams& params = {});

/// Pose used to take the target image: about one meter from the target,
/// facing it, chosen deterministically among poses that detect it.
Pose2D target_image_pose(const World& world, int target_id, const FovModel& fov);

struct DatasetRecord {
  Pose2D pose{};
  ViewDescriptor view;
  std::vector<CellIndex> observed;  // sorted
};

/// A teacher's only knowledge: its past views and what each one covered.
struct TeacherDataset {
  GridSpec spec{};
  std::vector<DatasetRecord> records;

  void validate() const;
  /// Place classes of the 1 m cells the teacher visited, all eight sectors each.
  std::vector<PlaceClass> place_universe() const;
};

TeacherDataset make_teacher_dataset(const World& world, const Trajectory& traj,
                                    const ViewEmbedder& embedder);

/// Per cell: primary = max similarity over the records observing it,
/// secondary = sum of those similarities. Cells whose primary is below
/// `threshold` are dropped.
ScoredGrid build_object_map(const TeacherDataset& dataset, const ViewDescriptor& target_query,
                            double threshold = kDefaultSparsityThreshold);

struct Hypothesis {
  PlaceClass place{};
  double likelihood = 0.0;
  SE2Transform transform{};  // teacher frame -> student frame
};

/// Synthetic self-localization: returns the oracle place with probability
/// 1 - failure_rate, otherwise a uniformly random place class.
class LocalizationModel {
 public:
  LocalizationModel(double failure_rate, std::uint64_t seed);

  double failure_rate() const { return failure_rate_; }

  /// Ranked hypotheses. Rank 1 is the oracle answer or, with probability
  /// failure_rate, a uniform draw from `universe`; ranks 2..n are distinct
  /// uniform draws excluding earlier ranks. Likelihoods follow 2^-k,
  /// normalized. A missing `true_place` means the view is outside the
  /// teacher's experience: the oracle answer is then the novel class, returned
  /// alone. `n` is truncated to the universe size.
  std::vector<Hypothesis> localize(const std::optional<PlaceClass>& true_place,
                                   std::span<const PlaceClass> universe, int n);

 private:
  double failure_rate_;
  Rng rng_;
};

/// Teacher-to-student transform implied by locating the student's place
/// class `student` at place class `hypothesized` in the teacher frame.
SE2Transform anchor_transform(const PlaceClass& hypothesized, const PlaceClass& student);

enum class Verdict { kAccept, kReject };

/// Accept iff the list is non-empty, rank 1 is not the novel class, and its
/// likelihood is at least `tau`.
Verdict outlier_check(std::span<const Hypothesis> hyps, double tau);

}  // namespace con
