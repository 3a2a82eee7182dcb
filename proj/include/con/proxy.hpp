#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "con/perception.hpp"
#include "con/protocol.hpp"

namespace con {

struct ProxyConfig {
  int hypotheses = kDefaultHypotheses;
  double tau = 0.0;  // outlier threshold on the rank-1 likelihood
  double sparsity_threshold = kDefaultSparsityThreshold;
};

/// Answers one query against the teacher dataset: localize, anchor each
/// hypothesis as an SE2 transform, build the sparse object map for the
/// queried target. A rejected localization yields no hypotheses and an
/// empty map.
MapResponse proxy_handle_query(const TeacherDataset& dataset, const LocalizationQuery& q,
                               LocalizationModel& model,
                               const std::optional<PlaceClass>& true_place,
                               const ProxyConfig& config = {});

/// Teacher-side proxy session for one student. Owns the localization RNG
/// stream; not thread-safe.
class StudentProxy {
 public:
  StudentProxy(const TeacherDataset& dataset, LocalizationModel model, ProxyConfig config = {});

  const std::vector<PlaceClass>& universe() const { return universe_; }

  /// Oracle place class for a true student pose, or nullopt when that pose is
  /// outside the teacher's explored place classes (novel view).
  std::optional<PlaceClass> oracle_place(const Pose2D& true_pose) const;

  MapResponse handle(const LocalizationQuery& q, const std::optional<PlaceClass>& true_place);
  /// Byte-level entry point: decodes a query frame, returns a response frame.
  std::vector<std::uint8_t> handle_frame(std::span<const std::uint8_t> query_frame,
                                         const std::optional<PlaceClass>& true_place);

 private:
  const TeacherDataset* dataset_;
  LocalizationModel model_;
  ProxyConfig config_;
  std::vector<PlaceClass> universe_;
  // Object map for the most recent target query.
  std::optional<ViewDescriptor> cached_query_;
  ScoredGrid cached_map_;
};

/// How transformed teacher maps enter the student map.
struct MergeOptions {
  /// Scale hypothesis k's teacher scores by likelihood_k / likelihood_1.
  bool likelihood_weighted = false;
};

/// Folds the response into the student map once per hypothesis, in order:
/// the teacher map is transformed by the hypothesis into the student grid,
/// then primary = max and secondary = sum cell-wise. Throws
/// std::invalid_argument if the resolutions differ.
ScoredGrid merge_maps(const ScoredGrid& student, const MapResponse& response,
                      const MergeOptions& options = {});

/// In-place dense variant used inside episodes.
void merge_into(DenseScores& student, const MapResponse& response,
                const MergeOptions& options = {});

}  // namespace con
