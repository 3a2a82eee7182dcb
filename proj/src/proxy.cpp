#include "con/proxy.hpp"

#include <algorithm>

namespace con {
namespace {

MapResponse respond(const TeacherDataset& dataset, const LocalizationQuery& q,
                    LocalizationModel& model, const std::optional<PlaceClass>& true_place,
                    std::span<const PlaceClass> universe, const ProxyConfig& config,
                    const ScoredGrid* prebuilt) {
  const std::vector<Hypothesis> hyps = model.localize(true_place, universe, config.hypotheses);
  MapResponse out;
  if (outlier_check(hyps, config.tau) == Verdict::kReject) {
    out.map = ScoredGrid(dataset.spec);
    return out;
  }
  const PlaceClass student_place = pose_to_place_class(q.pose_hint);
  for (const Hypothesis& h : hyps) {
    out.hypotheses.push_back({anchor_transform(h.place, student_place), h.likelihood});
  }
  out.map = prebuilt ? *prebuilt
                     : build_object_map(dataset, q.target_query, config.sparsity_threshold);
  return out;
}

}  // namespace

MapResponse proxy_handle_query(const TeacherDataset& dataset, const LocalizationQuery& q,
                               LocalizationModel& model,
                               const std::optional<PlaceClass>& true_place,
                               const ProxyConfig& config) {
  dataset.validate();
  const auto universe = dataset.place_universe();
  return respond(dataset, q, model, true_place, universe, config, nullptr);
}

StudentProxy::StudentProxy(const TeacherDataset& dataset, LocalizationModel model,
                           ProxyConfig config)
    : dataset_(&dataset), model_(std::move(model)), config_(config) {
  dataset.validate();
  universe_ = dataset.place_universe();
}

std::optional<PlaceClass> StudentProxy::oracle_place(const Pose2D& true_pose) const {
  const PlaceClass pc = pose_to_place_class(true_pose);
  if (std::binary_search(universe_.begin(), universe_.end(), pc)) return pc;
  return std::nullopt;
}

MapResponse StudentProxy::handle(const LocalizationQuery& q,
                                 const std::optional<PlaceClass>& true_place) {
  if (!cached_query_ || !(*cached_query_ == q.target_query)) {
    cached_map_ = build_object_map(*dataset_, q.target_query, config_.sparsity_threshold);
    cached_query_ = q.target_query;
  }
  return respond(*dataset_, q, model_, true_place, universe_, config_, &cached_map_);
}

std::vector<std::uint8_t> StudentProxy::handle_frame(std::span<const std::uint8_t> query_frame,
                                                     const std::optional<PlaceClass>& true_place) {
  return encode_response(handle(decode_query(query_frame), true_place));
}

}  // namespace con
