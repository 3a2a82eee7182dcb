#include "con/perception.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <stdexcept>

#include "con/simd.hpp"

namespace con {

double ViewDescriptor::norm() const { return std::sqrt(simd::dot(values, values)); }

double similarity(const ViewDescriptor& a, const ViewDescriptor& b) {
  if (a.dim() != b.dim()) throw std::invalid_argument("similarity: dimension mismatch");
  return std::clamp(simd::dot(a.values, b.values), 0.0, 1.0);
}

namespace {

constexpr std::uint64_t kBlockTag = 0x424C4B;
constexpr std::uint64_t kTargetTag = 0x544754;
constexpr std::uint64_t kEmptyTag = 0x454D50;

void fill_unit_gaussian(std::span<double> out, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (double& v : out) v = normal(rng);
  const double n = std::sqrt(simd::dot(out, out));
  simd::scale(1.0 / n, out);
}

}  // namespace

ViewEmbedder::ViewEmbedder(const World& world, const FovModel& fov, const EmbeddingParams& params)
    : world_(&world), fov_(fov), params_(params), dim_(static_cast<std::size_t>(params.dim)) {
  if (params.dim < 1 || params.dim > 65535) {
    throw std::invalid_argument("ViewEmbedder: dim must be in [1, 65535]");
  }
  if (params.block_cells < 1 || !(params.target_weight > 0.0)) {
    throw std::invalid_argument("ViewEmbedder: bad block size or target weight");
  }
  fov_.validate();
  const GridSpec& spec = world.spec();
  blocks_x_ = (spec.width + params.block_cells - 1) / params.block_cells;
  blocks_y_ = (spec.height + params.block_cells - 1) / params.block_cells;
  const int block_count = blocks_x_ * blocks_y_;
  const int total = block_count + static_cast<int>(world.targets().size()) + 1;
  bank_.assign(static_cast<std::size_t>(total) * dim_, 0.0);
  auto slot = [this](int f) { return std::span<double>(bank_.data() + f * dim_, dim_); };
  for (int b = 0; b < block_count; ++b) {
    fill_unit_gaussian(slot(b), derive_seed({params.seed, kBlockTag, static_cast<std::uint64_t>(b)}));
  }
  int f = block_count;
  for (const auto& [id, pos] : world.targets()) {
    target_feature_[id] = f;
    fill_unit_gaussian(slot(f), derive_seed({params.seed, kTargetTag, static_cast<std::uint64_t>(id)}));
    ++f;
  }
  fill_unit_gaussian(slot(f), derive_seed({params.seed, kEmptyTag}));
}

int ViewEmbedder::block_feature(CellIndex c) const {
  return (c.iy / params_.block_cells) * blocks_x_ + c.ix / params_.block_cells;
}

int ViewEmbedder::target_feature(int target_id) const {
  auto it = target_feature_.find(target_id);
  if (it == target_feature_.end()) throw WorldError("unknown target id " + std::to_string(target_id));
  return it->second;
}

ViewDescriptor ViewEmbedder::embed(const Pose2D& pose) const {
  const auto visible = visible_cells(*world_, pose, fov_);
  return embed_visible(visible);
}

ViewDescriptor ViewEmbedder::embed_visible(std::span<const CellIndex> visible) const {
  std::vector<std::pair<int, double>> features;
  features.reserve(visible.size());
  for (const CellIndex& c : visible) {
    if (world_->is_obstacle(c)) {
      features.emplace_back(block_feature(c), 1.0);
    } else if (const int t = world_->target_at(c); t >= 0) {
      features.emplace_back(target_feature(t), params_.target_weight);
    }
  }
  return embed_features(features);
}

ViewDescriptor ViewEmbedder::embed_features(std::span<const std::pair<int, double>> features) const {
  // Merge duplicate ids in id order so the sum is order independent.
  std::vector<std::pair<int, double>> merged(features.begin(), features.end());
  std::sort(merged.begin(), merged.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  ViewDescriptor out;
  out.values.assign(dim_, 0.0);
  std::size_t i = 0;
  bool any = false;
  while (i < merged.size()) {
    const int id = merged[i].first;
    if (id < 0 || id >= feature_count()) throw std::out_of_range("embed_features: bad feature id");
    double weight = 0.0;
    for (; i < merged.size() && merged[i].first == id; ++i) weight += merged[i].second;
    if (weight == 0.0) continue;
    simd::axpy(weight, std::span<const double>(bank_.data() + id * dim_, dim_), out.values);
    any = true;
  }
  double n = any ? std::sqrt(simd::dot(out.values, out.values)) : 0.0;
  if (n < 1e-12) {
    const auto empty = std::span<const double>(bank_.data() + empty_feature() * dim_, dim_);
    std::copy(empty.begin(), empty.end(), out.values.begin());
    return out;
  }
  simd::scale(1.0 / n, out.values);
  return out;
}

ViewDescriptor embed_view(const World& world, const Pose2D& pose, const FovModel& fov,
                          const EmbeddingParams& params) {
  return ViewEmbedder(world, fov, params).embed(pose);
}

Pose2D target_image_pose(const World& world, int target_id, const FovModel& fov) {
  const GridSpec& spec = world.spec();
  const Vec2 t = world.target(target_id);
  auto facing = [&](CellIndex c) {
    const Vec2 p = cell_to_world(c, spec);
    return Pose2D{p.x, p.y, normalize_angle(std::atan2(t.y - p.y, t.x - p.x))};
  };
  for (double d : {1.0, 0.8, 1.2, 0.6, 1.4, 0.4, 0.2}) {
    for (int k = 0; k < 8; ++k) {
      const double phi = k * kPi / 4.0;
      const CellIndex c = world_to_cell({t.x + d * std::cos(phi), t.y + d * std::sin(phi)}, spec);
      if (world.is_obstacle(c) || c == world.target_cell(target_id)) continue;
      const Pose2D pose = facing(c);
      if (detect_target(world, pose, target_id, fov)) return pose;
    }
  }
  throw WorldError("target_image_pose: target " + std::to_string(target_id) +
                   " is not detectable from nearby");
}

void TeacherDataset::validate() const {
  spec.validate();
  if (records.empty()) throw std::invalid_argument("TeacherDataset: no records");
  for (const auto& r : records) {
    for (const auto& c : r.observed) {
      if (!in_bounds(spec, c)) throw std::invalid_argument("TeacherDataset: observed cell out of bounds");
    }
  }
}

std::vector<PlaceClass> TeacherDataset::place_universe() const {
  std::set<std::pair<int, int>> cells;
  for (const auto& r : records) {
    const PlaceClass pc = pose_to_place_class(r.pose);
    cells.emplace(pc.cx, pc.cy);
  }
  std::vector<PlaceClass> out;
  out.reserve(cells.size() * kPlaceSectors);
  for (const auto& [cx, cy] : cells) {
    for (int s = 0; s < kPlaceSectors; ++s) out.push_back({cx, cy, s});
  }
  return out;
}

TeacherDataset make_teacher_dataset(const World& world, const Trajectory& traj,
                                    const ViewEmbedder& embedder) {
  TeacherDataset ds;
  ds.spec = world.spec();
  ds.records.reserve(traj.size());
  for (const auto& pt : traj.points) {
    DatasetRecord rec;
    rec.pose = pt.pose;
    rec.observed = traj.view_fov == embedder.fov() ? pt.observed
                                                   : visible_cells(world, pt.pose, embedder.fov());
    rec.view = embedder.embed_visible(rec.observed);
    ds.records.push_back(std::move(rec));
  }
  return ds;
}

ScoredGrid build_object_map(const TeacherDataset& dataset, const ViewDescriptor& target_query,
                            double threshold) {
  dataset.validate();
  DenseScores acc(dataset.spec);
  for (const auto& rec : dataset.records) {
    const double s = similarity(target_query, rec.view);
    for (const CellIndex& c : rec.observed) {
      const std::size_t i = flat_index(dataset.spec, c);
      acc.primary[i] = std::max(acc.primary[i], s);
      acc.secondary[i] += s;
    }
  }
  for (std::size_t i = 0; i < acc.primary.size(); ++i) {
    if (acc.primary[i] < threshold) {
      acc.primary[i] = 0.0;
      acc.secondary[i] = 0.0;
    }
  }
  return acc.to_sparse();
}

}  // namespace con
