#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "con/perception.hpp"

namespace con {

LocalizationModel::LocalizationModel(double failure_rate, std::uint64_t seed)
    : failure_rate_(failure_rate), rng_(seed) {
  if (!(failure_rate >= 0.0 && failure_rate <= 1.0)) {
    throw std::invalid_argument("LocalizationModel: failure rate must be in [0, 1]");
  }
}

std::vector<Hypothesis> LocalizationModel::localize(const std::optional<PlaceClass>& true_place,
                                                    std::span<const PlaceClass> universe, int n) {
  if (n < 1) throw std::invalid_argument("localize: n must be >= 1");
  if (true_place && std::find(universe.begin(), universe.end(), *true_place) == universe.end()) {
    throw std::invalid_argument("localize: true place not in the class universe");
  }
  const bool failed = uniform01(rng_) < failure_rate_;
  if (universe.empty() || (!failed && !true_place)) {
    return {Hypothesis{PlaceClass::novel(), 1.0, SE2Transform::identity()}};
  }
  std::vector<PlaceClass> pool(universe.begin(), universe.end());
  std::vector<PlaceClass> ranked;
  const auto take = [&pool, &ranked](std::size_t i) {
    ranked.push_back(pool[i]);
    pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(i));
  };
  if (failed) {
    take(uniform_index(rng_, pool.size()));
  } else {
    take(static_cast<std::size_t>(std::find(pool.begin(), pool.end(), *true_place) - pool.begin()));
  }
  const std::size_t want = std::min<std::size_t>(static_cast<std::size_t>(n), universe.size());
  while (ranked.size() < want) take(uniform_index(rng_, pool.size()));

  double total = 0.0;
  for (std::size_t k = 0; k < ranked.size(); ++k) total += std::ldexp(1.0, -static_cast<int>(k + 1));
  std::vector<Hypothesis> out;
  out.reserve(ranked.size());
  for (std::size_t k = 0; k < ranked.size(); ++k) {
    out.push_back({ranked[k], std::ldexp(1.0, -static_cast<int>(k + 1)) / total,
                   SE2Transform::identity()});
  }
  return out;
}

SE2Transform anchor_transform(const PlaceClass& hypothesized, const PlaceClass& student) {
  if (hypothesized == student) return SE2Transform::identity();
  const SE2Transform at_teacher = SE2Transform::from_pose(place_class_center(hypothesized));
  const SE2Transform at_student = SE2Transform::from_pose(place_class_center(student));
  return se2_compose(at_student, se2_inverse(at_teacher));
}

Verdict outlier_check(std::span<const Hypothesis> hyps, double tau) {
  if (hyps.empty() || hyps.front().place.is_novel()) return Verdict::kReject;
  return hyps.front().likelihood >= tau ? Verdict::kAccept : Verdict::kReject;
}

}  // namespace con
