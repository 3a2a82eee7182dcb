#include <cmath>
#include <stdexcept>

#include "con/proxy.hpp"

namespace con {

void merge_into(DenseScores& student, const MapResponse& response, const MergeOptions& options) {
  if (response.hypotheses.empty() || response.map.empty()) return;
  const double rs = student.spec.resolution;
  const double rt = response.map.spec().resolution;
  if (std::abs(rs - rt) > 1e-6 * rs) {
    throw std::invalid_argument("merge_maps: resolution mismatch");
  }
  const double lead = response.hypotheses.front().likelihood;
  DenseScores layer(student.spec);
  for (const WireHypothesis& h : response.hypotheses) {
    std::fill(layer.primary.begin(), layer.primary.end(), 0.0);
    std::fill(layer.secondary.begin(), layer.secondary.end(), 0.0);
    const ScoredGrid aligned = transform_grid(response.map, h.transform, student.spec);
    const double w = options.likelihood_weighted ? std::min(1.0, h.likelihood / lead) : 1.0;
    for (const auto& [c, s] : aligned) {
      const std::size_t i = flat_index(student.spec, c);
      layer.primary[i] = w * s.primary;
      layer.secondary[i] = w * s.secondary;
    }
    student.fold_from(layer);
  }
}

ScoredGrid merge_maps(const ScoredGrid& student, const MapResponse& response,
                      const MergeOptions& options) {
  DenseScores dense = DenseScores::from_sparse(student);
  merge_into(dense, response, options);
  return dense.to_sparse();
}

}  // namespace con
