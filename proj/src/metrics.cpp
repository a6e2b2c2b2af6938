#include "propslam/metrics.hpp"

#include <cmath>

#include "propslam/association.hpp"
#include "propslam/error.hpp"

namespace propslam {

std::vector<double> translation_error_series(const Trajectory& estimate, const Trajectory& truth) {
  if (estimate.frame_ids != truth.frame_ids || estimate.poses.size() != truth.poses.size()) {
    throw Error(ErrorCode::kTrajectoryMismatch, "translation_error_series: trajectory mismatch");
  }
  std::vector<double> out(estimate.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = (estimate.poses[i].translation() - truth.poses[i].translation()).norm();
  }
  return out;
}

double map_distance(const PointCloud& estimated_map, const PointCloud& truth_map) {
  if (estimated_map.empty() || truth_map.empty()) {
    throw Error(ErrorCode::kEmptyCloud, "map_distance: empty cloud");
  }
  const SpatialIndex index(truth_map);
  double sum = 0.0;
  for (const auto& p : estimated_map.points) sum += std::sqrt(index.nearest(p.position).second);
  return sum / static_cast<double>(estimated_map.size());
}

std::map<ClassLabel, double> map_distance_by_class(const PointCloud& estimated_map,
                                                   const PointCloud& truth_map) {
  if (estimated_map.empty() || truth_map.empty()) {
    throw Error(ErrorCode::kEmptyCloud, "map_distance: empty cloud");
  }
  const SpatialIndex index(truth_map);
  std::map<ClassLabel, std::pair<double, std::size_t>> acc;
  for (const auto& p : estimated_map.points) {
    auto& [sum, count] = acc[p.label];
    sum += std::sqrt(index.nearest(p.position).second);
    ++count;
  }
  std::map<ClassLabel, double> out;
  for (const auto& [label, sc] : acc) out[label] = sc.first / static_cast<double>(sc.second);
  return out;
}

double mean(const std::vector<double>& values) {
  if (values.empty()) return 0.0;
  double s = 0.0;
  for (double v : values) s += v;
  return s / static_cast<double>(values.size());
}

}  // namespace propslam
