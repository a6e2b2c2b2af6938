#pragma once

#include <map>
#include <vector>

#include "propslam/pipeline.hpp"

namespace propslam {

/// Per-frame ‖t_est − t_true‖ without any alignment. Throws kTrajectoryMismatch
/// when the frame id sequences differ.
std::vector<double> translation_error_series(const Trajectory& estimate, const Trajectory& truth);

/// Mean over estimated-map points of the distance to the nearest truth-map
/// point. Throws kEmptyCloud on empty input.
double map_distance(const PointCloud& estimated_map, const PointCloud& truth_map);

/// The same mean restricted to estimated points of each label (diagnostic;
/// the nearest truth point is still searched among all labels).
std::map<ClassLabel, double> map_distance_by_class(const PointCloud& estimated_map,
                                                   const PointCloud& truth_map);

double mean(const std::vector<double>& values);

}  // namespace propslam
