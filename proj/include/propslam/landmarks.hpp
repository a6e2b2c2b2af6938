#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "propslam/cloud.hpp"

namespace propslam {

/// Cluster of same-class points in one scan, in that scan's local frame.
struct Landmark {
  ClassLabel label;
  Vec3 centroid = Vec3::Zero();
  std::size_t point_count = 0;
  std::uint32_t frame_id = 0;
};

struct FrameLandmarks {
  std::uint32_t frame_id = 0;
  std::vector<Landmark> landmarks;
};

struct LoopCandidate {
  std::uint32_t frame_u = 0;
  std::uint32_t frame_t = 0;
  Landmark landmark_u;
  Landmark landmark_t;
  double centroid_gap = 0.0;  // m, world frame under the supplied estimate
};

struct LandmarkParams {
  double cluster_radius = 0.5;
  std::size_t min_cluster_size = 5;
  double gate_radius = 3.0;
  std::uint32_t min_frame_gap = 10;
};

/// Single-linkage clustering of the labeled points of each class. Clusters
/// below `min_cluster_size` are dropped. Output is ordered by label, then by
/// centroid (lexicographic).
std::vector<Landmark> extract_landmarks(const PointCloud& scan, std::size_t min_cluster_size,
                                        double cluster_radius);

/// Candidates ending at frame `t`: earlier frames u with t − u ≥ min_frame_gap
/// holding a same-class landmark whose world centroid lies within
/// `gate_radius`. One candidate per u (closest centroid gap), ascending u.
/// `trajectory[i]` is the pose estimate of frame `history[i].frame_id`.
std::vector<LoopCandidate> detect_loops_at(std::span<const FrameLandmarks> history,
                                           std::span<const RigidTransform> trajectory,
                                           std::size_t t_index, double gate_radius,
                                           std::uint32_t min_frame_gap);

/// All candidates over the history, ordered by (frame_t, frame_u).
std::vector<LoopCandidate> detect_loops(std::span<const FrameLandmarks> history,
                                        std::span<const RigidTransform> trajectory,
                                        double gate_radius, std::uint32_t min_frame_gap);

}  // namespace propslam
