#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "propslam/icp.hpp"
#include "propslam/landmarks.hpp"
#include "propslam/posegraph.hpp"

namespace propslam {

enum class PipelineVariant { kOdometryOnly, kIcp, kIcpPg, kPropIcp, kPropIcpPg };

inline constexpr std::array<PipelineVariant, 5> kAllVariants{
    PipelineVariant::kOdometryOnly, PipelineVariant::kIcp, PipelineVariant::kIcpPg,
    PipelineVariant::kPropIcp, PipelineVariant::kPropIcpPg};

/// "odometry", "icp", "icp-pg", "prop-icp", "prop-icp-pg".
std::string_view to_string(PipelineVariant v);
/// Throws Error(kConfig) for an unknown name.
PipelineVariant parse_variant(std::string_view name);
bool uses_property_icp(PipelineVariant v);
bool uses_pose_graph(PipelineVariant v);

struct Trajectory {
  std::vector<std::uint32_t> frame_ids;
  std::vector<RigidTransform> poses;

  std::size_t size() const { return poses.size(); }
  static Trajectory from_poses(std::vector<RigidTransform> poses);
};

struct PipelineParams {
  /// Matching parameters for the property-aware variants. Conventional
  /// variants reuse everything except the association, which becomes a
  /// label-blind search within `association.base_radius`.
  IcpParams icp;
  LandmarkParams landmarks;
  /// Loop ICP first runs with base radius widened to this (α scaled along),
  /// then refines with the normal parameters.
  double loop_search_radius = 1.0;  // m
  std::size_t max_loops_per_frame = 1;
  /// Candidates are tried nearest estimated frame first; at most this many per frame.
  std::size_t max_loop_attempts_per_frame = 3;
  /// Loop edges are kept only when ICP converged and trace(Σ) is below this,
  double loop_max_covariance_trace = 1e-3;
  /// ... at least this fraction of the source found a partner,
  double loop_min_overlap = 0.5;
  /// ... and the result moved this little from the estimate-implied start.
  double loop_max_correction_translation = 1.5;  // m
  double loop_max_correction_rotation = 0.35;    // rad
  int optimizer_max_iterations = 100;
  double optimizer_damping = 1e-6;
  /// Covariance used, ×fallback_inflation, when ICP fails and odometry is kept.
  double odometry_sigma_translation = 0.05;  // m
  double odometry_sigma_rotation = 0.02;     // rad
  double fallback_inflation = 100.0;

  /// ICP parameters actually used by `variant`.
  IcpParams icp_for(PipelineVariant variant) const;
  void validate() const;
};

struct FallbackEvent {
  std::uint32_t frame = 0;  // target frame of the failed edge is frame - 1
  std::string reason;
};

struct PipelineResult {
  PipelineVariant variant = PipelineVariant::kOdometryOnly;
  Trajectory trajectory;
  PointCloud map;
  /// One entry per consecutive frame pair; empty for odometry-only or fallback edges.
  std::vector<std::optional<IcpResult>> icp_results;
  std::vector<RelativeMeasurement> odometry_edges;
  std::vector<RelativeMeasurement> loop_edges;
  std::vector<FallbackEvent> fallbacks;
  std::optional<OptimizeReport> optimize_report;
  std::vector<std::string> log;
};

/// Sequential scan-matching SLAM. `odometry[k]` is the dead-reckoned pose of
/// frame k; odometry[0] is taken as the known start pose. Each scan is in its
/// own sensor frame.
PipelineResult run_pipeline(std::span<const PointCloud> scans, std::span<const RigidTransform> odometry,
                            PipelineVariant variant, const PipelineParams& params);

/// Same as calling run_pipeline once per variant, but a pose-graph variant
/// reuses the sequential matching of its plain counterpart.
std::vector<PipelineResult> run_variants(std::span<const PointCloud> scans, std::span<const RigidTransform> odometry,
                                         std::span<const PipelineVariant> variants, const PipelineParams& params);

/// Union of every scan placed at its pose.
PointCloud assemble_map(std::span<const PointCloud> scans, std::span<const RigidTransform> poses);

namespace fixtures {

/// Pipeline settings for the loop course: tight base radius with α = base²,
/// loops only across the lap closure (gap 100, gate 1 m).
PipelineParams loop_course_pipeline();

}  // namespace fixtures

}  // namespace propslam
