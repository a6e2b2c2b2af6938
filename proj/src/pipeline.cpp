#include "propslam/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <memory>
#include <sstream>

#include "propslam/error.hpp"

namespace propslam {

std::string_view to_string(PipelineVariant v) {
  switch (v) {
    case PipelineVariant::kOdometryOnly: return "odometry";
    case PipelineVariant::kIcp: return "icp";
    case PipelineVariant::kIcpPg: return "icp-pg";
    case PipelineVariant::kPropIcp: return "prop-icp";
    case PipelineVariant::kPropIcpPg: return "prop-icp-pg";
  }
  return "unknown";
}

PipelineVariant parse_variant(std::string_view name) {
  for (auto v : kAllVariants) {
    if (to_string(v) == name) return v;
  }
  throw Error(ErrorCode::kConfig, "unknown variant '" + std::string(name) + "'");
}

bool uses_property_icp(PipelineVariant v) {
  return v == PipelineVariant::kPropIcp || v == PipelineVariant::kPropIcpPg;
}

bool uses_pose_graph(PipelineVariant v) {
  return v == PipelineVariant::kIcpPg || v == PipelineVariant::kPropIcpPg;
}

Trajectory Trajectory::from_poses(std::vector<RigidTransform> poses) {
  Trajectory t;
  t.poses = std::move(poses);
  for (std::size_t i = 0; i < t.poses.size(); ++i) t.frame_ids.push_back(static_cast<std::uint32_t>(i));
  return t;
}

IcpParams PipelineParams::icp_for(PipelineVariant variant) const {
  IcpParams p = icp;
  if (!uses_property_icp(variant)) p.association = AssociationParams::conventional(icp.association.base_radius);
  return p;
}

void PipelineParams::validate() const {
  icp.validate();
  if (!(loop_max_covariance_trace > 0.0)) throw Error(ErrorCode::kConfig, "pipeline: loop_max_covariance_trace must be > 0");
  if (!(loop_search_radius > 0.0)) throw Error(ErrorCode::kConfig, "pipeline: loop_search_radius must be > 0");
  if (!(loop_min_overlap >= 0.0 && loop_min_overlap <= 1.0)) {
    throw Error(ErrorCode::kConfig, "pipeline: loop_min_overlap must be in [0, 1]");
  }
  if (!(loop_max_correction_translation > 0.0) || !(loop_max_correction_rotation > 0.0)) {
    throw Error(ErrorCode::kConfig, "pipeline: loop correction bounds must be > 0");
  }
  if (optimizer_max_iterations < 1) throw Error(ErrorCode::kConfig, "pipeline: optimizer_max_iterations must be >= 1");
  if (!(optimizer_damping > 0.0)) throw Error(ErrorCode::kConfig, "pipeline: optimizer_damping must be > 0");
  if (!(fallback_inflation >= 1.0)) throw Error(ErrorCode::kConfig, "pipeline: fallback_inflation must be >= 1");
  if (!(odometry_sigma_translation > 0.0) || !(odometry_sigma_rotation > 0.0)) {
    throw Error(ErrorCode::kConfig, "pipeline: odometry sigmas must be > 0");
  }
}

PointCloud assemble_map(std::span<const PointCloud> scans, std::span<const RigidTransform> poses) {
  PointCloud map;
  for (std::size_t k = 0; k < scans.size(); ++k) append(map, apply(poses[k], scans[k]));
  return map;
}

namespace {

Mat6 fallback_covariance(const PipelineParams& p) {
  Vec6 d;
  const double st = p.odometry_sigma_translation * p.odometry_sigma_translation;
  const double sr = p.odometry_sigma_rotation * p.odometry_sigma_rotation;
  d << st, st, st, sr, sr, sr;
  return p.fallback_inflation * Mat6(d.asDiagonal());
}

}  // namespace

namespace {

class IndexCache {
 public:
  explicit IndexCache(std::span<const PointCloud> scans) : scans_(scans), indices_(scans.size()) {}
  const SpatialIndex& operator()(std::size_t k) {
    if (!indices_[k]) indices_[k] = std::make_unique<SpatialIndex>(scans_[k]);
    return *indices_[k];
  }

 private:
  std::span<const PointCloud> scans_;
  std::vector<std::unique_ptr<SpatialIndex>> indices_;
};

// Sequential matching; leaves the chained poses in out.trajectory.
PipelineResult front_end(std::span<const PointCloud> scans, std::span<const RigidTransform> odometry,
                         PipelineVariant variant, const PipelineParams& params, IndexCache& index_of) {
  PipelineResult out;
  out.variant = variant;
  const std::size_t n = scans.size();
  if (n == 0) return out;
  const IcpParams icp = params.icp_for(variant);
  const bool matching = variant != PipelineVariant::kOdometryOnly;
  std::vector<RigidTransform> poses{odometry[0]};
  out.icp_results.resize(n - 1);
  for (std::size_t k = 1; k < n; ++k) {
    const RigidTransform init = relative(odometry[k - 1], odometry[k]);
    RelativeMeasurement edge{static_cast<std::uint32_t>(k - 1), static_cast<std::uint32_t>(k), init,
                             fallback_covariance(params)};
    if (matching) {
      try {
        IcpResult r = run_icp(scans[k], index_of(k - 1), init, icp);
        edge.transform = r.transform;
        edge.covariance = r.covariance;
        out.icp_results[k - 1] = std::move(r);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kInsufficientOverlap && e.code() != ErrorCode::kDegenerateCorrespondences &&
            e.code() != ErrorCode::kUnobservableDirection && e.code() != ErrorCode::kEmptyCloud) {
          throw;
        }
        out.fallbacks.push_back({static_cast<std::uint32_t>(k), e.what()});
        out.log.push_back("frame " + std::to_string(k) + ": icp failed, using odometry (" + e.what() + ")");
      }
    }
    out.odometry_edges.push_back(edge);
    poses.push_back(compose(poses.back(), edge.transform));
  }

  out.trajectory = Trajectory::from_poses(std::move(poses));
  return out;
}

void back_end(std::span<const PointCloud> scans, const PipelineParams& params, IndexCache& index_of,
              PipelineResult& out) {
  const PipelineVariant variant = out.variant;
  const std::size_t n = scans.size();
  std::vector<RigidTransform> poses = std::move(out.trajectory.poses);
  const IcpParams icp = params.icp_for(variant);
  if (uses_pose_graph(variant)) {
    std::vector<FrameLandmarks> history(n);
    for (std::size_t k = 0; k < n; ++k) {
      history[k] = {static_cast<std::uint32_t>(k),
                    extract_landmarks(scans[k], params.landmarks.min_cluster_size, params.landmarks.cluster_radius)};
    }
    IcpParams coarse = icp;
    if (params.loop_search_radius > icp.association.base_radius) {
      const double s = params.loop_search_radius / icp.association.base_radius;
      coarse.association.base_radius = params.loop_search_radius;
      coarse.association.alpha = icp.association.alpha * s * s;
      coarse.association.widened_radius = std::max(icp.association.widened_radius, params.loop_search_radius);
    }
    for (std::size_t t = 0; t < n; ++t) {
      auto candidates = detect_loops_at(history, poses, t, params.landmarks.gate_radius,
                                        params.landmarks.min_frame_gap);
      auto apart = [&](const LoopCandidate& c) {
        return (poses[c.frame_u].translation() - poses[c.frame_t].translation()).norm();
      };
      std::stable_sort(candidates.begin(), candidates.end(),
                       [&](const LoopCandidate& a, const LoopCandidate& b) { return apart(a) < apart(b); });
      std::size_t accepted = 0;
      std::size_t attempts = 0;
      for (const auto& c : candidates) {
        if (accepted >= params.max_loops_per_frame || attempts >= params.max_loop_attempts_per_frame) break;
        ++attempts;
        const RigidTransform init = relative(poses[c.frame_u], poses[c.frame_t]);
        std::ostringstream msg;
        msg << "loop " << c.frame_u << " -> " << c.frame_t << ": ";
        try {
          const PointCloud& source = scans[c.frame_t];
          const IcpResult rough = run_icp(source, index_of(c.frame_u), init, coarse);
          IcpResult r = run_icp(source, index_of(c.frame_u), rough.transform, icp);
          const double trace = r.covariance.trace();
          const double overlap =
              static_cast<double>(r.correspondence_count) / static_cast<double>(source.points.size());
          const RigidTransform moved = relative(init, r.transform);
          const double shift = moved.translation().norm();
          const double turn = so3_log(moved.rotation()).norm();
          if (r.converged && trace < params.loop_max_covariance_trace && overlap >= params.loop_min_overlap &&
              shift <= params.loop_max_correction_translation && turn <= params.loop_max_correction_rotation) {
            out.loop_edges.push_back({c.frame_u, c.frame_t, r.transform, r.covariance});
            ++accepted;
            msg << "accepted (trace " << trace << ", overlap " << overlap << ", shift " << shift << ")";
          } else {
            msg << "rejected (converged " << r.converged << ", trace " << trace << ", overlap " << overlap
                << ", shift " << shift << ", turn " << turn << ")";
          }
        } catch (const Error& e) {
          msg << "rejected (" << e.what() << ")";
        }
        out.log.push_back(msg.str());
      }
    }

    const PoseGraph graph = build_graph(poses, out.odometry_edges, out.loop_edges);
    const OptimizeOutcome opt = optimize(graph, params.optimizer_max_iterations, params.optimizer_damping);
    out.optimize_report = opt.report;
    std::ostringstream msg;
    msg << "pose graph: " << graph.nodes.size() << " nodes, " << graph.edges.size() << " edges ("
        << out.loop_edges.size() << " loops), J " << opt.report.initial_J << " -> " << opt.report.final_J
        << " in " << opt.report.iterations << " iterations";
    out.log.push_back(msg.str());
    poses = opt.poses;
  }

  out.map = assemble_map(scans, poses);
  out.trajectory = Trajectory::from_poses(std::move(poses));
}

void check_inputs(std::span<const PointCloud> scans, std::span<const RigidTransform> odometry,
                  const PipelineParams& params) {
  params.validate();
  if (scans.size() != odometry.size()) {
    throw Error(ErrorCode::kTrajectoryMismatch, "run_pipeline: scans and odometry differ in length");
  }
}

PipelineVariant front_end_of(PipelineVariant v) {
  if (v == PipelineVariant::kIcpPg) return PipelineVariant::kIcp;
  if (v == PipelineVariant::kPropIcpPg) return PipelineVariant::kPropIcp;
  return v;
}

}  // namespace

PipelineResult run_pipeline(std::span<const PointCloud> scans, std::span<const RigidTransform> odometry,
                            PipelineVariant variant, const PipelineParams& params) {
  check_inputs(scans, odometry, params);
  IndexCache index_of(scans);
  PipelineResult out = front_end(scans, odometry, variant, params, index_of);
  if (!scans.empty()) back_end(scans, params, index_of, out);
  return out;
}

std::vector<PipelineResult> run_variants(std::span<const PointCloud> scans, std::span<const RigidTransform> odometry,
                                         std::span<const PipelineVariant> variants, const PipelineParams& params) {
  check_inputs(scans, odometry, params);
  IndexCache index_of(scans);
  std::vector<std::pair<PipelineVariant, PipelineResult>> fronts;
  std::vector<PipelineResult> out;
  for (const auto v : variants) {
    const PipelineVariant base = front_end_of(v);
    auto it = std::find_if(fronts.begin(), fronts.end(), [&](const auto& f) { return f.first == base; });
    if (it == fronts.end()) {
      fronts.emplace_back(base, front_end(scans, odometry, base, params, index_of));
      it = std::prev(fronts.end());
    }
    PipelineResult r = it->second;
    r.variant = v;
    if (!scans.empty()) back_end(scans, params, index_of, r);
    out.push_back(std::move(r));
  }
  return out;
}

namespace fixtures {

PipelineParams loop_course_pipeline() {
  PipelineParams p;
  p.icp.association.base_radius = 0.1;
  p.icp.association.alpha = 0.01;
  p.icp.association.widened_radius = 3.0;
  p.landmarks.gate_radius = 1.0;
  p.landmarks.min_frame_gap = 100;
  return p;
}

}  // namespace fixtures

}  // namespace propslam
