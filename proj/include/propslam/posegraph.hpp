#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "propslam/geometry.hpp"

namespace propslam {

struct PoseNode {
  std::uint32_t frame_id = 0;
  RigidTransform pose;
};

enum class EdgeKind : std::uint8_t { kOdometry, kLoop };

struct PoseEdge {
  std::uint32_t a = 0;
  std::uint32_t b = 0;
  RigidTransform measurement;  // expected relative(x_a, x_b)
  Mat6 information = Mat6::Identity();
  EdgeKind kind = EdgeKind::kOdometry;
};

struct PoseGraph {
  std::vector<PoseNode> nodes;
  std::vector<PoseEdge> edges;
};

/// A relative-pose measurement with its covariance, as produced by scan matching.
struct RelativeMeasurement {
  std::uint32_t a = 0;
  std::uint32_t b = 0;
  RigidTransform transform;
  Mat6 covariance = Mat6::Identity();
};

struct OptimizeReport {
  double initial_J = 0.0;
  double final_J = 0.0;
  int iterations = 0;
  bool converged = false;
};

struct OptimizeOutcome {
  std::vector<RigidTransform> poses;
  OptimizeReport report;
};

/// twist_log(d⁻¹ ∘ relative(x_a, x_b)).
Twist edge_error(const RigidTransform& x_a, const RigidTransform& x_b, const RigidTransform& d);

/// Derivatives of edge_error with respect to right perturbations x∘exp(δ) of
/// each endpoint.
std::pair<Mat6, Mat6> edge_jacobians(const RigidTransform& x_a, const RigidTransform& x_b,
                                     const RigidTransform& d);

/// Σ eᵀ·Ω·e over all edges. Throws kDanglingEdge when an endpoint is missing.
double evaluate_J(const PoseGraph& graph);

/// Damped Gauss-Newton over twist increments, node 0 held fixed. Throws
/// kOptimizationDiverged when the damped normal matrix is still not positive
/// definite at the damping ceiling.
OptimizeOutcome optimize(const PoseGraph& graph, int max_iterations = 100, double damping = 1e-6);

/// Odometry edge i joins nodes i and i+1; information is the inverse
/// covariance. Throws kUnobservableDirection if a covariance cannot be inverted.
PoseGraph build_graph(std::span<const RigidTransform> poses,
                      std::span<const RelativeMeasurement> odometry,
                      std::span<const RelativeMeasurement> loops);

/// Inverse of a symmetric positive-definite 6×6 matrix.
Mat6 information_from_covariance(const Mat6& covariance);

}  // namespace propslam
