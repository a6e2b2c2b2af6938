#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "propslam/association.hpp"

namespace propslam {

/// Convention: every transform produced here maps SOURCE coordinates into the
/// TARGET frame, i.e. target ≈ R·source + T.
struct IcpParams {
  AssociationParams association;
  int max_iterations = 50;
  double translation_tol = 1e-4;  // m, per-iteration increment
  double rotation_tol = 1e-4;     // rad, per-iteration increment
  std::size_t min_correspondences = 10;
  double sensor_noise_sigma = 0.01;  // m
  std::size_t normal_neighbors = 8;

  void validate() const;
};

struct IcpResult {
  RigidTransform transform;
  /// Σ‖R·s + T − q‖² + Σλ over the final correspondences (penalized cost).
  double final_cost = 0.0;
  /// Same sum without the λ terms.
  double euclidean_cost = 0.0;
  int iterations = 0;
  /// 6×6 covariance of a right perturbation T∘exp(ξ), twist order (v, w).
  Mat6 covariance = Mat6::Identity();
  bool converged = false;
  std::size_t correspondence_count = 0;
  /// Penalized cost after each rigid solve.
  std::vector<double> cost_history;
};

/// Per-iteration record, used to compare ICP variants step by step.
struct IcpTrace {
  std::vector<std::vector<std::optional<Correspondence>>> correspondences;
  std::vector<RigidTransform> transforms;
};

/// Closed-form least-squares rigid alignment (cross-covariance SVD).
/// Minimizes Σ‖target[i] − (R·source[i] + T)‖². Throws kDegenerateCorrespondences
/// for fewer than three pairs or a collinear pair set.
RigidTransform solve_rigid(std::span<const Vec3> source, std::span<const Vec3> target);

IcpResult run_icp(const PointCloud& source, const PointCloud& target, const RigidTransform& init,
                  const IcpParams& params, IcpTrace* trace = nullptr);

/// Variant reusing a spatial index already built over `target`.
IcpResult run_icp(const PointCloud& source, const SpatialIndex& target_index,
                  const RigidTransform& init, const IcpParams& params, IcpTrace* trace = nullptr);

/// A converged pair together with the target surface normal at its partner.
struct MatchedPair {
  Vec3 source;
  Vec3 target;
  Vec3 normal;
};

/// ∂(T∘exp(ξ)·s)/∂ξ at ξ = 0.
Eigen::Matrix<double, 3, 6> point_jacobian(const RigidTransform& t, const Vec3& s);

/// Point-to-plane residual nᵀ(T·s − q) and its row Jacobian nᵀ·point_jacobian.
double plane_residual(const RigidTransform& t, const MatchedPair& pair);
Eigen::Matrix<double, 1, 6> plane_residual_jacobian(const RigidTransform& t, const MatchedPair& pair);

/// Unit normal of the plane fitted to the k nearest target points around `q`.
Vec3 estimate_normal(const SpatialIndex& index, const Vec3& q, std::size_t k);

/// JᵀJ over all pairs, unscaled and unregularized.
Mat6 information_matrix(std::span<const MatchedPair> pairs, const RigidTransform& t);

/// σ²·(JᵀJ + 1e-9·I)⁻¹. Throws kUnobservableDirection if the regularized
/// system still cannot be inverted.
Mat6 estimate_covariance(std::span<const MatchedPair> pairs, const RigidTransform& t,
                         double sensor_noise_sigma);

}  // namespace propslam
