#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "propslam/cloud.hpp"
#include "propslam/simd/kernels.hpp"

namespace propslam {

enum class TieBreak : std::uint8_t { kLowestTargetIndex = 0 };

/// Correspondence-search parameters.
///
/// A candidate target q for source point p costs d²(p, q) + λ(p, q), where
/// λ = alpha when the labels differ and 0 otherwise. Its scope radius is
/// `widened_radius` when p is labeled and q carries the same label, and
/// `base_radius` otherwise. A candidate is admissible when its cost does not
/// exceed the square of its scope radius; the admissible candidate of least
/// cost wins, ties going to the lowest target index.
struct AssociationParams {
  double alpha = 1.0;           // m²
  double widened_radius = 3.0;  // m
  double base_radius = 1.0;     // m
  TieBreak tie_break = TieBreak::kLowestTargetIndex;

  /// Throws Error(kConfig) when the invariants are violated.
  void validate() const;

  /// Label-blind nearest neighbour within `radius`.
  static AssociationParams conventional(double radius) { return {0.0, radius, radius}; }
};

struct Correspondence {
  std::uint32_t target_index = 0;
  double squared_distance = 0.0;  // m²
  double penalty = 0.0;           // λ, either 0 or alpha

  friend bool operator==(const Correspondence&, const Correspondence&) = default;
};

/// Balanced kd-tree over a target cloud. Read-only after construction, so
/// concurrent queries are safe.
class SpatialIndex {
 public:
  static constexpr std::size_t kLeafSize = 16;

  /// Throws Error(kEmptyCloud) on an empty target.
  explicit SpatialIndex(const PointCloud& target);

  std::size_t size() const { return order_.size(); }

  std::optional<Correspondence> best_match(const Vec3& p, ClassLabel label,
                                           const AssociationParams& params) const;

  /// Label-blind nearest target point; returns (index, squared distance).
  std::pair<std::uint32_t, double> nearest(const Vec3& p) const;

  /// Indices of the k nearest targets, closest first (ties by index).
  std::vector<std::uint32_t> k_nearest(const Vec3& p, std::size_t k) const;

  /// All target indices within `radius` (inclusive), ascending.
  std::vector<std::uint32_t> radius_search(const Vec3& p, double radius) const;

  Vec3 point(std::uint32_t target_index) const;
  ClassLabel label(std::uint32_t target_index) const;

 private:
  struct Node {
    Vec3 lo;
    Vec3 hi;
    std::uint32_t begin = 0;
    std::uint32_t end = 0;
    std::int32_t left = -1;
    std::int32_t right = -1;
  };

  std::int32_t build(std::uint32_t begin, std::uint32_t end, const std::vector<Vec3>& pos);
  static double box_distance2(const Node& n, const Vec3& p);

  template <typename Visit>
  void traverse(const Vec3& p, double& bound, Visit&& visit) const;

  std::vector<Node> nodes_;
  std::vector<std::uint32_t> order_;  // tree slot -> original index
  std::vector<std::uint32_t> slot_;   // original index -> tree slot
  simd::PointsSoA points_;            // in tree-slot order
  std::vector<ClassLabel> labels_;    // in tree-slot order
};

SpatialIndex build_index(const PointCloud& target);

/// One slot per source point; empty when nothing lies in scope.
std::vector<std::optional<Correspondence>> associate(const PointCloud& source,
                                                     const SpatialIndex& index,
                                                     const AssociationParams& params);

/// Same search over positions already transformed into the target frame.
std::vector<std::optional<Correspondence>> associate(simd::PointsView positions,
                                                     std::span<const ClassLabel> labels,
                                                     const SpatialIndex& index,
                                                     const AssociationParams& params);

}  // namespace propslam
