#include "propslam/association.hpp"

#include <algorithm>
#include <array>
#include <limits>
#include <numeric>

#include "propslam/error.hpp"

namespace propslam {

void AssociationParams::validate() const {
  if (!(alpha >= 0.0)) throw Error(ErrorCode::kConfig, "association: alpha must be >= 0");
  if (!(base_radius > 0.0)) throw Error(ErrorCode::kConfig, "association: base_radius must be > 0");
  if (!(widened_radius >= base_radius)) {
    throw Error(ErrorCode::kConfig, "association: widened_radius must be >= base_radius");
  }
}

SpatialIndex::SpatialIndex(const PointCloud& target) {
  if (target.empty()) throw Error(ErrorCode::kEmptyCloud, "build_index: empty cloud");
  const auto n = static_cast<std::uint32_t>(target.size());
  std::vector<Vec3> pos(n);
  for (std::uint32_t i = 0; i < n; ++i) pos[i] = target.points[i].position;
  order_.resize(n);
  std::iota(order_.begin(), order_.end(), 0u);
  nodes_.reserve(2 * (n / kLeafSize + 1));
  build(0, n, pos);

  points_.resize(n);
  labels_.resize(n);
  slot_.resize(n);
  for (std::uint32_t s = 0; s < n; ++s) {
    points_.set(s, pos[order_[s]]);
    labels_[s] = target.points[order_[s]].label;
    slot_[order_[s]] = s;
  }
}

std::int32_t SpatialIndex::build(std::uint32_t begin, std::uint32_t end, const std::vector<Vec3>& pos) {
  Node node;
  node.begin = begin;
  node.end = end;
  node.lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  node.hi = -node.lo;
  for (std::uint32_t i = begin; i < end; ++i) {
    node.lo = node.lo.cwiseMin(pos[order_[i]]);
    node.hi = node.hi.cwiseMax(pos[order_[i]]);
  }
  const auto id = static_cast<std::int32_t>(nodes_.size());
  nodes_.push_back(node);
  if (end - begin <= kLeafSize) return id;

  Eigen::Index axis = 0;
  (node.hi - node.lo).maxCoeff(&axis);
  const std::uint32_t mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](std::uint32_t a, std::uint32_t b) {
                     const double va = pos[a][axis];
                     const double vb = pos[b][axis];
                     return va < vb || (va == vb && a < b);
                   });
  const std::int32_t left = build(begin, mid, pos);
  const std::int32_t right = build(mid, end, pos);
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

double SpatialIndex::box_distance2(const Node& n, const Vec3& p) {
  double d2 = 0.0;
  for (int k = 0; k < 3; ++k) {
    double d = 0.0;
    if (p[k] < n.lo[k]) d = n.lo[k] - p[k];
    else if (p[k] > n.hi[k]) d = p[k] - n.hi[k];
    d2 += d * d;
  }
  return d2;
}

template <typename Visit>
void SpatialIndex::traverse(const Vec3& p, double& bound, Visit&& visit) const {
  std::array<std::int32_t, 128> stack{};
  std::size_t top = 0;
  stack[top++] = 0;
  while (top > 0) {
    const Node& node = nodes_[stack[--top]];
    if (box_distance2(node, p) > bound) continue;
    if (node.left < 0) {
      visit(node.begin, node.end);
      continue;
    }
    const double dl = box_distance2(nodes_[node.left], p);
    const double dr = box_distance2(nodes_[node.right], p);
    // Push the farther child first so the nearer one is explored first.
    if (dl <= dr) {
      stack[top++] = node.right;
      stack[top++] = node.left;
    } else {
      stack[top++] = node.left;
      stack[top++] = node.right;
    }
  }
}

std::optional<Correspondence> SpatialIndex::best_match(const Vec3& p, ClassLabel label,
                                                       const AssociationParams& params) const {
  const double base2 = params.base_radius * params.base_radius;
  const double wide2 = params.widened_radius * params.widened_radius;
  double bound = label.labeled() ? std::max(wide2, base2) : base2;

  double best_cost = std::numeric_limits<double>::infinity();
  std::uint32_t best_index = std::numeric_limits<std::uint32_t>::max();
  Correspondence best;
  std::array<double, kLeafSize> d2{};

  traverse(p, bound, [&](std::uint32_t begin, std::uint32_t end) {
    const std::size_t n = end - begin;
    simd::squared_distances(p, simd::PointsView(points_).subview(begin, n), std::span(d2.data(), n));
    for (std::size_t j = 0; j < n; ++j) {
      const ClassLabel lj = labels_[begin + j];
      const bool same = lj == label;
      const double penalty = same ? 0.0 : params.alpha;
      const double cost = d2[j] + penalty;
      const double scope2 = (same && label.labeled()) ? wide2 : base2;
      if (cost > scope2) continue;
      const std::uint32_t idx = order_[begin + j];
      if (cost < best_cost || (cost == best_cost && idx < best_index)) {
        best_cost = cost;
        best_index = idx;
        best = {idx, d2[j], penalty};
        bound = std::min(bound, cost);
      }
    }
  });
  if (best_index == std::numeric_limits<std::uint32_t>::max()) return std::nullopt;
  return best;
}

std::pair<std::uint32_t, double> SpatialIndex::nearest(const Vec3& p) const {
  double bound = std::numeric_limits<double>::infinity();
  std::uint32_t best_index = std::numeric_limits<std::uint32_t>::max();
  std::array<double, kLeafSize> d2{};
  traverse(p, bound, [&](std::uint32_t begin, std::uint32_t end) {
    const std::size_t n = end - begin;
    simd::squared_distances(p, simd::PointsView(points_).subview(begin, n), std::span(d2.data(), n));
    for (std::size_t j = 0; j < n; ++j) {
      const std::uint32_t idx = order_[begin + j];
      if (d2[j] < bound || (d2[j] == bound && idx < best_index)) {
        bound = d2[j];
        best_index = idx;
      }
    }
  });
  return {best_index, bound};
}

std::vector<std::uint32_t> SpatialIndex::k_nearest(const Vec3& p, std::size_t k) const {
  k = std::min(k, size());
  // Sorted (distance, index) list of the current best k.
  std::vector<std::pair<double, std::uint32_t>> best;
  best.reserve(k + 1);
  double bound = std::numeric_limits<double>::infinity();
  std::array<double, kLeafSize> d2{};
  traverse(p, bound, [&](std::uint32_t begin, std::uint32_t end) {
    const std::size_t n = end - begin;
    simd::squared_distances(p, simd::PointsView(points_).subview(begin, n), std::span(d2.data(), n));
    for (std::size_t j = 0; j < n; ++j) {
      std::pair<double, std::uint32_t> cand{d2[j], order_[begin + j]};
      if (best.size() == k && !(cand < best.back())) continue;
      best.insert(std::upper_bound(best.begin(), best.end(), cand), cand);
      if (best.size() > k) best.pop_back();
      if (best.size() == k) bound = best.back().first;
    }
  });
  std::vector<std::uint32_t> out;
  out.reserve(best.size());
  for (const auto& b : best) out.push_back(b.second);
  return out;
}

std::vector<std::uint32_t> SpatialIndex::radius_search(const Vec3& p, double radius) const {
  const double r2 = radius * radius;
  double bound = r2;
  std::vector<std::uint32_t> out;
  std::array<double, kLeafSize> d2{};
  traverse(p, bound, [&](std::uint32_t begin, std::uint32_t end) {
    const std::size_t n = end - begin;
    simd::squared_distances(p, simd::PointsView(points_).subview(begin, n), std::span(d2.data(), n));
    for (std::size_t j = 0; j < n; ++j) {
      if (d2[j] <= r2) out.push_back(order_[begin + j]);
    }
  });
  std::sort(out.begin(), out.end());
  return out;
}

Vec3 SpatialIndex::point(std::uint32_t target_index) const { return points_.get(slot_[target_index]); }

ClassLabel SpatialIndex::label(std::uint32_t target_index) const { return labels_[slot_[target_index]]; }

SpatialIndex build_index(const PointCloud& target) { return SpatialIndex(target); }

std::vector<std::optional<Correspondence>> associate(simd::PointsView positions,
                                                     std::span<const ClassLabel> labels,
                                                     const SpatialIndex& index,
                                                     const AssociationParams& params) {
  params.validate();
  std::vector<std::optional<Correspondence>> out(positions.n);
  for (std::size_t i = 0; i < positions.n; ++i) {
    out[i] = index.best_match({positions.x[i], positions.y[i], positions.z[i]}, labels[i], params);
  }
  return out;
}

std::vector<std::optional<Correspondence>> associate(const PointCloud& source,
                                                     const SpatialIndex& index,
                                                     const AssociationParams& params) {
  simd::PointsSoA pos(source.size());
  std::vector<ClassLabel> labels(source.size());
  for (std::size_t i = 0; i < source.size(); ++i) {
    pos.set(i, source.points[i].position);
    labels[i] = source.points[i].label;
  }
  return associate(pos, labels, index, params);
}

}  // namespace propslam
