#include "propslam/landmarks.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <numeric>

#include "propslam/association.hpp"

namespace propslam {
namespace {

bool lex_less(const Vec3& a, const Vec3& b) {
  return std::lexicographical_compare(a.data(), a.data() + 3, b.data(), b.data() + 3);
}

std::size_t find_root(std::vector<std::size_t>& parent, std::size_t i) {
  while (parent[i] != i) {
    parent[i] = parent[parent[i]];
    i = parent[i];
  }
  return i;
}

}  // namespace

std::vector<Landmark> extract_landmarks(const PointCloud& scan, std::size_t min_cluster_size,
                                        double cluster_radius) {
  std::map<ClassLabel, std::vector<Vec3>> by_class;
  for (const auto& p : scan.points) {
    if (p.label.labeled()) by_class[p.label].push_back(p.position);
  }

  std::vector<Landmark> out;
  for (auto& [label, pts] : by_class) {
    // Sorting first makes clustering and centroid sums independent of input order.
    std::sort(pts.begin(), pts.end(), lex_less);
    PointCloud members;
    for (const auto& p : pts) members.push_back(p, label);
    const SpatialIndex index(members);

    std::vector<std::size_t> parent(pts.size());
    std::iota(parent.begin(), parent.end(), 0u);
    for (std::size_t i = 0; i < pts.size(); ++i) {
      for (auto j : index.radius_search(pts[i], cluster_radius)) {
        const std::size_t a = find_root(parent, i);
        const std::size_t b = find_root(parent, j);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
      }
    }

    std::map<std::size_t, std::vector<std::size_t>> clusters;
    for (std::size_t i = 0; i < pts.size(); ++i) clusters[find_root(parent, i)].push_back(i);

    std::vector<Landmark> found;
    for (const auto& [root, idx] : clusters) {
      if (idx.size() < min_cluster_size) continue;
      Vec3 sum = Vec3::Zero();
      for (auto i : idx) sum += pts[i];
      found.push_back({label, sum / static_cast<double>(idx.size()), idx.size(), scan.frame_id});
    }
    std::sort(found.begin(), found.end(),
              [](const Landmark& a, const Landmark& b) { return lex_less(a.centroid, b.centroid); });
    out.insert(out.end(), found.begin(), found.end());
  }
  return out;
}

std::vector<LoopCandidate> detect_loops_at(std::span<const FrameLandmarks> history,
                                           std::span<const RigidTransform> trajectory,
                                           std::size_t t_index, double gate_radius,
                                           std::uint32_t min_frame_gap) {
  std::vector<LoopCandidate> out;
  const FrameLandmarks& current = history[t_index];
  if (current.landmarks.empty()) return out;
  const RigidTransform& xt = trajectory[t_index];

  for (std::size_t u = 0; u < t_index; ++u) {
    const FrameLandmarks& past = history[u];
    if (current.frame_id < past.frame_id + min_frame_gap) continue;
    const RigidTransform& xu = trajectory[u];
    LoopCandidate best;
    double best_gap = std::numeric_limits<double>::infinity();
    for (const auto& lt : current.landmarks) {
      const Vec3 wt = xt * lt.centroid;
      for (const auto& lu : past.landmarks) {
        if (lu.label != lt.label) continue;
        const double gap = (xu * lu.centroid - wt).norm();
        if (gap <= gate_radius && gap < best_gap) {
          best_gap = gap;
          best = {past.frame_id, current.frame_id, lu, lt, gap};
        }
      }
    }
    if (best_gap <= gate_radius) out.push_back(best);
  }
  return out;
}

std::vector<LoopCandidate> detect_loops(std::span<const FrameLandmarks> history,
                                        std::span<const RigidTransform> trajectory,
                                        double gate_radius, std::uint32_t min_frame_gap) {
  std::vector<LoopCandidate> out;
  for (std::size_t t = 0; t < history.size(); ++t) {
    auto found = detect_loops_at(history, trajectory, t, gate_radius, min_frame_gap);
    out.insert(out.end(), found.begin(), found.end());
  }
  return out;
}

}  // namespace propslam
