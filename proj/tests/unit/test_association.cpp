#include <limits>

#include "doctest.h"
#include "propslam/association.hpp"
#include "propslam/error.hpp"
#include "support.hpp"

using namespace propslam;

namespace {

// Independent linear scan of the same rule.
std::optional<Correspondence> brute(const Vec3& p, ClassLabel lp, const PointCloud& target,
                                    const AssociationParams& a) {
  std::optional<Correspondence> best;
  double best_cost = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < target.size(); ++j) {
    const auto& q = target.points[j];
    const Vec3 d = p - q.position;
    const double d2 = d.x() * d.x() + d.y() * d.y() + d.z() * d.z();
    const double lambda = lp == q.label ? 0.0 : a.alpha;
    const double scope = (lp.labeled() && lp == q.label) ? a.widened_radius : a.base_radius;
    const double cost = d2 + lambda;
    if (cost > scope * scope) continue;
    if (cost < best_cost) {
      best_cost = cost;
      best = Correspondence{static_cast<std::uint32_t>(j), d2, lambda};
    }
  }
  return best;
}

}  // namespace

TEST_CASE("params validation") {
  CHECK_NOTHROW(AssociationParams{}.validate());
  CHECK_THROWS_AS((AssociationParams{-1.0, 3.0, 1.0}.validate()), Error);
  CHECK_THROWS_AS((AssociationParams{1.0, 0.5, 1.0}.validate()), Error);
  CHECK_THROWS_AS((AssociationParams{1.0, 3.0, 0.0}.validate()), Error);
  CHECK_THROWS_AS(SpatialIndex(PointCloud{}), Error);
}

TEST_CASE("heat source prefers the farther heat target") {
  PointCloud target;
  target.push_back(Vec3(0.5, 0, 0), kUnlabeled);
  target.push_back(Vec3(2.0, 0, 0), kHeat);
  const SpatialIndex idx(target);
  const AssociationParams a{1.0, 3.0, 1.0};

  auto m = idx.best_match(Vec3::Zero(), kHeat, a);
  REQUIRE(m);
  CHECK(m->target_index == 1);
  CHECK(m->squared_distance == 4.0);
  CHECK(m->penalty == 0.0);

  // unlabeled source: cost 0.25 vs 4+1, and the heat point is out of its scope anyway
  m = idx.best_match(Vec3::Zero(), kUnlabeled, a);
  REQUIRE(m);
  CHECK(m->target_index == 0);

  // water source: both mismatch, 0.25+1 > 1 and 4+1 > 1
  CHECK(!idx.best_match(Vec3::Zero(), kWater, a));
}

TEST_CASE("ties go to the lowest target index") {
  PointCloud target;
  for (int i = 0; i < 40; ++i) target.push_back(Vec3(1, 0, 0));
  target.push_back(Vec3(-1, 0, 0));
  const SpatialIndex idx(target);
  const auto m = idx.best_match(Vec3::Zero(), kUnlabeled, AssociationParams::conventional(2.0));
  REQUIRE(m);
  CHECK(m->target_index == 0);
}

TEST_CASE("matches brute force on random clouds") {
  auto g = testing::rng(31);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t n = 1 + static_cast<std::size_t>(u(g) * 600);
    const PointCloud target = testing::random_cloud(g, n, 3.0, 3);
    const PointCloud source = testing::random_cloud(g, 200, 3.5, 3);
    const double base = 0.05 + u(g);
    const AssociationParams a{u(g) < 0.2 ? 0.0 : 2.0 * u(g), base + 2.0 * u(g), base};
    const SpatialIndex idx(target);
    const auto got = associate(source, idx, a);
    REQUIRE(got.size() == source.size());
    for (std::size_t i = 0; i < source.size(); ++i) {
      const auto want = brute(source.points[i].position, source.points[i].label, target, a);
      CHECK(got[i] == want);
    }
  }
}

TEST_CASE("spatial queries against brute force") {
  auto g = testing::rng(32);
  const PointCloud target = testing::random_cloud(g, 500, 2.0);
  const SpatialIndex idx(target);
  for (int i = 0; i < 50; ++i) {
    const Vec3 p = testing::random_vec(g, 2.5);
    std::vector<std::pair<double, std::uint32_t>> all;
    for (std::uint32_t j = 0; j < target.size(); ++j) all.emplace_back((p - target.points[j].position).squaredNorm(), j);
    std::sort(all.begin(), all.end());
    const auto [ni, nd] = idx.nearest(p);
    CHECK(ni == all[0].second);
    CHECK(nd == all[0].first);
    const auto knn = idx.k_nearest(p, 8);
    REQUIRE(knn.size() == 8);
    for (std::size_t k = 0; k < 8; ++k) CHECK(knn[k] == all[k].second);
    std::vector<std::uint32_t> within;
    for (const auto& [d2, j] : all)
      if (d2 <= 0.49) within.push_back(j);
    std::sort(within.begin(), within.end());
    CHECK(idx.radius_search(p, 0.7) == within);
  }
}

TEST_CASE("raising alpha never adds cross-class matches") {
  auto g = testing::rng(33);
  const PointCloud target = testing::random_cloud(g, 400, 2.0, 3);
  const PointCloud source = testing::random_cloud(g, 300, 2.0, 3);
  const SpatialIndex idx(target);
  auto cross = [&](double alpha) {
    const auto m = associate(source, idx, AssociationParams{alpha, 2.0, 0.5});
    int c = 0;
    for (std::size_t i = 0; i < m.size(); ++i)
      if (m[i] && target.points[m[i]->target_index].label != source.points[i].label) ++c;
    return c;
  };
  int prev = cross(0.0);
  CHECK(prev > 0);
  for (double alpha : {0.01, 0.05, 0.1, 0.2, 0.25, 1.0, 100.0}) {
    const int c = cross(alpha);
    CHECK(c <= prev);
    prev = c;
  }
  CHECK(cross(0.25) == 0);  // alpha = base² rules out any cross-class pair
  CHECK(cross(std::numeric_limits<double>::max()) == 0);
}

TEST_CASE("zero alpha with equal radii is label-blind") {
  auto g = testing::rng(34);
  const PointCloud target = testing::random_cloud(g, 300, 2.0, 3);
  PointCloud source = testing::random_cloud(g, 300, 2.0, 3);
  const SpatialIndex idx(target);
  const auto labeled = associate(source, idx, AssociationParams::conventional(0.6));
  for (auto& p : source.points) p.label = kUnlabeled;
  CHECK(associate(source, idx, AssociationParams::conventional(0.6)) == labeled);
}
