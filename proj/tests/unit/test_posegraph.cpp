#include <Eigen/Eigenvalues>

#include "doctest.h"
#include "propslam/error.hpp"
#include "propslam/posegraph.hpp"
#include "support.hpp"

using namespace propslam;

namespace {

PoseGraph noiseless_graph(std::mt19937_64& g, int n, int extra, std::vector<RigidTransform>& truth) {
  truth.clear();
  RigidTransform x;
  for (int i = 0; i < n; ++i) {
    truth.push_back(x);
    x = compose(x, testing::random_transform(g, 1.0, 0.5));
  }
  PoseGraph graph;
  for (int i = 0; i < n; ++i) graph.nodes.push_back({static_cast<std::uint32_t>(i), truth[i]});
  auto info = [&] {
    Eigen::Matrix<double, 6, 6> a = Eigen::Matrix<double, 6, 6>::Random();
    return Mat6(a * a.transpose() + Mat6::Identity());
  };
  for (int i = 0; i + 1 < n; ++i)
    graph.edges.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(i + 1), relative(truth[i], truth[i + 1]), info(), EdgeKind::kOdometry});
  std::uniform_int_distribution<int> pick(0, n - 1);
  for (int k = 0; k < extra; ++k) {
    const int a = pick(g), b = pick(g);
    if (std::abs(a - b) < 2) continue;
    graph.edges.push_back({static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(b), relative(truth[a], truth[b]), info(), EdgeKind::kLoop});
  }
  return graph;
}

void perturb(std::mt19937_64& g, PoseGraph& graph) {
  for (std::size_t i = 1; i < graph.nodes.size(); ++i) {
    Twist d;
    d << testing::random_vec(g, 0.3 / std::sqrt(3.0)), testing::random_axis(g) * (10.0 * std::numbers::pi / 180.0) * 0.99;
    graph.nodes[i].pose = compose(graph.nodes[i].pose, twist_exp(d));
  }
}

}  // namespace

TEST_CASE("edge error basics") {
  auto g = testing::rng(61);
  const auto a = testing::random_transform(g, 2.0, 2.0);
  const auto b = testing::random_transform(g, 2.0, 2.0);
  CHECK(edge_error(a, b, relative(a, b)).norm() < 1e-12);
  const auto d = testing::random_transform(g, 0.1, 0.1);
  CHECK((edge_error(a, compose(b, d), relative(a, b)) - twist_log(d)).norm() < 1e-12);
}

TEST_CASE("edge Jacobians match finite differences") {
  auto g = testing::rng(62);
  const double h = 1e-6;
  for (int trial = 0; trial < 100; ++trial) {
    const auto xa = testing::random_transform(g, 3.0, 3.0);
    const auto xb = testing::random_transform(g, 3.0, 3.0);
    const auto d = compose(relative(xa, xb), testing::random_transform(g, 0.3, 0.5));
    Mat6 fa, fb;
    for (int i = 0; i < 6; ++i) {
      Twist e = Twist::Zero();
      e(i) = h;
      fa.col(i) = (edge_error(xa * twist_exp(e), xb, d) - edge_error(xa * twist_exp(-e), xb, d)) / (2 * h);
      fb.col(i) = (edge_error(xa, xb * twist_exp(e), d) - edge_error(xa, xb * twist_exp(-e), d)) / (2 * h);
    }
    const auto [ja, jb] = edge_jacobians(xa, xb, d);
    CHECK((fa - ja).norm() <= 1e-5 * ja.norm());
    CHECK((fb - jb).norm() <= 1e-5 * jb.norm());
  }
}

TEST_CASE("square loop closes") {
  // four 90° corners around a 2 m square, odometry drifts, one loop edge fixes it
  std::vector<RigidTransform> truth;
  for (int i = 0; i < 4; ++i) {
    const double yaw = 0.5 * std::numbers::pi * i;
    const Vec3 corners[4] = {{0, 0, 0}, {2, 0, 0}, {2, 2, 0}, {0, 2, 0}};
    truth.push_back(RigidTransform::from_yaw(yaw, corners[i]));
  }
  PoseGraph graph;
  const auto drift = RigidTransform::from_yaw(0.05, Vec3(0.1, 0, 0));
  RigidTransform x;
  for (int i = 0; i < 4; ++i) {
    graph.nodes.push_back({static_cast<std::uint32_t>(i), x});
    if (i < 3) x = compose(x, compose(relative(truth[i], truth[i + 1]), drift));
  }
  for (std::uint32_t i = 0; i < 3; ++i) graph.edges.push_back({i, i + 1, relative(truth[i], truth[i + 1]), Mat6::Identity(), EdgeKind::kOdometry});
  graph.edges.push_back({3, 0, relative(truth[3], truth[0]), Mat6::Identity(), EdgeKind::kLoop});
  const auto out = optimize(graph);
  CHECK(out.report.converged);
  CHECK(out.report.final_J < 1e-20);
  CHECK(out.report.final_J < out.report.initial_J);
  for (int i = 0; i < 4; ++i) CHECK(testing::transform_gap(out.poses[i], truth[i]) < 1e-9);
}

TEST_CASE("noiseless graphs recover ground truth") {
  auto g = testing::rng(63);
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<RigidTransform> truth;
    PoseGraph graph = noiseless_graph(g, 10 + 20 * trial, 15, truth);
    perturb(g, graph);
    const auto out = optimize(graph, 100);
    CHECK(out.report.final_J < 1e-12);
    for (std::size_t i = 0; i < truth.size(); ++i) CHECK(testing::transform_gap(out.poses[i], truth[i]) < 1e-8);
  }
}

TEST_CASE("information scaling and gauge do not move the optimum") {
  auto g = testing::rng(64);
  std::vector<RigidTransform> truth;
  PoseGraph graph = noiseless_graph(g, 20, 6, truth);
  // make it inconsistent so the optimum is non-trivial
  graph.edges.back().measurement = compose(graph.edges.back().measurement, RigidTransform::from_yaw(0.2, Vec3(0.3, -0.1, 0.2)));
  const auto base = optimize(graph, 200, 1e-6);

  PoseGraph scaled = graph;
  for (auto& e : scaled.edges) e.information *= 7.5;
  const auto s = optimize(scaled, 200, 1e-6);
  CHECK(s.report.final_J == doctest::Approx(7.5 * base.report.final_J).epsilon(1e-6));
  for (std::size_t i = 0; i < truth.size(); ++i) CHECK(testing::transform_gap(s.poses[i], base.poses[i]) < 1e-7);

  const auto w = testing::random_transform(g, 5.0, 2.0);
  PoseGraph moved = graph;
  for (auto& n : moved.nodes) n.pose = compose(w, n.pose);
  const auto m = optimize(moved, 200, 1e-6);
  CHECK(m.report.final_J == doctest::Approx(base.report.final_J).epsilon(1e-6));
  for (std::size_t i = 0; i < truth.size(); ++i) CHECK(testing::transform_gap(m.poses[i], compose(w, base.poses[i])) < 1e-7);
}

TEST_CASE("build_graph and bad graphs") {
  auto g = testing::rng(65);
  std::vector<RigidTransform> poses{RigidTransform::identity(), testing::random_transform(g, 1, 1), testing::random_transform(g, 1, 1)};
  Eigen::Matrix<double, 6, 6> a = Eigen::Matrix<double, 6, 6>::Random();
  const Mat6 cov = a * a.transpose() + 0.1 * Mat6::Identity();
  std::vector<RelativeMeasurement> odo{{0, 1, relative(poses[0], poses[1]), cov}, {1, 2, relative(poses[1], poses[2]), cov}};
  std::vector<RelativeMeasurement> loops{{2, 0, relative(poses[2], poses[0]), cov}};
  const auto graph = build_graph(poses, odo, loops);
  REQUIRE(graph.edges.size() == 3);
  CHECK(graph.edges[2].kind == EdgeKind::kLoop);
  CHECK(testing::max_abs(cov * graph.edges[0].information - Mat6::Identity()) < 1e-9);
  CHECK(evaluate_J(graph) < 1e-20);

  std::vector<RelativeMeasurement> skip{{0, 2, poses[2], cov}};
  CHECK_THROWS_AS(build_graph(poses, skip, {}), Error);
  std::vector<RelativeMeasurement> dangling{{2, 9, poses[2], cov}};
  CHECK_THROWS_AS(build_graph(poses, odo, dangling), Error);
  Mat6 singular = Mat6::Identity();
  singular(5, 5) = 0.0;
  std::vector<RelativeMeasurement> bad{{0, 1, poses[1], singular}};
  CHECK_THROWS_AS(build_graph(poses, bad, {}), Error);
}
