#include "propslam/posegraph.hpp"

#include <Eigen/Cholesky>
#include <array>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <cmath>
#include <sstream>

#include "propslam/error.hpp"

namespace propslam {
namespace {

constexpr double kDampingCeiling = 1e10;

void check_graph(const PoseGraph& graph) {
  for (std::size_t i = 0; i < graph.nodes.size(); ++i) {
    if (graph.nodes[i].frame_id != i) {
      throw Error(ErrorCode::kDanglingEdge, "pose graph: node frame ids must be contiguous from 0");
    }
  }
  for (const auto& e : graph.edges) {
    if (e.a >= graph.nodes.size() || e.b >= graph.nodes.size()) {
      std::ostringstream msg;
      msg << "pose graph: dangling edge (" << e.a << ", " << e.b << ")";
      throw Error(ErrorCode::kDanglingEdge, msg.str());
    }
  }
}

double total_cost(const std::vector<PoseEdge>& edges, const std::vector<RigidTransform>& poses) {
  double j = 0.0;
  for (const auto& e : edges) {
    const Twist r = edge_error(poses[e.a], poses[e.b], e.measurement);
    j += r.dot(e.information * r);
  }
  return j;
}

}  // namespace

Twist edge_error(const RigidTransform& x_a, const RigidTransform& x_b, const RigidTransform& d) {
  return twist_log(compose(inverse(d), relative(x_a, x_b)));
}

std::pair<Mat6, Mat6> edge_jacobians(const RigidTransform& x_a, const RigidTransform& x_b,
                                     const RigidTransform& d) {
  const Twist e = edge_error(x_a, x_b, d);
  const Mat6 jr_inv = se3_right_jacobian_inverse(e);
  const Mat6 jb = jr_inv;
  const Mat6 ja = -jr_inv * adjoint(relative(x_b, x_a));
  return {ja, jb};
}

double evaluate_J(const PoseGraph& graph) {
  check_graph(graph);
  std::vector<RigidTransform> poses;
  poses.reserve(graph.nodes.size());
  for (const auto& n : graph.nodes) poses.push_back(n.pose);
  return total_cost(graph.edges, poses);
}

OptimizeOutcome optimize(const PoseGraph& graph, int max_iterations, double damping) {
  check_graph(graph);
  OptimizeOutcome out;
  for (const auto& n : graph.nodes) out.poses.push_back(n.pose);
  const std::size_t n_nodes = graph.nodes.size();
  double j_cur = total_cost(graph.edges, out.poses);
  out.report.initial_J = j_cur;
  out.report.final_J = j_cur;
  if (n_nodes < 2 || graph.edges.empty() || j_cur == 0.0) {
    out.report.converged = true;
    return out;
  }

  const auto dim = static_cast<Eigen::Index>(6 * (n_nodes - 1));
  double lambda = damping;
  // Node 0 is the gauge; variable block k belongs to node k + 1.
  auto block_of = [](std::uint32_t node) { return static_cast<Eigen::Index>(node) - 1; };

  for (int it = 1; it <= max_iterations; ++it) {
    out.report.iterations = it;
    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(graph.edges.size() * 4 * 36 + static_cast<std::size_t>(dim));
    Eigen::VectorXd g = Eigen::VectorXd::Zero(dim);

    for (const auto& e : graph.edges) {
      const Twist r = edge_error(out.poses[e.a], out.poses[e.b], e.measurement);
      const auto [ja, jb] = edge_jacobians(out.poses[e.a], out.poses[e.b], e.measurement);
      const std::array<std::pair<Eigen::Index, Mat6>, 2> parts{
          std::pair{block_of(e.a), ja}, std::pair{block_of(e.b), jb}};
      for (const auto& [bi, ji] : parts) {
        if (bi < 0) continue;
        g.segment<6>(6 * bi) += ji.transpose() * e.information * r;
        for (const auto& [bk, jk] : parts) {
          if (bk < 0) continue;
          const Mat6 h = ji.transpose() * e.information * jk;
          for (int r0 = 0; r0 < 6; ++r0) {
            for (int c0 = 0; c0 < 6; ++c0) triplets.emplace_back(6 * bi + r0, 6 * bk + c0, h(r0, c0));
          }
        }
      }
    }
    Eigen::SparseMatrix<double> h(dim, dim);
    h.setFromTriplets(triplets.begin(), triplets.end());
    Eigen::VectorXd diag = h.diagonal();

    bool accepted = false;
    bool done = false;
    while (!accepted) {
      Eigen::SparseMatrix<double> a = h;
      for (Eigen::Index k = 0; k < dim; ++k) a.coeffRef(k, k) += lambda * (1.0 + diag(k));
      Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(a);
      const bool pd = solver.info() == Eigen::Success && (solver.vectorD().array() > 0.0).all();
      if (!pd) {
        lambda *= 2.0;
        if (lambda > kDampingCeiling) {
          out.report.final_J = j_cur;
          std::ostringstream msg;
          msg << "optimize: optimization diverged (non-PD normal matrix at damping ceiling), J = " << j_cur;
          throw Error(ErrorCode::kOptimizationDiverged, msg.str());
        }
        continue;
      }
      const Eigen::VectorXd delta = solver.solve(-g);
      std::vector<RigidTransform> trial = out.poses;
      for (std::size_t k = 1; k < n_nodes; ++k) {
        trial[k] = compose(trial[k], twist_exp(delta.segment<6>(6 * block_of(static_cast<std::uint32_t>(k)))));
      }
      const double j_new = total_cost(graph.edges, trial);
      const double step = delta.norm();
      if (j_new <= j_cur) {
        const double rel = (j_cur - j_new) / j_cur;
        out.poses = std::move(trial);
        j_cur = j_new;
        lambda = std::max(lambda * 0.5, 1e-12);
        accepted = true;
        if (rel < 1e-9 || step < 1e-10 || j_cur == 0.0) done = true;
      } else {
        if (step < 1e-10 || (j_new - j_cur) <= 1e-9 * j_cur) {
          done = true;
          break;
        }
        lambda *= 2.0;
        if (lambda > kDampingCeiling) break;
      }
    }
    out.report.final_J = j_cur;
    if (done) {
      out.report.converged = true;
      break;
    }
    if (!accepted) break;
  }
  return out;
}

Mat6 information_from_covariance(const Mat6& covariance) {
  const Mat6 sym = 0.5 * (covariance + covariance.transpose());
  Eigen::LLT<Mat6> llt(sym);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorCode::kUnobservableDirection, "build_graph: covariance is not positive definite");
  }
  Mat6 info = llt.solve(Mat6::Identity());
  info = 0.5 * (info + info.transpose()).eval();
  if (!info.allFinite()) {
    throw Error(ErrorCode::kUnobservableDirection, "build_graph: covariance inversion failed");
  }
  return info;
}

PoseGraph build_graph(std::span<const RigidTransform> poses,
                      std::span<const RelativeMeasurement> odometry,
                      std::span<const RelativeMeasurement> loops) {
  PoseGraph g;
  for (std::size_t i = 0; i < poses.size(); ++i) {
    g.nodes.push_back({static_cast<std::uint32_t>(i), poses[i]});
  }
  for (const auto& m : odometry) {
    if (m.b != m.a + 1) throw Error(ErrorCode::kDanglingEdge, "build_graph: odometry edge must join consecutive frames");
    g.edges.push_back({m.a, m.b, m.transform, information_from_covariance(m.covariance), EdgeKind::kOdometry});
  }
  for (const auto& m : loops) {
    g.edges.push_back({m.a, m.b, m.transform, information_from_covariance(m.covariance), EdgeKind::kLoop});
  }
  check_graph(g);
  return g;
}

}  // namespace propslam
