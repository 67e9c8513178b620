#include "crowdslam/pose_graph.hpp"

#include <cmath>
#include <queue>
#include <string>

#include "crowdslam/error.hpp"

namespace crowdslam {

std::string_view to_string(EdgeKind kind) {
    switch (kind) {
        case EdgeKind::Odometry: return "odometry";
        case EdgeKind::Loop: return "loop";
        case EdgeKind::Anchor: return "anchor";
    }
    return "unknown";
}

void PoseGraph::validate() const {
    for (const auto& node : nodes) {
        if (!std::isfinite(node.x) || !std::isfinite(node.y) || !std::isfinite(node.theta)) {
            throw ValidationError("pose graph: non-finite node estimate");
        }
    }
    for (std::size_t k = 0; k < edges.size(); ++k) {
        const auto& e = edges[k];
        const std::string where = "pose graph: edge " + std::to_string(k);
        if (e.from >= nodes.size() || e.to >= nodes.size()) {
            throw ValidationError(where + " references a missing node");
        }
        if (e.from == e.to) {
            throw ValidationError(where + " is a self loop");
        }
        if (!e.covariance.allFinite() || (e.covariance.array() <= 0.0).any()) {
            throw ValidationError(where + " has a non-positive covariance");
        }
    }
    for (const auto id : fixed) {
        if (id >= nodes.size()) {
            throw ValidationError("pose graph: fixed node " + std::to_string(id) + " does not exist");
        }
    }
}

bool PoseGraph::anchored() const {
    std::vector<std::vector<NodeId>> adjacency(nodes.size());
    for (const auto& e : edges) {
        adjacency[e.from].push_back(e.to);
        adjacency[e.to].push_back(e.from);
    }
    std::vector<bool> seen(nodes.size(), false);
    std::queue<NodeId> frontier;
    for (const auto id : fixed) {
        if (id < nodes.size() && !seen[id]) {
            seen[id] = true;
            frontier.push(id);
        }
    }
    std::size_t reached = frontier.size();
    while (!frontier.empty()) {
        const auto u = frontier.front();
        frontier.pop();
        for (const auto v : adjacency[u]) {
            if (!seen[v]) {
                seen[v] = true;
                ++reached;
                frontier.push(v);
            }
        }
    }
    return reached == nodes.size();
}

namespace {

// Residual in the measurement frame. Written as Rz^T (r.t - z.t) rather than
// by composing invert(z) with r so that r == z gives an exact zero.
Eigen::Vector3d residual(const Pose2& z, const Pose2& predicted) {
    const double cz = std::cos(z.theta);
    const double sz = std::sin(z.theta);
    const double dx = predicted.x - z.x;
    const double dy = predicted.y - z.y;
    return {cz * dx + sz * dy, -sz * dx + cz * dy, normalize_angle(predicted.theta - z.theta)};
}

}  // namespace

Eigen::Vector3d edge_error(const Edge& edge, const Pose2& from, const Pose2& to) {
    return residual(edge.measurement, relative(from, to));
}

Linearization linearize(const Edge& edge, const Pose2& from, const Pose2& to) {
    Linearization lin;
    lin.error = edge_error(edge, from, to);

    const double ci = std::cos(from.theta);
    const double si = std::sin(from.theta);
    const double cz = std::cos(edge.measurement.theta);
    const double sz = std::sin(edge.measurement.theta);
    const double dx = to.x - from.x;
    const double dy = to.y - from.y;

    Eigen::Matrix2d rz_t;
    rz_t << cz, sz, -sz, cz;
    Eigen::Matrix2d ri_t;
    ri_t << ci, si, -si, ci;
    const Eigen::Matrix2d rot = rz_t * ri_t;
    const Eigen::Vector2d d_theta = rz_t * Eigen::Vector2d(-si * dx + ci * dy, -ci * dx - si * dy);

    lin.jacobian_from.setZero();
    lin.jacobian_from.topLeftCorner<2, 2>() = -rot;
    lin.jacobian_from.block<2, 1>(0, 2) = d_theta;
    lin.jacobian_from(2, 2) = -1.0;

    lin.jacobian_to.setZero();
    lin.jacobian_to.topLeftCorner<2, 2>() = rot;
    lin.jacobian_to(2, 2) = 1.0;
    return lin;
}

double chi2(const PoseGraph& graph) {
    double total = 0.0;
    for (const auto& e : graph.edges) {
        const Eigen::Vector3d err = edge_error(e, graph.nodes[e.from], graph.nodes[e.to]);
        total += err.cwiseProduct(err).dot(e.information());
    }
    return total;
}

}  // namespace crowdslam
