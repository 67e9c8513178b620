#pragma once

#include <cstddef>
#include <set>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "crowdslam/pose2.hpp"

namespace crowdslam {

using NodeId = std::size_t;

enum class EdgeKind { Odometry, Loop, Anchor };

std::string_view to_string(EdgeKind kind);

/// A relative-pose constraint z between two nodes with a diagonal covariance
/// (m^2, m^2, rad^2).
struct Edge {
    NodeId from = 0;
    NodeId to = 0;
    EdgeKind kind = EdgeKind::Odometry;
    Pose2 measurement;
    Eigen::Vector3d covariance = Eigen::Vector3d::Ones();

    Eigen::Vector3d information() const { return covariance.cwiseInverse(); }
};

struct PoseGraph {
    std::vector<Pose2> nodes;
    std::vector<Edge> edges;
    std::set<NodeId> fixed;

    /// Throws ValidationError on dangling endpoints, self loops, non-positive
    /// or non-finite covariances, or a fixed id outside the node range.
    void validate() const;

    /// True when every node is reachable from some fixed node.
    bool anchored() const;
};

/// Residual of `edge` at the given endpoint estimates: the SE(2) difference
/// between the measurement and the predicted relative pose, as (dx, dy, dtheta)
/// in the measurement frame with dtheta wrapped to (-pi, pi].
Eigen::Vector3d edge_error(const Edge& edge, const Pose2& from, const Pose2& to);

struct Linearization {
    Eigen::Vector3d error;
    Eigen::Matrix3d jacobian_from;
    Eigen::Matrix3d jacobian_to;
};

/// Error plus its analytic Jacobians with respect to (x, y, theta) of each end.
Linearization linearize(const Edge& edge, const Pose2& from, const Pose2& to);

/// Sum over edges of e^T * Sigma^-1 * e.
double chi2(const PoseGraph& graph);

}  // namespace crowdslam
