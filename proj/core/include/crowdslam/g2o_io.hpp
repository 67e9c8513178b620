#pragma once

#include <string>

#include "crowdslam/pose_graph.hpp"

namespace crowdslam {

/// Plain-text g2o 2D format: VERTEX_SE2, EDGE_SE2 with the upper triangle of
/// the information matrix, and FIX lines for gauge nodes. Loop and anchor
/// edges are written as EDGE_SE2 too; the kind is recovered as Odometry for
/// consecutive ids and Loop otherwise.
std::string write_g2o(const PoseGraph& graph);

/// Throws ValidationError naming the line on malformed input, non-diagonal
/// information or non-contiguous vertex ids.
PoseGraph read_g2o(const std::string& text);

}  // namespace crowdslam
