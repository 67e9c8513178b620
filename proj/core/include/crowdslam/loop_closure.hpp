#pragma once

#include <cstddef>
#include <numbers>
#include <span>
#include <vector>

#include "crowdslam/fingerprint.hpp"
#include "crowdslam/pose_graph.hpp"
#include "crowdslam/variance_model.hpp"

namespace crowdslam {

/// Heading variance of every fingerprint-derived constraint (rad^2): a radio
/// scan says nothing about orientation.
inline constexpr double kUninformativeHeadingVariance = 1000.0;

/// A node as seen by loop detection. `id` must equal the node's position in
/// the table; ids run track-major, time-minor.
struct NodeRecord {
    NodeId id = 0;
    std::size_t track = 0;
    std::size_t index_in_track = 0;
    /// Odometric path length from the track start to this node.
    double path_position = 0.0;
    /// Current estimate in the merged frame, used by the geometric gate.
    Pose2 pose;
    /// Already thresholded.
    Fingerprint fp;
};

struct LoopCandidate {
    NodeId i = 0;
    NodeId j = 0;
    double similarity = 0.0;

    friend bool operator==(const LoopCandidate&, const LoopCandidate&) = default;
};

struct ScreeningConfig {
    std::size_t min_gap = 10;          // M, nodes
    double window = 5.0;               // theta_w, meters of path
    double theta_s = 0.8;
    double gate_distance = 50.0;       // meters
    double gate_orientation = std::numbers::pi;  // radians; pi disables it

    /// Throws ValidationError when a field is out of range.
    void validate() const;
};

struct CandidateSearchStats {
    std::size_t pairs_considered = 0;
    /// Pairs that passed the geometric gate and had their similarity evaluated.
    std::size_t pairs_gated = 0;
    /// Sum of similarity_op_count over every evaluated pair.
    std::size_t similarity_ops = 0;
};

/// All pairs (i < j) that pass the geometric gate and reach theta_s, within
/// and across tracks, sorted by (i, j).
std::vector<LoopCandidate> find_candidates(std::span<const NodeRecord> nodes,
                                           const ScreeningConfig& cfg,
                                           double floor_dbm = kDefaultFloorDbm,
                                           CandidateSearchStats* stats = nullptr);

/// Applies the two screening rules to candidates sorted by (i, j):
///  1. a same-track pair with j - i < min_gap is dropped;
///  2. of two pairs <i,j> and <i,k> with j and k on one track no more than
///     `window` path-meters apart, the lower-similarity one is dropped (equal
///     similarity keeps the smaller target id).
/// Rule 2 compares every rule-1 survivor against every other rule-1 survivor;
/// it is not applied iteratively.
std::vector<LoopCandidate> screen_candidates(std::span<const LoopCandidate> candidates,
                                             std::span<const NodeRecord> nodes,
                                             const ScreeningConfig& cfg);

/// Zero-motion constraint with translation variance from the table.
Edge candidate_to_edge(const LoopCandidate& candidate, const VarianceTable& table);

}  // namespace crowdslam
