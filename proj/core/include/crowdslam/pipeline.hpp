#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "crowdslam/loop_closure.hpp"
#include "crowdslam/optimizer.hpp"
#include "crowdslam/pose_graph.hpp"
#include "crowdslam/track.hpp"
#include "crowdslam/variance_model.hpp"

namespace crowdslam {

/// Odometry uncertainty growing linearly (in standard deviation) with the
/// distance travelled between two consecutive scans.
struct MotionNoiseModel {
    double trans_sigma_per_meter = 0.05;
    double rot_sigma_per_meter = 0.01;

    Eigen::Vector3d covariance(double step_length) const;
};

/// Tracks laid out in one global frame.
///
/// Every track starts where the first track starts, with the heading its own
/// odometry reports. Node ids are track-major.
struct MergedTracks {
    std::vector<NodeRecord> nodes;
    /// Local odometry pose of every node.
    std::vector<Pose2> odometry;
    std::vector<double> times;
    std::vector<std::string> track_ids;
    /// First node id of each track, plus one past the end.
    std::vector<NodeId> track_offsets;
    /// One edge from node 0 to the first node of every later track.
    std::vector<Edge> anchors;
};

/// Throws ValidationError on zero tracks or an invalid track.
MergedTracks merge_tracks(std::span<const TrackLog> tracks, const VarianceTable& table,
                          double floor_dbm, double theta_r);

/// One node per measurement initialised from the merged dead-reckoning,
/// odometry edges between consecutive nodes of each track, then the anchors
/// and loop edges. Node 0 is fixed.
PoseGraph build_graph(const MergedTracks& merged, std::span<const Edge> loop_edges,
                      const MotionNoiseModel& motion);

struct ErrorStats {
    double rmse = 0.0;
    double mean = 0.0;
    double stddev = 0.0;
    double median = 0.0;
    double max = 0.0;
    std::size_t count = 0;
};

/// Root mean square of planar position errors; headings are ignored.
/// Throws ValidationError on length mismatch.
double evaluate_rmse(std::span<const Pose2> estimated, std::span<const Pose2> truth);

/// Distribution of planar position errors. Throws ValidationError on length
/// mismatch or empty input.
ErrorStats error_stats(std::span<const Pose2> estimated, std::span<const Pose2> truth);

struct SlamConfig {
    double theta_r = -70.0;
    double floor_dbm = kDefaultFloorDbm;
    double bin_size = 0.1;
    double training_distance = kDefaultTrainingDistance;
    std::size_t max_samples_per_node = 0;
    ScreeningConfig screening;
    LmOptions lm;
    MotionNoiseModel motion;

    void validate() const;
};

struct RadioMapEntry {
    NodeId node = 0;
    std::string track_id;
    double time = 0.0;
    Pose2 pose;
    Fingerprint fp;
};

using RadioMap = std::vector<RadioMapEntry>;

struct SlamReport {
    std::size_t nodes = 0;
    std::size_t odometry_edges = 0;
    std::size_t anchor_edges = 0;
    std::size_t candidates = 0;
    std::size_t loop_edges = 0;
    std::size_t training_samples = 0;
    CandidateSearchStats search;
    OptimizeReport optimization;
    /// Present only when ground truth was supplied.
    std::optional<ErrorStats> error;
    std::optional<ErrorStats> odometry_error;
    std::vector<ErrorStats> per_track_error;
};

struct SlamResult {
    RadioMap radio_map;
    SlamReport report;
    VarianceTable table;
    PoseGraph graph;
    /// Dead-reckoned poses in the merged frame, before optimization.
    std::vector<Pose2> initial_poses;
    std::vector<LoopCandidate> candidates;
    std::vector<LoopCandidate> constraints;
};

/// Stage one of the system: train the variance table from the logs at hand.
VarianceTable train_from_tracks(std::span<const TrackLog> tracks, const SlamConfig& config,
                                std::size_t* sample_count = nullptr);

/// Threshold, train (unless `table` is given), merge, detect and screen loops,
/// build and optimise. `truth`, when present, is aligned with node ids.
///
/// Throws ValidationError when several tracks are given but no loop
/// constraint survives screening.
SlamResult run_slam(std::span<const TrackLog> tracks, const SlamConfig& config,
                    const std::optional<VarianceTable>& table = std::nullopt,
                    std::span<const Pose2> truth = {});

}  // namespace crowdslam
