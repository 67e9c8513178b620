#include "crowdslam/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "crowdslam/error.hpp"

namespace crowdslam {

namespace {

// Keeps stationary steps from producing an infinite-information edge.
constexpr double kMinOdometryVariance = 1e-6;

}  // namespace

Eigen::Vector3d MotionNoiseModel::covariance(double step_length) const {
    const double st = trans_sigma_per_meter * step_length;
    const double sr = rot_sigma_per_meter * step_length;
    return {std::max(st * st, kMinOdometryVariance), std::max(st * st, kMinOdometryVariance),
            std::max(sr * sr, kMinOdometryVariance)};
}

MergedTracks merge_tracks(std::span<const TrackLog> tracks, const VarianceTable& table,
                          double floor_dbm, double theta_r) {
    if (tracks.empty()) {
        throw ValidationError("merge: no tracks");
    }
    MergedTracks merged;
    const Pose2 origin = tracks.front().entries.front().odom_pose;
    for (std::size_t t = 0; t < tracks.size(); ++t) {
        const auto& track = tracks[t];
        validate_track(track);
        merged.track_ids.push_back(track.track_id);
        merged.track_offsets.push_back(merged.nodes.size());
        const auto path = cumulative_path_length(track);
        const Pose2 first = track.entries.front().odom_pose;
        for (std::size_t k = 0; k < track.entries.size(); ++k) {
            const auto& entry = track.entries[k];
            // Later tracks start where the first one starts; headings are
            // taken as globally meaningful and kept.
            Pose2 pose = entry.odom_pose;
            if (t > 0) {
                pose.x = (entry.odom_pose.x - first.x) + origin.x;
                pose.y = (entry.odom_pose.y - first.y) + origin.y;
            }
            NodeRecord node;
            node.id = merged.nodes.size();
            node.track = t;
            node.index_in_track = k;
            node.path_position = path[k];
            node.pose = pose;
            node.fp = threshold_fingerprint(entry.fp, theta_r);
            merged.nodes.push_back(std::move(node));
            merged.odometry.push_back(entry.odom_pose);
            merged.times.push_back(entry.time);
        }
    }
    merged.track_offsets.push_back(merged.nodes.size());

    const auto& root = merged.nodes.front();
    for (std::size_t t = 1; t < tracks.size(); ++t) {
        const auto& head = merged.nodes[merged.track_offsets[t]];
        const double v = table.lookup(cosine_similarity(root.fp, head.fp, floor_dbm));
        Edge anchor;
        anchor.from = root.id;
        anchor.to = head.id;
        anchor.kind = EdgeKind::Anchor;
        anchor.measurement = {0.0, 0.0, normalize_angle(head.pose.theta - root.pose.theta)};
        anchor.covariance = Eigen::Vector3d(v, v, kUninformativeHeadingVariance);
        merged.anchors.push_back(anchor);
    }
    return merged;
}

PoseGraph build_graph(const MergedTracks& merged, std::span<const Edge> loop_edges,
                      const MotionNoiseModel& motion) {
    PoseGraph graph;
    graph.nodes.reserve(merged.nodes.size());
    for (const auto& node : merged.nodes) {
        graph.nodes.push_back(node.pose);
    }
    for (std::size_t t = 0; t + 1 < merged.track_offsets.size(); ++t) {
        for (NodeId n = merged.track_offsets[t] + 1; n < merged.track_offsets[t + 1]; ++n) {
            Edge e;
            e.from = n - 1;
            e.to = n;
            e.kind = EdgeKind::Odometry;
            e.measurement = relative(merged.odometry[n - 1], merged.odometry[n]);
            e.covariance = motion.covariance(std::hypot(e.measurement.x, e.measurement.y));
            graph.edges.push_back(e);
        }
    }
    graph.edges.insert(graph.edges.end(), merged.anchors.begin(), merged.anchors.end());
    graph.edges.insert(graph.edges.end(), loop_edges.begin(), loop_edges.end());
    if (!graph.nodes.empty()) {
        graph.fixed.insert(0);
    }
    graph.validate();
    return graph;
}

double evaluate_rmse(std::span<const Pose2> estimated, std::span<const Pose2> truth) {
    if (estimated.size() != truth.size()) {
        throw ValidationError("rmse: " + std::to_string(estimated.size()) + " estimates vs " +
                              std::to_string(truth.size()) + " truth poses");
    }
    if (estimated.empty()) {
        return 0.0;
    }
    double sum = 0.0;
    for (std::size_t k = 0; k < estimated.size(); ++k) {
        const double dx = estimated[k].x - truth[k].x;
        const double dy = estimated[k].y - truth[k].y;
        sum += dx * dx + dy * dy;
    }
    return std::sqrt(sum / static_cast<double>(estimated.size()));
}

ErrorStats error_stats(std::span<const Pose2> estimated, std::span<const Pose2> truth) {
    if (estimated.empty()) {
        throw ValidationError("error stats: no poses");
    }
    ErrorStats stats;
    stats.rmse = evaluate_rmse(estimated, truth);
    stats.count = estimated.size();
    std::vector<double> errors;
    errors.reserve(estimated.size());
    for (std::size_t k = 0; k < estimated.size(); ++k) {
        errors.push_back(planar_distance(estimated[k], truth[k]));
    }
    const double n = static_cast<double>(errors.size());
    for (const double e : errors) {
        stats.mean += e;
    }
    stats.mean /= n;
    for (const double e : errors) {
        stats.stddev += (e - stats.mean) * (e - stats.mean);
    }
    stats.stddev = std::sqrt(stats.stddev / n);
    std::sort(errors.begin(), errors.end());
    const std::size_t mid = errors.size() / 2;
    stats.median = errors.size() % 2 == 1 ? errors[mid] : 0.5 * (errors[mid - 1] + errors[mid]);
    stats.max = errors.back();
    return stats;
}

void SlamConfig::validate() const {
    if (!(bin_size > 0.0 && bin_size <= 1.0)) {
        throw ValidationError("config: bin size must lie in (0, 1]");
    }
    if (!(training_distance > 0.0)) {
        throw ValidationError("config: training distance must be positive");
    }
    if (!std::isfinite(theta_r) || !std::isfinite(floor_dbm)) {
        throw ValidationError("config: RSS threshold and floor must be finite");
    }
    if (!(motion.trans_sigma_per_meter >= 0.0) || !(motion.rot_sigma_per_meter >= 0.0)) {
        throw ValidationError("config: motion noise must be non-negative");
    }
    screening.validate();
}

VarianceTable train_from_tracks(std::span<const TrackLog> tracks, const SlamConfig& config,
                                std::size_t* sample_count) {
    TrainingOptions opts;
    opts.max_path_length = config.training_distance;
    opts.floor_dbm = config.floor_dbm;
    opts.theta_r = config.theta_r;
    opts.max_samples_per_node = config.max_samples_per_node;
    const auto samples = collect_training_samples(tracks, opts);
    if (samples.empty()) {
        throw ValidationError("training: the logs contain no fingerprint pairs within " +
                              std::to_string(config.training_distance) + " m of path");
    }
    if (sample_count != nullptr) {
        *sample_count = samples.size();
    }
    return train_variance_table(samples, config.bin_size, config.floor_dbm, config.theta_r);
}

SlamResult run_slam(std::span<const TrackLog> tracks, const SlamConfig& config,
                    const std::optional<VarianceTable>& table, std::span<const Pose2> truth) {
    config.validate();
    if (tracks.empty()) {
        throw ValidationError("slam: no tracks");
    }

    SlamResult result;
    if (table) {
        if (table->theta_r() != config.theta_r || table->floor_dbm() != config.floor_dbm) {
            throw ValidationError("slam: variance table was trained with a different RSS "
                                  "threshold or floor");
        }
        result.table = *table;
    } else {
        result.table = train_from_tracks(tracks, config, &result.report.training_samples);
    }

    const auto merged = merge_tracks(tracks, result.table, config.floor_dbm, config.theta_r);
    if (!truth.empty() && truth.size() != merged.nodes.size()) {
        throw ValidationError("slam: ground truth has " + std::to_string(truth.size()) +
                              " poses for " + std::to_string(merged.nodes.size()) + " nodes");
    }

    result.candidates =
        find_candidates(merged.nodes, config.screening, config.floor_dbm, &result.report.search);
    result.constraints = screen_candidates(result.candidates, merged.nodes, config.screening);
    if (tracks.size() > 1 && result.constraints.empty()) {
        throw ValidationError("slam: no loop constraint survived screening; " +
                              std::to_string(tracks.size()) +
                              " tracks would be merged by their start anchors alone");
    }

    std::vector<Edge> loop_edges;
    loop_edges.reserve(result.constraints.size());
    for (const auto& c : result.constraints) {
        loop_edges.push_back(candidate_to_edge(c, result.table));
    }

    result.graph = build_graph(merged, loop_edges, config.motion);
    result.initial_poses = result.graph.nodes;
    result.report.optimization = optimize(result.graph, config.lm);

    auto& report = result.report;
    report.nodes = result.graph.nodes.size();
    report.anchor_edges = merged.anchors.size();
    report.odometry_edges = result.graph.edges.size() - merged.anchors.size() - loop_edges.size();
    report.candidates = result.candidates.size();
    report.loop_edges = loop_edges.size();

    result.radio_map.reserve(merged.nodes.size());
    for (const auto& node : merged.nodes) {
        const auto& entry = tracks[node.track].entries[node.index_in_track];
        result.radio_map.push_back(
            {node.id, merged.track_ids[node.track], entry.time, result.graph.nodes[node.id], entry.fp});
    }

    if (!truth.empty()) {
        report.error = error_stats(result.graph.nodes, truth);
        report.odometry_error = error_stats(result.initial_poses, truth);
        for (std::size_t t = 0; t + 1 < merged.track_offsets.size(); ++t) {
            const auto begin = merged.track_offsets[t];
            const auto count = merged.track_offsets[t + 1] - begin;
            report.per_track_error.push_back(
                error_stats(std::span(result.graph.nodes).subspan(begin, count),
                            truth.subspan(begin, count)));
        }
    }
    return result;
}

}  // namespace crowdslam
