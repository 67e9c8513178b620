#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "crowdslam/pipeline.hpp"
#include "crowdslam/simulator.hpp"
#include "crowdslam/track.hpp"

namespace crowdslam::io {

/// Parses a JSON-lines track log, one record per line:
///   {"t": 12.5, "track_id": "a", "odom": [x, y, theta], "rss": {"mac": dbm}}
/// Blank lines are skipped. Errors name the line number and field.
TrackLog parse_track_log(const std::string& text);

/// Canonical JSON-lines form; parse_track_log(serialize_track_log(t)) == t.
std::string serialize_track_log(const TrackLog& track);

std::string read_file(const std::filesystem::path& path);

/// Writes through a sibling temporary file and renames it into place.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

/// Every *.jsonl file in `dir`, in file-name order.
std::vector<std::filesystem::path> list_track_files(const std::filesystem::path& dir);
std::vector<TrackLog> read_track_logs(const std::filesystem::path& dir);

struct TruthRow {
    NodeId node = 0;
    std::string track_id;
    double time = 0.0;
    Pose2 pose;
};

/// node_id,track_id,time,x,y,theta
std::string write_truth_csv(std::span<const sim::TruthEntry> truth);
std::vector<TruthRow> parse_truth_csv(const std::string& text);

/// node_id,track_id,time,x,y,theta[,truth_x,truth_y]
std::string write_trajectory_csv(const RadioMap& map, std::span<const Pose2> truth = {});
/// Poses of a trajectory or truth CSV, in row order.
std::vector<Pose2> parse_pose_csv(const std::string& text);

std::string metrics_json(const SlamReport& report);
std::string error_stats_json(const ErrorStats& stats);

/// {"i", "j", "s", "variance"} per line.
std::string constraints_jsonl(std::span<const LoopCandidate> constraints,
                              const VarianceTable& table);

std::string config_to_json(const SlamConfig& config);
SlamConfig config_from_json(const std::string& text);

/// Everything needed to repeat a `slam` run bit for bit.
struct RunManifest {
    SlamConfig config;
    /// Input path -> SHA-256 of its bytes.
    std::map<std::string, std::string> input_digests;
    std::optional<std::string> table_path;
    std::optional<std::string> truth_path;
    std::string logs_dir;

    std::string to_json() const;
    static RunManifest from_json(const std::string& text);
};

std::string sha256_hex(const std::string& bytes);

/// Writes trajectory.csv, metrics.json, candidates.jsonl, constraints.jsonl,
/// graph.g2o, variance_table.json and manifest.json into `out_dir`.
void write_outputs(const SlamResult& result, const RunManifest& manifest,
                   const std::filesystem::path& out_dir, std::span<const Pose2> truth = {});

/// Shortest decimal text that parses back to the same double.
std::string format_double(double value);

}  // namespace crowdslam::io
