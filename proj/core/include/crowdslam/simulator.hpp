#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "crowdslam/fingerprint.hpp"
#include "crowdslam/pose2.hpp"
#include "crowdslam/track.hpp"

namespace crowdslam::sim {

using Rng = std::mt19937_64;

/// Readings weaker than this are never reported.
inline constexpr double kSensitivityDbm = -100.0;

struct AccessPoint {
    ApId id;
    double x = 0.0;
    double y = 0.0;
    double tx_power_dbm = -40.0;  // at 1 m
};

struct Environment {
    double width = 130.0;
    double height = 70.0;
    std::vector<AccessPoint> aps;

    bool contains(double x, double y) const;
    /// Throws ValidationError on out-of-bounds or duplicate APs.
    void validate() const;
};

struct NoiseModel {
    double rss_sigma = 4.0;             // dB
    double odom_trans_sigma = 0.05;     // m per m travelled
    double odom_rot_sigma = 0.01;       // rad per m travelled
    double path_loss_exponent = 2.5;
    double detection_range = 50.0;      // m
    std::uint64_t rng_seed = 1;

    void validate() const;
};

/// Uniformly places `count` APs with tx power drawn from [tx_min, tx_max].
Environment make_environment(double width, double height, std::size_t count,
                             double tx_min_dbm, double tx_max_dbm, Rng& rng);

/// Log-distance path loss plus Gaussian shadowing for every AP in range.
Fingerprint sample_rss(const Environment& env, const Pose2& pose, const NoiseModel& noise,
                       Rng& rng);

struct TimedPose {
    Pose2 pose;
    double time = 0.0;
};

/// Walks the polyline at constant speed and samples it every `sample_period`
/// seconds; the heading is the direction of the current segment.
std::vector<TimedPose> generate_walk(const Environment& env,
                                     const std::vector<std::pair<double, double>>& waypoints,
                                     double speed = 1.4, double sample_period = 5.0);

/// Integrates the true relative motions with Gaussian noise whose standard
/// deviation grows linearly with step length. The first pose is kept.
std::vector<Pose2> corrupt_odometry(const std::vector<Pose2>& true_poses, const NoiseModel& noise,
                                    Rng& rng);

struct TrackSpec {
    std::string id;
    std::vector<std::pair<double, double>> waypoints;
};

struct ScenarioSpec {
    double width = 130.0;
    double height = 70.0;
    std::size_t ap_count = 60;
    double tx_power_min_dbm = -45.0;
    double tx_power_max_dbm = -35.0;
    double speed = 1.4;
    double sample_period = 5.0;
    NoiseModel noise;
    std::vector<TrackSpec> tracks;

    static ScenarioSpec from_json(const std::string& text);
    std::string to_json() const;
};

struct TruthEntry {
    std::string track_id;
    double time = 0.0;
    Pose2 pose;
};

struct Scenario {
    Environment env;
    std::vector<TrackLog> tracks;
    /// One entry per measurement, track-major, aligned with global node ids.
    std::vector<TruthEntry> truth;
};

/// Throws ValidationError unless all tracks start at the same waypoint.
Scenario generate_scenario(const ScenarioSpec& spec);

}  // namespace crowdslam::sim
