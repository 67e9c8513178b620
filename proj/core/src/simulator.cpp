#include "crowdslam/simulator.hpp"

#include <cmath>
#include <cstdio>
#include <set>
#include <string>

#include <json.hpp>

#include "crowdslam/error.hpp"

namespace crowdslam::sim {

bool Environment::contains(double x, double y) const {
    return x >= 0.0 && x <= width && y >= 0.0 && y <= height;
}

void Environment::validate() const {
    if (!(width > 0.0) || !(height > 0.0)) {
        throw ValidationError("environment: width and height must be positive");
    }
    std::set<ApId> ids;
    for (const auto& ap : aps) {
        if (ap.id.empty() || !ids.insert(ap.id).second) {
            throw ValidationError("environment: AP ids must be non-empty and unique");
        }
        if (!contains(ap.x, ap.y)) {
            throw ValidationError("environment: AP " + ap.id + " lies outside the bounds");
        }
    }
}

void NoiseModel::validate() const {
    if (!(rss_sigma >= 0.0) || !(odom_trans_sigma >= 0.0) || !(odom_rot_sigma >= 0.0)) {
        throw ValidationError("noise model: sigmas must be non-negative");
    }
    if (!(detection_range > 0.0)) {
        throw ValidationError("noise model: detection range must be positive");
    }
    if (!(path_loss_exponent > 0.0)) {
        throw ValidationError("noise model: path loss exponent must be positive");
    }
}

Environment make_environment(double width, double height, std::size_t count, double tx_min_dbm,
                             double tx_max_dbm, Rng& rng) {
    if (tx_min_dbm > tx_max_dbm) {
        throw ValidationError("environment: tx power range is empty");
    }
    Environment env{width, height, {}};
    std::uniform_real_distribution<double> ux(0.0, width);
    std::uniform_real_distribution<double> uy(0.0, height);
    std::uniform_real_distribution<double> utx(tx_min_dbm, tx_max_dbm);
    for (std::size_t k = 0; k < count; ++k) {
        char mac[32];
        std::snprintf(mac, sizeof(mac), "02:00:00:00:%02zx:%02zx", (k >> 8) & 0xff, k & 0xff);
        AccessPoint ap{mac, ux(rng), uy(rng), 0.0};
        ap.tx_power_dbm = tx_min_dbm == tx_max_dbm ? tx_min_dbm : utx(rng);
        env.aps.push_back(std::move(ap));
    }
    env.validate();
    return env;
}

Fingerprint sample_rss(const Environment& env, const Pose2& pose, const NoiseModel& noise,
                       Rng& rng) {
    std::normal_distribution<double> shadowing(0.0, noise.rss_sigma > 0.0 ? noise.rss_sigma : 1.0);
    Fingerprint fp;
    for (const auto& ap : env.aps) {
        const double d = std::hypot(ap.x - pose.x, ap.y - pose.y);
        if (d > noise.detection_range) {
            continue;
        }
        double rss = ap.tx_power_dbm - 10.0 * noise.path_loss_exponent * std::log10(std::max(d, 0.1));
        if (noise.rss_sigma > 0.0) {
            rss += shadowing(rng);
        }
        if (rss >= kSensitivityDbm) {
            fp.set(ap.id, rss);
        }
    }
    return fp;
}

std::vector<TimedPose> generate_walk(const Environment& env,
                                     const std::vector<std::pair<double, double>>& waypoints,
                                     double speed, double sample_period) {
    if (waypoints.size() < 2) {
        throw ValidationError("walk: needs at least two waypoints");
    }
    if (!(speed > 0.0) || !(sample_period > 0.0)) {
        throw ValidationError("walk: speed and sample period must be positive");
    }
    for (const auto& [x, y] : waypoints) {
        if (!env.contains(x, y)) {
            throw ValidationError("walk: waypoint (" + std::to_string(x) + ", " + std::to_string(y) +
                                  ") lies outside the environment");
        }
    }

    struct Segment {
        double x0, y0, dx, dy, start, length, heading;
    };
    std::vector<Segment> segments;
    double total = 0.0;
    for (std::size_t k = 1; k < waypoints.size(); ++k) {
        const auto [x0, y0] = waypoints[k - 1];
        const double dx = waypoints[k].first - x0;
        const double dy = waypoints[k].second - y0;
        const double length = std::hypot(dx, dy);
        if (length == 0.0) {
            continue;
        }
        segments.push_back({x0, y0, dx, dy, total, length, std::atan2(dy, dx)});
        total += length;
    }
    if (segments.empty()) {
        throw ValidationError("walk: all waypoints coincide");
    }

    const double step = speed * sample_period;
    std::vector<TimedPose> out;
    std::size_t seg = 0;
    for (std::size_t k = 0;; ++k) {
        const double s = static_cast<double>(k) * step;
        if (s > total + 1e-9) {
            break;
        }
        while (seg + 1 < segments.size() && s >= segments[seg + 1].start) {
            ++seg;
        }
        const auto& g = segments[seg];
        const double f = std::min(1.0, (s - g.start) / g.length);
        out.push_back({Pose2{g.x0 + f * g.dx, g.y0 + f * g.dy, normalize_angle(g.heading)},
                       static_cast<double>(k) * sample_period});
    }
    return out;
}

std::vector<Pose2> corrupt_odometry(const std::vector<Pose2>& true_poses, const NoiseModel& noise,
                                    Rng& rng) {
    noise.validate();
    if (true_poses.empty()) {
        throw ValidationError("odometry: needs at least one pose");
    }
    if (noise.odom_trans_sigma == 0.0 && noise.odom_rot_sigma == 0.0) {
        return true_poses;
    }
    std::normal_distribution<double> unit(0.0, 1.0);
    std::vector<Pose2> odom;
    odom.reserve(true_poses.size());
    odom.push_back(true_poses.front());
    for (std::size_t k = 1; k < true_poses.size(); ++k) {
        Pose2 step = relative(true_poses[k - 1], true_poses[k]);
        const double length = std::hypot(step.x, step.y);
        step.x += noise.odom_trans_sigma * length * unit(rng);
        step.y += noise.odom_trans_sigma * length * unit(rng);
        step.theta = normalize_angle(step.theta + noise.odom_rot_sigma * length * unit(rng));
        odom.push_back(compose(odom.back(), step));
    }
    return odom;
}

namespace {

using nlohmann::json;

std::vector<std::pair<double, double>> parse_waypoints(const json& arr) {
    std::vector<std::pair<double, double>> out;
    for (const auto& p : arr) {
        if (!p.is_array() || p.size() != 2) {
            throw ValidationError("scenario: waypoints must be [x, y] pairs");
        }
        out.emplace_back(p[0].get<double>(), p[1].get<double>());
    }
    return out;
}

}  // namespace

ScenarioSpec ScenarioSpec::from_json(const std::string& text) {
    try {
        const auto doc = json::parse(text);
        ScenarioSpec spec;
        const auto& env = doc.at("environment");
        spec.width = env.at("width").get<double>();
        spec.height = env.at("height").get<double>();
        spec.ap_count = env.at("ap_count").get<std::size_t>();
        const auto& tx = env.at("tx_power_dbm");
        spec.tx_power_min_dbm = tx.at(0).get<double>();
        spec.tx_power_max_dbm = tx.at(1).get<double>();
        if (doc.contains("walk")) {
            const auto& walk = doc["walk"];
            spec.speed = walk.value("speed", spec.speed);
            spec.sample_period = walk.value("sample_period", spec.sample_period);
        }
        if (doc.contains("noise")) {
            const auto& n = doc["noise"];
            spec.noise.rss_sigma = n.value("rss_sigma", spec.noise.rss_sigma);
            spec.noise.odom_trans_sigma = n.value("odom_trans_sigma", spec.noise.odom_trans_sigma);
            spec.noise.odom_rot_sigma = n.value("odom_rot_sigma", spec.noise.odom_rot_sigma);
            spec.noise.path_loss_exponent =
                n.value("path_loss_exponent", spec.noise.path_loss_exponent);
            spec.noise.detection_range = n.value("detection_range", spec.noise.detection_range);
            spec.noise.rng_seed = n.value("seed", spec.noise.rng_seed);
        }
        for (const auto& t : doc.at("tracks")) {
            spec.tracks.push_back({t.at("id").get<std::string>(), parse_waypoints(t.at("waypoints"))});
        }
        return spec;
    } catch (const json::exception& e) {
        throw ValidationError(std::string("scenario: ") + e.what());
    }
}

std::string ScenarioSpec::to_json() const {
    nlohmann::ordered_json doc;
    doc["environment"] = {{"width", width},
                          {"height", height},
                          {"ap_count", ap_count},
                          {"tx_power_dbm", {tx_power_min_dbm, tx_power_max_dbm}}};
    doc["walk"] = {{"speed", speed}, {"sample_period", sample_period}};
    doc["noise"] = {{"rss_sigma", noise.rss_sigma},
                    {"odom_trans_sigma", noise.odom_trans_sigma},
                    {"odom_rot_sigma", noise.odom_rot_sigma},
                    {"path_loss_exponent", noise.path_loss_exponent},
                    {"detection_range", noise.detection_range},
                    {"seed", noise.rng_seed}};
    auto& tracks_json = doc["tracks"] = nlohmann::ordered_json::array();
    for (const auto& t : tracks) {
        nlohmann::ordered_json wps = nlohmann::ordered_json::array();
        for (const auto& [x, y] : t.waypoints) {
            wps.push_back({x, y});
        }
        tracks_json.push_back({{"id", t.id}, {"waypoints", wps}});
    }
    return doc.dump(2) + "\n";
}

Scenario generate_scenario(const ScenarioSpec& spec) {
    spec.noise.validate();
    if (spec.tracks.empty()) {
        throw ValidationError("scenario: no tracks");
    }
    for (const auto& t : spec.tracks) {
        if (t.waypoints.empty() || t.waypoints.front() != spec.tracks.front().waypoints.front()) {
            throw ValidationError("scenario: track '" + t.id +
                                  "' does not start at the common start waypoint");
        }
    }

    Rng rng(spec.noise.rng_seed);
    Scenario scenario;
    scenario.env = make_environment(spec.width, spec.height, spec.ap_count, spec.tx_power_min_dbm,
                                    spec.tx_power_max_dbm, rng);
    for (const auto& t : spec.tracks) {
        const auto walk = generate_walk(scenario.env, t.waypoints, spec.speed, spec.sample_period);
        std::vector<Pose2> truth;
        truth.reserve(walk.size());
        for (const auto& w : walk) {
            truth.push_back(w.pose);
        }
        const auto odom = corrupt_odometry(truth, spec.noise, rng);

        TrackLog log{t.id, {}};
        for (std::size_t k = 0; k < walk.size(); ++k) {
            log.entries.push_back({walk[k].time, odom[k], sample_rss(scenario.env, truth[k], spec.noise, rng)});
            scenario.truth.push_back({t.id, walk[k].time, truth[k]});
        }
        scenario.tracks.push_back(std::move(log));
    }
    return scenario;
}

}  // namespace crowdslam::sim
