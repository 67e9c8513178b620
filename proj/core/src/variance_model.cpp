#include "crowdslam/variance_model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <json.hpp>

#include "crowdslam/error.hpp"

namespace crowdslam {

void validate_track(const TrackLog& track) {
    if (track.track_id.empty()) {
        throw ValidationError("track: empty track id");
    }
    if (track.entries.size() < 2) {
        throw ValidationError("track '" + track.track_id + "': needs at least two entries");
    }
    for (std::size_t k = 0; k < track.entries.size(); ++k) {
        const auto& e = track.entries[k];
        if (!std::isfinite(e.time) || e.time < 0.0) {
            throw ValidationError("track '" + track.track_id + "': entry " + std::to_string(k) +
                                  " has an invalid time");
        }
        if (k > 0 && !(e.time > track.entries[k - 1].time)) {
            throw ValidationError("track '" + track.track_id + "': entry " + std::to_string(k) +
                                  " is not later than its predecessor");
        }
        if (!std::isfinite(e.odom_pose.x) || !std::isfinite(e.odom_pose.y) ||
            !std::isfinite(e.odom_pose.theta)) {
            throw ValidationError("track '" + track.track_id + "': entry " + std::to_string(k) +
                                  " has a non-finite odometry pose");
        }
    }
}

std::vector<double> cumulative_path_length(const TrackLog& track) {
    std::vector<double> path(track.entries.size(), 0.0);
    for (std::size_t k = 1; k < track.entries.size(); ++k) {
        path[k] = path[k - 1] +
                  planar_distance(track.entries[k - 1].odom_pose, track.entries[k].odom_pose);
    }
    return path;
}

std::vector<TrainingSample> collect_training_samples(std::span<const TrackLog> tracks,
                                                     const TrainingOptions& opts) {
    if (!(opts.max_path_length > 0.0)) {
        throw ValidationError("training: max path length must be positive");
    }
    std::vector<TrainingSample> samples;
    for (const auto& track : tracks) {
        validate_track(track);
        const auto path = cumulative_path_length(track);
        std::vector<Fingerprint> fps;
        fps.reserve(track.entries.size());
        for (const auto& e : track.entries) {
            fps.push_back(threshold_fingerprint(e.fp, opts.theta_r));
        }
        const std::size_t n = track.entries.size();
        for (std::size_t i = 0; i < n; ++i) {
            std::size_t taken = 0;
            for (std::size_t j = i + 1; j < n && path[j] - path[i] < opts.max_path_length; ++j) {
                if (opts.max_samples_per_node != 0 && taken == opts.max_samples_per_node) {
                    break;
                }
                samples.push_back({cosine_similarity(fps[i], fps[j], opts.floor_dbm),
                                   planar_distance(track.entries[i].odom_pose,
                                                   track.entries[j].odom_pose)});
                ++taken;
            }
        }
    }
    return samples;
}

VarianceTable::VarianceTable(double bin_size, std::vector<Bin> bins, double floor_dbm,
                             double theta_r)
    : bin_size_(bin_size), bins_(std::move(bins)), floor_dbm_(floor_dbm), theta_r_(theta_r) {
    if (!(bin_size_ > 0.0 && bin_size_ <= 1.0)) {
        throw ValidationError("variance table: bin size must lie in (0, 1]");
    }
    if (bins_.size() != bin_count_for(bin_size_)) {
        throw ValidationError("variance table: expected " + std::to_string(bin_count_for(bin_size_)) +
                              " bins, got " + std::to_string(bins_.size()));
    }
    for (const auto& bin : bins_) {
        if (!std::isfinite(bin.variance) || bin.variance < 0.0) {
            throw ValidationError("variance table: negative or non-finite variance");
        }
    }
}

std::size_t VarianceTable::bin_count_for(double bin_size) {
    // 1/b is inexact for most b; the slack keeps b = 0.1 at ten bins.
    return static_cast<std::size_t>(std::ceil(1.0 / bin_size - 1e-9));
}

std::size_t VarianceTable::bin_index(double similarity) const {
    if (!(similarity >= 0.0)) {
        return 0;
    }
    const double raw = std::floor(similarity / bin_size_);
    const auto last = bins_.size() - 1;
    if (raw >= static_cast<double>(last)) {
        return last;
    }
    return static_cast<std::size_t>(raw);
}

double VarianceTable::lookup(double similarity) const {
    if (bins_.empty()) {
        throw ValidationError("variance table: no bins");
    }
    const std::size_t home = bin_index(similarity);
    auto served = [](double v) { return std::max(v, kVarianceFloor); };
    for (std::size_t k = home + 1; k-- > 0;) {
        if (bins_[k].count > 0) {
            return served(bins_[k].variance);
        }
    }
    for (std::size_t k = home + 1; k < bins_.size(); ++k) {
        if (bins_[k].count > 0) {
            return served(bins_[k].variance);
        }
    }
    throw ValidationError("variance table: every bin is empty");
}

std::string VarianceTable::to_json() const {
    nlohmann::ordered_json doc;
    doc["format"] = "crowdslam.variance_table";
    doc["version"] = 1;
    doc["bin_size"] = bin_size_;
    doc["floor_dbm"] = floor_dbm_;
    doc["theta_r"] = theta_r_;
    auto& bins = doc["bins"] = nlohmann::ordered_json::array();
    for (const auto& bin : bins_) {
        bins.push_back({{"count", bin.count}, {"variance", bin.variance}});
    }
    return doc.dump(2) + "\n";
}

VarianceTable VarianceTable::from_json(const std::string& text) {
    try {
        const auto doc = nlohmann::json::parse(text);
        if (doc.value("format", std::string{}) != "crowdslam.variance_table") {
            throw ValidationError("variance table: unexpected format tag");
        }
        if (doc.at("version").get<int>() != 1) {
            throw ValidationError("variance table: unsupported version");
        }
        std::vector<Bin> bins;
        for (const auto& b : doc.at("bins")) {
            bins.push_back({b.at("count").get<std::size_t>(), b.at("variance").get<double>()});
        }
        return VarianceTable(doc.at("bin_size").get<double>(), std::move(bins),
                             doc.at("floor_dbm").get<double>(), doc.at("theta_r").get<double>());
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("variance table: ") + e.what());
    }
}

VarianceTable train_variance_table(std::span<const TrainingSample> samples, double bin_size,
                                   double floor_dbm, double theta_r) {
    if (!(bin_size > 0.0 && bin_size <= 1.0)) {
        throw ValidationError("variance table: bin size must lie in (0, 1]");
    }
    if (samples.empty()) {
        throw ValidationError("variance table: no training samples");
    }
    std::vector<VarianceTable::Bin> bins(VarianceTable::bin_count_for(bin_size));
    VarianceTable shape(bin_size, bins, floor_dbm, theta_r);
    std::vector<double> second_moment(bins.size(), 0.0);
    for (const auto& sample : samples) {
        if (!(sample.similarity >= 0.0 && sample.similarity <= 1.0) || !(sample.distance >= 0.0) ||
            !std::isfinite(sample.distance)) {
            throw ValidationError("variance table: sample outside its domain");
        }
        const auto k = shape.bin_index(sample.similarity);
        ++bins[k].count;
        second_moment[k] += sample.distance * sample.distance;
    }
    for (std::size_t k = 0; k < bins.size(); ++k) {
        if (bins[k].count > 0) {
            bins[k].variance = second_moment[k] / static_cast<double>(bins[k].count);
        }
    }
    return VarianceTable(bin_size, std::move(bins), floor_dbm, theta_r);
}

}  // namespace crowdslam
