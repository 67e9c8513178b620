#pragma once

#include <cstddef>
#include <initializer_list>
#include <map>
#include <string>
#include <utility>

#include "crowdslam/pose2.hpp"

namespace crowdslam {

/// Opaque access point identifier (a MAC address in recorded data).
using ApId = std::string;

/// Default magnitude floor in dBm; readings at or below it carry no weight.
inline constexpr double kDefaultFloorDbm = -100.0;

/// One RSS scan. Readings are kept ordered by AP id so that every reduction
/// over a fingerprint has a fixed evaluation order.
class Fingerprint {
public:
    using Readings = std::map<ApId, double>;

    Fingerprint() = default;
    explicit Fingerprint(Readings readings);
    Fingerprint(std::initializer_list<std::pair<const ApId, double>> readings);

    /// Inserts or overwrites the reading for `ap`. Throws ValidationError on an
    /// empty id.
    void set(const ApId& ap, double rss_dbm);

    const Readings& readings() const noexcept { return readings_; }
    std::size_t size() const noexcept { return readings_.size(); }
    bool empty() const noexcept { return readings_.empty(); }
    bool contains(const ApId& ap) const { return readings_.contains(ap); }

    friend bool operator==(const Fingerprint&, const Fingerprint&) = default;

private:
    Readings readings_;
};

/// A fingerprint tagged with the odometry pose and time it was taken at.
struct StampedFingerprint {
    double time = 0.0;  // seconds since track start
    Pose2 odom_pose;
    Fingerprint fp;

    friend bool operator==(const StampedFingerprint&, const StampedFingerprint&) = default;
};

/// Keeps only readings with rss >= theta_r.
Fingerprint threshold_fingerprint(const Fingerprint& fp, double theta_r);

/// max(0, rss - floor).
double signal_magnitude(double rss_dbm, double floor_dbm) noexcept;

/// Cosine similarity over the union of AP ids. Present APs contribute their
/// signal magnitude above `floor_dbm`, missing ones contribute zero. Returns 0
/// when either vector has zero norm. The result lies in [0, 1] and is exactly
/// symmetric in its arguments.
double cosine_similarity(const Fingerprint& a, const Fingerprint& b,
                         double floor_dbm = kDefaultFloorDbm);

/// Size of the AP-id union, i.e. the vector length a similarity evaluation
/// touches. Used as a machine-independent cost measure.
std::size_t similarity_op_count(const Fingerprint& a, const Fingerprint& b);

}  // namespace crowdslam
