#pragma once

#include <string>
#include <vector>

#include "crowdslam/fingerprint.hpp"

namespace crowdslam {

/// Everything one user recorded on one walk, in time order. The first entry's
/// odometry pose is the track's local origin.
struct TrackLog {
    std::string track_id;
    std::vector<StampedFingerprint> entries;

    friend bool operator==(const TrackLog&, const TrackLog&) = default;
};

/// Throws ValidationError unless the track has an id, at least two entries,
/// non-negative strictly increasing timestamps and finite odometry.
void validate_track(const TrackLog& track);

/// Odometric path length from the first entry to every entry.
std::vector<double> cumulative_path_length(const TrackLog& track);

}  // namespace crowdslam
