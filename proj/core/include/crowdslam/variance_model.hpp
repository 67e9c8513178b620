#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "crowdslam/track.hpp"

namespace crowdslam {

/// Odometry distance cap for training pairs, in meters of travelled path.
inline constexpr double kDefaultTrainingDistance = 30.0;
/// Lower bound on any variance served from a table, in m^2.
inline constexpr double kVarianceFloor = 0.01;

/// A fingerprint pair from a short stretch of one track: its similarity and
/// the straight-line odometry distance between the two scans.
struct TrainingSample {
    double similarity = 0.0;
    double distance = 0.0;
};

struct TrainingOptions {
    double max_path_length = kDefaultTrainingDistance;
    double floor_dbm = -100.0;
    double theta_r = -70.0;
    /// Caps the partners taken per node; 0 means all pairs in the window.
    std::size_t max_samples_per_node = 0;
};

/// Emits one sample per within-track pair whose cumulative odometric path is
/// shorter than `max_path_length`. Pairs across tracks are never formed.
std::vector<TrainingSample> collect_training_samples(std::span<const TrackLog> tracks,
                                                     const TrainingOptions& opts = {});

/// Binned distance variance as a function of similarity.
///
/// Bin k covers [k*b, (k+1)*b); similarity 1 falls in the last bin. A bin's
/// variance is the mean of d^2 over its samples: the loop-closure constraint
/// has zero mean, so the second moment is taken about zero rather than about
/// the sample mean.
class VarianceTable {
public:
    struct Bin {
        std::size_t count = 0;
        double variance = 0.0;

        friend bool operator==(const Bin&, const Bin&) = default;
    };

    VarianceTable() = default;
    VarianceTable(double bin_size, std::vector<Bin> bins, double floor_dbm, double theta_r);

    static std::size_t bin_count_for(double bin_size);

    double bin_size() const noexcept { return bin_size_; }
    double floor_dbm() const noexcept { return floor_dbm_; }
    double theta_r() const noexcept { return theta_r_; }
    const std::vector<Bin>& bins() const noexcept { return bins_; }

    std::size_t bin_index(double similarity) const;

    /// Variance for a similarity. An empty bin borrows from the nearest
    /// populated bin below it, then from the nearest populated bin at all.
    /// Never returns less than kVarianceFloor. Throws ValidationError if every
    /// bin is empty.
    double lookup(double similarity) const;

    std::string to_json() const;
    static VarianceTable from_json(const std::string& text);

    friend bool operator==(const VarianceTable&, const VarianceTable&) = default;

private:
    double bin_size_ = 0.1;
    std::vector<Bin> bins_;
    double floor_dbm_ = -100.0;
    double theta_r_ = -70.0;
};

/// Throws ValidationError on an empty sample set or b outside (0, 1].
VarianceTable train_variance_table(std::span<const TrainingSample> samples, double bin_size,
                                   double floor_dbm = -100.0, double theta_r = -70.0);

inline double lookup_variance(const VarianceTable& table, double similarity) {
    return table.lookup(similarity);
}

}  // namespace crowdslam
