#pragma once

#include <numbers>

namespace crowdslam {

/// Wraps an angle to (-pi, pi].
double normalize_angle(double theta);

/// Planar rigid-body pose: position in meters, heading in radians.
struct Pose2 {
    double x = 0.0;
    double y = 0.0;
    double theta = 0.0;

    friend bool operator==(const Pose2&, const Pose2&) = default;
};

/// a (+) b: b expressed in a's frame mapped into the world frame.
Pose2 compose(const Pose2& a, const Pose2& b);

Pose2 invert(const Pose2& a);

/// invert(a) (+) b, the transform of b seen from a.
Pose2 relative(const Pose2& a, const Pose2& b);

double planar_distance(const Pose2& a, const Pose2& b);

}  // namespace crowdslam
