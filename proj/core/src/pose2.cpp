#include "crowdslam/pose2.hpp"

#include <cmath>

namespace crowdslam {

double normalize_angle(double theta) {
    constexpr double pi = std::numbers::pi;
    double wrapped = std::remainder(theta, 2.0 * pi);
    if (wrapped <= -pi) {
        wrapped += 2.0 * pi;
    }
    return wrapped;
}

Pose2 compose(const Pose2& a, const Pose2& b) {
    const double c = std::cos(a.theta);
    const double s = std::sin(a.theta);
    return {a.x + c * b.x - s * b.y, a.y + s * b.x + c * b.y, normalize_angle(a.theta + b.theta)};
}

Pose2 invert(const Pose2& a) {
    const double c = std::cos(a.theta);
    const double s = std::sin(a.theta);
    return {-c * a.x - s * a.y, s * a.x - c * a.y, normalize_angle(-a.theta)};
}

Pose2 relative(const Pose2& a, const Pose2& b) {
    const double c = std::cos(a.theta);
    const double s = std::sin(a.theta);
    const double dx = b.x - a.x;
    const double dy = b.y - a.y;
    return {c * dx + s * dy, -s * dx + c * dy, normalize_angle(b.theta - a.theta)};
}

double planar_distance(const Pose2& a, const Pose2& b) {
    return std::hypot(b.x - a.x, b.y - a.y);
}

}  // namespace crowdslam
