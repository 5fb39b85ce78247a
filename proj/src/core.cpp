#include "blimpswarm/core.hpp"

namespace blimpswarm {

std::string to_string(Role role) {
    switch (role) {
    case Role::Leader:
        return "leader";
    case Role::Follower:
        return "follower";
    case Role::Searching:
        return "searching";
    }
    return "unknown";
}

Role role_from_string(const std::string &text) {
    if (text == "leader") return Role::Leader;
    if (text == "follower") return Role::Follower;
    if (text == "searching") return Role::Searching;
    throw InvalidArgument("unknown role '" + text + "'");
}

std::string to_string(Turn turn) {
    switch (turn) {
    case Turn::None:
        return "none";
    case Turn::Left:
        return "left";
    case Turn::Right:
        return "right";
    }
    return "unknown";
}

Turn turn_from_string(const std::string &text) {
    if (text == "none") return Turn::None;
    if (text == "left") return Turn::Left;
    if (text == "right") return Turn::Right;
    throw InvalidArgument("unknown turn '" + text + "'");
}

void BlimpGeometry::validate() const {
    if (!(length > 0.0)) throw InvalidArgument("geometry: length must be positive");
    if (!(envelope_radius > 0.0)) throw InvalidArgument("geometry: envelope_radius must be positive");
    if (!(mass > 0.0)) throw InvalidArgument("geometry: mass must be positive");
}

bool BlimpState::finite() const {
    return pose.position.finite() && std::isfinite(pose.pitch) && std::isfinite(pose.yaw) &&
           std::isfinite(v_h) && std::isfinite(v_z) && std::isfinite(yaw_rate);
}

double normalize_angle(double angle) {
    if (!std::isfinite(angle)) throw InvalidArgument("normalize_angle: non-finite angle");
    double wrapped = std::remainder(angle, 2.0 * kPi); // [-pi, pi]
    if (wrapped <= -kPi) wrapped += 2.0 * kPi;
    return wrapped;
}

double relative_bearing(const Pose &observer, const Vec3 &target) {
    const double dx = target.x - observer.position.x;
    const double dy = target.y - observer.position.y;
    if (dx == 0.0 && dy == 0.0) {
        throw InvalidArgument("relative_bearing: observer and target are coincident");
    }
    return normalize_angle(std::atan2(dy, dx) - observer.yaw);
}

} // namespace blimpswarm
