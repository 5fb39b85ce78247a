#pragma once

// Shared value types for the blimp swarm simulator.
//
// Frames: world is right-handed with z up. Yaw is measured counter-clockwise
// from +x, so a positive relative bearing means "to the left". Altitude is the
// z coordinate above a flat floor at z = 0.

#include <cmath>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <string>

namespace blimpswarm {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Bad argument or violated precondition.
class InvalidArgument : public Error {
  public:
    using Error::Error;
};

struct Vec3 {
    double x{0.0};
    double y{0.0};
    double z{0.0};

    friend bool operator==(const Vec3 &, const Vec3 &) = default;

    Vec3 operator+(const Vec3 &o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3 &o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }

    [[nodiscard]] double dot(const Vec3 &o) const { return x * o.x + y * o.y + z * o.z; }
    [[nodiscard]] double norm() const { return std::sqrt(dot(*this)); }
    [[nodiscard]] double planar_norm() const { return std::hypot(x, y); }
    [[nodiscard]] bool finite() const {
        return std::isfinite(x) && std::isfinite(y) && std::isfinite(z);
    }
};

struct Pose {
    Vec3 position;
    double pitch{0.0}; // rad, positive pitches the vehicle to accelerate forward
    double yaw{0.0};   // rad, (-pi, pi]

    friend bool operator==(const Pose &, const Pose &) = default;
};

/// Index of a blimp within its swarm, 0..N-1.
struct BlimpId {
    int index{0};

    friend auto operator<=>(const BlimpId &, const BlimpId &) = default;
};

enum class Role { Leader, Follower, Searching };

enum class Turn { None, Left, Right };

[[nodiscard]] std::string to_string(Role role);
[[nodiscard]] Role role_from_string(const std::string &text);
[[nodiscard]] std::string to_string(Turn turn);
[[nodiscard]] Turn turn_from_string(const std::string &text);

struct BlimpGeometry {
    double length{0.8};          // L0, envelope centerline length [m]
    double envelope_radius{0.2}; // occlusion sphere radius [m]
    double mass{0.3};            // [kg]
    bool neutral_buoyancy{true};

    void validate() const;
};

struct BlimpState {
    BlimpId id;
    Pose pose;
    double v_h{0.0};      // body-forward horizontal speed [m/s]
    double v_z{0.0};      // [m/s]
    double yaw_rate{0.0}; // [rad/s]
    Role role{Role::Follower};

    [[nodiscard]] double altitude() const { return pose.position.z; }
    [[nodiscard]] bool finite() const;

    friend bool operator==(const BlimpState &, const BlimpState &) = default;
};

struct Waypoint {
    int index{0};
    Vec3 position;
    Turn turn{Turn::None};
};

/// Wraps an angle into (-pi, pi]. Throws InvalidArgument for non-finite input.
[[nodiscard]] double normalize_angle(double angle);

/// Signed angle from the observer's forward axis to the observer->target ray,
/// measured in the horizontal plane, in (-pi, pi]. Positive is to the left.
[[nodiscard]] double relative_bearing(const Pose &observer, const Vec3 &target);

inline constexpr double kPi = std::numbers::pi;

[[nodiscard]] inline double deg_to_rad(double deg) { return deg * kPi / 180.0; }
[[nodiscard]] inline double rad_to_deg(double rad) { return rad * 180.0 / kPi; }

} // namespace blimpswarm
