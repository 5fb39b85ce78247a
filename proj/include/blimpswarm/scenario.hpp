#pragma once

// Scenario configuration and its INI-style file format. Every physical and
// tuning parameter is spelled out in the file; only a handful of keys listed
// in docs/config.md are optional.

#include "blimpswarm/control.hpp"
#include "blimpswarm/coordination.hpp"
#include "blimpswarm/core.hpp"
#include "blimpswarm/dynamics.hpp"
#include "blimpswarm/perception.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace blimpswarm {

/// Schema violation while loading or validating a scenario.
class ConfigError : public Error {
  public:
    ConfigError(std::string field, const std::string &message, int line = 0);

    [[nodiscard]] const std::string &field() const { return field_; }
    [[nodiscard]] int line() const { return line_; }

  private:
    std::string field_;
    int line_;
};

/// File could not be read or written.
class IoError : public Error {
  public:
    using Error::Error;
};

enum class Policy { SwitchEnabled, SwitchDisabled };

[[nodiscard]] std::string to_string(Policy policy);
[[nodiscard]] Policy policy_from_string(const std::string &text);

struct InitialPose {
    Vec3 position;
    double yaw{0.0};
};

/// Seeded random start: followers sit behind the leader, odd ids on its left
/// and even ids on its right, each facing the leader.
struct FormationSpec {
    double distance_min{1.3};
    double distance_max{1.8};
    double angle_min{deg_to_rad(25.0)}; // measured from the leader's rear axis
    double angle_max{deg_to_rad(55.0)};
    double altitude_jitter{0.1};
};

struct NoiseConfig {
    double pixel{0.5};       // [px]
    double altimeter{0.01};  // [m]
    double disturbance{0.0}; // [m/s^2]
    ImuNoise imu;
};

struct AutopilotConfig {
    double cruise{0.5};            // forward stick while tracking a leg
    double capture_radius{0.3};    // [m]
    double heading_gain{2.0};      // yaw stick per rad of heading error
    double approach_gain{0.5};     // [1/s] desired speed per metre to the waypoint
    double align_tolerance{deg_to_rad(15.0)}; // only thrust when aligned within this
    double rotate_stick{0.6};      // yaw stick while rotating toward a switch candidate
    double retry_interval{1.0};    // [s] between SelectLeader retries
    double switch_giveup{30.0};    // [s] then carry on with the current leader
};

struct SuccessCriteria {
    double d_min{0.5}; // [m]
    double d_max{3.0}; // [m]
};

struct ScenarioConfig {
    int blimps{3};
    std::uint64_t seed{1};
    double duration{150.0}; // [s]
    Policy policy{Policy::SwitchEnabled};
    int initial_leader{0};
    std::vector<InitialPose> initial_poses; // empty -> random formation
    FormationSpec formation;
    std::vector<Waypoint> path;
    double goal_radius{0.3};

    BlimpGeometry geometry;
    PlantParams plant;
    CameraIntrinsics camera; // focal is derived from the calibration
    CameraCalibration calibration;
    RenderOptions render;
    NoiseConfig noise;
    double fusion_alpha{0.5};
    double fusion_v_h_clamp{2.0};
    Setpoints setpoints;
    ControlGains gains;
    CoordinatorConfig coordination;
    AutopilotConfig autopilot;
    SuccessCriteria success;
    double steer_hold{0.5}; // [s] a manual steer input stays active without refresh

    /// Throws ConfigError naming the offending field.
    void validate() const;
};

namespace scenario {

/// Tags waypoints whose consecutive legs meet at 90 +/- 15 degrees as Left or
/// Right turns (sign of the cross product); all others become None.
[[nodiscard]] std::vector<Waypoint> tag_turns(std::vector<Waypoint> path,
                                              double tolerance = deg_to_rad(15.0));

[[nodiscard]] ScenarioConfig load_config(const std::filesystem::path &path);
[[nodiscard]] ScenarioConfig parse_config(const std::string &text);

/// Initial states for a run: explicit poses if given, otherwise a formation
/// drawn from cfg.seed.
[[nodiscard]] std::vector<BlimpState> initial_states(const ScenarioConfig &cfg);

} // namespace scenario
} // namespace blimpswarm
