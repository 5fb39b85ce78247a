#pragma once

// Follower controller stack:
//
//   d_hat --> [distance PID] --v_ref--> [velocity PID] --theta_cmd--> F_h
//   h     --> [height PID]   --> f_y
//   psi_hat --> [yaw PID, slew limited] --> tau
//
// Sign conventions: a positive pitch command accelerates the blimp forward;
// a positive torque turns it counter-clockwise (left). psi_hat is positive
// when the leader sits to the right of the image centre, so the yaw loop acts
// on (psi_setpoint - psi_hat) and produces a negative (rightward) torque.

#include "blimpswarm/dynamics.hpp"
#include "blimpswarm/perception.hpp"

#include <optional>

namespace blimpswarm {

struct PidGains {
    double kp{0.0};
    double ki{0.0};
    double kd{0.0};
    double i_limit{0.0}; // |integral| bound
    double out_min{-1.0};
    double out_max{1.0};
    double rate_limit{0.0}; // max |d output / dt|, 0 disables

    void validate() const;
};

struct PidState {
    double integral{0.0};
    double prev_error{0.0};
    double prev_output{0.0};
    bool initialized{false};

    friend bool operator==(const PidState &, const PidState &) = default;
};

struct PidResult {
    double output{0.0};
    PidState state;
};

struct Setpoints {
    double distance{1.5}; // d_setpoint [m]
    double altitude{1.5}; // h_setpoint [m]
    double yaw{0.0};      // psi_setpoint, fixed at zero: keep the leader centred
    double pitch_max{0.2}; // theta_max [rad]

    void validate() const;
};

struct ControlGains {
    PidGains distance; // outer: distance error -> reference speed [m/s]
    PidGains velocity; // inner: speed error -> pitch command [rad]
    PidGains height;   // altitude error -> f_y [N]
    PidGains yaw;      // bearing error -> tau [N m]
    double thrust_per_pitch{0.3}; // F_h = k * theta_cmd [N/rad]
    double yaw_rate_gain{0.02};   // rate loop, tau per rad/s of rate error
    double yaw_rate_feedforward{0.004}; // tau per rad/s of commanded rate
    double leader_max_yaw_rate{0.5};    // full-stick yaw rate [rad/s]

    void validate() const;
};

/// Loop states of one blimp's controller stack.
struct ControllerStates {
    PidState distance;
    PidState velocity;
    PidState height;
    PidState yaw;

    friend bool operator==(const ControllerStates &, const ControllerStates &) = default;
};

/// Manual steering inputs, each in [-1, 1].
struct SteerInput {
    double forward{0.0};
    double yaw{0.0}; // positive turns left
    double vertical{0.0};

    friend bool operator==(const SteerInput &, const SteerInput &) = default;
};

struct TickOutput {
    ActuationCmd cmd;
    ControllerStates states;
    double v_ref{0.0}; // outer-loop output, for logging
};

namespace control {

/// Discrete PID: trapezoidal integral clamped to i_limit, backward-difference
/// derivative (zero on the first call), optional output slew limit, output
/// saturated to [out_min, out_max]. Throws on non-finite error or dt <= 0.
[[nodiscard]] PidResult pid_step(const PidGains &gains, const PidState &state, double error,
                                 double dt);

struct DistanceResult {
    double pitch_cmd{0.0};
    double v_ref{0.0};
    PidState outer;
    PidState inner;
};

[[nodiscard]] DistanceResult distance_controller(const ControlGains &gains, double d_hat,
                                                 const Setpoints &sp, const PidState &outer,
                                                 const PidState &inner, double v_h_current,
                                                 double dt);

[[nodiscard]] PidResult height_controller(const ControlGains &gains, double altitude,
                                          const Setpoints &sp, const PidState &state, double dt);

[[nodiscard]] PidResult yaw_controller(const ControlGains &gains, double psi_hat,
                                       const Setpoints &sp, const PidState &state, double dt);

/// Torque that drives the measured yaw rate toward `rate_cmd`.
[[nodiscard]] double yaw_rate_torque(const ControlGains &gains, double rate_cmd,
                                     double measured_rate, const ActuationLimits &limits);

/// One follower control tick. Without an estimate the vision-driven loops are
/// frozen, F_h is zero and yaw follows `search_rate` (or zero torque).
[[nodiscard]] TickOutput follower_tick(const std::optional<RelativeEstimate> &est,
                                       const SensorReadings &sensors, const Setpoints &sp,
                                       const ControlGains &gains, const ControllerStates &states,
                                       const ActuationLimits &limits, double dt,
                                       std::optional<double> search_rate = std::nullopt);

/// Leader control tick from manual steering; altitude is held by the height
/// loop with the vertical stick added on top.
[[nodiscard]] TickOutput leader_tick(const SteerInput &steer, const SensorReadings &sensors,
                                     const Setpoints &sp, const ControlGains &gains,
                                     const ControllerStates &states,
                                     const ActuationLimits &limits, double dt);

} // namespace control
} // namespace blimpswarm
