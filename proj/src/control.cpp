#include "blimpswarm/control.hpp"

#include <algorithm>

namespace blimpswarm {

void PidGains::validate() const {
    if (!(std::isfinite(kp) && std::isfinite(ki) && std::isfinite(kd))) {
        throw InvalidArgument("pid: gains must be finite");
    }
    if (!(out_min < out_max)) throw InvalidArgument("pid: out_min must be below out_max");
    if (!(i_limit >= 0.0)) throw InvalidArgument("pid: i_limit must be non-negative");
    if (!(rate_limit >= 0.0)) throw InvalidArgument("pid: rate_limit must be non-negative");
}

void Setpoints::validate() const {
    if (!(distance > 0.0)) throw InvalidArgument("setpoints: distance must be positive");
    if (!(altitude >= 0.0)) throw InvalidArgument("setpoints: altitude must be non-negative");
    if (!std::isfinite(yaw)) throw InvalidArgument("setpoints: yaw must be finite");
    if (!(pitch_max > 0.0 && pitch_max < kPi / 4.0)) {
        throw InvalidArgument("setpoints: pitch_max must be in (0, pi/4)");
    }
}

void ControlGains::validate() const {
    distance.validate();
    velocity.validate();
    height.validate();
    yaw.validate();
    if (!(thrust_per_pitch > 0.0)) throw InvalidArgument("gains: thrust_per_pitch must be positive");
    if (!(yaw_rate_gain >= 0.0)) throw InvalidArgument("gains: yaw_rate_gain must be non-negative");
    if (!(yaw_rate_feedforward >= 0.0)) {
        throw InvalidArgument("gains: yaw_rate_feedforward must be non-negative");
    }
    if (!(leader_max_yaw_rate > 0.0)) throw InvalidArgument("gains: leader_max_yaw_rate must be positive");
}

namespace control {

PidResult pid_step(const PidGains &gains, const PidState &state, double error, double dt) {
    if (!std::isfinite(error)) throw InvalidArgument("pid_step: non-finite error");
    if (!(dt > 0.0)) throw InvalidArgument("pid_step: dt must be positive");

    PidState next = state;
    const double prev = state.initialized ? state.prev_error : error;
    next.integral = std::clamp(state.integral + 0.5 * (error + prev) * dt, -gains.i_limit,
                               gains.i_limit);
    const double derivative = (error - prev) / dt;

    double out = gains.kp * error + gains.ki * next.integral + gains.kd * derivative;
    out = std::clamp(out, gains.out_min, gains.out_max);
    if (gains.rate_limit > 0.0) {
        const double step = gains.rate_limit * dt;
        out = std::clamp(out, state.prev_output - step, state.prev_output + step);
        out = std::clamp(out, gains.out_min, gains.out_max);
    }

    next.prev_error = error;
    next.prev_output = out;
    next.initialized = true;
    return {out, next};
}

DistanceResult distance_controller(const ControlGains &gains, double d_hat, const Setpoints &sp,
                                   const PidState &outer, const PidState &inner,
                                   double v_h_current, double dt) {
    if (!(d_hat > 0.0)) throw InvalidArgument("distance_controller: d_hat must be positive");
    // Positive error means the leader is too far away and the follower must
    // move forward, so the reference speed shares its sign.
    const PidResult speed = pid_step(gains.distance, outer, d_hat - sp.distance, dt);
    const PidResult pitch = pid_step(gains.velocity, inner, speed.output - v_h_current, dt);

    DistanceResult out;
    out.v_ref = speed.output;
    out.pitch_cmd = std::clamp(pitch.output, -sp.pitch_max, sp.pitch_max);
    out.outer = speed.state;
    out.inner = pitch.state;
    return out;
}

PidResult height_controller(const ControlGains &gains, double altitude, const Setpoints &sp,
                            const PidState &state, double dt) {
    if (!(altitude >= 0.0)) throw InvalidArgument("height_controller: altitude must be non-negative");
    return pid_step(gains.height, state, sp.altitude - altitude, dt);
}

PidResult yaw_controller(const ControlGains &gains, double psi_hat, const Setpoints &sp,
                         const PidState &state, double dt) {
    if (!(std::abs(psi_hat) <= 0.5 * kPi)) {
        throw InvalidArgument("yaw_controller: psi_hat outside [-pi/2, pi/2]");
    }
    // psi_hat > 0 (leader right of centre) must yield a rightward, negative torque.
    return pid_step(gains.yaw, state, sp.yaw - psi_hat, dt);
}

double yaw_rate_torque(const ControlGains &gains, double rate_cmd, double measured_rate,
                       const ActuationLimits &limits) {
    const double tau = gains.yaw_rate_feedforward * rate_cmd +
                       gains.yaw_rate_gain * (rate_cmd - measured_rate);
    return std::clamp(tau, -limits.torque_max, limits.torque_max);
}

namespace {

double vertical_thrust(const PidResult &height, const ActuationLimits &limits, double extra = 0.0) {
    return std::clamp(height.output + extra, -limits.thrust_v_max, limits.thrust_v_max);
}

} // namespace

TickOutput follower_tick(const std::optional<RelativeEstimate> &est, const SensorReadings &sensors,
                         const Setpoints &sp, const ControlGains &gains,
                         const ControllerStates &states, const ActuationLimits &limits, double dt,
                         std::optional<double> search_rate) {
    TickOutput out;
    out.states = states;

    const PidResult height = height_controller(gains, std::max(0.0, sensors.altitude), sp,
                                               states.height, dt);
    out.states.height = height.state;
    out.cmd.thrust_v = vertical_thrust(height, limits);

    if (est) {
        const DistanceResult dist = distance_controller(gains, est->distance, sp, states.distance,
                                                        states.velocity, sensors.v_h_est, dt);
        const PidResult yaw = yaw_controller(gains, est->bearing, sp, states.yaw, dt);
        out.states.distance = dist.outer;
        out.states.velocity = dist.inner;
        out.states.yaw = yaw.state;
        out.v_ref = dist.v_ref;
        out.cmd.pitch_cmd = std::clamp(dist.pitch_cmd, -limits.pitch_max, limits.pitch_max);
        out.cmd.thrust_h = std::clamp(gains.thrust_per_pitch * out.cmd.pitch_cmd,
                                      -limits.thrust_h_max, limits.thrust_h_max);
        out.cmd.torque = std::clamp(yaw.output, -limits.torque_max, limits.torque_max);
    } else {
        // Lost sight: hold position and altitude, leave vision loops untouched.
        out.cmd.pitch_cmd = 0.0;
        out.cmd.thrust_h = 0.0;
        out.cmd.torque = search_rate ? yaw_rate_torque(gains, *search_rate, sensors.yaw_rate, limits)
                                     : 0.0;
    }
    return out;
}

TickOutput leader_tick(const SteerInput &steer, const SensorReadings &sensors, const Setpoints &sp,
                       const ControlGains &gains, const ControllerStates &states,
                       const ActuationLimits &limits, double dt) {
    TickOutput out;
    out.states = states;

    const PidResult height = height_controller(gains, std::max(0.0, sensors.altitude), sp,
                                               states.height, dt);
    out.states.height = height.state;
    out.cmd.thrust_v = vertical_thrust(height, limits, std::clamp(steer.vertical, -1.0, 1.0) *
                                                           limits.thrust_v_max);

    out.cmd.thrust_h = std::clamp(steer.forward, -1.0, 1.0) * limits.thrust_h_max;
    out.cmd.pitch_cmd = std::clamp(out.cmd.thrust_h / gains.thrust_per_pitch, -limits.pitch_max,
                                   limits.pitch_max);
    const double rate_cmd = std::clamp(steer.yaw, -1.0, 1.0) * gains.leader_max_yaw_rate;
    out.cmd.torque = yaw_rate_torque(gains, rate_cmd, sensors.yaw_rate, limits);
    return out;
}

} // namespace control
} // namespace blimpswarm
