#include "blimpswarm/dynamics.hpp"

#include <algorithm>

namespace blimpswarm {

void ActuationLimits::validate() const {
    if (!(thrust_h_max > 0.0)) throw InvalidArgument("limits: thrust_h_max must be positive");
    if (!(thrust_v_max > 0.0)) throw InvalidArgument("limits: thrust_v_max must be positive");
    if (!(torque_max > 0.0)) throw InvalidArgument("limits: torque_max must be positive");
    if (!(pitch_max > 0.0 && pitch_max < kPi / 4.0)) {
        throw InvalidArgument("limits: pitch_max must be in (0, pi/4)");
    }
}

bool ActuationCmd::finite() const {
    return std::isfinite(thrust_h) && std::isfinite(thrust_v) && std::isfinite(torque) &&
           std::isfinite(pitch_cmd);
}

bool ActuationCmd::within(const ActuationLimits &limits) const {
    return std::abs(thrust_h) <= limits.thrust_h_max && std::abs(thrust_v) <= limits.thrust_v_max &&
           std::abs(torque) <= limits.torque_max && std::abs(pitch_cmd) <= limits.pitch_max;
}

ActuationCmd ActuationCmd::saturated(const ActuationLimits &limits) const {
    return {std::clamp(thrust_h, -limits.thrust_h_max, limits.thrust_h_max),
            std::clamp(thrust_v, -limits.thrust_v_max, limits.thrust_v_max),
            std::clamp(torque, -limits.torque_max, limits.torque_max),
            std::clamp(pitch_cmd, -limits.pitch_max, limits.pitch_max)};
}

void PlantParams::validate() const {
    if (!(mass > 0.0)) throw InvalidArgument("plant: mass must be positive");
    if (!(drag_h > 0.0)) throw InvalidArgument("plant: drag_h must be positive");
    if (!(drag_z > 0.0)) throw InvalidArgument("plant: drag_z must be positive");
    if (!(drag_yaw > 0.0)) throw InvalidArgument("plant: drag_yaw must be positive");
    if (!(inertia_z > 0.0)) throw InvalidArgument("plant: inertia_z must be positive");
    if (!(pitch_tau > 0.0)) throw InvalidArgument("plant: pitch_tau must be positive");
    if (!(dt > 0.0 && dt <= 0.1)) throw InvalidArgument("plant: dt must be in (0, 0.1]");
    // Explicit drag terms must contract, otherwise velocities can grow with zero input.
    if (drag_h * dt / mass >= 1.0 || drag_z * dt / mass >= 1.0 || drag_yaw * dt / inertia_z >= 1.0) {
        throw InvalidArgument("plant: dt too large for the configured drag coefficients");
    }
    if (!std::isfinite(buoyancy)) throw InvalidArgument("plant: buoyancy must be finite");
    if (dt >= pitch_tau) throw InvalidArgument("plant: dt must be smaller than pitch_tau");
    limits.validate();
}

namespace dynamics {

BlimpState step(const BlimpState &state, const ActuationCmd &cmd, const PlantParams &params) {
    if (!(params.dt > 0.0)) throw InvalidArgument("step: dt must be positive");
    if (!state.finite()) throw InvalidArgument("step: non-finite state");
    if (!cmd.finite()) throw InvalidArgument("step: non-finite command");
    if (!cmd.within(params.limits)) throw InvalidArgument("step: command outside actuation limits");

    const double dt = params.dt;
    const double m = params.mass;
    BlimpState next = state;

    // Pitch: first-order tracking of the commanded angle, clamped.
    const double pitch_rate = (cmd.pitch_cmd - state.pose.pitch) / params.pitch_tau;
    next.pose.pitch = std::clamp(state.pose.pitch + pitch_rate * dt, -params.limits.pitch_max,
                                 params.limits.pitch_max);

    const double drag_accel = -(params.drag_h / m) * state.v_h;
    const double accel_h = std::cos(next.pose.pitch) * (drag_accel + cmd.thrust_h / m);
    next.v_h = state.v_h + accel_h * dt;

    next.v_z = state.v_z + ((cmd.thrust_v + params.buoyancy - params.drag_z * state.v_z) / m) * dt;

    const double yaw_accel = (cmd.torque - params.drag_yaw * state.yaw_rate) / params.inertia_z;
    next.yaw_rate = state.yaw_rate + yaw_accel * dt;
    next.pose.yaw = normalize_angle(state.pose.yaw + next.yaw_rate * dt);

    next.pose.position.x += next.v_h * std::cos(next.pose.yaw) * dt;
    next.pose.position.y += next.v_h * std::sin(next.pose.yaw) * dt;
    next.pose.position.z += next.v_z * dt;
    if (next.pose.position.z < 0.0) { // floor contact
        next.pose.position.z = 0.0;
        next.v_z = std::max(next.v_z, 0.0);
    }
    return next;
}

RotorSpeeds thrust_mix(const ActuationCmd &cmd, const PlantParams &params) {
    const double k_thrust = 0.5 / params.limits.thrust_h_max;
    const double k_torque = 0.5 / params.limits.torque_max;

    RotorSpeeds out;
    out.left_h = k_thrust * cmd.thrust_h - k_torque * cmd.torque;
    out.right_h = k_thrust * cmd.thrust_h + k_torque * cmd.torque;
    const double peak = std::max(std::abs(out.left_h), std::abs(out.right_h));
    if (peak > 1.0) {
        out.left_h /= peak;
        out.right_h /= peak;
    }

    const double per_rotor = cmd.thrust_v / params.limits.thrust_v_max;
    out.left_v = std::clamp(per_rotor, -1.0, 1.0);
    out.right_v = out.left_v;
    return out;
}

ActuationCmd thrust_unmix(const RotorSpeeds &rotors, const PlantParams &params) {
    const double k_thrust = 0.5 / params.limits.thrust_h_max;
    const double k_torque = 0.5 / params.limits.torque_max;
    ActuationCmd cmd;
    cmd.thrust_h = (rotors.left_h + rotors.right_h) / (2.0 * k_thrust);
    cmd.torque = (rotors.right_h - rotors.left_h) / (2.0 * k_torque);
    cmd.thrust_v = 0.5 * (rotors.left_v + rotors.right_v) * params.limits.thrust_v_max;
    return cmd;
}

BlimpState apply_disturbance(const BlimpState &state, NoiseSource &rng, double magnitude,
                             double dt) {
    if (magnitude < 0.0) throw InvalidArgument("apply_disturbance: negative magnitude");
    if (magnitude == 0.0) return state;
    const double half_width = magnitude * dt;
    BlimpState out = state;
    out.v_h += rng.symmetric_uniform(half_width);
    out.v_z += rng.symmetric_uniform(half_width);
    out.yaw_rate += rng.symmetric_uniform(half_width);
    return out;
}

} // namespace dynamics
} // namespace blimpswarm
