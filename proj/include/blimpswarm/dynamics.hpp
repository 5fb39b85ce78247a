#pragma once

// Discrete-time plant for one blimp.
//
// Horizontal motion is along the body forward axis and couples to pitch:
//
//     dv_h/dt = cos(theta) * (-(drag_h / m) * v_h + F_h / m)
//
// Vertical, yaw and pitch channels are first-order linear-drag models. Pitch
// is not torque-actuated; it follows the commanded pitch through a first-order
// lag, the way an onboard attitude loop would.

#include "blimpswarm/core.hpp"
#include "blimpswarm/noise.hpp"

namespace blimpswarm {

struct ActuationLimits {
    double thrust_h_max{0.06};   // |F_h| [N]
    double thrust_v_max{0.05};   // |f_y| [N]
    double torque_max{0.006};    // |tau| [N m]
    double pitch_max{0.2};       // |theta_cmd| [rad]

    void validate() const;
};

struct ActuationCmd {
    double thrust_h{0.0};  // F_h, along body forward axis [N]
    double thrust_v{0.0};  // f_y, net vertical [N]
    double torque{0.0};    // tau, yaw torque [N m], positive turns left
    double pitch_cmd{0.0}; // theta_cmd [rad]

    [[nodiscard]] bool finite() const;
    [[nodiscard]] bool within(const ActuationLimits &limits) const;
    /// Copy clamped into the limits box.
    [[nodiscard]] ActuationCmd saturated(const ActuationLimits &limits) const;

    friend bool operator==(const ActuationCmd &, const ActuationCmd &) = default;
};

struct PlantParams {
    double mass{0.3};       // [kg]
    double drag_h{0.06};    // [N s / m]
    double drag_z{0.15};    // [N s / m]
    double drag_yaw{0.004}; // [N m s / rad]
    double inertia_z{0.01}; // [kg m^2]
    double pitch_tau{0.3};  // [s]
    double dt{0.02};        // [s]
    double buoyancy{0.0};   // net static lift [N], 0 for a neutrally buoyant envelope
    ActuationLimits limits;

    void validate() const;
};

/// Normalised rotor commands in [-1, 1].
struct RotorSpeeds {
    double left_h{0.0};
    double right_h{0.0};
    double left_v{0.0};
    double right_v{0.0};
};

namespace dynamics {

/// Advances one blimp by params.dt with semi-implicit Euler (velocities first,
/// then positions with the updated velocities). Deterministic and bit-exact
/// for identical inputs. Throws InvalidArgument on non-finite input or a
/// command outside the actuation limits.
[[nodiscard]] BlimpState step(const BlimpState &state, const ActuationCmd &cmd,
                              const PlantParams &params);

/// Differential thrust mixer. Horizontal rotors realise F_h and tau, the two
/// vertical rotors share f_y equally. If a horizontal pair saturates, both
/// are scaled by the same factor so the torque/thrust ratio is preserved.
[[nodiscard]] RotorSpeeds thrust_mix(const ActuationCmd &cmd, const PlantParams &params);

/// Inverse of thrust_mix for unsaturated outputs (pitch_cmd is not recovered).
[[nodiscard]] ActuationCmd thrust_unmix(const RotorSpeeds &rotors, const PlantParams &params);

/// Zero-mean, bounded perturbation of v_h, v_z and yaw_rate, each uniform on
/// [-magnitude * dt, magnitude * dt]. The yaw channel uses the same numeric
/// magnitude in rad/s^2.
[[nodiscard]] BlimpState apply_disturbance(const BlimpState &state, NoiseSource &rng,
                                           double magnitude, double dt);

} // namespace dynamics
} // namespace blimpswarm
