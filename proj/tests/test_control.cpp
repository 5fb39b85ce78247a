#include "blimpswarm/control.hpp"
#include "blimpswarm/scenario.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

using namespace blimpswarm;

namespace {

const ScenarioConfig &defaults() {
    static const ScenarioConfig cfg = scenario::load_config(BLIMPSWARM_SOURCE_DIR "/configs/default.ini");
    return cfg;
}

PidGains gains(double kp, double ki, double kd, double i_limit = 100.0) {
    PidGains g;
    g.kp = kp;
    g.ki = ki;
    g.kd = kd;
    g.i_limit = i_limit;
    g.out_min = -1e9;
    g.out_max = 1e9;
    return g;
}

SensorReadings sensors_of(const BlimpState &s) { return {s.altitude(), s.pose.pitch, s.yaw_rate, s.v_h}; }

// Follower behind a stationary leader; exact (noiseless) estimates.
struct Chase {
    BlimpState follower;
    BlimpState leader;
    ControllerStates states;

    RelativeEstimate estimate() const {
        const Vec3 c = perception::to_camera_frame(follower.pose, leader.pose.position);
        RelativeEstimate e;
        e.x = c.x;
        e.y = c.y;
        e.z = c.z;
        e.distance = std::hypot(c.x, c.z);
        e.bearing = std::asin(c.x / e.distance);
        return e;
    }

    void tick() {
        const ScenarioConfig &cfg = defaults();
        const TickOutput out = control::follower_tick(estimate(), sensors_of(follower), cfg.setpoints, cfg.gains,
                                                      states, cfg.plant.limits, cfg.plant.dt);
        states = out.states;
        follower = dynamics::step(follower, out.cmd, cfg.plant);
    }
};

} // namespace

TEST_CASE("pid_step examples") {
    const PidResult zero = control::pid_step(gains(1, 1, 1), {}, 0.0, 0.1);
    CHECK(zero.output == 0.0);

    CHECK(control::pid_step(gains(3, 0, 0), {}, 2.0, 0.1).output == 6.0);

    PidState st;
    double brute = 0.0;
    for (int k = 0; k < 10; ++k) {
        const PidResult r = control::pid_step(gains(0, 1, 0), st, 1.0, 0.1);
        st = r.state;
        brute += 1.0 * 0.1;
        CHECK(r.output == doctest::Approx(brute));
    }
    CHECK(st.integral == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("pid_step derivative is zero on the first call, then a backward difference") {
    const PidResult first = control::pid_step(gains(0, 0, 1), {}, 5.0, 0.1);
    CHECK(first.output == 0.0);
    const PidResult second = control::pid_step(gains(0, 0, 1), first.state, 6.0, 0.1);
    CHECK(second.output == doctest::Approx(10.0));
}

TEST_CASE("pid_step trapezoidal integral matches a brute-force sum") {
    NoiseSource rng(2);
    PidState st;
    double integral = 0.0, prev = 0.0;
    for (int k = 0; k < 500; ++k) {
        const double e = rng.symmetric_uniform(1.0);
        integral += 0.5 * (e + (k == 0 ? e : prev)) * 0.02;
        prev = e;
        st = control::pid_step(gains(0, 1, 0), st, e, 0.02).state;
        CHECK(st.integral == doctest::Approx(integral).epsilon(1e-12));
    }
}

TEST_CASE("pid_step errors leave the state alone") {
    const PidState st{0.3, 0.1, 0.2, true};
    CHECK_THROWS_AS((void)control::pid_step(gains(1, 1, 1), st, std::nan(""), 0.1), InvalidArgument);
    CHECK_THROWS_AS((void)control::pid_step(gains(1, 1, 1), st, 1.0, 0.0), InvalidArgument);
    CHECK(st == PidState{0.3, 0.1, 0.2, true});
}

TEST_CASE("pid_step slew limit") {
    PidGains g = gains(10, 0, 0);
    g.rate_limit = 1.0;
    PidState st;
    double last = 0.0;
    for (int k = 0; k < 50; ++k) {
        const PidResult r = control::pid_step(g, st, 1.0, 0.1);
        CHECK(std::abs(r.output - last) <= 0.1 + 1e-12);
        last = r.output;
        st = r.state;
    }
    CHECK(last == doctest::Approx(5.0));
}

TEST_CASE("property: anti-windup under an unreachable setpoint") {
    PidGains g = gains(1, 5, 0, 0.4);
    g.out_min = -0.1;
    g.out_max = 0.1;
    PidState st;
    for (int k = 0; k < 10000; ++k) {
        const PidResult r = control::pid_step(g, st, 3.0, 0.02);
        CHECK(std::abs(r.state.integral) <= 0.4);
        CHECK(r.output <= 0.1);
        st = r.state;
    }
}

TEST_CASE("setpoint equilibrium for every controller") {
    const ScenarioConfig &cfg = defaults();
    const auto d = control::distance_controller(cfg.gains, cfg.setpoints.distance, cfg.setpoints, {}, {}, 0.0, 0.02);
    CHECK(d.pitch_cmd == 0.0);
    CHECK(control::height_controller(cfg.gains, cfg.setpoints.altitude, cfg.setpoints, {}, 0.02).output == 0.0);
    CHECK(control::yaw_controller(cfg.gains, 0.0, cfg.setpoints, {}, 0.02).output == 0.0);

    RelativeEstimate at_sp;
    at_sp.z = at_sp.distance = cfg.setpoints.distance;
    const SensorReadings s{cfg.setpoints.altitude, 0.0, 0.0, 0.0};
    const TickOutput out =
        control::follower_tick(at_sp, s, cfg.setpoints, cfg.gains, {}, cfg.plant.limits, cfg.plant.dt);
    CHECK(std::abs(out.cmd.thrust_h) < 1e-12);
    CHECK(std::abs(out.cmd.thrust_v) < 1e-12);
    CHECK(std::abs(out.cmd.torque) < 1e-12);
    CHECK(std::abs(out.cmd.pitch_cmd) < 1e-12);
}

TEST_CASE("controller signs") {
    const ScenarioConfig &cfg = defaults();
    const auto far = control::distance_controller(cfg.gains, 2.5, cfg.setpoints, {}, {}, 0.0, 0.02);
    CHECK(far.pitch_cmd > 0.0);
    CHECK(far.v_ref > 0.0);
    const auto near = control::distance_controller(cfg.gains, 0.8, cfg.setpoints, {}, {}, 0.0, 0.02);
    CHECK(near.pitch_cmd < 0.0);
    CHECK(control::height_controller(cfg.gains, 1.0, cfg.setpoints, {}, 0.02).output > 0.0);
    // Leader to the right of the image centre: turn right (negative torque).
    CHECK(control::yaw_controller(cfg.gains, 0.2, cfg.setpoints, {}, 0.02).output < 0.0);
    CHECK(control::yaw_controller(cfg.gains, -0.2, cfg.setpoints, {}, 0.02).output > 0.0);
    CHECK_THROWS_AS((void)control::distance_controller(cfg.gains, 0.0, cfg.setpoints, {}, {}, 0.0, 0.02),
                    InvalidArgument);
    CHECK_THROWS_AS((void)control::height_controller(cfg.gains, -1.0, cfg.setpoints, {}, 0.02), InvalidArgument);
    CHECK_THROWS_AS((void)control::yaw_controller(cfg.gains, 2.0, cfg.setpoints, {}, 0.02), InvalidArgument);
}

TEST_CASE("follower_tick without an estimate freezes the vision loops") {
    const ScenarioConfig &cfg = defaults();
    ControllerStates st;
    st.distance = {0.3, 0.1, 0.05, true};
    st.velocity = {0.05, 0.01, 0.02, true};
    st.yaw = {0.01, 0.02, 0.001, true};
    const SensorReadings s{1.2, 0.0, 0.1, 0.2};
    const TickOutput lost =
        control::follower_tick(std::nullopt, s, cfg.setpoints, cfg.gains, st, cfg.plant.limits, cfg.plant.dt);
    CHECK(lost.cmd.thrust_h == 0.0);
    CHECK(lost.cmd.torque == 0.0);
    CHECK(lost.states.distance == st.distance);
    CHECK(lost.states.velocity == st.velocity);
    CHECK(lost.states.yaw == st.yaw);
    CHECK(lost.cmd.thrust_v > 0.0); // altitude still held

    const TickOutput search = control::follower_tick(std::nullopt, s, cfg.setpoints, cfg.gains, st, cfg.plant.limits,
                                                     cfg.plant.dt, 0.5);
    CHECK(search.cmd.thrust_h == 0.0);
    CHECK(search.cmd.torque == control::yaw_rate_torque(cfg.gains, 0.5, 0.1, cfg.plant.limits));
    CHECK(search.cmd.torque > 0.0);
}

TEST_CASE("leader_tick maps the sticks") {
    const ScenarioConfig &cfg = defaults();
    const SensorReadings s{cfg.setpoints.altitude, 0, 0, 0};
    const TickOutput hold = control::leader_tick({}, s, cfg.setpoints, cfg.gains, {}, cfg.plant.limits, cfg.plant.dt);
    CHECK(hold.cmd == ActuationCmd{});
    const TickOutput go =
        control::leader_tick({1.0, 1.0, 0.0}, s, cfg.setpoints, cfg.gains, {}, cfg.plant.limits, cfg.plant.dt);
    CHECK(go.cmd.thrust_h == cfg.plant.limits.thrust_h_max);
    CHECK(go.cmd.torque > 0.0);
    CHECK(go.cmd.within(cfg.plant.limits));
}

TEST_CASE("closed loop: distance 2.0 m settles to the setpoint without large overshoot") {
    Chase c;
    c.leader.pose.position = {0, 0, 1.5};
    c.follower.pose.position = {-2.0, 0, 1.5};
    double min_d = 10.0;
    std::vector<double> tail;
    const int ticks = static_cast<int>(60.0 / defaults().plant.dt);
    for (int k = 0; k < ticks; ++k) {
        c.tick();
        const double d = c.estimate().distance;
        min_d = std::min(min_d, d);
        if (k > ticks - 500) tail.push_back(d);
    }
    CHECK(min_d > 1.5 - 0.3);
    for (double d : tail) CHECK(std::abs(d - 1.5) <= 0.05);
}

TEST_CASE("closed loop: altitude 1.0 m reaches 1.5 m within 30 s") {
    const ScenarioConfig &cfg = defaults();
    BlimpState s;
    s.pose.position.z = 1.0;
    PidState st;
    double settled_at = -1.0;
    for (int k = 0; k < static_cast<int>(60.0 / cfg.plant.dt); ++k) {
        const PidResult r = control::height_controller(cfg.gains, s.altitude(), cfg.setpoints, st, cfg.plant.dt);
        st = r.state;
        ActuationCmd cmd;
        cmd.thrust_v = std::clamp(r.output, -cfg.plant.limits.thrust_v_max, cfg.plant.limits.thrust_v_max);
        s = dynamics::step(s, cmd, cfg.plant);
        const bool inside = std::abs(s.altitude() - 1.5) <= 0.03;
        if (inside && settled_at < 0) settled_at = k * cfg.plant.dt;
        if (!inside) settled_at = -1.0;
    }
    CHECK(settled_at >= 0.0);
    CHECK(settled_at <= 30.0);
}

TEST_CASE("closed loop: a 20 degree bearing decays below 2 degrees within 15 s") {
    Chase c;
    c.leader.pose.position = {0, 0, 1.5};
    const double d = 1.5, off = deg_to_rad(20.0);
    c.follower.pose.position = {-d * std::cos(off), d * std::sin(off), 1.5};
    c.follower.pose.yaw = 0.0; // leader sits 20 degrees to the right
    CHECK(rad_to_deg(c.estimate().bearing) == doctest::Approx(20.0));
    const int ticks = static_cast<int>(15.0 / defaults().plant.dt);
    for (int k = 0; k < ticks; ++k) c.tick();
    CHECK(std::abs(rad_to_deg(c.estimate().bearing)) < 2.0);
}

TEST_CASE("property: fuzzed inputs never break the clamps") {
    const ScenarioConfig &cfg = defaults();
    NoiseSource rng(99);
    ControllerStates st;
    for (int k = 0; k < 20000; ++k) {
        std::optional<RelativeEstimate> est;
        if (rng.uniform01() < 0.9) {
            RelativeEstimate e;
            e.x = rng.symmetric_uniform(5);
            e.z = 0.05 + 8 * rng.uniform01();
            e.distance = std::hypot(e.x, e.z);
            e.bearing = std::asin(e.x / e.distance);
            est = e;
        }
        const SensorReadings s{3 * rng.uniform01(), rng.symmetric_uniform(0.3), rng.symmetric_uniform(3),
                               rng.symmetric_uniform(3)};
        const TickOutput out = control::follower_tick(est, s, cfg.setpoints, cfg.gains, st, cfg.plant.limits,
                                                      cfg.plant.dt, rng.uniform01() < 0.5 ? std::optional(1.0) : std::nullopt);
        CHECK(out.cmd.within(cfg.plant.limits));
        CHECK(std::abs(out.cmd.pitch_cmd) <= cfg.setpoints.pitch_max);
        CHECK(std::abs(out.states.distance.integral) <= cfg.gains.distance.i_limit);
        CHECK(std::abs(out.states.velocity.integral) <= cfg.gains.velocity.i_limit);
        CHECK(std::abs(out.states.height.integral) <= cfg.gains.height.i_limit);
        CHECK(std::abs(out.states.yaw.integral) <= cfg.gains.yaw.i_limit);
        st = out.states;
    }
}

TEST_CASE("controllers are deterministic") {
    Chase a, b;
    a.leader.pose.position = b.leader.pose.position = {0, 0, 1.5};
    a.follower.pose.position = b.follower.pose.position = {-2.3, 0.4, 1.3};
    for (int k = 0; k < 2000; ++k) {
        a.tick();
        b.tick();
    }
    CHECK(a.follower == b.follower);
    CHECK(a.states == b.states);
}
