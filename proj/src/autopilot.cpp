#include "blimpswarm/autopilot.hpp"

#include <algorithm>
#include <cmath>

namespace blimpswarm {

namespace {

constexpr double kSpeedGain = 1.0; // [1/s] speed-error feedback of the cruise stick

} // namespace

WaypointAutopilot::WaypointAutopilot(const ScenarioConfig &cfg) : cfg_(cfg) {
    cfg_.validate();
}

double WaypointAutopilot::speed_stick(const Simulation &sim, double v_desired) const {
    const BlimpState &leader = sim.states()[sim.leader().index];
    const double force = cfg_.plant.drag_h * v_desired +
                         cfg_.plant.mass * kSpeedGain * (v_desired - leader.v_h);
    return std::clamp(force / cfg_.plant.limits.thrust_h_max, -1.0, 1.0);
}

void WaypointAutopilot::before_tick(Simulation &sim) {
    if (sim.finished() || phase_ == Phase::Done) return;
    if (phase_ == Phase::Switching) {
        switching(sim);
    } else {
        cruise(sim);
    }
}

void WaypointAutopilot::cruise(Simulation &sim) {
    const int last = static_cast<int>(cfg_.path.size()) - 1;
    const BlimpState &leader = sim.states()[sim.leader().index];
    Vec3 offset = cfg_.path[target_].position - leader.pose.position;

    if (target_ < last && offset.planar_norm() <= cfg_.autopilot.capture_radius) {
        const Waypoint &wp = cfg_.path[target_];
        sim.note(RunEvent{0, event::kWaypoint, sim.leader().index, wp.index, false, to_string(wp.turn)});
        ++target_;
        if (wp.turn != Turn::None && cfg_.policy == Policy::SwitchEnabled && sim.size() >= 3) {
            candidate_ = coordination::suggest_new_leader(sim.leader(), wp.turn, sim.size());
            switch_started_ = sim.tick();
            last_attempt_.reset();
            phase_ = Phase::Switching;
            switching(sim);
            return;
        }
        offset = cfg_.path[target_].position - leader.pose.position;
    }

    const double heading_error =
        normalize_angle(std::atan2(offset.y, offset.x) - leader.pose.yaw);
    const double v_cruise =
        cfg_.autopilot.cruise * cfg_.plant.limits.thrust_h_max / cfg_.plant.drag_h;
    const double v_desired = std::abs(heading_error) < cfg_.autopilot.align_tolerance
                                 ? std::min(v_cruise, cfg_.autopilot.approach_gain * offset.planar_norm())
                                 : 0.0;
    SteerInput steer;
    steer.forward = speed_stick(sim, v_desired);
    steer.yaw = std::clamp(cfg_.autopilot.heading_gain * heading_error, -1.0, 1.0);
    sim.steer(steer);
}

void WaypointAutopilot::switching(Simulation &sim) {
    const double dt = cfg_.plant.dt;
    const BlimpId candidate = *candidate_;
    const auto ticks = [dt](double seconds) {
        return static_cast<std::int64_t>(std::llround(seconds / dt));
    };

    if (sim.tick() - switch_started_ >= ticks(cfg_.autopilot.switch_giveup) || candidate == sim.leader()) {
        candidate_.reset();
        phase_ = Phase::Cruise;
        cruise(sim);
        return;
    }

    const bool mutual = sim.visibility().mutual(sim.leader(), candidate);
    const bool may_retry =
        !last_attempt_ || (mutual && sim.tick() - *last_attempt_ >= ticks(cfg_.autopilot.retry_interval));
    if (may_retry) {
        last_attempt_ = sim.tick();
        if (sim.select_leader(candidate, "autopilot").ok) {
            ++switches_;
            candidate_.reset();
            phase_ = Phase::Cruise;
            cruise(sim);
            return;
        }
    }

    const BlimpState &leader = sim.states()[sim.leader().index];
    const double bearing =
        relative_bearing(leader.pose, sim.states()[candidate.index].pose.position);
    SteerInput steer;
    steer.forward = speed_stick(sim, 0.0);
    steer.yaw = std::clamp(cfg_.autopilot.heading_gain * bearing, -cfg_.autopilot.rotate_stick,
                           cfg_.autopilot.rotate_stick);
    sim.steer(steer);
}

RunResult run_scenario(const ScenarioConfig &cfg, Operator &op) {
    Simulation sim(cfg);
    while (!sim.finished()) {
        op.before_tick(sim);
        sim.advance();
    }
    RunResult result;
    result.stop = sim.stop_reason();
    result.log = sim.take_log();
    result.metrics = metrics::compute(result.log);
    return result;
}

RunResult run_scenario(const ScenarioConfig &cfg) {
    WaypointAutopilot pilot(cfg);
    return run_scenario(cfg, pilot);
}

} // namespace blimpswarm
