#pragma once

// Fixed-step, single-threaded swarm simulation.
//
// Tick k starts from states S_k together with the camera observations taken
// at S_k. Operator inputs (steering, leader selection) are applied between
// ticks, against that same observation set. advance() then runs
//
//   coordination (tracking, search, broadcast) -> log row k ->
//   sensing + control per blimp -> dynamics -> observations for S_k+1
//
// Every random draw comes from a stream derived from the scenario seed, so a
// configuration and an operator script fully determine the run.

#include "blimpswarm/coordination.hpp"
#include "blimpswarm/runlog.hpp"
#include "blimpswarm/scenario.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

namespace blimpswarm {

enum class StopReason { Running, GoalReached, DurationElapsed, SearchTimeout };

[[nodiscard]] const char *to_string(StopReason reason);

struct LiveMetrics {
    std::size_t samples{0};
    double current_area{0.0};
    double average_area{0.0};
    double area_rmse{0.0};
};

class Simulation {
  public:
    explicit Simulation(ScenarioConfig cfg);

    [[nodiscard]] const ScenarioConfig &config() const { return cfg_; }
    [[nodiscard]] int size() const { return cfg_.blimps; }
    [[nodiscard]] std::int64_t tick() const { return tick_; }
    [[nodiscard]] double time() const { return static_cast<double>(tick_) * cfg_.plant.dt; }
    [[nodiscard]] std::int64_t total_ticks() const { return total_ticks_; }
    [[nodiscard]] const std::vector<BlimpState> &states() const { return states_; }
    [[nodiscard]] const SwarmCoordinator &coordinator() const { return coord_; }
    [[nodiscard]] BlimpId leader() const { return coord_.leader(); }
    [[nodiscard]] const VisibilityGraph &visibility() const { return vis_; }
    [[nodiscard]] const Observation &observation(BlimpId observer, BlimpId target) const;
    /// Relative estimate of `target` as seen by `observer`, if visible.
    [[nodiscard]] std::optional<RelativeEstimate> estimate(BlimpId observer, BlimpId target) const;
    [[nodiscard]] const std::map<BlimpId, ControlDirective> &directives() const { return directives_; }
    [[nodiscard]] const RunLog &log() const { return log_; }
    [[nodiscard]] RunLog take_log() { return std::move(log_); }
    [[nodiscard]] LiveMetrics live_metrics() const;

    [[nodiscard]] StopReason stop_reason() const;
    [[nodiscard]] bool finished() const { return stop_reason() != StopReason::Running; }

    /// Leader steering, held for steer_hold seconds unless refreshed.
    void steer(const SteerInput &input);
    /// Operator leader selection. Validated against the current observations;
    /// on success the roles already hold for the next advance().
    SwitchVerdict select_leader(BlimpId candidate, const std::string &requested_by = "operator");
    /// Free-form marker in the event list (waypoints reached, pause, ...).
    void note(RunEvent ev);

    void advance();

  private:
    void perceive();
    [[nodiscard]] std::optional<SteerInput> active_steer() const;
    [[nodiscard]] BlimpRecord record_for(int i) const;

    ScenarioConfig cfg_;
    std::int64_t total_ticks_{0};
    std::vector<BlimpState> states_;
    SwarmCoordinator coord_;
    VisibilityGraph vis_;
    std::vector<Observation> obs_; // observer * n + target
    std::vector<perception::FusionFilter> fusion_;
    std::vector<ControllerStates> controllers_;
    std::vector<std::optional<BlimpId>> tracked_;
    std::map<BlimpId, ControlDirective> directives_;
    std::vector<ControlDirective> last_delivered_;
    std::vector<bool> saw_leader_;
    std::vector<NoiseSource> camera_rng_;
    std::vector<NoiseSource> sensor_rng_;
    std::vector<NoiseSource> disturbance_rng_;
    std::optional<SteerInput> steer_;
    std::int64_t steer_until_{0};
    RunLog log_;
    std::int64_t tick_{0};
    StopReason stop_{StopReason::Running};
    double area_sum_{0.0};
    double area_sq_sum_{0.0};
    double last_area_{0.0};
};

} // namespace blimpswarm
