#pragma once

// Headless stand-ins for the human operator and the scenario runner.

#include "blimpswarm/metrics.hpp"
#include "blimpswarm/simulation.hpp"

#include <optional>

namespace blimpswarm {

/// Anything that issues operator inputs between ticks.
class Operator {
  public:
    virtual ~Operator() = default;
    virtual void before_tick(Simulation &sim) = 0;
};

/// Never touches the controls.
class IdleOperator : public Operator {
  public:
    void before_tick(Simulation &) override {}
};

/// Flies the leader along the configured path with a waypoint P-controller:
/// rotate in place until aligned with the next leg, then cruise with the
/// speed tapering toward the waypoint. At a tagged turn with switching
/// enabled it selects the suggested new leader; when that is rejected it
/// rotates the leader toward the candidate and selects again once the two
/// see each other.
class WaypointAutopilot : public Operator {
  public:
    enum class Phase { Cruise, Switching, Done };

    explicit WaypointAutopilot(const ScenarioConfig &cfg);

    void before_tick(Simulation &sim) override;

    [[nodiscard]] Phase phase() const { return phase_; }
    [[nodiscard]] int target_waypoint() const { return target_; }
    [[nodiscard]] int switches() const { return switches_; }

  private:
    void cruise(Simulation &sim);
    void switching(Simulation &sim);
    [[nodiscard]] double speed_stick(const Simulation &sim, double v_desired) const;

    ScenarioConfig cfg_;
    Phase phase_{Phase::Cruise};
    int target_{1};
    std::optional<BlimpId> candidate_;
    std::int64_t switch_started_{0};
    std::optional<std::int64_t> last_attempt_;
    int switches_{0};
};

struct RunResult {
    RunLog log;
    RunMetrics metrics;
    StopReason stop{StopReason::Running};
};

/// Runs until the goal, the configured duration, or an unrecoverable loss.
[[nodiscard]] RunResult run_scenario(const ScenarioConfig &cfg, Operator &op);
/// Same, driven by a WaypointAutopilot.
[[nodiscard]] RunResult run_scenario(const ScenarioConfig &cfg);

} // namespace blimpswarm
