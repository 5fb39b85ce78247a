#pragma once

// Leader-switch protocol run by the ground station.
//
// The operator picks a new leader at a sharp turn (left turn: the next blimp
// in index order, right turn: the one after). The switch is only executed when
// the current and the candidate leader see each other in the same tick;
// otherwise a LeaderSelectionError alert is raised and roles stay as they are.
// An executed switch lands atomically: the candidate becomes Leader, the old
// leader becomes a Follower, and every other blimp either follows straight
// away (it already sees the candidate) or starts a rotational search.

#include "blimpswarm/control.hpp"
#include "blimpswarm/core.hpp"
#include "blimpswarm/noise.hpp"

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace blimpswarm {

/// Directed "observer sees target" edges for one tick.
class VisibilityGraph {
  public:
    VisibilityGraph() = default;
    explicit VisibilityGraph(int n);

    void add(BlimpId observer, BlimpId target);
    [[nodiscard]] bool has(BlimpId observer, BlimpId target) const;
    [[nodiscard]] bool mutual(BlimpId a, BlimpId b) const { return has(a, b) && has(b, a); }
    [[nodiscard]] int size() const { return n_; }
    [[nodiscard]] std::vector<std::pair<BlimpId, BlimpId>> edges() const;
    /// Targets seen by one observer, ascending.
    [[nodiscard]] std::vector<BlimpId> seen_by(BlimpId observer) const;

  private:
    [[nodiscard]] std::size_t slot(BlimpId observer, BlimpId target) const;

    int n_{0};
    std::vector<std::uint8_t> adjacency_;
};

struct SwitchRequest {
    std::string requested_by{"operator"};
    BlimpId new_leader;
    std::int64_t issued_at_tick{0};
};

enum class AlertKind { LeaderSelectionError, FormationBreak, SearchTimeout };

[[nodiscard]] const char *to_string(AlertKind kind);

struct Alert {
    AlertKind kind{AlertKind::LeaderSelectionError};
    BlimpId blimp;
    std::int64_t tick{0};
    std::string message;
};

struct SearchState {
    int scan_direction{+1}; // +1 counter-clockwise, -1 clockwise
    std::int64_t ticks_in_search{0};
    bool timeout_reported{false};
    bool sanctioned{true}; // started by a leader switch rather than a lost leader
};

struct CoordinatorConfig {
    double dt{0.02};
    double scan_rate{0.5};         // [rad/s]
    double search_timeout{16.0};   // [s] before a SearchTimeout alert
    double lost_grace{1.0};        // [s] a follower may be blind before it is declared lost
    double drop_probability{0.0};  // per directive

    void validate() const;
};

enum class DirectiveKind { Hold, Manual, Follow, Search };

[[nodiscard]] const char *to_string(DirectiveKind kind);

struct ControlDirective {
    DirectiveKind kind{DirectiveKind::Hold};
    SteerInput steer;      // Manual
    BlimpId target;        // Follow
    double yaw_rate{0.0};  // Search [rad/s]
    bool delivered{true};
};

struct SwitchVerdict {
    bool ok{false};
    std::optional<Alert> alert;
};

struct SwitchOutcome {
    BlimpId old_leader;
    BlimpId new_leader;
    std::vector<BlimpId> following;
    std::vector<BlimpId> searching;
};

namespace coordination {

/// Left turn -> (i + 1) mod N, right turn -> (i + 2) mod N. Requires N >= 3.
[[nodiscard]] BlimpId suggest_new_leader(BlimpId current, Turn turn, int n);

} // namespace coordination

class SwarmCoordinator {
  public:
    SwarmCoordinator(int n, BlimpId leader, CoordinatorConfig config, std::uint64_t seed = 0);

    [[nodiscard]] int size() const { return static_cast<int>(roles_.size()); }
    [[nodiscard]] BlimpId leader() const { return leader_; }
    [[nodiscard]] Role role(BlimpId id) const;
    [[nodiscard]] const std::vector<Role> &roles() const { return roles_; }
    [[nodiscard]] const std::optional<SwitchRequest> &pending() const { return pending_; }
    [[nodiscard]] const std::map<BlimpId, SearchState> &search_states() const { return search_; }
    [[nodiscard]] const CoordinatorConfig &config() const { return config_; }
    [[nodiscard]] std::int64_t tick() const { return tick_; }
    [[nodiscard]] std::int64_t search_timeout_ticks() const;
    [[nodiscard]] std::int64_t lost_grace_ticks() const;

    void set_tick(std::int64_t tick) { tick_ = tick; }

    /// All alerts emitted so far (append-only).
    [[nodiscard]] const std::vector<Alert> &alerts() const { return alerts_; }
    /// Alerts emitted since the previous call.
    [[nodiscard]] std::vector<Alert> take_new_alerts();

    /// Remembers on which side `observer` last saw `target` (bearing > 0 is right).
    void record_sighting(BlimpId observer, BlimpId target, double bearing);

    /// Mutual-visibility gate. On failure a LeaderSelectionError alert is
    /// pushed and roles are left untouched.
    SwitchVerdict validate_switch(const VisibilityGraph &vis, BlimpId candidate);

    /// Applies a switch validated in this tick against the same graph.
    /// Throws InvalidArgument if the candidate was not validated.
    SwitchOutcome execute_switch(const VisibilityGraph &vis, BlimpId candidate);

    /// Queues an operator request; resolved at the next tick boundary.
    void request_switch(SwitchRequest request);
    /// Validates and, on success, executes the pending request.
    std::optional<SwitchVerdict> resolve_pending(const VisibilityGraph &vis);

    /// One search step for a Searching blimp; returns the commanded yaw rate.
    double search_tick(BlimpId blimp, const VisibilityGraph &vis, double scan_rate);

    /// Tracks how long each follower has been blind to the leader and moves
    /// followers lost beyond the grace period into (unsanctioned) search.
    /// Returns the blimps that were declared lost in this call.
    std::vector<BlimpId> update_tracking(const VisibilityGraph &vis);

    /// Ground-station broadcast: one directive per blimp, delivered together.
    std::map<BlimpId, ControlDirective> broadcast_tick(const std::optional<SteerInput> &operator_steer,
                                                       const VisibilityGraph &vis);

  private:
    void check_id(BlimpId id, const char *what) const;
    void start_search(BlimpId blimp, bool sanctioned);
    void push_alert(AlertKind kind, BlimpId blimp, std::string message);

    CoordinatorConfig config_;
    std::vector<Role> roles_;
    BlimpId leader_;
    std::optional<SwitchRequest> pending_;
    std::vector<Alert> alerts_;
    std::size_t alerts_taken_{0};
    std::map<BlimpId, SearchState> search_;
    std::vector<std::int64_t> blind_ticks_;
    std::vector<double> last_bearing_; // n*n, NaN when never seen
    std::optional<std::pair<BlimpId, std::int64_t>> validated_;
    std::int64_t tick_{0};
    NoiseSource drops_;
};

} // namespace blimpswarm
