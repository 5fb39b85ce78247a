#pragma once

// Append-only record of a run and its on-disk form:
//
//   run.csv      one row per (tick, blimp)
//   events.json  run metadata, tick count and the event list
//
// Numbers are written in their shortest round-trip decimal form, so a log
// read back from disk reproduces every metric bit for bit.

#include "blimpswarm/coordination.hpp"
#include "blimpswarm/core.hpp"
#include "blimpswarm/scenario.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace blimpswarm {

struct BlimpRecord {
    BlimpState state;
    /// Estimate of the current leader, when this blimp sees it.
    std::optional<double> d_hat;
    std::optional<double> psi_hat;
    /// Whether this blimp sees the current leader; empty for the leader itself.
    std::optional<bool> visible;
    DirectiveKind directive{DirectiveKind::Hold}; // in memory only
};

struct TickRecord {
    std::int64_t tick{0};
    double t{0.0};
    std::vector<BlimpRecord> blimps;
};

/// Event kinds written to events.json.
namespace event {
inline constexpr const char *kSwitch = "switch";
inline constexpr const char *kSwitchRejected = "switch_rejected";
inline constexpr const char *kSearchStart = "search_start";
inline constexpr const char *kAcquired = "acquired";
inline constexpr const char *kVisibilityLost = "visibility_lost";
inline constexpr const char *kFormationBreak = "formation_break";
inline constexpr const char *kSearchTimeout = "search_timeout";
inline constexpr const char *kWaypoint = "waypoint";
inline constexpr const char *kGoalReached = "goal_reached";
inline constexpr const char *kPause = "pause";
inline constexpr const char *kResume = "resume";
} // namespace event

struct RunEvent {
    std::int64_t tick{0};
    std::string kind;
    std::optional<int> blimp;
    std::optional<int> other; // old leader for a switch, candidate for a rejection, ...
    bool sanctioned{false};   // search_start only
    std::string detail;

    friend bool operator==(const RunEvent &, const RunEvent &) = default;
};

struct RunMeta {
    int blimps{0};
    double dt{0.02};
    std::uint64_t seed{0};
    Policy policy{Policy::SwitchEnabled};
    double d_min{0.5};
    double d_max{3.0};
    std::int64_t lost_grace_ticks{0};
    std::int64_t search_timeout_ticks{0};
    Vec3 goal;
    double goal_radius{0.3};

    friend bool operator==(const RunMeta &, const RunMeta &) = default;
};

class RunLog {
  public:
    RunLog() = default;
    explicit RunLog(RunMeta meta) : meta_(meta) {}

    [[nodiscard]] const RunMeta &meta() const { return meta_; }
    [[nodiscard]] const std::vector<TickRecord> &ticks() const { return ticks_; }
    [[nodiscard]] const std::vector<RunEvent> &events() const { return events_; }
    [[nodiscard]] bool empty() const { return ticks_.empty(); }

    /// Throws InvalidArgument unless tick and t strictly increase and the
    /// record holds one entry per blimp.
    void append(TickRecord record);
    void add_event(RunEvent ev);

    [[nodiscard]] std::vector<RunEvent> events_of(const std::string &kind) const;
    [[nodiscard]] bool goal_reached() const { return !events_of(event::kGoalReached).empty(); }

  private:
    RunMeta meta_;
    std::vector<TickRecord> ticks_;
    std::vector<RunEvent> events_;
};

namespace runlog {

inline constexpr const char *kCsvHeader = "tick,t,id,x,y,z,theta,psi,v_h,role,d_hat,psi_hat,visible";

[[nodiscard]] std::string to_csv(const RunLog &log);
[[nodiscard]] std::string events_to_json(const RunLog &log);

/// Writes run.csv and events.json into `dir` (created if missing).
void export_runlog(const RunLog &log, const std::filesystem::path &dir);

/// Reads a directory written by export_runlog. Truncated or malformed files
/// raise IoError naming the file and line.
[[nodiscard]] RunLog load_runlog(const std::filesystem::path &dir);
[[nodiscard]] RunLog parse_runlog(const std::string &csv, const std::string &events_json);

} // namespace runlog
} // namespace blimpswarm
