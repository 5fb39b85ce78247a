#pragma once

// Telemetry and command bridge between a running simulation and the operator
// console. Everything here is transport independent: frames and commands are
// plain values with a JSON form (protocol version 1), and Gateway owns the
// simulation and applies queued commands at tick boundaries. The WebSocket
// transport lives in ws_server.hpp.

#include "blimpswarm/autopilot.hpp"
#include "blimpswarm/simulation.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <deque>
#include <string>
#include <variant>
#include <vector>

namespace blimpswarm::gateway {

inline constexpr int kProtocolVersion = 1;

struct Detection {
    int target{0};
    double i_p{0.0};
    double j_p{0.0};
    double l_f{0.0};
};

struct CameraView {
    double fov{0.0}; // horizontal [rad]
    double width{0.0};
    double height{0.0};
    double max_range{0.0};
    std::vector<Detection> detections;
};

struct BlimpTelemetry {
    int id{0};
    double x{0.0}, y{0.0}, z{0.0};
    double theta{0.0};
    double psi{0.0};
    double v_h{0.0};
    Role role{Role::Follower};
    std::vector<int> visible_targets;
    CameraView camera_view;
};

struct AlertRecord {
    AlertKind kind{AlertKind::LeaderSelectionError};
    int blimp{0};
    std::int64_t tick{0};
    std::string message;
};

struct TelemetryFrame {
    std::int64_t tick{0};
    double t{0.0};
    int leader{0};
    bool paused{false};
    double speed{1.0};
    std::string status{"running"};
    std::vector<BlimpTelemetry> blimps;
    std::vector<AlertRecord> alerts; // since the previous frame
    std::vector<RunEvent> events;    // since the previous frame
    LiveMetrics metrics;
    bool area_defined{false};
};

/// Remembers how much of the alert and event history has been sent.
struct FrameCursor {
    std::size_t alerts{0};
    std::size_t events{0};
};

struct LoopControl {
    bool paused{false};
    double speed{1.0}; // simulated seconds per wall second
};

[[nodiscard]] TelemetryFrame snapshot(const Simulation &sim, const LoopControl &loop, FrameCursor &cursor);

// Commands -------------------------------------------------------------------

struct Steer {
    double forward{0.0};
    double yaw{0.0};
    double vertical{0.0};
};
struct SelectLeader {
    int id{0};
};
struct RotateLeader {
    int direction{+1}; // +1 left (counter-clockwise), -1 right
};
struct Pause {};
struct Resume {};
struct SetSpeedFactor {
    double factor{1.0};
};

using CommandKind = std::variant<Steer, SelectLeader, RotateLeader, Pause, Resume, SetSpeedFactor>;

struct OperatorCommand {
    CommandKind kind;
    std::int64_t client_tick{0};
};

[[nodiscard]] const char *kind_name(const CommandKind &kind);

enum class RejectReason { Malformed, UnknownBlimp, LeaderSelectionError, AlreadyLeader, Finished };

[[nodiscard]] const char *to_string(RejectReason reason);

struct Ack {
    std::string kind;
    std::int64_t client_tick{0};
    std::int64_t tick{0}; // simulation tick the command was applied at
};

struct Rejection {
    RejectReason reason{RejectReason::Malformed};
    std::string message;
    std::int64_t client_tick{0};
    std::int64_t tick{0};
};

using CommandResult = std::variant<Ack, Rejection>;

inline constexpr double kMinSpeed = 0.1;
inline constexpr double kMaxSpeed = 10.0;

/// Applies one command at the current tick boundary.
CommandResult apply_command(const OperatorCommand &cmd, Simulation &sim, LoopControl &loop);

// JSON codec -------------------------------------------------------------------

[[nodiscard]] std::string to_json(const TelemetryFrame &frame);
[[nodiscard]] TelemetryFrame parse_frame(const std::string &text);

[[nodiscard]] std::string to_json(const OperatorCommand &cmd);
/// Schema check only; range checks happen in apply_command. Anything that is
/// not a well-formed version-1 command yields Rejection{Malformed}.
[[nodiscard]] std::variant<OperatorCommand, Rejection> parse_command(const std::string &text);

[[nodiscard]] std::string to_json(const CommandResult &result);

// Replay -----------------------------------------------------------------------

struct LoggedCommand {
    std::int64_t tick{0};
    OperatorCommand command;
};

/// Re-issues recorded commands at the ticks they were applied.
class ReplayOperator : public Operator {
  public:
    explicit ReplayOperator(std::vector<LoggedCommand> commands);
    void before_tick(Simulation &sim) override;
    [[nodiscard]] const LoopControl &loop() const { return loop_; }

  private:
    std::vector<LoggedCommand> commands_;
    std::size_t next_{0};
    LoopControl loop_;
};

[[nodiscard]] std::string commands_to_json(const std::vector<LoggedCommand> &commands);
[[nodiscard]] std::vector<LoggedCommand> parse_commands(const std::string &text);

// Loop owner -------------------------------------------------------------------

using ReplySink = std::function<void(const std::string &)>;

/// Owns the simulation. submit() may be called from any thread; everything
/// else belongs to the tick-loop thread. Commands are never dropped.
class Gateway {
  public:
    explicit Gateway(ScenarioConfig cfg, std::unique_ptr<Operator> pilot = nullptr);

    void submit(std::string text, ReplySink reply);
    [[nodiscard]] std::size_t queued() const;

    /// Applies every queued command; replies go to their sinks.
    void process_commands();
    /// One tick when running and not paused. Returns whether a tick ran.
    bool step();
    [[nodiscard]] TelemetryFrame frame();

    [[nodiscard]] const Simulation &sim() const { return sim_; }
    [[nodiscard]] const LoopControl &loop() const { return loop_; }
    [[nodiscard]] const std::vector<LoggedCommand> &command_log() const { return log_; }

  private:
    struct Pending {
        std::string text;
        ReplySink reply;
    };

    Simulation sim_;
    std::unique_ptr<Operator> pilot_;
    LoopControl loop_;
    FrameCursor cursor_;
    std::vector<LoggedCommand> log_;
    mutable std::mutex mutex_;
    std::deque<Pending> inbox_;
};

} // namespace blimpswarm::gateway
