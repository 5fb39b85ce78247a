#include "blimpswarm/gateway.hpp"

#include <json.hpp>

#include <cmath>

namespace blimpswarm::gateway {

using nlohmann::json;

namespace {

template <class... Ts> struct overloaded : Ts... {
    using Ts::operator()...;
};

AlertKind alert_kind_from_string(const std::string &text) {
    for (AlertKind k : {AlertKind::LeaderSelectionError, AlertKind::FormationBreak, AlertKind::SearchTimeout}) {
        if (text == to_string(k)) return k;
    }
    throw InvalidArgument("unknown alert kind '" + text + "'");
}

json event_to_json(const RunEvent &ev) {
    json e{{"tick", ev.tick}, {"kind", ev.kind}};
    if (ev.blimp) e["blimp"] = *ev.blimp;
    if (ev.other) e["other"] = *ev.other;
    if (ev.kind == event::kSearchStart) e["sanctioned"] = ev.sanctioned;
    if (!ev.detail.empty()) e["detail"] = ev.detail;
    return e;
}

RunEvent event_from_json(const json &e) {
    RunEvent ev;
    ev.tick = e.at("tick").get<std::int64_t>();
    ev.kind = e.at("kind").get<std::string>();
    if (e.contains("blimp")) ev.blimp = e["blimp"].get<int>();
    if (e.contains("other")) ev.other = e["other"].get<int>();
    if (e.contains("sanctioned")) ev.sanctioned = e["sanctioned"].get<bool>();
    if (e.contains("detail")) ev.detail = e["detail"].get<std::string>();
    return ev;
}

std::string status_of(const Simulation &sim, const LoopControl &loop) {
    if (sim.finished()) return to_string(sim.stop_reason());
    return loop.paused ? "paused" : "running";
}

bool in_unit_range(double v) { return std::isfinite(v) && v >= -1.0 && v <= 1.0; }

Rejection reject(RejectReason reason, std::string message, const OperatorCommand &cmd, std::int64_t tick) {
    return Rejection{reason, std::move(message), cmd.client_tick, tick};
}

double number(const json &j, const char *key) {
    const json &v = j.at(key);
    if (!v.is_number()) throw InvalidArgument(std::string("field '") + key + "' must be a number");
    return v.get<double>();
}

} // namespace

TelemetryFrame snapshot(const Simulation &sim, const LoopControl &loop, FrameCursor &cursor) {
    const ScenarioConfig &cfg = sim.config();
    TelemetryFrame f;
    f.tick = sim.tick();
    f.t = sim.time();
    f.leader = sim.leader().index;
    f.paused = loop.paused;
    f.speed = loop.speed;
    f.status = status_of(sim, loop);

    for (int i = 0; i < sim.size(); ++i) {
        const BlimpState &s = sim.states()[i];
        BlimpTelemetry b;
        b.id = i;
        b.x = s.pose.position.x;
        b.y = s.pose.position.y;
        b.z = s.pose.position.z;
        b.theta = s.pose.pitch;
        b.psi = s.pose.yaw;
        b.v_h = s.v_h;
        b.role = sim.coordinator().roles()[i];
        b.camera_view.fov = cfg.camera.hfov;
        b.camera_view.width = cfg.camera.width;
        b.camera_view.height = cfg.camera.height;
        b.camera_view.max_range = cfg.camera.max_range;
        for (const BlimpId target : sim.visibility().seen_by(BlimpId{i})) {
            b.visible_targets.push_back(target.index);
            const auto &obs = std::get<ImageObservation>(sim.observation(BlimpId{i}, target));
            b.camera_view.detections.push_back(Detection{target.index, obs.i_p, obs.j_p, obs.l_f});
        }
        f.blimps.push_back(std::move(b));
    }

    const auto &alerts = sim.coordinator().alerts();
    for (std::size_t k = cursor.alerts; k < alerts.size(); ++k) {
        f.alerts.push_back(AlertRecord{alerts[k].kind, alerts[k].blimp.index, alerts[k].tick, alerts[k].message});
    }
    cursor.alerts = alerts.size();
    const auto &events = sim.log().events();
    f.events.assign(events.begin() + static_cast<std::ptrdiff_t>(std::min(cursor.events, events.size())),
                    events.end());
    cursor.events = events.size();

    f.metrics = sim.live_metrics();
    f.area_defined = sim.size() >= 3 && f.metrics.samples > 0;
    return f;
}

const char *kind_name(const CommandKind &kind) {
    return std::visit(overloaded{[](const Steer &) { return "steer"; },
                                 [](const SelectLeader &) { return "select_leader"; },
                                 [](const RotateLeader &) { return "rotate"; },
                                 [](const Pause &) { return "pause"; },
                                 [](const Resume &) { return "resume"; },
                                 [](const SetSpeedFactor &) { return "speed"; }},
                      kind);
}

const char *to_string(RejectReason reason) {
    switch (reason) {
    case RejectReason::Malformed:
        return "malformed";
    case RejectReason::UnknownBlimp:
        return "unknown_blimp";
    case RejectReason::LeaderSelectionError:
        return "leader_selection_error";
    case RejectReason::AlreadyLeader:
        return "already_leader";
    case RejectReason::Finished:
        return "finished";
    }
    return "?";
}

CommandResult apply_command(const OperatorCommand &cmd, Simulation &sim, LoopControl &loop) {
    const std::int64_t tick = sim.tick();
    const Ack ack{kind_name(cmd.kind), cmd.client_tick, tick};
    const bool finished = sim.finished();

    return std::visit(
        overloaded{
            [&](const Steer &s) -> CommandResult {
                if (!in_unit_range(s.forward) || !in_unit_range(s.yaw) || !in_unit_range(s.vertical)) {
                    return reject(RejectReason::Malformed, "steer inputs must lie in [-1, 1]", cmd, tick);
                }
                if (finished) return reject(RejectReason::Finished, "run has ended", cmd, tick);
                sim.steer(SteerInput{s.forward, s.yaw, s.vertical});
                return ack;
            },
            [&](const RotateLeader &r) -> CommandResult {
                if (r.direction != 1 && r.direction != -1) {
                    return reject(RejectReason::Malformed, "rotate direction must be left or right", cmd, tick);
                }
                if (finished) return reject(RejectReason::Finished, "run has ended", cmd, tick);
                sim.steer(SteerInput{0.0, r.direction * sim.config().autopilot.rotate_stick, 0.0});
                return ack;
            },
            [&](const SelectLeader &s) -> CommandResult {
                if (s.id < 0 || s.id >= sim.size()) {
                    return reject(RejectReason::UnknownBlimp, "no blimp " + std::to_string(s.id), cmd, tick);
                }
                if (BlimpId{s.id} == sim.leader()) {
                    return reject(RejectReason::AlreadyLeader,
                                  "blimp " + std::to_string(s.id) + " already leads", cmd, tick);
                }
                if (finished) return reject(RejectReason::Finished, "run has ended", cmd, tick);
                const SwitchVerdict v = sim.select_leader(BlimpId{s.id}, "operator");
                if (!v.ok) {
                    return reject(RejectReason::LeaderSelectionError, v.alert ? v.alert->message : "", cmd, tick);
                }
                return ack;
            },
            [&](const Pause &) -> CommandResult {
                if (!loop.paused) {
                    loop.paused = true;
                    sim.note(RunEvent{0, event::kPause, std::nullopt, std::nullopt, false, ""});
                }
                return ack;
            },
            [&](const Resume &) -> CommandResult {
                if (loop.paused) {
                    loop.paused = false;
                    sim.note(RunEvent{0, event::kResume, std::nullopt, std::nullopt, false, ""});
                }
                return ack;
            },
            [&](const SetSpeedFactor &s) -> CommandResult {
                if (!std::isfinite(s.factor) || s.factor < kMinSpeed || s.factor > kMaxSpeed) {
                    return reject(RejectReason::Malformed, "speed factor must lie in [0.1, 10]", cmd, tick);
                }
                loop.speed = s.factor;
                return ack;
            }},
        cmd.kind);
}

// JSON -----------------------------------------------------------------------

std::string to_json(const TelemetryFrame &f) {
    json blimps = json::array();
    for (const BlimpTelemetry &b : f.blimps) {
        json detections = json::array();
        for (const Detection &d : b.camera_view.detections) {
            detections.push_back({{"target", d.target}, {"i_P", d.i_p}, {"j_P", d.j_p}, {"l_f", d.l_f}});
        }
        blimps.push_back({{"id", b.id},
                          {"x", b.x},
                          {"y", b.y},
                          {"z", b.z},
                          {"theta", b.theta},
                          {"psi", b.psi},
                          {"v_h", b.v_h},
                          {"role", to_string(b.role)},
                          {"visible_targets", b.visible_targets},
                          {"camera_view",
                           {{"fov", b.camera_view.fov},
                            {"width", b.camera_view.width},
                            {"height", b.camera_view.height},
                            {"max_range", b.camera_view.max_range},
                            {"detections", std::move(detections)}}}});
    }
    json alerts = json::array();
    for (const AlertRecord &a : f.alerts) {
        alerts.push_back({{"kind", to_string(a.kind)}, {"blimp", a.blimp}, {"tick", a.tick}, {"message", a.message}});
    }
    json events = json::array();
    for (const RunEvent &ev : f.events) events.push_back(event_to_json(ev));

    json metrics{{"samples", f.metrics.samples}};
    if (f.area_defined) {
        metrics["current_area"] = f.metrics.current_area;
        metrics["average_area"] = f.metrics.average_area;
        metrics["area_rmse"] = f.metrics.area_rmse;
    } else {
        metrics["current_area"] = nullptr;
        metrics["average_area"] = nullptr;
        metrics["area_rmse"] = nullptr;
    }
    json doc{{"type", "state"},       {"version", kProtocolVersion},
             {"tick", f.tick},        {"t", f.t},
             {"leader", f.leader},    {"paused", f.paused},
             {"speed", f.speed},      {"status", f.status},
             {"blimps", std::move(blimps)}, {"alerts", std::move(alerts)},
             {"events", std::move(events)}, {"metrics", std::move(metrics)}};
    return doc.dump();
}

TelemetryFrame parse_frame(const std::string &text) {
    try {
        const json doc = json::parse(text);
        if (doc.at("type") != "state" || doc.at("version") != kProtocolVersion) {
            throw InvalidArgument("parse_frame: not a version-1 state message");
        }
        TelemetryFrame f;
        f.tick = doc.at("tick").get<std::int64_t>();
        f.t = doc.at("t").get<double>();
        f.leader = doc.at("leader").get<int>();
        f.paused = doc.at("paused").get<bool>();
        f.speed = doc.at("speed").get<double>();
        f.status = doc.at("status").get<std::string>();
        for (const json &b : doc.at("blimps")) {
            BlimpTelemetry t;
            t.id = b.at("id").get<int>();
            t.x = b.at("x").get<double>();
            t.y = b.at("y").get<double>();
            t.z = b.at("z").get<double>();
            t.theta = b.at("theta").get<double>();
            t.psi = b.at("psi").get<double>();
            t.v_h = b.at("v_h").get<double>();
            t.role = role_from_string(b.at("role").get<std::string>());
            t.visible_targets = b.at("visible_targets").get<std::vector<int>>();
            const json &cv = b.at("camera_view");
            t.camera_view.fov = cv.at("fov").get<double>();
            t.camera_view.width = cv.at("width").get<double>();
            t.camera_view.height = cv.at("height").get<double>();
            t.camera_view.max_range = cv.at("max_range").get<double>();
            for (const json &d : cv.at("detections")) {
                t.camera_view.detections.push_back(Detection{d.at("target").get<int>(), d.at("i_P").get<double>(),
                                                             d.at("j_P").get<double>(), d.at("l_f").get<double>()});
            }
            f.blimps.push_back(std::move(t));
        }
        for (const json &a : doc.at("alerts")) {
            f.alerts.push_back(AlertRecord{alert_kind_from_string(a.at("kind").get<std::string>()),
                                           a.at("blimp").get<int>(), a.at("tick").get<std::int64_t>(),
                                           a.at("message").get<std::string>()});
        }
        for (const json &e : doc.at("events")) f.events.push_back(event_from_json(e));
        const json &m = doc.at("metrics");
        f.metrics.samples = m.at("samples").get<std::size_t>();
        f.area_defined = !m.at("average_area").is_null();
        if (f.area_defined) {
            f.metrics.current_area = m.at("current_area").get<double>();
            f.metrics.average_area = m.at("average_area").get<double>();
            f.metrics.area_rmse = m.at("area_rmse").get<double>();
        }
        return f;
    } catch (const json::exception &e) {
        throw InvalidArgument(std::string("parse_frame: ") + e.what());
    }
}

std::string to_json(const OperatorCommand &cmd) {
    json doc{{"type", "cmd"},
             {"version", kProtocolVersion},
             {"kind", kind_name(cmd.kind)},
             {"client_tick", cmd.client_tick}};
    std::visit(overloaded{[&](const Steer &s) {
                              doc["forward"] = s.forward;
                              doc["yaw"] = s.yaw;
                              doc["vertical"] = s.vertical;
                          },
                          [&](const SelectLeader &s) { doc["id"] = s.id; },
                          [&](const RotateLeader &r) { doc["direction"] = r.direction > 0 ? "left" : "right"; },
                          [](const Pause &) {}, [](const Resume &) {},
                          [&](const SetSpeedFactor &s) { doc["factor"] = s.factor; }},
               cmd.kind);
    return doc.dump();
}

std::variant<OperatorCommand, Rejection> parse_command(const std::string &text) {
    Rejection bad{RejectReason::Malformed, "", 0, 0};
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception &e) {
        bad.message = std::string("invalid JSON: ") + e.what();
        return bad;
    }
    try {
        if (!doc.is_object()) throw InvalidArgument("message must be an object");
        if (doc.contains("client_tick")) {
            if (!doc["client_tick"].is_number_integer()) throw InvalidArgument("client_tick must be an integer");
            bad.client_tick = doc["client_tick"].get<std::int64_t>();
        }
        if (!doc.contains("version") || doc["version"] != kProtocolVersion) {
            throw InvalidArgument("version must be 1");
        }
        if (!doc.contains("type") || doc["type"] != "cmd") throw InvalidArgument("type must be \"cmd\"");
        if (!doc.contains("kind") || !doc["kind"].is_string()) throw InvalidArgument("kind missing");
        const std::string kind = doc["kind"].get<std::string>();
        OperatorCommand cmd;
        cmd.client_tick = bad.client_tick;
        if (kind == "steer") {
            Steer s;
            s.forward = doc.contains("forward") ? number(doc, "forward") : 0.0;
            s.yaw = doc.contains("yaw") ? number(doc, "yaw") : 0.0;
            s.vertical = doc.contains("vertical") ? number(doc, "vertical") : 0.0;
            cmd.kind = s;
        } else if (kind == "select_leader") {
            if (!doc.contains("id") || !doc["id"].is_number_integer()) throw InvalidArgument("id must be an integer");
            cmd.kind = SelectLeader{doc["id"].get<int>()};
        } else if (kind == "rotate") {
            const std::string dir = doc.contains("direction") && doc["direction"].is_string()
                                        ? doc["direction"].get<std::string>()
                                        : std::string();
            if (dir == "left") {
                cmd.kind = RotateLeader{+1};
            } else if (dir == "right") {
                cmd.kind = RotateLeader{-1};
            } else {
                throw InvalidArgument("direction must be \"left\" or \"right\"");
            }
        } else if (kind == "pause") {
            cmd.kind = Pause{};
        } else if (kind == "resume") {
            cmd.kind = Resume{};
        } else if (kind == "speed") {
            cmd.kind = SetSpeedFactor{number(doc, "factor")};
        } else {
            throw InvalidArgument("unknown kind '" + kind + "'");
        }
        return cmd;
    } catch (const std::exception &e) {
        bad.message = e.what();
        return bad;
    }
}

std::string to_json(const CommandResult &result) {
    return std::visit(overloaded{[](const Ack &a) {
                                     return json{{"type", "ack"},
                                                 {"version", kProtocolVersion},
                                                 {"kind", a.kind},
                                                 {"client_tick", a.client_tick},
                                                 {"tick", a.tick}}
                                         .dump();
                                 },
                                 [](const Rejection &r) {
                                     return json{{"type", "reject"},
                                                 {"version", kProtocolVersion},
                                                 {"reason", to_string(r.reason)},
                                                 {"message", r.message},
                                                 {"client_tick", r.client_tick},
                                                 {"tick", r.tick}}
                                         .dump();
                                 }},
                      result);
}

// Replay ---------------------------------------------------------------------

ReplayOperator::ReplayOperator(std::vector<LoggedCommand> commands) : commands_(std::move(commands)) {
    for (std::size_t k = 1; k < commands_.size(); ++k) {
        if (commands_[k].tick < commands_[k - 1].tick) {
            throw InvalidArgument("ReplayOperator: commands must be ordered by tick");
        }
    }
}

void ReplayOperator::before_tick(Simulation &sim) {
    while (next_ < commands_.size() && commands_[next_].tick <= sim.tick()) {
        (void)apply_command(commands_[next_].command, sim, loop_);
        ++next_;
    }
}

std::string commands_to_json(const std::vector<LoggedCommand> &commands) {
    json arr = json::array();
    for (const LoggedCommand &c : commands) {
        arr.push_back({{"tick", c.tick}, {"command", json::parse(to_json(c.command))}});
    }
    return json{{"version", kProtocolVersion}, {"commands", std::move(arr)}}.dump(2) + "\n";
}

std::vector<LoggedCommand> parse_commands(const std::string &text) {
    std::vector<LoggedCommand> out;
    try {
        const json doc = json::parse(text);
        if (doc.at("version") != kProtocolVersion) throw InvalidArgument("commands: version must be 1");
        for (const json &c : doc.at("commands")) {
            auto parsed = parse_command(c.at("command").dump());
            if (auto *r = std::get_if<Rejection>(&parsed)) throw InvalidArgument("commands: " + r->message);
            out.push_back(LoggedCommand{c.at("tick").get<std::int64_t>(), std::get<OperatorCommand>(parsed)});
        }
    } catch (const json::exception &e) {
        throw InvalidArgument(std::string("commands: ") + e.what());
    }
    return out;
}

// Gateway --------------------------------------------------------------------

Gateway::Gateway(ScenarioConfig cfg, std::unique_ptr<Operator> pilot)
    : sim_(std::move(cfg)), pilot_(std::move(pilot)) {}

void Gateway::submit(std::string text, ReplySink reply) {
    std::lock_guard lock(mutex_);
    inbox_.push_back(Pending{std::move(text), std::move(reply)});
}

std::size_t Gateway::queued() const {
    std::lock_guard lock(mutex_);
    return inbox_.size();
}

void Gateway::process_commands() {
    std::deque<Pending> batch;
    {
        std::lock_guard lock(mutex_);
        batch.swap(inbox_);
    }
    for (Pending &p : batch) {
        auto parsed = parse_command(p.text);
        CommandResult result;
        if (auto *r = std::get_if<Rejection>(&parsed)) {
            r->tick = sim_.tick();
            result = *r;
        } else {
            const OperatorCommand &cmd = std::get<OperatorCommand>(parsed);
            result = apply_command(cmd, sim_, loop_);
            if (std::holds_alternative<Ack>(result) ||
                std::get<Rejection>(result).reason == RejectReason::LeaderSelectionError) {
                log_.push_back(LoggedCommand{sim_.tick(), cmd});
            }
        }
        if (p.reply) p.reply(to_json(result));
    }
}

bool Gateway::step() {
    if (loop_.paused || sim_.finished()) return false;
    if (pilot_) pilot_->before_tick(sim_);
    sim_.advance();
    return true;
}

TelemetryFrame Gateway::frame() { return snapshot(sim_, loop_, cursor_); }

} // namespace blimpswarm::gateway
