#include "blimpswarm/scenario.hpp"

#include "numfmt.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace blimpswarm {

namespace pt = boost::property_tree;

ConfigError::ConfigError(std::string field, const std::string &message, int line)
    : Error(line > 0 ? "config line " + std::to_string(line) + ": " + message
                     : (field.empty() ? "config: " + message : "config field '" + field + "': " + message)),
      field_(std::move(field)), line_(line) {}

std::string to_string(Policy policy) {
    return policy == Policy::SwitchEnabled ? "switch" : "no-switch";
}

Policy policy_from_string(const std::string &text) {
    if (text == "switch") return Policy::SwitchEnabled;
    if (text == "no-switch") return Policy::SwitchDisabled;
    throw InvalidArgument("unknown policy '" + text + "' (expected switch or no-switch)");
}

namespace {

void require(bool ok, const std::string &field, const std::string &message) {
    if (!ok) throw ConfigError(field, message);
}

/// Strict accessor over a parsed INI tree: every key read is remembered so
/// that leftovers can be reported as unknown.
class Reader {
  public:
    explicit Reader(const pt::ptree &tree) : tree_(tree) {}

    std::optional<std::string> raw(const std::string &section, const std::string &key) {
        const std::string field = section + "." + key;
        seen_.insert(field);
        const auto sec = tree_.find(section);
        if (sec == tree_.not_found()) return std::nullopt;
        const auto item = sec->second.find(key);
        if (item == sec->second.not_found()) return std::nullopt;
        return item->second.data();
    }

    std::string text(const std::string &section, const std::string &key) {
        auto value = raw(section, key);
        if (!value) throw ConfigError(section + "." + key, "missing required field");
        return *value;
    }

    double number(const std::string &section, const std::string &key) {
        const std::string value = text(section, key);
        const auto parsed = detail::parse_double(value);
        if (!parsed || !std::isfinite(*parsed)) {
            throw ConfigError(section + "." + key, "expected a finite number, got '" + value + "'");
        }
        return *parsed;
    }

    double number_or(const std::string &section, const std::string &key, double fallback) {
        if (!raw(section, key)) return fallback;
        return number(section, key);
    }

    double degrees(const std::string &section, const std::string &key) {
        return deg_to_rad(number(section, key));
    }

    long long integer(const std::string &section, const std::string &key) {
        const std::string value = text(section, key);
        const auto parsed = detail::parse_integer(value);
        if (!parsed) throw ConfigError(section + "." + key, "expected an integer, got '" + value + "'");
        return *parsed;
    }

    bool boolean(const std::string &section, const std::string &key) {
        const std::string value = text(section, key);
        if (value == "true" || value == "1" || value == "yes") return true;
        if (value == "false" || value == "0" || value == "no") return false;
        throw ConfigError(section + "." + key, "expected true or false, got '" + value + "'");
    }

    PidGains pid(const std::string &section) {
        PidGains g;
        g.kp = number(section, "kp");
        g.ki = number(section, "ki");
        g.kd = number(section, "kd");
        g.i_limit = number(section, "i_limit");
        g.out_min = number(section, "out_min");
        g.out_max = number(section, "out_max");
        g.rate_limit = number_or(section, "rate_limit", 0.0);
        return g;
    }

    void reject_unknown() const {
        for (const auto &[section, keys] : tree_) {
            if (keys.empty() && !keys.data().empty()) {
                throw ConfigError(section, "key outside of any section");
            }
            for (const auto &[key, value] : keys) {
                const std::string field = section + "." + key;
                if (!seen_.count(field)) throw ConfigError(field, "unknown field");
            }
        }
    }

  private:
    const pt::ptree &tree_;
    std::set<std::string> seen_;
};

std::vector<std::string> split(const std::string &text, char sep) {
    std::vector<std::string> parts;
    std::string current;
    std::istringstream in(text);
    while (std::getline(in, current, sep)) parts.push_back(current);
    return parts;
}

std::vector<double> numbers_in(const std::string &text, const std::string &field) {
    std::vector<double> out;
    std::istringstream in(text);
    std::string token;
    while (in >> token) {
        const auto parsed = detail::parse_double(token);
        if (!parsed || !std::isfinite(*parsed)) {
            throw ConfigError(field, "expected numbers, got '" + token + "'");
        }
        out.push_back(*parsed);
    }
    return out;
}

ScenarioConfig from_tree(const pt::ptree &tree) {
    Reader r(tree);
    ScenarioConfig cfg;

    cfg.blimps = static_cast<int>(r.integer("scenario", "blimps"));
    const long long seed = r.integer("scenario", "seed");
    require(seed >= 0, "scenario.seed", "must be non-negative");
    cfg.seed = static_cast<std::uint64_t>(seed);
    cfg.duration = r.number("scenario", "duration");
    try {
        cfg.policy = policy_from_string(r.text("scenario", "policy"));
    } catch (const InvalidArgument &e) {
        throw ConfigError("scenario.policy", e.what());
    }
    cfg.initial_leader = static_cast<int>(r.integer("scenario", "initial_leader"));
    cfg.steer_hold = r.number("scenario", "steer_hold");

    const std::string mode = r.text("formation", "mode");
    if (mode == "random") {
        cfg.formation.distance_min = r.number("formation", "distance_min");
        cfg.formation.distance_max = r.number("formation", "distance_max");
        cfg.formation.angle_min = r.degrees("formation", "angle_min_deg");
        cfg.formation.angle_max = r.degrees("formation", "angle_max_deg");
        cfg.formation.altitude_jitter = r.number("formation", "altitude_jitter");
    } else if (mode == "explicit") {
        for (int i = 0; i < std::max(cfg.blimps, 0); ++i) {
            const std::string key = "pose" + std::to_string(i);
            const auto v = numbers_in(r.text("formation", key), "formation." + key);
            require(v.size() == 4, "formation." + key, "expected 'x y z yaw_deg'");
            cfg.initial_poses.push_back(InitialPose{{v[0], v[1], v[2]}, deg_to_rad(v[3])});
        }
    } else {
        throw ConfigError("formation.mode", "expected random or explicit, got '" + mode + "'");
    }

    int index = 0;
    for (const std::string &chunk : split(r.text("path", "waypoints"), '|')) {
        const auto v = numbers_in(chunk, "path.waypoints");
        require(v.size() == 3, "path.waypoints", "each waypoint needs 'x y z'");
        cfg.path.push_back(Waypoint{index++, {v[0], v[1], v[2]}, Turn::None});
    }
    const std::string turns = r.text("path", "turns");
    if (turns == "auto") {
        cfg.path = scenario::tag_turns(cfg.path, r.degrees("path", "turn_tolerance_deg"));
    } else {
        std::istringstream in(turns);
        std::string word;
        std::size_t i = 0;
        while (in >> word) {
            require(i < cfg.path.size(), "path.turns", "more turn tags than waypoints");
            try {
                cfg.path[i++].turn = turn_from_string(word);
            } catch (const InvalidArgument &e) {
                throw ConfigError("path.turns", e.what());
            }
        }
        require(i == cfg.path.size(), "path.turns", "one turn tag per waypoint required");
        r.raw("path", "turn_tolerance_deg");
    }
    cfg.goal_radius = r.number("path", "goal_radius");

    cfg.plant.mass = r.number("plant", "mass");
    cfg.plant.drag_h = r.number("plant", "drag_h");
    cfg.plant.drag_z = r.number("plant", "drag_z");
    cfg.plant.drag_yaw = r.number("plant", "drag_yaw");
    cfg.plant.inertia_z = r.number("plant", "inertia_z");
    cfg.plant.pitch_tau = r.number("plant", "pitch_tau");
    cfg.plant.dt = r.number("plant", "dt");
    cfg.plant.limits.thrust_h_max = r.number("plant", "thrust_h_max");
    cfg.plant.limits.thrust_v_max = r.number("plant", "thrust_v_max");
    cfg.plant.limits.torque_max = r.number("plant", "torque_max");
    cfg.plant.limits.pitch_max = r.degrees("plant", "pitch_max_deg");

    cfg.geometry.length = r.number("geometry", "length");
    cfg.geometry.envelope_radius = r.number("geometry", "envelope_radius");
    cfg.geometry.neutral_buoyancy = r.boolean("geometry", "neutral_buoyancy");
    cfg.geometry.mass = cfg.plant.mass;
    const double lift = r.number_or("geometry", "net_lift", 0.0);
    cfg.plant.buoyancy = cfg.geometry.neutral_buoyancy ? 0.0 : lift;

    cfg.camera.width = r.number("camera", "width");
    cfg.camera.height = r.number("camera", "height");
    cfg.camera.i0 = r.number_or("camera", "i0", 0.5 * cfg.camera.width);
    cfg.camera.j0 = r.number_or("camera", "j0", 0.5 * cfg.camera.height);
    cfg.camera.hfov = r.degrees("camera", "hfov_deg");
    cfg.camera.max_range = r.number("camera", "max_range");
    cfg.render.realistic_aspect = r.boolean("camera", "realistic_aspect");

    cfg.calibration.d0 = r.number("calibration", "d0");
    cfg.calibration.l_f0 = r.number("calibration", "l_f0");
    cfg.calibration.length = cfg.geometry.length;

    cfg.noise.pixel = r.number("noise", "pixel");
    cfg.noise.altimeter = r.number("noise", "altimeter");
    cfg.noise.disturbance = r.number("noise", "disturbance");
    cfg.noise.imu.pitch = r.number("noise", "imu_pitch");
    cfg.noise.imu.yaw_rate = r.number("noise", "imu_yaw_rate");
    cfg.noise.imu.v_h = r.number("noise", "imu_v_h");
    cfg.render.noise_px = cfg.noise.pixel;

    cfg.fusion_alpha = r.number("fusion", "alpha");
    cfg.fusion_v_h_clamp = r.number("fusion", "v_h_clamp");

    cfg.setpoints.distance = r.number("setpoints", "distance");
    cfg.setpoints.altitude = r.number("setpoints", "altitude");
    cfg.setpoints.yaw = r.degrees("setpoints", "yaw_deg");
    cfg.setpoints.pitch_max = r.degrees("setpoints", "pitch_max_deg");

    cfg.gains.distance = r.pid("distance_pid");
    cfg.gains.velocity = r.pid("velocity_pid");
    cfg.gains.height = r.pid("height_pid");
    cfg.gains.yaw = r.pid("yaw_pid");
    cfg.gains.thrust_per_pitch = r.number("control", "thrust_per_pitch");
    cfg.gains.yaw_rate_gain = r.number("control", "yaw_rate_gain");
    cfg.gains.yaw_rate_feedforward = r.number("control", "yaw_rate_feedforward");
    cfg.gains.leader_max_yaw_rate = r.degrees("control", "leader_max_yaw_rate_deg");

    cfg.coordination.dt = cfg.plant.dt;
    cfg.coordination.scan_rate = r.degrees("coordination", "scan_rate_deg");
    cfg.coordination.search_timeout = r.number("coordination", "search_timeout");
    cfg.coordination.lost_grace = r.number("coordination", "lost_grace");
    cfg.coordination.drop_probability = r.number("coordination", "drop_probability");

    cfg.autopilot.cruise = r.number("autopilot", "cruise");
    cfg.autopilot.capture_radius = r.number("autopilot", "capture_radius");
    cfg.autopilot.heading_gain = r.number("autopilot", "heading_gain");
    cfg.autopilot.approach_gain = r.number("autopilot", "approach_gain");
    cfg.autopilot.align_tolerance = r.degrees("autopilot", "align_tolerance_deg");
    cfg.autopilot.rotate_stick = r.number("autopilot", "rotate_stick");
    cfg.autopilot.retry_interval = r.number("autopilot", "retry_interval");
    cfg.autopilot.switch_giveup = r.number("autopilot", "switch_giveup");

    cfg.success.d_min = r.number("success", "d_min");
    cfg.success.d_max = r.number("success", "d_max");

    r.reject_unknown();
    cfg.camera.focal = cfg.calibration.d0 * cfg.calibration.l_f0 / cfg.calibration.length;
    cfg.validate();
    return cfg;
}

// Nested validators report "<what>: <member> ...". The member is mapped back to
// its INI key so the error names the exact field.
std::string field_from_message(const std::string &section, const std::string &message) {
    static const std::map<std::string, std::string> kAliases{
        {"hfov", "hfov_deg"}, {"pitch_max", "pitch_max_deg"}, {"yaw", "yaw_deg"},
        {"scan_rate", "scan_rate_deg"}, {"leader_max_yaw_rate", "leader_max_yaw_rate_deg"},
        {"image", "width"}, {"focal", "l_f0"}, {"L0", ""}, {"gains", ""}};
    const auto colon = message.find(": ");
    if (colon == std::string::npos) return section;
    const auto start = colon + 2;
    const auto end = message.find(' ', start);
    std::string key = message.substr(start, end == std::string::npos ? std::string::npos : end - start);
    if (auto it = kAliases.find(key); it != kAliases.end()) key = it->second;
    return key.empty() ? section : section + "." + key;
}

template <typename Fn>
void check(const std::string &section, Fn &&fn) {
    try {
        fn();
    } catch (const ConfigError &) {
        throw;
    } catch (const Error &e) {
        throw ConfigError(field_from_message(section, e.what()), e.what());
    }
}

} // namespace

void ScenarioConfig::validate() const {
    require(blimps >= 2, "scenario.blimps", "a swarm needs at least 2 blimps");
    require(duration >= 0.0, "scenario.duration", "must be non-negative");
    require(initial_leader >= 0 && initial_leader < blimps, "scenario.initial_leader",
            "must name one of the blimps");
    require(steer_hold > 0.0, "scenario.steer_hold", "must be positive");
    require(initial_poses.empty() || static_cast<int>(initial_poses.size()) == blimps,
            "formation.pose", "one pose per blimp required");
    for (const InitialPose &p : initial_poses) {
        require(p.position.finite() && p.position.z >= 0.0, "formation.pose",
                "positions must be finite with z >= 0");
    }
    if (initial_poses.empty()) {
        require(formation.distance_min > 0.0 && formation.distance_min <= formation.distance_max,
                "formation.distance_min", "need 0 < distance_min <= distance_max");
        require(formation.angle_min >= 0.0 && formation.angle_min <= formation.angle_max &&
                    formation.angle_max < kPi / 2.0,
                "formation.angle_min_deg", "need 0 <= angle_min <= angle_max < 90");
        require(formation.altitude_jitter >= 0.0, "formation.altitude_jitter", "must be non-negative");
        require(!path.empty(), "path.waypoints", "random formations start at the first waypoint");
    }
    require(path.size() >= 2, "path.waypoints", "at least a start and a goal are required");
    for (std::size_t i = 1; i < path.size(); ++i) {
        require(path[i].index > path[i - 1].index, "path.waypoints", "indices must increase");
        require((path[i].position - path[i - 1].position).planar_norm() > 0.0, "path.waypoints",
                "consecutive waypoints must differ in the plane");
    }
    require(goal_radius > 0.0, "path.goal_radius", "must be positive");

    check("plant", [&] { plant.validate(); });
    check("geometry", [&] { geometry.validate(); });
    require(geometry.mass == plant.mass, "plant.mass", "geometry and plant mass disagree");
    check("camera", [&] { camera.validate(); });
    check("calibration", [&] { calibration.validate(); });
    require(calibration.length == geometry.length, "calibration", "L0 must match geometry.length");
    require(camera.focal * std::tan(0.5 * camera.hfov) <= 0.5 * camera.width + 1e-9, "camera.hfov_deg",
            "field of view wider than the image for the calibrated focal length");
    require(render.noise_px >= 0.0, "noise.pixel", "must be non-negative");
    require(noise.altimeter >= 0.0, "noise.altimeter", "must be non-negative");
    require(noise.disturbance >= 0.0, "noise.disturbance", "must be non-negative");
    require(noise.imu.pitch >= 0.0 && noise.imu.yaw_rate >= 0.0 && noise.imu.v_h >= 0.0, "noise.imu",
            "must be non-negative");
    require(fusion_alpha > 0.0 && fusion_alpha <= 1.0, "fusion.alpha", "must be in (0, 1]");
    require(fusion_v_h_clamp > 0.0, "fusion.v_h_clamp", "must be positive");
    check("setpoints", [&] { setpoints.validate(); });
    require(setpoints.pitch_max <= plant.limits.pitch_max, "setpoints.pitch_max_deg",
            "must not exceed plant.pitch_max_deg");
    check("distance_pid", [&] { gains.distance.validate(); });
    check("velocity_pid", [&] { gains.velocity.validate(); });
    check("height_pid", [&] { gains.height.validate(); });
    check("yaw_pid", [&] { gains.yaw.validate(); });
    check("control", [&] { gains.validate(); });
    check("coordination", [&] { coordination.validate(); });
    require(coordination.dt == plant.dt, "coordination", "tick length must match plant.dt");
    require(autopilot.cruise > 0.0 && autopilot.cruise <= 1.0, "autopilot.cruise", "must be in (0, 1]");
    require(autopilot.capture_radius > 0.0, "autopilot.capture_radius", "must be positive");
    require(autopilot.heading_gain > 0.0, "autopilot.heading_gain", "must be positive");
    require(autopilot.approach_gain > 0.0, "autopilot.approach_gain", "must be positive");
    require(autopilot.align_tolerance > 0.0, "autopilot.align_tolerance_deg", "must be positive");
    require(autopilot.rotate_stick > 0.0 && autopilot.rotate_stick <= 1.0, "autopilot.rotate_stick",
            "must be in (0, 1]");
    require(autopilot.retry_interval > 0.0, "autopilot.retry_interval", "must be positive");
    require(autopilot.switch_giveup > 0.0, "autopilot.switch_giveup", "must be positive");
    require(success.d_min > 0.0 && success.d_min < success.d_max, "success.d_min",
            "need 0 < d_min < d_max");
}

namespace scenario {

std::vector<Waypoint> tag_turns(std::vector<Waypoint> path, double tolerance) {
    for (Waypoint &w : path) w.turn = Turn::None;
    for (std::size_t j = 1; j + 1 < path.size(); ++j) {
        const Vec3 in = path[j].position - path[j - 1].position;
        const Vec3 out = path[j + 1].position - path[j].position;
        const double change =
            normalize_angle(std::atan2(out.y, out.x) - std::atan2(in.y, in.x));
        if (std::abs(std::abs(change) - 0.5 * kPi) < tolerance) {
            const double cross = in.x * out.y - in.y * out.x;
            path[j].turn = cross > 0.0 ? Turn::Left : Turn::Right;
        }
    }
    return path;
}

ScenarioConfig parse_config(const std::string &text) {
    pt::ptree tree;
    std::istringstream in(text);
    try {
        pt::ini_parser::read_ini(in, tree);
    } catch (const pt::ini_parser_error &e) {
        throw ConfigError("", e.message(), static_cast<int>(e.line()));
    }
    return from_tree(tree);
}

ScenarioConfig load_config(const std::filesystem::path &path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open scenario file " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

std::vector<BlimpState> initial_states(const ScenarioConfig &cfg) {
    std::vector<BlimpState> states(static_cast<std::size_t>(cfg.blimps));
    for (int i = 0; i < cfg.blimps; ++i) {
        states[i].id = BlimpId{i};
        states[i].role = i == cfg.initial_leader ? Role::Leader : Role::Follower;
    }

    if (!cfg.initial_poses.empty()) {
        for (int i = 0; i < cfg.blimps; ++i) {
            states[i].pose.position = cfg.initial_poses[i].position;
            states[i].pose.yaw = normalize_angle(cfg.initial_poses[i].yaw);
        }
        return states;
    }

    NoiseSource rng = NoiseSource::derive(cfg.seed, 0xF0A3A7105ULL);
    const Vec3 start = cfg.path.front().position;
    const Vec3 first_leg = cfg.path[1].position - start;
    const double heading = std::atan2(first_leg.y, first_leg.x);
    const double rear = heading + kPi;

    BlimpState &leader = states[cfg.initial_leader];
    leader.pose.position = {start.x, start.y, cfg.setpoints.altitude};
    leader.pose.yaw = normalize_angle(heading);

    // Followers in index order after the leader: first on the left, then the
    // right, then the next rank further back.
    for (int k = 1; k < cfg.blimps; ++k) {
        const int id = (cfg.initial_leader + k) % cfg.blimps;
        const int rank = (k + 1) / 2;
        const double side = (k % 2 == 1) ? -1.0 : 1.0; // left of the heading is rear - angle
        const double u_d = rng.uniform01();
        const double u_a = rng.uniform01();
        const double u_h = rng.symmetric_uniform(1.0);
        const double distance =
            rank * (cfg.formation.distance_min +
                    u_d * (cfg.formation.distance_max - cfg.formation.distance_min));
        const double angle = cfg.formation.angle_min +
                             u_a * (cfg.formation.angle_max - cfg.formation.angle_min);
        const double direction = rear + side * angle;
        BlimpState &s = states[id];
        s.pose.position = {start.x + distance * std::cos(direction),
                           start.y + distance * std::sin(direction),
                           std::max(0.0, cfg.setpoints.altitude + u_h * cfg.formation.altitude_jitter)};
        s.pose.yaw = normalize_angle(direction + kPi); // facing the leader
    }
    return states;
}

} // namespace scenario
} // namespace blimpswarm
