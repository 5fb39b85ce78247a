#include "blimpswarm/runlog.hpp"

#include "numfmt.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>

namespace blimpswarm {

using nlohmann::json;

void RunLog::append(TickRecord record) {
    if (static_cast<int>(record.blimps.size()) != meta_.blimps) {
        throw InvalidArgument("RunLog: record has " + std::to_string(record.blimps.size()) +
                              " blimps, expected " + std::to_string(meta_.blimps));
    }
    if (!ticks_.empty() && (record.tick <= ticks_.back().tick || !(record.t > ticks_.back().t))) {
        throw InvalidArgument("RunLog: ticks must strictly increase");
    }
    ticks_.push_back(std::move(record));
}

void RunLog::add_event(RunEvent ev) { events_.push_back(std::move(ev)); }

std::vector<RunEvent> RunLog::events_of(const std::string &kind) const {
    std::vector<RunEvent> out;
    for (const RunEvent &ev : events_) {
        if (ev.kind == kind) out.push_back(ev);
    }
    return out;
}

namespace runlog {

using detail::format_double;

namespace {

std::string opt(const std::optional<double> &v) { return v ? format_double(*v) : std::string(); }

json meta_to_json(const RunMeta &m) {
    return json{{"blimps", m.blimps},
                {"dt", m.dt},
                {"seed", m.seed},
                {"policy", to_string(m.policy)},
                {"d_min", m.d_min},
                {"d_max", m.d_max},
                {"lost_grace_ticks", m.lost_grace_ticks},
                {"search_timeout_ticks", m.search_timeout_ticks},
                {"goal", {m.goal.x, m.goal.y, m.goal.z}},
                {"goal_radius", m.goal_radius}};
}

RunMeta meta_from_json(const json &j) {
    RunMeta m;
    m.blimps = j.at("blimps").get<int>();
    m.dt = j.at("dt").get<double>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.policy = policy_from_string(j.at("policy").get<std::string>());
    m.d_min = j.at("d_min").get<double>();
    m.d_max = j.at("d_max").get<double>();
    m.lost_grace_ticks = j.at("lost_grace_ticks").get<std::int64_t>();
    m.search_timeout_ticks = j.at("search_timeout_ticks").get<std::int64_t>();
    const auto &g = j.at("goal");
    m.goal = {g.at(0).get<double>(), g.at(1).get<double>(), g.at(2).get<double>()};
    m.goal_radius = j.at("goal_radius").get<double>();
    return m;
}

[[noreturn]] void csv_error(std::size_t line, const std::string &message) {
    throw IoError("run.csv line " + std::to_string(line) + ": " + message);
}

double csv_number(const std::string &field, std::size_t line, const char *name) {
    const auto v = detail::parse_double(field);
    if (!v) csv_error(line, std::string("bad ") + name + " '" + field + "'");
    return *v;
}

std::optional<double> csv_optional(const std::string &field, std::size_t line, const char *name) {
    if (field.empty()) return std::nullopt;
    return csv_number(field, line, name);
}

} // namespace

std::string to_csv(const RunLog &log) {
    std::string out = kCsvHeader;
    out += '\n';
    for (const TickRecord &rec : log.ticks()) {
        const std::string prefix = std::to_string(rec.tick) + ',' + format_double(rec.t) + ',';
        for (const BlimpRecord &b : rec.blimps) {
            const BlimpState &s = b.state;
            out += prefix;
            out += std::to_string(s.id.index);
            for (double v : {s.pose.position.x, s.pose.position.y, s.pose.position.z, s.pose.pitch,
                             s.pose.yaw, s.v_h}) {
                out += ',';
                out += format_double(v);
            }
            out += ',';
            out += to_string(s.role);
            out += ',' + opt(b.d_hat) + ',' + opt(b.psi_hat) + ',';
            if (b.visible) out += *b.visible ? '1' : '0';
            out += '\n';
        }
    }
    return out;
}

std::string events_to_json(const RunLog &log) {
    json events = json::array();
    for (const RunEvent &ev : log.events()) {
        json e{{"tick", ev.tick}, {"kind", ev.kind}};
        if (ev.blimp) e["blimp"] = *ev.blimp;
        if (ev.other) e["other"] = *ev.other;
        if (ev.kind == event::kSearchStart) e["sanctioned"] = ev.sanctioned;
        if (!ev.detail.empty()) e["detail"] = ev.detail;
        events.push_back(std::move(e));
    }
    json doc{{"version", 1},
             {"meta", meta_to_json(log.meta())},
             {"ticks", log.ticks().size()},
             {"events", std::move(events)}};
    return doc.dump(2) + "\n";
}

void export_runlog(const RunLog &log, const std::filesystem::path &dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
    const auto write = [](const std::filesystem::path &path, const std::string &text) {
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write " + path.string());
        out << text;
        out.flush();
        if (!out) throw IoError("write failed for " + path.string());
    };
    write(dir / "run.csv", to_csv(log));
    write(dir / "events.json", events_to_json(log));
}

RunLog parse_runlog(const std::string &csv, const std::string &events_json) {
    json doc;
    try {
        doc = json::parse(events_json);
    } catch (const json::parse_error &e) {
        throw IoError(std::string("events.json: ") + e.what());
    }

    RunMeta meta;
    std::size_t expected_ticks = 0;
    std::vector<RunEvent> events;
    try {
        if (doc.at("version").get<int>() != 1) throw IoError("events.json: unsupported version");
        meta = meta_from_json(doc.at("meta"));
        expected_ticks = doc.at("ticks").get<std::size_t>();
        for (const json &e : doc.at("events")) {
            RunEvent ev;
            ev.tick = e.at("tick").get<std::int64_t>();
            ev.kind = e.at("kind").get<std::string>();
            if (e.contains("blimp")) ev.blimp = e["blimp"].get<int>();
            if (e.contains("other")) ev.other = e["other"].get<int>();
            if (e.contains("sanctioned")) ev.sanctioned = e["sanctioned"].get<bool>();
            if (e.contains("detail")) ev.detail = e["detail"].get<std::string>();
            events.push_back(std::move(ev));
        }
    } catch (const json::exception &e) {
        throw IoError(std::string("events.json: ") + e.what());
    } catch (const InvalidArgument &e) {
        throw IoError(std::string("events.json: ") + e.what());
    }
    if (meta.blimps < 1) throw IoError("events.json: meta.blimps must be positive");

    RunLog log(meta);
    for (RunEvent &ev : events) log.add_event(std::move(ev));

    std::istringstream in(csv);
    std::string line;
    std::size_t line_no = 1;
    if (!std::getline(in, line)) throw IoError("run.csv: missing header");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kCsvHeader) throw IoError("run.csv line 1: unexpected header");

    TickRecord current;
    bool open = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) csv_error(line_no, "empty row");

        std::vector<std::string> f;
        std::string cell;
        std::istringstream row(line);
        while (std::getline(row, cell, ',')) f.push_back(cell);
        if (line.back() == ',') f.emplace_back();
        if (f.size() != 13) csv_error(line_no, "expected 13 fields, got " + std::to_string(f.size()));

        const auto tick = detail::parse_integer(f[0]);
        const auto id = detail::parse_integer(f[2]);
        if (!tick) csv_error(line_no, "bad tick '" + f[0] + "'");
        if (!id || *id < 0 || *id >= meta.blimps) csv_error(line_no, "bad id '" + f[2] + "'");

        if (!open || *tick != current.tick) {
            if (open) {
                if (static_cast<int>(current.blimps.size()) != meta.blimps) {
                    csv_error(line_no, "incomplete tick " + std::to_string(current.tick));
                }
                try {
                    log.append(std::move(current));
                } catch (const InvalidArgument &e) {
                    csv_error(line_no, e.what());
                }
            }
            current = TickRecord{};
            current.tick = *tick;
            current.t = csv_number(f[1], line_no, "t");
            open = true;
        }
        if (*id != static_cast<long long>(current.blimps.size())) {
            csv_error(line_no, "rows of a tick must list ids in order");
        }

        BlimpRecord b;
        b.state.id = BlimpId{static_cast<int>(*id)};
        b.state.pose.position = {csv_number(f[3], line_no, "x"), csv_number(f[4], line_no, "y"),
                                 csv_number(f[5], line_no, "z")};
        b.state.pose.pitch = csv_number(f[6], line_no, "theta");
        b.state.pose.yaw = csv_number(f[7], line_no, "psi");
        b.state.v_h = csv_number(f[8], line_no, "v_h");
        try {
            b.state.role = role_from_string(f[9]);
        } catch (const InvalidArgument &) {
            csv_error(line_no, "bad role '" + f[9] + "'");
        }
        b.d_hat = csv_optional(f[10], line_no, "d_hat");
        b.psi_hat = csv_optional(f[11], line_no, "psi_hat");
        if (f[12] == "1") {
            b.visible = true;
        } else if (f[12] == "0") {
            b.visible = false;
        } else if (!f[12].empty()) {
            csv_error(line_no, "bad visible flag '" + f[12] + "'");
        }
        current.blimps.push_back(std::move(b));
    }
    if (open) {
        if (static_cast<int>(current.blimps.size()) != meta.blimps) {
            csv_error(line_no, "truncated: incomplete tick " + std::to_string(current.tick));
        }
        try {
            log.append(std::move(current));
        } catch (const InvalidArgument &e) {
            csv_error(line_no, e.what());
        }
    }
    if (log.ticks().size() != expected_ticks) {
        throw IoError("run.csv: truncated, " + std::to_string(log.ticks().size()) + " of " +
                      std::to_string(expected_ticks) + " ticks present");
    }
    return log;
}

RunLog load_runlog(const std::filesystem::path &dir) {
    const auto slurp = [](const std::filesystem::path &path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw IoError("cannot open " + path.string());
        std::stringstream buf;
        buf << in.rdbuf();
        return buf.str();
    };
    return parse_runlog(slurp(dir / "run.csv"), slurp(dir / "events.json"));
}

} // namespace runlog
} // namespace blimpswarm
