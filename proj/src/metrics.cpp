#include "blimpswarm/metrics.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>

namespace blimpswarm::metrics {

double triangle_area(const Vec3 &p1, const Vec3 &p2, const Vec3 &p3) {
    return 0.5 * std::abs((p2.x - p1.x) * (p3.y - p1.y) - (p3.x - p1.x) * (p2.y - p1.y));
}

std::vector<double> area_series(const RunLog &log) {
    const int n = log.meta().blimps;
    if (n < 3) throw InvalidArgument("area_series: needs at least 3 blimps");
    std::vector<double> out;
    out.reserve(log.ticks().size());
    for (const TickRecord &rec : log.ticks()) {
        double area = 0.0;
        for (int k = 0; k + 2 < n; ++k) {
            area += triangle_area(rec.blimps[k].state.pose.position,
                                  rec.blimps[k + 1].state.pose.position,
                                  rec.blimps[k + 2].state.pose.position);
        }
        out.push_back(area);
    }
    return out;
}

double mean(const std::vector<double> &series) {
    if (series.empty()) throw InvalidArgument("mean: empty series");
    double sum = 0.0;
    for (double a : series) sum += a;
    return sum / static_cast<double>(series.size());
}

double area_rmse(const std::vector<double> &series, std::optional<double> reference) {
    if (series.empty()) throw InvalidArgument("area_rmse: empty series");
    const double ref = reference ? *reference : mean(series);
    double sum = 0.0;
    for (double a : series) sum += (a - ref) * (a - ref);
    return std::sqrt(sum / static_cast<double>(series.size()));
}

SuccessReport success_check(const RunLog &log) {
    const RunMeta &m = log.meta();
    if (log.empty()) return {false, "empty log"};

    std::vector<std::int64_t> switch_ticks;
    for (const RunEvent &ev : log.events_of(event::kSwitch)) switch_ticks.push_back(ev.tick);
    const auto is_switch_tick = [&](std::int64_t t) {
        return std::find(switch_ticks.begin(), switch_ticks.end(), t) != switch_ticks.end();
    };

    std::vector<std::int64_t> blind(static_cast<std::size_t>(m.blimps), 0);
    std::vector<std::int64_t> searching(static_cast<std::size_t>(m.blimps), 0);
    for (const TickRecord &rec : log.ticks()) {
        for (const BlimpRecord &b : rec.blimps) {
            const int i = b.state.id.index;
            const std::string who = "blimp " + std::to_string(i) + " at tick " + std::to_string(rec.tick);
            if (b.state.role == Role::Searching) {
                if (searching[i] == 0 && !is_switch_tick(rec.tick)) {
                    return {false, who + ": lost the leader outside a switch"};
                }
                if (++searching[i] > m.search_timeout_ticks) {
                    return {false, who + ": search exceeded the timeout"};
                }
                blind[i] = 0;
                continue;
            }
            searching[i] = 0;
            if (b.state.role != Role::Follower) {
                blind[i] = 0;
                continue;
            }
            if (b.visible.value_or(false)) {
                blind[i] = 0;
                if (!b.d_hat || *b.d_hat < m.d_min || *b.d_hat > m.d_max) {
                    return {false, who + ": distance estimate outside [d_min, d_max]"};
                }
            } else if (++blind[i] > m.lost_grace_ticks) {
                return {false, who + ": blind to the leader beyond the grace period"};
            }
        }
    }
    for (int i = 0; i < m.blimps; ++i) {
        if (searching[i] > 0) return {false, "blimp " + std::to_string(i) + ": search never ended"};
    }
    if (!log.goal_reached()) return {false, "leader did not reach the goal"};
    return {true, ""};
}

RunMetrics compute(const RunLog &log) {
    RunMetrics out;
    out.samples = log.ticks().size();
    const SuccessReport success = success_check(log);
    out.completed = success.ok;
    out.failure = success.reason;
    if (log.empty() || log.meta().blimps < 3) return out;

    const std::vector<double> series = area_series(log);
    out.area_defined = true;
    out.average_area = mean(series);
    out.area_rmse = area_rmse(series, out.average_area);

    std::vector<std::int64_t> cuts;
    for (const RunEvent &ev : log.events_of(event::kWaypoint)) {
        if (ev.detail == "left" || ev.detail == "right") cuts.push_back(ev.tick);
    }
    const auto &ticks = log.ticks();
    std::size_t begin = 0;
    for (std::size_t s = 0; s <= cuts.size(); ++s) {
        std::size_t end = ticks.size();
        if (s < cuts.size()) {
            end = begin;
            while (end < ticks.size() && ticks[end].tick < cuts[s]) ++end;
        }
        if (end > begin) {
            const std::vector<double> part(series.begin() + static_cast<std::ptrdiff_t>(begin),
                                           series.begin() + static_cast<std::ptrdiff_t>(end));
            SegmentMetrics seg;
            seg.label = s == 0 ? "start" : "turn" + std::to_string(s);
            seg.first_tick = ticks[begin].tick;
            seg.last_tick = ticks[end - 1].tick;
            seg.average_area = mean(part);
            seg.area_rmse = area_rmse(part, out.average_area);
            out.segments.push_back(seg);
        }
        begin = end;
    }
    return out;
}

std::string to_json(const RunMetrics &m) {
    nlohmann::json segments = nlohmann::json::array();
    for (const SegmentMetrics &s : m.segments) {
        segments.push_back({{"label", s.label},
                            {"first_tick", s.first_tick},
                            {"last_tick", s.last_tick},
                            {"average_area", s.average_area},
                            {"area_rmse", s.area_rmse}});
    }
    nlohmann::json doc{{"version", 1},
                       {"completed", m.completed},
                       {"failure", m.failure},
                       {"samples", m.samples},
                       {"segments", std::move(segments)}};
    if (m.area_defined) {
        doc["average_area"] = m.average_area;
        doc["area_rmse"] = m.area_rmse;
    } else {
        doc["average_area"] = nullptr;
        doc["area_rmse"] = nullptr;
    }
    return doc.dump(2) + "\n";
}

} // namespace blimpswarm::metrics
