#pragma once

// Formation metrics computed from a run log. Only columns that are written to
// run.csv and events.json are used, so exported logs give identical results.

#include "blimpswarm/runlog.hpp"

#include <optional>
#include <string>
#include <vector>

namespace blimpswarm {

struct SegmentMetrics {
    std::string label; // "start", "turn1", "turn2", ...
    std::int64_t first_tick{0};
    std::int64_t last_tick{0};
    double average_area{0.0};
    double area_rmse{0.0}; // against the full-run mean
};

struct SuccessReport {
    bool ok{false};
    std::string reason; // first violated condition, empty on success
};

struct RunMetrics {
    bool completed{false};
    std::string failure;
    std::size_t samples{0};
    bool area_defined{false}; // false for fewer than three blimps or an empty log
    double average_area{0.0};
    double area_rmse{0.0};
    std::vector<SegmentMetrics> segments;
};

namespace metrics {

/// Area of the triangle spanned by the ground-plane projections.
[[nodiscard]] double triangle_area(const Vec3 &p1, const Vec3 &p2, const Vec3 &p3);

/// One area per tick: blimps taken in id order, consecutive triples summed
/// (a single triangle for three blimps). Throws InvalidArgument for N < 3.
[[nodiscard]] std::vector<double> area_series(const RunLog &log);

[[nodiscard]] double mean(const std::vector<double> &series);

/// Root-mean-square deviation from `reference`, or from the series mean when
/// no reference is given. Throws InvalidArgument for an empty series.
[[nodiscard]] double area_rmse(const std::vector<double> &series,
                               std::optional<double> reference = std::nullopt);

/// Run succeeds when the leader reached the goal, no follower was blind to
/// its leader for longer than the grace period, every visible follower kept
/// d_hat inside [d_min, d_max], and every search began at a leader switch and
/// re-acquired within the timeout.
[[nodiscard]] SuccessReport success_check(const RunLog &log);

[[nodiscard]] RunMetrics compute(const RunLog &log);

[[nodiscard]] std::string to_json(const RunMetrics &m);

} // namespace metrics
} // namespace blimpswarm
