#pragma once

// Multi-seed runs and the summary.csv table (one row per run).

#include "blimpswarm/autopilot.hpp"

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace blimpswarm::batch {

struct SummaryRow {
    std::uint64_t seed{0};
    Policy policy{Policy::SwitchEnabled};
    bool completed{false};
    bool area_defined{false};
    double average_area{0.0};
    double area_rmse{0.0};
};

inline constexpr const char *kSummaryHeader = "seed,policy,completed,average_area,area_rmse";

/// Parses "a..b" (inclusive) or a single seed.
[[nodiscard]] std::pair<std::uint64_t, std::uint64_t> parse_seed_range(const std::string &text);
/// Parses "switch", "no-switch" or "both".
[[nodiscard]] std::vector<Policy> parse_policies(const std::string &text);

[[nodiscard]] SummaryRow summarize(std::uint64_t seed, Policy policy, const RunMetrics &m);

/// Runs every (policy, seed) pair with the waypoint autopilot, policy-major.
[[nodiscard]] std::vector<SummaryRow> run_batch(const ScenarioConfig &cfg, std::uint64_t first, std::uint64_t last,
                                                const std::vector<Policy> &policies);

[[nodiscard]] std::string to_csv(const std::vector<SummaryRow> &rows);

} // namespace blimpswarm::batch
