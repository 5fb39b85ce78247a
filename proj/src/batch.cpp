#include "blimpswarm/batch.hpp"

#include "numfmt.hpp"

namespace blimpswarm::batch {

std::pair<std::uint64_t, std::uint64_t> parse_seed_range(const std::string &text) {
    const auto dots = text.find("..");
    const auto a = detail::parse_integer(text.substr(0, dots));
    const auto b = dots == std::string::npos ? a : detail::parse_integer(text.substr(dots + 2));
    if (!a || !b || *a < 0 || *b < *a) {
        throw InvalidArgument("seed range '" + text + "': expected a..b with 0 <= a <= b");
    }
    return {static_cast<std::uint64_t>(*a), static_cast<std::uint64_t>(*b)};
}

std::vector<Policy> parse_policies(const std::string &text) {
    if (text == "both") return {Policy::SwitchEnabled, Policy::SwitchDisabled};
    return {policy_from_string(text)};
}

SummaryRow summarize(std::uint64_t seed, Policy policy, const RunMetrics &m) {
    return SummaryRow{seed, policy, m.completed, m.area_defined, m.average_area, m.area_rmse};
}

std::vector<SummaryRow> run_batch(const ScenarioConfig &cfg, std::uint64_t first, std::uint64_t last,
                                  const std::vector<Policy> &policies) {
    if (last < first) throw InvalidArgument("run_batch: empty seed range");
    std::vector<SummaryRow> rows;
    for (Policy policy : policies) {
        for (std::uint64_t seed = first; seed <= last; ++seed) {
            ScenarioConfig run_cfg = cfg;
            run_cfg.seed = seed;
            run_cfg.policy = policy;
            const RunResult r = run_scenario(run_cfg);
            rows.push_back(summarize(seed, policy, r.metrics));
            if (seed == last) break;
        }
    }
    return rows;
}

std::string to_csv(const std::vector<SummaryRow> &rows) {
    std::string out = std::string(kSummaryHeader) + "\n";
    for (const SummaryRow &r : rows) {
        out += std::to_string(r.seed) + "," + to_string(r.policy) + "," + (r.completed ? "1" : "0") + ",";
        if (r.area_defined) {
            out += detail::format_double(r.average_area) + "," + detail::format_double(r.area_rmse);
        } else {
            out += ",";
        }
        out += "\n";
    }
    return out;
}

} // namespace blimpswarm::batch
