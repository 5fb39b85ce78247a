// blimpsim: headless runs, metrics, batches and the live operator server.
//
// Exit codes: 0 success, 1 configuration or usage error, 2 run failure
// (the formation did not complete the path), 3 I/O error.

#include "blimpswarm/batch.hpp"
#include "blimpswarm/gateway.hpp"
#include "blimpswarm/ws_server.hpp"

#include <CLI11.hpp>
#include <boost/system/system_error.hpp>

#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

using namespace blimpswarm;

namespace {

enum Exit { kOk = 0, kConfig = 1, kRunFailure = 2, kIo = 3 };

std::string read_file(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::filesystem::path &path, const std::string &text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << text;
    out.flush();
    if (!out) throw IoError("write failed for " + path.string());
}

void print_metrics_line(const RunMetrics &m) {
    std::printf("completed=%d", m.completed ? 1 : 0);
    if (m.area_defined) std::printf(" average_area=%.4f area_rmse=%.4f", m.average_area, m.area_rmse);
    std::printf(" samples=%zu", m.samples);
    if (!m.completed) std::printf(" failure=\"%s\"", m.failure.c_str());
    std::printf("\n");
}

gateway::TelemetryServer *g_server = nullptr;

extern "C" void on_signal(int) {
    if (g_server) g_server->stop();
}

struct SimulateArgs {
    std::string scenario;
    std::optional<std::uint64_t> seed;
    std::string policy;
    std::optional<double> duration;
    std::string out;
    std::string replay;
    bool headless{false};
};

int simulate(const SimulateArgs &a) {
    ScenarioConfig cfg = scenario::load_config(a.scenario);
    if (a.seed) cfg.seed = *a.seed;
    if (!a.policy.empty()) cfg.policy = policy_from_string(a.policy);
    if (a.duration) cfg.duration = *a.duration;
    cfg.validate();

    RunResult r;
    if (!a.replay.empty()) {
        gateway::ReplayOperator op(gateway::parse_commands(read_file(a.replay)));
        r = run_scenario(cfg, op);
    } else {
        r = run_scenario(cfg);
    }
    if (!a.out.empty()) {
        runlog::export_runlog(r.log, a.out);
        write_file(std::filesystem::path(a.out) / "metrics.json", metrics::to_json(r.metrics));
    }
    if (!a.headless) {
        for (const RunEvent &ev : r.log.events()) {
            std::printf("t=%8.2f %-16s", static_cast<double>(ev.tick) * cfg.plant.dt, ev.kind.c_str());
            if (ev.blimp) std::printf(" blimp=%d", *ev.blimp);
            if (ev.other) std::printf(" other=%d", *ev.other);
            if (!ev.detail.empty()) std::printf(" %s", ev.detail.c_str());
            std::printf("\n");
        }
        std::printf("stop=%s ", to_string(r.stop));
    }
    print_metrics_line(r.metrics);
    return r.metrics.completed ? kOk : kRunFailure;
}

int metrics_cmd(const std::string &dir) {
    const RunLog log = runlog::load_runlog(dir);
    const RunMetrics m = metrics::compute(log);
    std::cout << metrics::to_json(m);
    return m.completed ? kOk : kRunFailure;
}

int batch_cmd(const std::string &scenario, const std::string &seeds, const std::string &policy,
              const std::string &summary) {
    const ScenarioConfig cfg = scenario::load_config(scenario);
    const auto [first, last] = batch::parse_seed_range(seeds);
    const auto rows = batch::run_batch(cfg, first, last, batch::parse_policies(policy));
    const std::string csv = batch::to_csv(rows);
    if (summary.empty() || summary == "-") {
        std::cout << csv;
    } else {
        write_file(summary, csv);
    }
    for (Policy p : batch::parse_policies(policy)) {
        int n = 0, ok = 0;
        double rmse = 0.0;
        for (const auto &row : rows) {
            if (row.policy != p) continue;
            ++n;
            ok += row.completed ? 1 : 0;
            rmse += row.area_rmse;
        }
        std::fprintf(stderr, "%-9s completed %d/%d mean area_rmse %.4f\n", to_string(p).c_str(), ok, n,
                     n ? rmse / n : 0.0);
    }
    return kOk;
}

struct ServeArgs {
    std::string scenario;
    std::string address{"127.0.0.1"};
    unsigned short port{8765};
    double rate{20.0};
    bool autopilot{false};
    bool exit_when_finished{false};
    std::string out;
};

int serve(const ServeArgs &a) {
    const ScenarioConfig cfg = scenario::load_config(a.scenario);
    std::unique_ptr<Operator> pilot;
    if (a.autopilot) pilot = std::make_unique<WaypointAutopilot>(cfg);
    gateway::Gateway gw(cfg, std::move(pilot));
    gateway::ServerOptions opt;
    opt.address = a.address;
    opt.port = a.port;
    opt.frame_rate = a.rate;
    opt.exit_when_finished = a.exit_when_finished;
    gateway::TelemetryServer server(gw, opt);
    std::fprintf(stderr, "serving ws://%s:%u\n", a.address.c_str(), static_cast<unsigned>(server.port()));
    g_server = &server;
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    server.run();
    g_server = nullptr;
    if (!a.out.empty()) {
        runlog::export_runlog(gw.sim().log(), a.out);
        write_file(std::filesystem::path(a.out) / "commands.json", gateway::commands_to_json(gw.command_log()));
    }
    return kOk;
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"Blimp swarm leader-follower simulator"};
    app.require_subcommand(1);

    SimulateArgs sim;
    auto *s = app.add_subcommand("simulate", "Run one scenario headless");
    s->add_option("--scenario", sim.scenario, "Scenario file")->required();
    s->add_option("--seed", sim.seed, "Override the scenario seed");
    s->add_option("--policy", sim.policy, "switch | no-switch");
    s->add_option("--duration", sim.duration, "Override the duration [s]");
    s->add_option("--out", sim.out, "Directory for run.csv, events.json, metrics.json");
    s->add_option("--replay", sim.replay, "Replay an operator command log instead of the autopilot");
    s->add_flag("--headless", sim.headless, "Only print the metrics line");

    std::string runlog_dir;
    auto *m = app.add_subcommand("metrics", "Recompute metrics from an exported run");
    m->add_option("--runlog", runlog_dir, "Directory holding run.csv and events.json")->required();

    std::string b_scenario, b_seeds = "1..20", b_policy = "both", b_summary;
    auto *b = app.add_subcommand("batch", "Run a seed range under one or both policies");
    b->add_option("--scenario", b_scenario, "Scenario file")->required();
    b->add_option("--seeds", b_seeds, "Seed range a..b");
    b->add_option("--policy", b_policy, "switch | no-switch | both");
    b->add_option("--summary", b_summary, "Output summary.csv (stdout if omitted)");

    ServeArgs srv;
    auto *v = app.add_subcommand("serve", "Live run behind the WebSocket gateway");
    v->add_option("--scenario", srv.scenario, "Scenario file")->required();
    v->add_option("--address", srv.address, "Bind address");
    v->add_option("--port", srv.port, "TCP port (0 picks one)");
    v->add_option("--rate", srv.rate, "Telemetry frames per second");
    v->add_flag("--autopilot", srv.autopilot, "Let the waypoint autopilot fly the leader");
    v->add_flag("--exit-when-finished", srv.exit_when_finished, "Stop serving once the run ends");
    v->add_option("--out", srv.out, "Export the run and the command log here on exit");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp &e) {
        return app.exit(e);
    } catch (const CLI::ParseError &e) {
        app.exit(e);
        return kConfig;
    }

    try {
        if (*s) return simulate(sim);
        if (*m) return metrics_cmd(runlog_dir);
        if (*b) return batch_cmd(b_scenario, b_seeds, b_policy, b_summary);
        if (*v) return serve(srv);
    } catch (const ConfigError &e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kConfig;
    } catch (const IoError &e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kIo;
    } catch (const std::filesystem::filesystem_error &e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kIo;
    } catch (const boost::system::system_error &e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kIo;
    } catch (const Error &e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kConfig;
    }
    return kConfig;
}
