#include "blimpswarm/simulation.hpp"

#include "blimpswarm/control.hpp"
#include "blimpswarm/dynamics.hpp"
#include "blimpswarm/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace blimpswarm {

namespace {

// Stream tags for NoiseSource::derive.
constexpr std::uint64_t kCameraStream = 0xCA3E0000ULL;
constexpr std::uint64_t kSensorStream = 0x5E450000ULL;
constexpr std::uint64_t kDisturbanceStream = 0xD1570000ULL;

RunMeta make_meta(const ScenarioConfig &cfg, const SwarmCoordinator &coord) {
    RunMeta m;
    m.blimps = cfg.blimps;
    m.dt = cfg.plant.dt;
    m.seed = cfg.seed;
    m.policy = cfg.policy;
    m.d_min = cfg.success.d_min;
    m.d_max = cfg.success.d_max;
    m.lost_grace_ticks = coord.lost_grace_ticks();
    m.search_timeout_ticks = coord.search_timeout_ticks();
    m.goal = cfg.path.back().position;
    m.goal_radius = cfg.goal_radius;
    return m;
}

const ScenarioConfig &validated(const ScenarioConfig &cfg) {
    cfg.validate();
    return cfg;
}

} // namespace

const char *to_string(StopReason reason) {
    switch (reason) {
    case StopReason::Running:
        return "running";
    case StopReason::GoalReached:
        return "goal_reached";
    case StopReason::DurationElapsed:
        return "duration_elapsed";
    case StopReason::SearchTimeout:
        return "search_timeout";
    }
    return "unknown";
}

Simulation::Simulation(ScenarioConfig cfg)
    : cfg_(std::move(cfg)),
      coord_(validated(cfg_).blimps, BlimpId{cfg_.initial_leader}, cfg_.coordination, cfg_.seed),
      vis_(cfg_.blimps), log_(make_meta(cfg_, coord_)) {
    total_ticks_ = static_cast<std::int64_t>(std::llround(cfg_.duration / cfg_.plant.dt));
    states_ = scenario::initial_states(cfg_);
    const auto n = static_cast<std::size_t>(cfg_.blimps);
    controllers_.resize(n);
    tracked_.resize(n);
    saw_leader_.assign(n, false);
    for (std::size_t i = 0; i < n; ++i) {
        fusion_.emplace_back(cfg_.fusion_alpha, cfg_.fusion_v_h_clamp);
        camera_rng_.push_back(NoiseSource::derive(cfg_.seed, kCameraStream + i));
        sensor_rng_.push_back(NoiseSource::derive(cfg_.seed, kSensorStream + i));
        disturbance_rng_.push_back(NoiseSource::derive(cfg_.seed, kDisturbanceStream + i));
        ControlDirective d;
        if (states_[i].role == Role::Follower) {
            d.kind = DirectiveKind::Follow;
            d.target = coord_.leader();
        }
        last_delivered_.push_back(d);
    }
    perceive();
}

const Observation &Simulation::observation(BlimpId observer, BlimpId target) const {
    if (observer == target) throw InvalidArgument("observation: a blimp does not observe itself");
    if (observer.index < 0 || observer.index >= size() || target.index < 0 || target.index >= size()) {
        throw InvalidArgument("observation: blimp id out of range");
    }
    return obs_[static_cast<std::size_t>(observer.index) * size() + target.index];
}

std::optional<RelativeEstimate> Simulation::estimate(BlimpId observer, BlimpId target) const {
    const auto *img = std::get_if<ImageObservation>(&observation(observer, target));
    if (!img) return std::nullopt;
    return perception::estimate_relative(*img, cfg_.calibration, cfg_.camera);
}

void Simulation::perceive() {
    const int n = size();
    vis_ = VisibilityGraph(n);
    obs_.assign(static_cast<std::size_t>(n) * n, NotVisible{NotVisibleReason::BehindCamera});
    for (int a = 0; a < n; ++a) {
        for (int b = 0; b < n; ++b) {
            if (a == b) continue;
            Observation o = perception::observe(states_[a], states_[b], states_, cfg_.camera,
                                                cfg_.geometry, cfg_.render, camera_rng_[a]);
            if (std::holds_alternative<ImageObservation>(o)) vis_.add(BlimpId{a}, BlimpId{b});
            obs_[static_cast<std::size_t>(a) * n + b] = o;
        }
    }
}

StopReason Simulation::stop_reason() const {
    if (stop_ != StopReason::Running) return stop_;
    if (tick_ >= total_ticks_) return StopReason::DurationElapsed;
    return StopReason::Running;
}

void Simulation::steer(const SteerInput &input) {
    for (double v : {input.forward, input.yaw, input.vertical}) {
        if (!(v >= -1.0 && v <= 1.0)) throw InvalidArgument("steer: inputs must lie in [-1, 1]");
    }
    steer_ = input;
    steer_until_ = tick_ + std::max<std::int64_t>(
                               1, static_cast<std::int64_t>(std::llround(cfg_.steer_hold / cfg_.plant.dt)));
}

std::optional<SteerInput> Simulation::active_steer() const {
    if (steer_ && tick_ < steer_until_) return steer_;
    return std::nullopt;
}

SwitchVerdict Simulation::select_leader(BlimpId candidate, const std::string &requested_by) {
    if (candidate.index < 0 || candidate.index >= size()) {
        throw InvalidArgument("select_leader: unknown blimp " + std::to_string(candidate.index));
    }
    if (candidate == coord_.leader()) throw InvalidArgument("select_leader: already the leader");
    coord_.set_tick(tick_);
    const BlimpId old = coord_.leader();
    coord_.request_switch(SwitchRequest{requested_by, candidate, tick_});
    const SwitchVerdict verdict = *coord_.resolve_pending(vis_);
    if (!verdict.ok) {
        log_.add_event(RunEvent{tick_, event::kSwitchRejected, candidate.index, old.index, false,
                                verdict.alert ? verdict.alert->message : std::string()});
        return verdict;
    }
    std::string searching;
    for (int i = 0; i < size(); ++i) {
        if (coord_.roles()[i] == Role::Searching) searching += (searching.empty() ? "" : " ") + std::to_string(i);
    }
    log_.add_event(RunEvent{tick_, event::kSwitch, candidate.index, old.index, false,
                            searching.empty() ? std::string() : "searching: " + searching});
    for (int i = 0; i < size(); ++i) {
        if (coord_.roles()[i] == Role::Searching && coord_.search_states().at(BlimpId{i}).sanctioned &&
            coord_.search_states().at(BlimpId{i}).ticks_in_search == 0) {
            log_.add_event(RunEvent{tick_, event::kSearchStart, i, candidate.index, true, ""});
        }
    }
    return verdict;
}

void Simulation::note(RunEvent ev) {
    ev.tick = tick_;
    log_.add_event(std::move(ev));
}

BlimpRecord Simulation::record_for(int i) const {
    BlimpRecord r;
    r.state = states_[i];
    r.state.role = coord_.roles()[i];
    const BlimpId leader = coord_.leader();
    if (i != leader.index) {
        const auto est = estimate(BlimpId{i}, leader);
        r.visible = est.has_value();
        if (est) {
            r.d_hat = est->distance;
            r.psi_hat = est->bearing;
        }
    }
    r.directive = directives_.count(BlimpId{i}) ? directives_.at(BlimpId{i}).kind : DirectiveKind::Hold;
    return r;
}

LiveMetrics Simulation::live_metrics() const {
    LiveMetrics m;
    m.samples = log_.ticks().size();
    if (m.samples == 0 || size() < 3) return m;
    m.current_area = last_area_;
    m.average_area = area_sum_ / static_cast<double>(m.samples);
    m.area_rmse = std::sqrt(std::max(0.0, area_sq_sum_ / static_cast<double>(m.samples) -
                                              m.average_area * m.average_area));
    return m;
}

void Simulation::advance() {
    if (finished()) throw InvalidArgument("advance: simulation already finished");
    const int n = size();
    const double dt = cfg_.plant.dt;
    coord_.set_tick(tick_);

    const BlimpId leader = coord_.leader();
    for (int a = 0; a < n; ++a) {
        for (int b = 0; b < n; ++b) {
            if (a == b) continue;
            if (auto est = estimate(BlimpId{a}, BlimpId{b})) coord_.record_sighting(BlimpId{a}, BlimpId{b}, est->bearing);
        }
    }

    for (int i = 0; i < n; ++i) {
        const bool sees = vis_.has(BlimpId{i}, leader);
        if (coord_.roles()[i] == Role::Follower && saw_leader_[i] && !sees) {
            log_.add_event(RunEvent{tick_, event::kVisibilityLost, i, leader.index, false, ""});
        }
        saw_leader_[i] = sees;
    }

    for (BlimpId lost : coord_.update_tracking(vis_)) {
        log_.add_event(RunEvent{tick_, event::kFormationBreak, lost.index, leader.index, false,
                                "blind for more than the grace period"});
        log_.add_event(RunEvent{tick_, event::kSearchStart, lost.index, leader.index, false, ""});
    }

    const std::vector<Role> before = coord_.roles();
    directives_ = coord_.broadcast_tick(active_steer(), vis_);
    for (int i = 0; i < n; ++i) {
        if (before[i] == Role::Searching && coord_.roles()[i] == Role::Follower) {
            log_.add_event(RunEvent{tick_, event::kAcquired, i, leader.index, false, ""});
        }
    }
    for (const Alert &alert : coord_.take_new_alerts()) {
        if (alert.kind == AlertKind::SearchTimeout) {
            log_.add_event(RunEvent{tick_, event::kSearchTimeout, alert.blimp.index, leader.index,
                                    false, alert.message});
            stop_ = StopReason::SearchTimeout;
        }
    }

    TickRecord rec;
    rec.tick = tick_;
    rec.t = time();
    for (int i = 0; i < n; ++i) rec.blimps.push_back(record_for(i));
    log_.append(std::move(rec));
    if (n >= 3) {
        const TickRecord &last = log_.ticks().back();
        double area = 0.0;
        for (int k = 0; k + 2 < n; ++k) {
            area += metrics::triangle_area(last.blimps[k].state.pose.position,
                                           last.blimps[k + 1].state.pose.position,
                                           last.blimps[k + 2].state.pose.position);
        }
        last_area_ = area;
        area_sum_ += area;
        area_sq_sum_ += area * area;
    }

    const Vec3 goal_offset = states_[leader.index].pose.position - cfg_.path.back().position;
    if (goal_offset.planar_norm() <= cfg_.goal_radius) {
        log_.add_event(RunEvent{tick_, event::kGoalReached, leader.index, std::nullopt, false, ""});
        stop_ = StopReason::GoalReached;
    }
    if (stop_ != StopReason::Running) return;

    std::vector<BlimpState> next(states_.size());
    for (int i = 0; i < n; ++i) {
        const BlimpId id{i};
        const ControlDirective &fresh = directives_.at(id);
        if (fresh.delivered) last_delivered_[i] = fresh;
        const ControlDirective &d = last_delivered_[i];

        BlimpState &s = states_[i];
        s.role = coord_.roles()[i];
        const double altitude = perception::read_altimeter(s, cfg_.noise.altimeter, sensor_rng_[i]);
        const SensorReadings raw = perception::read_imu(s, altitude, cfg_.noise.imu, sensor_rng_[i]);
        const SensorReadings sensors = fusion_[i].update(raw);

        TickOutput out;
        switch (d.kind) {
        case DirectiveKind::Hold:
        case DirectiveKind::Manual:
            out = control::leader_tick(d.kind == DirectiveKind::Manual ? d.steer : SteerInput{}, sensors,
                                       cfg_.setpoints, cfg_.gains, controllers_[i],
                                       cfg_.plant.limits, dt);
            break;
        case DirectiveKind::Follow: {
            if (tracked_[i] != d.target) {
                const PidState height = controllers_[i].height;
                controllers_[i] = ControllerStates{};
                controllers_[i].height = height;
                tracked_[i] = d.target;
            }
            std::optional<RelativeEstimate> est;
            if (d.target != id) est = estimate(id, d.target);
            out = control::follower_tick(est, sensors, cfg_.setpoints, cfg_.gains, controllers_[i],
                                         cfg_.plant.limits, dt);
            break;
        }
        case DirectiveKind::Search:
            out = control::follower_tick(std::nullopt, sensors, cfg_.setpoints, cfg_.gains,
                                         controllers_[i], cfg_.plant.limits, dt, d.yaw_rate);
            break;
        }
        controllers_[i] = out.states;
        next[i] = dynamics::step(s, out.cmd, cfg_.plant);
        next[i] = dynamics::apply_disturbance(next[i], disturbance_rng_[i], cfg_.noise.disturbance, dt);
    }
    states_ = std::move(next);
    ++tick_;
    perceive();
}

} // namespace blimpswarm
