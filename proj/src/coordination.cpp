#include "blimpswarm/coordination.hpp"

#include <algorithm>
#include <limits>

namespace blimpswarm {

VisibilityGraph::VisibilityGraph(int n) : n_(n), adjacency_(static_cast<std::size_t>(n) * n, 0) {
    if (n < 0) throw InvalidArgument("VisibilityGraph: negative size");
}

std::size_t VisibilityGraph::slot(BlimpId observer, BlimpId target) const {
    if (observer.index < 0 || observer.index >= n_ || target.index < 0 || target.index >= n_) {
        throw InvalidArgument("VisibilityGraph: blimp id out of range");
    }
    return static_cast<std::size_t>(observer.index) * n_ + target.index;
}

void VisibilityGraph::add(BlimpId observer, BlimpId target) {
    if (observer == target) throw InvalidArgument("VisibilityGraph: self edge");
    adjacency_[slot(observer, target)] = 1;
}

bool VisibilityGraph::has(BlimpId observer, BlimpId target) const {
    if (observer == target) return false;
    return adjacency_[slot(observer, target)] != 0;
}

std::vector<std::pair<BlimpId, BlimpId>> VisibilityGraph::edges() const {
    std::vector<std::pair<BlimpId, BlimpId>> out;
    for (int a = 0; a < n_; ++a) {
        for (int b = 0; b < n_; ++b) {
            if (has(BlimpId{a}, BlimpId{b})) out.emplace_back(BlimpId{a}, BlimpId{b});
        }
    }
    return out;
}

std::vector<BlimpId> VisibilityGraph::seen_by(BlimpId observer) const {
    std::vector<BlimpId> out;
    for (int b = 0; b < n_; ++b) {
        if (has(observer, BlimpId{b})) out.push_back(BlimpId{b});
    }
    return out;
}

const char *to_string(AlertKind kind) {
    switch (kind) {
    case AlertKind::LeaderSelectionError:
        return "leader_selection_error";
    case AlertKind::FormationBreak:
        return "formation_break";
    case AlertKind::SearchTimeout:
        return "search_timeout";
    }
    return "unknown";
}

const char *to_string(DirectiveKind kind) {
    switch (kind) {
    case DirectiveKind::Hold:
        return "hold";
    case DirectiveKind::Manual:
        return "manual";
    case DirectiveKind::Follow:
        return "follow";
    case DirectiveKind::Search:
        return "search";
    }
    return "unknown";
}

void CoordinatorConfig::validate() const {
    if (!(dt > 0.0)) throw InvalidArgument("coordination: dt must be positive");
    if (!(scan_rate > 0.0)) throw InvalidArgument("coordination: scan_rate must be positive");
    if (!(search_timeout > 0.0)) throw InvalidArgument("coordination: search_timeout must be positive");
    if (!(lost_grace >= 0.0)) throw InvalidArgument("coordination: lost_grace must be non-negative");
    if (!(drop_probability >= 0.0 && drop_probability <= 1.0)) {
        throw InvalidArgument("coordination: drop_probability must be in [0, 1]");
    }
}

namespace coordination {

BlimpId suggest_new_leader(BlimpId current, Turn turn, int n) {
    if (n < 3) throw InvalidArgument("suggest_new_leader: rule needs at least 3 blimps");
    if (current.index < 0 || current.index >= n) throw InvalidArgument("suggest_new_leader: bad id");
    switch (turn) {
    case Turn::Left:
        return BlimpId{(current.index + 1) % n};
    case Turn::Right:
        return BlimpId{(current.index + 2) % n};
    case Turn::None:
        break;
    }
    throw InvalidArgument("suggest_new_leader: turn must be left or right");
}

} // namespace coordination

SwarmCoordinator::SwarmCoordinator(int n, BlimpId leader, CoordinatorConfig config,
                                   std::uint64_t seed)
    : config_(config), roles_(static_cast<std::size_t>(std::max(n, 0)), Role::Follower),
      leader_(leader), blind_ticks_(roles_.size(), 0),
      last_bearing_(roles_.size() * roles_.size(), std::numeric_limits<double>::quiet_NaN()),
      drops_(NoiseSource::derive(seed, 0xB40ADCA5ULL)) {
    if (n < 2) throw InvalidArgument("SwarmCoordinator: a swarm needs at least 2 blimps");
    config_.validate();
    check_id(leader, "leader");
    roles_[leader.index] = Role::Leader;
}

void SwarmCoordinator::check_id(BlimpId id, const char *what) const {
    if (id.index < 0 || id.index >= size()) {
        throw InvalidArgument(std::string("unknown blimp id for ") + what + ": " +
                              std::to_string(id.index));
    }
}

Role SwarmCoordinator::role(BlimpId id) const {
    check_id(id, "role");
    return roles_[id.index];
}

std::int64_t SwarmCoordinator::search_timeout_ticks() const {
    return static_cast<std::int64_t>(std::ceil(config_.search_timeout / config_.dt));
}

std::int64_t SwarmCoordinator::lost_grace_ticks() const {
    return static_cast<std::int64_t>(std::ceil(config_.lost_grace / config_.dt));
}

std::vector<Alert> SwarmCoordinator::take_new_alerts() {
    std::vector<Alert> fresh(alerts_.begin() + static_cast<std::ptrdiff_t>(alerts_taken_),
                             alerts_.end());
    alerts_taken_ = alerts_.size();
    return fresh;
}

void SwarmCoordinator::push_alert(AlertKind kind, BlimpId blimp, std::string message) {
    alerts_.push_back(Alert{kind, blimp, tick_, std::move(message)});
}

void SwarmCoordinator::record_sighting(BlimpId observer, BlimpId target, double bearing) {
    check_id(observer, "sighting observer");
    check_id(target, "sighting target");
    last_bearing_[static_cast<std::size_t>(observer.index) * size() + target.index] = bearing;
}

SwitchVerdict SwarmCoordinator::validate_switch(const VisibilityGraph &vis, BlimpId candidate) {
    check_id(candidate, "switch candidate");
    if (candidate == leader_) throw InvalidArgument("validate_switch: candidate is already the leader");
    if (vis.size() != size()) throw InvalidArgument("validate_switch: graph size mismatch");

    if (vis.mutual(leader_, candidate)) {
        validated_ = std::make_pair(candidate, tick_);
        return {true, std::nullopt};
    }

    std::string message = "leader selection error: blimp " + std::to_string(leader_.index);
    if (!vis.has(leader_, candidate)) {
        message += " cannot see blimp " + std::to_string(candidate.index);
    } else {
        message += " is not seen by blimp " + std::to_string(candidate.index);
    }
    push_alert(AlertKind::LeaderSelectionError, candidate, message);
    validated_.reset();
    return {false, alerts_.back()};
}

SwitchOutcome SwarmCoordinator::execute_switch(const VisibilityGraph &vis, BlimpId candidate) {
    check_id(candidate, "switch candidate");
    if (!validated_ || validated_->first != candidate || validated_->second != tick_) {
        throw InvalidArgument("execute_switch: candidate was not validated in this tick");
    }
    if (!vis.mutual(leader_, candidate)) {
        throw InvalidArgument("execute_switch: graph does not show mutual visibility");
    }
    validated_.reset();

    SwitchOutcome outcome;
    outcome.old_leader = leader_;
    outcome.new_leader = candidate;

    roles_[leader_.index] = Role::Follower;
    roles_[candidate.index] = Role::Leader;
    search_.erase(candidate);
    search_.erase(leader_);
    blind_ticks_[leader_.index] = 0;
    blind_ticks_[candidate.index] = 0;
    outcome.following.push_back(leader_);
    leader_ = candidate;

    for (int i = 0; i < size(); ++i) {
        const BlimpId id{i};
        if (id == outcome.old_leader || id == candidate) continue;
        blind_ticks_[i] = 0;
        if (vis.has(id, candidate)) {
            roles_[i] = Role::Follower;
            search_.erase(id);
            outcome.following.push_back(id);
        } else {
            start_search(id, true);
            outcome.searching.push_back(id);
        }
    }
    std::sort(outcome.following.begin(), outcome.following.end());
    pending_.reset();
    return outcome;
}

void SwarmCoordinator::start_search(BlimpId blimp, bool sanctioned) {
    roles_[blimp.index] = Role::Searching;
    SearchState st;
    st.sanctioned = sanctioned;
    const double last = last_bearing_[static_cast<std::size_t>(blimp.index) * size() + leader_.index];
    // Bearing estimates are positive to the right, i.e. clockwise.
    st.scan_direction = (!std::isnan(last) && last > 0.0) ? -1 : +1;
    search_[blimp] = st;
}

void SwarmCoordinator::request_switch(SwitchRequest request) {
    check_id(request.new_leader, "switch request");
    if (request.new_leader == leader_) {
        throw InvalidArgument("request_switch: candidate is already the leader");
    }
    pending_ = std::move(request);
}

std::optional<SwitchVerdict> SwarmCoordinator::resolve_pending(const VisibilityGraph &vis) {
    if (!pending_) return std::nullopt;
    const BlimpId candidate = pending_->new_leader;
    pending_.reset();
    if (candidate == leader_) return SwitchVerdict{true, std::nullopt};
    SwitchVerdict verdict = validate_switch(vis, candidate);
    if (verdict.ok) execute_switch(vis, candidate);
    return verdict;
}

double SwarmCoordinator::search_tick(BlimpId blimp, const VisibilityGraph &vis, double scan_rate) {
    check_id(blimp, "search");
    if (roles_[blimp.index] != Role::Searching) {
        throw InvalidArgument("search_tick: blimp " + std::to_string(blimp.index) + " is not searching");
    }
    if (vis.has(blimp, leader_)) {
        roles_[blimp.index] = Role::Follower;
        blind_ticks_[blimp.index] = 0;
        search_.erase(blimp);
        return 0.0;
    }
    SearchState &st = search_[blimp];
    ++st.ticks_in_search;
    if (st.ticks_in_search > search_timeout_ticks() && !st.timeout_reported) {
        st.timeout_reported = true;
        push_alert(AlertKind::SearchTimeout, blimp,
                   "blimp " + std::to_string(blimp.index) + " has not re-acquired leader " +
                       std::to_string(leader_.index));
    }
    return st.scan_direction * scan_rate;
}

std::vector<BlimpId> SwarmCoordinator::update_tracking(const VisibilityGraph &vis) {
    std::vector<BlimpId> lost;
    for (int i = 0; i < size(); ++i) {
        const BlimpId id{i};
        if (roles_[i] != Role::Follower) continue;
        if (vis.has(id, leader_)) {
            blind_ticks_[i] = 0;
            continue;
        }
        if (++blind_ticks_[i] > lost_grace_ticks()) {
            blind_ticks_[i] = 0;
            push_alert(AlertKind::FormationBreak, id,
                       "blimp " + std::to_string(i) + " lost sight of leader " +
                           std::to_string(leader_.index));
            start_search(id, false);
            lost.push_back(id);
        }
    }
    return lost;
}

std::map<BlimpId, ControlDirective>
SwarmCoordinator::broadcast_tick(const std::optional<SteerInput> &operator_steer,
                                 const VisibilityGraph &vis) {
    std::map<BlimpId, ControlDirective> out;
    for (int i = 0; i < size(); ++i) {
        const BlimpId id{i};
        ControlDirective d;
        switch (roles_[i]) {
        case Role::Leader:
            d.kind = operator_steer ? DirectiveKind::Manual : DirectiveKind::Hold;
            if (operator_steer) d.steer = *operator_steer;
            break;
        case Role::Follower:
            d.kind = DirectiveKind::Follow;
            d.target = leader_;
            break;
        case Role::Searching:
            d.yaw_rate = search_tick(id, vis, config_.scan_rate);
            if (roles_[i] == Role::Follower) {
                d.kind = DirectiveKind::Follow;
                d.target = leader_;
            } else {
                d.kind = DirectiveKind::Search;
            }
            break;
        }
        d.delivered = !drops_.bernoulli(config_.drop_probability);
        out.emplace(id, d);
    }
    return out;
}

} // namespace blimpswarm
