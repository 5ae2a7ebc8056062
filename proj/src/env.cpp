#include "trend/env.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "trend/errors.hpp"

namespace trend {

namespace {

// Spawn regions. Agent and objective regions are disjoint in x by
// construction, so reset can never place the agent on the objective.
constexpr double kAgentX0 = -0.9, kAgentX1 = -0.1, kAgentY0 = -0.8, kAgentY1 = 0.8;
constexpr double kGoalX0 = 0.1, kGoalX1 = 0.9, kGoalY0 = -0.8, kGoalY1 = 0.8;
constexpr double kHandleX0 = 0.1, kHandleX1 = 0.5, kHandleY0 = -0.6, kHandleY1 = 0.6;
constexpr double kTargetX0 = 0.6, kTargetX1 = 0.9, kTargetY0 = -0.6, kTargetY1 = 0.6;

double clip(double v, double lo, double hi) { return std::min(std::max(v, lo), hi); }

double dist(const Vec2& a, const Vec2& b) { return std::hypot(a.x - b.x, a.y - b.y); }

Vec2 draw_in(std::mt19937_64& rng, double x0, double x1, double y0, double y1) {
    std::uniform_real_distribution<double> dx(x0, x1);
    std::uniform_real_distribution<double> dy(y0, y1);
    Vec2 v;
    v.x = dx(rng);
    v.y = dy(rng);
    return v;
}

Vec2 steer_towards(const Vec2& from, const Vec2& to) {
    Vec2 a;
    a.x = clip(4.0 * (to.x - from.x), -1.0, 1.0);
    a.y = clip(4.0 * (to.y - from.y), -1.0, 1.0);
    return a;
}

}  // namespace

EnvState env_reset(EnvKind kind, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    EnvState s;
    s.kind = kind;
    s.t = 0;
    s.agent = draw_in(rng, kAgentX0, kAgentX1, kAgentY0, kAgentY1);
    if (kind == EnvKind::kPointReach) {
        s.goal = draw_in(rng, kGoalX0, kGoalX1, kGoalY0, kGoalY1);
    } else {
        s.handle = draw_in(rng, kHandleX0, kHandleX1, kHandleY0, kHandleY1);
        s.target = draw_in(rng, kTargetX0, kTargetX1, kTargetY0, kTargetY1);
        s.grasped = false;
    }
    return s;
}

StepResult env_step(const EnvState& state, const Action& action) {
    if (!std::isfinite(action[0]) || !std::isfinite(action[1]))
        throw NumericError("env_step: non-finite action component");

    StepResult r;
    r.next = state;
    r.next.agent.x = clip(state.agent.x + kStepGain * action[0], -kWorkspaceLimit, kWorkspaceLimit);
    r.next.agent.y = clip(state.agent.y + kStepGain * action[1], -kWorkspaceLimit, kWorkspaceLimit);
    r.next.t = state.t + 1;

    if (state.kind == EnvKind::kPointReach) {
        const double d = dist(r.next.agent, state.goal);
        r.true_reward = -d;
        r.success = d < kSuccessRadius;
    } else {
        bool grasped = state.grasped || dist(r.next.agent, state.handle) < kGraspRadius;
        r.next.grasped = grasped;
        if (grasped) r.next.handle = r.next.agent;  // handle tracks the agent once grasped
        if (grasped) {
            const double d = dist(r.next.handle, state.target);
            r.true_reward = -d + 1.0;
            r.success = d < kSuccessRadius;
        } else {
            r.true_reward = -dist(r.next.agent, r.next.handle);
            r.success = false;
        }
    }
    r.done = r.success || r.next.t >= kEpisodeLen;
    return r;
}

Action expert_action(EnvKind kind, const EnvState& state) {
    Vec2 a;
    if (kind == EnvKind::kPointReach) {
        a = steer_towards(state.agent, state.goal);
    } else {
        a = state.grasped ? steer_towards(state.agent, state.target) : steer_towards(state.agent, state.handle);
    }
    return {a.x, a.y};
}

double oracle_return(const Segment& segment) {
    double sum = 0.0;
    EnvState s = segment.states.front();
    for (std::size_t i = 0; i < segment.actions.size(); ++i) {
        StepResult r = env_step(s, segment.actions[i]);
        sum += r.true_reward;
        s = r.next;
    }
    return sum;
}

Segment make_segment(const Episode& episode, std::size_t start, std::size_t len) {
    if (start + len > episode.length()) throw std::invalid_argument("make_segment: window out of range");
    Segment seg;
    seg.states.assign(episode.states.begin() + start, episode.states.begin() + start + len);
    seg.actions.assign(episode.actions.begin() + start, episode.actions.begin() + start + len);
    seg.oracle_return = 0.0;
    for (std::size_t i = 0; i < len; ++i) seg.oracle_return += episode.true_rewards[start + i];
    return seg;
}

std::size_t obs_dim(EnvKind kind) { return kind == EnvKind::kPointReach ? 2u : 5u; }

std::vector<double> encode_obs(const EnvState& state) {
    if (state.kind == EnvKind::kPointReach) {
        return {state.goal.x - state.agent.x, state.goal.y - state.agent.y};
    }
    return {state.handle.x - state.agent.x, state.handle.y - state.agent.y, state.grasped ? 1.0 : 0.0,
            state.target.x - state.handle.x, state.target.y - state.handle.y};
}

std::size_t state_dim(EnvKind kind) { return kind == EnvKind::kPointReach ? 4u : 7u; }

std::vector<double> state_to_components(const EnvState& state) {
    if (state.kind == EnvKind::kPointReach) {
        return {state.agent.x, state.agent.y, state.goal.x, state.goal.y};
    }
    return {state.agent.x, state.agent.y, state.handle.x, state.handle.y, state.grasped ? 1.0 : 0.0,
            state.target.x, state.target.y};
}

EnvState state_from_components(EnvKind kind, std::span<const double> comps, int t) {
    if (comps.size() != state_dim(kind)) throw std::invalid_argument("state_from_components: wrong component count");
    EnvState s;
    s.kind = kind;
    s.t = t;
    s.agent = {comps[0], comps[1]};
    if (kind == EnvKind::kPointReach) {
        s.goal = {comps[2], comps[3]};
    } else {
        s.handle = {comps[2], comps[3]};
        s.grasped = comps[4] != 0.0;
        s.target = {comps[5], comps[6]};
    }
    return s;
}

const char* env_kind_name(EnvKind kind) {
    return kind == EnvKind::kPointReach ? "point_reach" : "two_phase_pull";
}

EnvKind env_kind_from_name(const std::string& name) {
    if (name == "point_reach") return EnvKind::kPointReach;
    if (name == "two_phase_pull") return EnvKind::kTwoPhasePull;
    throw ConfigError("unknown env kind: '" + name + "' (expected point_reach or two_phase_pull)");
}

}  // namespace trend
