#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace trend {

// Toy continuous-control tasks standing in for a manipulation difficulty
// ladder: point_reach is the easy single-objective task, two_phase_pull the
// hard two-stage one (reach a handle, then drag it to a target).
enum class EnvKind { kPointReach, kTwoPhasePull };

constexpr int kEpisodeLen = 100;
constexpr int kActionDim = 2;
constexpr double kWorkspaceLimit = 1.2;
constexpr double kStepGain = 0.1;
constexpr double kSuccessRadius = 0.05;
constexpr double kGraspRadius = 0.05;

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

struct EnvState {
    EnvKind kind = EnvKind::kPointReach;
    Vec2 agent;
    Vec2 goal;    // point_reach only
    Vec2 handle;  // two_phase_pull only
    Vec2 target;  // two_phase_pull only
    bool grasped = false;
    int t = 0;
};

struct StepResult {
    EnvState next;
    double true_reward = 0.0;
    bool success = false;
    bool done = false;
};

using Action = std::array<double, kActionDim>;

// Fixed window of H consecutive state-action pairs, plus the hidden sum of
// ground-truth rewards that only the scripted teacher and metrics may read.
struct Segment {
    std::vector<EnvState> states;
    std::vector<Action> actions;
    double oracle_return = 0.0;
};

// One completed rollout; the raw material segments are cut from.
struct Episode {
    std::vector<EnvState> states;       // states[i] is the state the i-th action was taken in
    std::vector<Action> actions;
    std::vector<double> true_rewards;   // true_rewards[i] = reward of step i
    bool success = false;

    std::size_t length() const { return actions.size(); }
};

EnvState env_reset(EnvKind kind, std::uint64_t seed);

// Pure transition function. Throws NumericError on non-finite actions.
StepResult env_step(const EnvState& state, const Action& action);

// Scripted proportional controller used to generate expert demonstrations.
Action expert_action(EnvKind kind, const EnvState& state);

// Recomputes the segment's return by replaying its actions through env_step.
double oracle_return(const Segment& segment);

Segment make_segment(const Episode& episode, std::size_t start, std::size_t len);

// Network-facing observation encoding (relative coordinates).
std::size_t obs_dim(EnvKind kind);
std::vector<double> encode_obs(const EnvState& state);

// Flat serialization of the full state, used by the demo file format and
// replay checks. Round-trips exactly.
std::size_t state_dim(EnvKind kind);
std::vector<double> state_to_components(const EnvState& state);
EnvState state_from_components(EnvKind kind, std::span<const double> comps, int t);

const char* env_kind_name(EnvKind kind);
EnvKind env_kind_from_name(const std::string& name);  // throws ConfigError

}  // namespace trend
