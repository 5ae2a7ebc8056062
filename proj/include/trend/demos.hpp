#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "trend/env.hpp"
#include "trend/sac.hpp"

namespace trend {

// 1-3 successful expert rollouts; immutable after load.
struct DemoSet {
    EnvKind kind = EnvKind::kPointReach;
    std::vector<Episode> trajectories;

    std::size_t step_count() const;
};

// Rolls the scripted expert under distinct reset seeds until n successful
// trajectories exist; failed seeds are resampled with a warning.
DemoSet generate_demos(EnvKind kind, std::size_t n, std::uint64_t seed);

// Versioned text format (trenddemo-v1): env tag, then per-trajectory blocks
// of comma-separated state components followed by action components, blocks
// separated by a blank line. Round-trips bit-exactly.
void save_demos(const DemoSet& demos, const std::string& path);
DemoSet load_demos(const std::string& path);

// Fraction of each policy batch drawn from demonstrations: linear decay from
// `start` to `end` over `horizon_steps`, clamped afterwards.
struct AlphaSchedule {
    double start = 0.50;
    double end = 0.25;
    long horizon_steps = 1;

    double fraction(long t) const;
};

struct BcConfig {
    std::size_t epochs = 500;
    double lr = 1e-3;
    double plateau_rel_tol = 1e-4;  // early stop when no relative improvement...
    std::size_t patience = 50;      // ...for this many consecutive epochs
};

struct BcResult {
    double final_loss = 0.0;
    std::size_t epochs_run = 0;
};

// Mean squared error between the policy's tanh-squashed mean action and the
// expert action; dL/d(log-std head) is zero.
double bc_loss_grad(const ParamSet& policy, const Tensor2& obs, const Tensor2& target_actions, std::size_t act_dim,
                    ParamSet* grads);

// Full-batch Adam on the BC loss over every demo step, with plateau early
// stopping. Replaces unsupervised exploration as the pre-training phase.
BcResult bc_pretrain(ParamSet& policy, const DemoSet& demos, const BcConfig& cfg);

// One combined policy/critic update: ceil(alpha(t) * B) demo steps feed the
// BC term (weighted by lambda_bc), the remaining replay transitions feed the
// usual SAC losses. Demo steps never touch the critics; replay never touches
// the BC term.
SacLosses mixed_policy_update(SacAgent& agent, ReplayBuffer& buffer, const DemoSet& demos, long t, double lambda_bc,
                              const AlphaSchedule& schedule);

}  // namespace trend
