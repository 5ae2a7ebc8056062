#pragma once

#include <cstdint>
#include <string>

#include "trend/env.hpp"
#include "trend/mlp.hpp"

namespace trend {

// Baseline/ablation matrix. Modes only constrain and default the fields
// below; the training loop itself branches on resolved values, never on the
// mode tag, so equal resolved configs produce identical runs.
enum class RunMode { kTrend, kTrendNoDemo, kPebble, kPebbleDemo, kSelfTeach };

enum class TeachKind { kTri, kSelf };
enum class AnnotatorKind { kScripted, kMockVlm };

struct RunConfig {
    // [run]
    EnvKind env = EnvKind::kPointReach;
    RunMode mode = RunMode::kTrend;
    std::uint64_t seed = 1;
    long total_steps = 30000;
    long eval_interval = 2000;
    std::size_t eval_episodes = 20;
    long warmup_steps = 1000;  // random-action steps when no demos are used

    // [noise]
    double epsilon = 0.0;
    double tie_tolerance = 1e-9;
    bool drop_tie_pairs = false;

    // [teach]
    double gamma_rate = 0.6;
    TeachKind schedule = TeachKind::kTri;
    std::size_t reward_epochs = 50;
    std::size_t reward_batch = 32;
    bool fresh_selection = true;

    // [demos]
    std::size_t n_demos = 0;
    std::string demo_file;
    double lambda_bc = 4.0;
    double alpha_start = 0.50;
    double alpha_end = 0.25;
    double alpha_horizon_frac = 0.5;  // fraction of total_steps
    std::size_t bc_epochs = 500;
    double bc_lr = 1e-3;

    // [query]
    std::size_t budget = 1400;
    std::size_t per_session = 20;
    std::size_t candidate_pool = 200;
    long session_interval = 2000;
    AnnotatorKind annotator = AnnotatorKind::kScripted;
    std::string fixture;
    bool count_skips = true;
    std::size_t segment_len = 50;  // H

    // [sac]
    double sac_lr = 3e-4;
    std::size_t sac_batch = 256;
    std::size_t sac_capacity = 100000;
    double alpha_ent = 0.1;
    double discount = 0.99;
    double tau = 0.005;
    long update_every = 1;

    // [nets]
    std::size_t reward_hidden = 64;
    std::size_t reward_layers = 3;
    double reward_lr = 3e-4;
    std::size_t policy_hidden = 64;
    std::size_t policy_layers = 2;
    Activation policy_act = Activation::kTanh;

    void validate() const;  // throws ConfigError
};

// Parses the sectioned key=value format ('#' comments). Unknown sections or
// keys are errors; mode defaults are applied before mode constraints are
// checked, so explicit contradictions are rejected.
RunConfig parse_config_text(const std::string& text);
RunConfig load_config(const std::string& path);

const char* run_mode_name(RunMode mode);

}  // namespace trend
