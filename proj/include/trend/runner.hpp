#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "trend/config.hpp"
#include "trend/metrics.hpp"
#include "trend/sac.hpp"
#include "trend/triteach.hpp"

namespace trend {

// Optional instrumentation; selection_sink receives every SelectionReport of
// every reward session (used by the skip audit).
struct RunHooks {
    std::vector<SelectionReport>* selection_sink = nullptr;
};

struct RunResult {
    std::vector<MetricsRow> rows;
    std::vector<SessionStats> sessions;
    double final_success = 0.0;
    double final_return = 0.0;
    std::size_t feedback_used = 0;
    double dataset_clean_ratio = 0.0;
    std::size_t dataset_size = 0;
    std::size_t skipped_pairs = 0;
};

struct EvalResult {
    double success_rate = 0.0;
    double mean_return = 0.0;
};

// Deterministic mean-action evaluation over fresh episodes.
EvalResult evaluate_policy(SacAgent& agent, EnvKind kind, std::size_t episodes, std::uint64_t seed_base);

// Full training pipeline: optional BC pretrain, online collection, periodic
// query + reward-update + relabel sessions, policy updates, periodic eval.
// Writes <out_dir>/metrics.csv and <out_dir>/checkpoint.txt when out_dir is
// non-empty. Deterministic in (config, seed).
RunResult run_experiment(const RunConfig& cfg, const std::string& out_dir, const RunHooks* hooks = nullptr);

struct SweepRun {
    std::uint64_t seed = 0;
    RunResult result;
};

struct SweepResult {
    std::vector<SweepRun> runs;
    double mean_final_success = 0.0;
    double std_final_success = 0.0;
    double mean_final_return = 0.0;
    double std_final_return = 0.0;
};

// Independent runs of one config across seeds (optionally on worker threads;
// runs share nothing). Writes per-seed metrics under <out_dir>/seed_<n>/ and
// an aggregate <out_dir>/summary.csv.
SweepResult run_sweep(const RunConfig& base, const std::vector<std::uint64_t>& seeds, const std::string& out_dir,
                      std::size_t jobs = 1);

void save_checkpoint(const std::string& path, const SacAgent& agent, const RewardEnsemble& ensemble);

}  // namespace trend
