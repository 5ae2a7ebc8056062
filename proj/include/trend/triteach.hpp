#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "trend/reward.hpp"

namespace trend {

// Which member trains on each teacher's small-loss selection. The cyclic map
// is a fixed-point-free 3-cycle: model 1 selects for 2, 2 for 3, 3 for 1.
struct TeachSchedule {
    std::array<std::size_t, RewardEnsemble::kMembers> student_of{};

    static TeachSchedule cyclic() { return {{1, 2, 0}}; }
    static TeachSchedule self_teach() { return {{0, 1, 2}}; }
    bool operator==(const TeachSchedule&) const = default;
};

struct MemberSelection {
    std::vector<std::size_t> selected;  // global dataset indices, ascending
    std::size_t clean_count = 0;        // from hidden clean labels; metrics only
    double mean_selection_loss = 0.0;   // mean per-sample loss over the member's view
};

struct SelectionReport {
    std::array<MemberSelection, RewardEnsemble::kMembers> by_teacher;
    std::size_t batch_size = 0;
    double gamma_rate = 0.0;
};

// Per-sample cross-entropy losses of one member over a view of the dataset.
// Pure evaluation; no parameters change.
std::vector<double> per_sample_losses(const ParamSet& member, const PrefDataset& data,
                                      std::span<const std::size_t> view);

// Indices of the ceil(gamma_rate * N) smallest losses, ties broken by lower
// index; this set minimizes the subset mean among all subsets of at least
// that size. Throws ConfigError for gamma_rate outside (0, 1].
std::vector<std::size_t> select_small_loss(std::span<const double> losses, double gamma_rate);

// One peer-teaching update: every teacher ranks its own view of the batch
// with pre-update parameters, then each student takes one Adam step on the
// mean loss of the pairs its teacher selected. views[j] holds the dataset
// indices member j sees this step (per-member batch permutations).
SelectionReport teach_step(RewardEnsemble& ensemble, const PrefDataset& data,
                           const std::array<std::vector<std::size_t>, RewardEnsemble::kMembers>& views,
                           double gamma_rate, const TeachSchedule& schedule);

// Convenience wrappers with a shared view for all members.
SelectionReport tri_teach_step(RewardEnsemble& ensemble, const PrefDataset& data,
                               std::span<const std::size_t> batch, double gamma_rate);
SelectionReport self_teach_step(RewardEnsemble& ensemble, const PrefDataset& data,
                                std::span<const std::size_t> batch, double gamma_rate);

struct RewardTrainConfig {
    double gamma_rate = 0.6;
    std::size_t epochs = 50;
    std::size_t batch_size = 32;
    bool fresh_selection_per_batch = true;  // false: one selection per session
};

struct SessionStats {
    std::array<double, RewardEnsemble::kMembers> selected_clean_ratio{};  // mean over steps
    std::array<double, RewardEnsemble::kMembers> mean_loss{};
    std::size_t steps = 0;
};

// One reward-update session: `epochs` passes over the trainable pairs, each
// member walking its own seeded shuffle, teaching per mini-batch slot.
SessionStats run_reward_session(RewardEnsemble& ensemble, const PrefDataset& data, const RewardTrainConfig& cfg,
                                const TeachSchedule& schedule, std::uint64_t session_index,
                                std::vector<SelectionReport>* report_sink = nullptr);

}  // namespace trend
