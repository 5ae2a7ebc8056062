#include "trend/triteach.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "trend/errors.hpp"
#include "trend/rng.hpp"

namespace trend {

std::vector<double> per_sample_losses(const ParamSet& member, const PrefDataset& data,
                                      std::span<const std::size_t> view) {
    std::vector<const Tensor2*> blocks;
    blocks.reserve(2 * view.size());
    for (std::size_t g : view) {
        blocks.push_back(&data.feats0(g));
        blocks.push_back(&data.feats1(g));
    }
    const std::vector<double> sums = PackedSegments::pack(blocks).sums(member);
    std::vector<double> losses(view.size());
    for (std::size_t i = 0; i < view.size(); ++i) {
        const double p = stable_sigmoid(sums[2 * i] - sums[2 * i + 1]);
        losses[i] = pair_loss_from_prob(p, data.pair(view[i]).label);
    }
    return losses;
}

std::vector<std::size_t> select_small_loss(std::span<const double> losses, double gamma_rate) {
    if (!(gamma_rate > 0.0) || gamma_rate > 1.0)
        throw ConfigError("select_small_loss: gamma_rate must be in (0, 1]");
    if (losses.empty()) throw std::invalid_argument("select_small_loss: empty loss vector");
    const std::size_t n = losses.size();
    // Guard against fp noise in gamma*n landing a hair above an integer.
    std::size_t m = static_cast<std::size_t>(std::ceil(gamma_rate * static_cast<double>(n) - 1e-9));
    m = std::clamp<std::size_t>(m, 1, n);

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (losses[a] != losses[b]) return losses[a] < losses[b];
        return a < b;
    });
    order.resize(m);
    std::sort(order.begin(), order.end());
    return order;
}

namespace {

// Gradient of the mean pair loss over `selected` pairs w.r.t. one member.
// Per pair, d(loss)/d(return margin) = p - y(0); each per-step reward of
// segment 0 receives that value, each of segment 1 its negation.
ParamSet selected_pairs_grad(const ParamSet& member, const PrefDataset& data,
                             std::span<const std::size_t> selected) {
    std::size_t total_rows = 0;
    for (std::size_t g : selected) total_rows += data.feats0(g).rows + data.feats1(g).rows;

    const std::size_t width = data.feats0(selected.front()).cols;
    Tensor2 inputs(total_rows, width);
    std::size_t at = 0;
    for (std::size_t g : selected) {
        const Tensor2& f0 = data.feats0(g);
        const Tensor2& f1 = data.feats1(g);
        std::copy(f0.data.begin(), f0.data.end(), inputs.data.begin() + at * width);
        at += f0.rows;
        std::copy(f1.data.begin(), f1.data.end(), inputs.data.begin() + at * width);
        at += f1.rows;
    }

    std::vector<Tensor2> trace = mlp_forward_trace(member, inputs);
    const Tensor2& out = trace.back();

    const double inv_m = 1.0 / static_cast<double>(selected.size());
    Tensor2 upstream(total_rows, 1);
    at = 0;
    for (std::size_t g : selected) {
        const std::size_t h0 = data.feats0(g).rows;
        const std::size_t h1 = data.feats1(g).rows;
        double sum0 = 0.0, sum1 = 0.0;
        for (std::size_t r = 0; r < h0; ++r) sum0 += out.at(at + r, 0);
        for (std::size_t r = 0; r < h1; ++r) sum1 += out.at(at + h0 + r, 0);
        const double p = stable_sigmoid(sum0 - sum1);
        const double e = (p - label_y0(data.pair(g).label)) * inv_m;
        for (std::size_t r = 0; r < h0; ++r) upstream.at(at + r, 0) = e;
        for (std::size_t r = 0; r < h1; ++r) upstream.at(at + h0 + r, 0) = -e;
        at += h0 + h1;
    }
    return mlp_backward_from_trace(member, trace, upstream);
}

}  // namespace

SelectionReport teach_step(RewardEnsemble& ensemble, const PrefDataset& data,
                           const std::array<std::vector<std::size_t>, RewardEnsemble::kMembers>& views,
                           double gamma_rate, const TeachSchedule& schedule) {
    constexpr std::size_t kM = RewardEnsemble::kMembers;
    for (const auto& v : views) {
        if (v.empty()) throw std::invalid_argument("teach_step: empty batch view");
    }

    SelectionReport report;
    report.batch_size = views[0].size();
    report.gamma_rate = gamma_rate;

    // All selections are made with pre-update parameters before any student
    // moves (simultaneous semantics; students are pairwise distinct).
    std::array<std::vector<std::size_t>, kM> selections;
    for (std::size_t j = 0; j < kM; ++j) {
        const std::vector<double> losses = per_sample_losses(ensemble.members[j], data, views[j]);
        const std::vector<std::size_t> local = select_small_loss(losses, gamma_rate);

        MemberSelection& sel = report.by_teacher[j];
        sel.selected.reserve(local.size());
        for (std::size_t li : local) sel.selected.push_back(views[j][li]);
        std::sort(sel.selected.begin(), sel.selected.end());
        for (std::size_t g : sel.selected) {
            const PreferencePair& p = data.pair(g);
            if (p.label == p.clean_label) ++sel.clean_count;
        }
        sel.mean_selection_loss =
            std::accumulate(losses.begin(), losses.end(), 0.0) / static_cast<double>(losses.size());
        selections[j] = sel.selected;
    }

    for (std::size_t j = 0; j < kM; ++j) {
        const std::size_t k = schedule.student_of[j];
        ParamSet grads = selected_pairs_grad(ensemble.members[k], data, selections[j]);
        adam_step(ensemble.opt[k], ensemble.members[k], grads);
    }
    return report;
}

namespace {

SelectionReport shared_view_step(RewardEnsemble& ensemble, const PrefDataset& data,
                                 std::span<const std::size_t> batch, double gamma_rate,
                                 const TeachSchedule& schedule) {
    std::array<std::vector<std::size_t>, RewardEnsemble::kMembers> views;
    for (auto& v : views) v.assign(batch.begin(), batch.end());
    return teach_step(ensemble, data, views, gamma_rate, schedule);
}

}  // namespace

SelectionReport tri_teach_step(RewardEnsemble& ensemble, const PrefDataset& data,
                               std::span<const std::size_t> batch, double gamma_rate) {
    return shared_view_step(ensemble, data, batch, gamma_rate, TeachSchedule::cyclic());
}

SelectionReport self_teach_step(RewardEnsemble& ensemble, const PrefDataset& data,
                                std::span<const std::size_t> batch, double gamma_rate) {
    return shared_view_step(ensemble, data, batch, gamma_rate, TeachSchedule::self_teach());
}

SessionStats run_reward_session(RewardEnsemble& ensemble, const PrefDataset& data, const RewardTrainConfig& cfg,
                                const TeachSchedule& schedule, std::uint64_t session_index,
                                std::vector<SelectionReport>* report_sink) {
    constexpr std::size_t kM = RewardEnsemble::kMembers;
    const std::vector<std::size_t> trainable = data.trainable_indices();
    if (trainable.empty()) throw std::invalid_argument("run_reward_session: no trainable pairs");
    if (cfg.batch_size == 0) throw ConfigError("reward batch size must be positive");

    SessionStats stats;
    std::array<double, kM> clean_sum{};
    std::array<double, kM> loss_sum{};

    if (cfg.fresh_selection_per_batch) {
        for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
            // Per-member orderings; every member sees a different slicing of
            // the same data ("permuting the input sample orders").
            std::array<std::vector<std::size_t>, kM> perm;
            for (std::size_t j = 0; j < kM; ++j) {
                perm[j] = trainable;
                auto rng = make_rng(derive_seed(ensemble.perm_seeds[j], session_index * 1000003ull + epoch));
                std::shuffle(perm[j].begin(), perm[j].end(), rng);
            }
            const std::size_t n = trainable.size();
            const std::size_t n_batches = (n + cfg.batch_size - 1) / cfg.batch_size;
            for (std::size_t b = 0; b < n_batches; ++b) {
                const std::size_t lo = b * cfg.batch_size;
                const std::size_t hi = std::min(n, lo + cfg.batch_size);
                std::array<std::vector<std::size_t>, kM> views;
                for (std::size_t j = 0; j < kM; ++j)
                    views[j].assign(perm[j].begin() + lo, perm[j].begin() + hi);
                SelectionReport rep = teach_step(ensemble, data, views, cfg.gamma_rate, schedule);
                for (std::size_t j = 0; j < kM; ++j) {
                    const auto& sel = rep.by_teacher[j];
                    clean_sum[j] += sel.selected.empty()
                                        ? 0.0
                                        : static_cast<double>(sel.clean_count) / static_cast<double>(sel.selected.size());
                    loss_sum[j] += sel.mean_selection_loss;
                }
                stats.steps += 1;
                if (report_sink != nullptr) report_sink->push_back(std::move(rep));
            }
        }
    } else {
        // Session-level selection: each teacher ranks the whole trainable set
        // once with pre-session parameters; students sweep that fixed subset
        // for all epochs.
        SelectionReport rep;
        rep.batch_size = trainable.size();
        rep.gamma_rate = cfg.gamma_rate;
        for (std::size_t j = 0; j < kM; ++j) {
            const std::vector<double> losses = per_sample_losses(ensemble.members[j], data, trainable);
            MemberSelection& sel = rep.by_teacher[j];
            for (std::size_t li : select_small_loss(losses, cfg.gamma_rate)) sel.selected.push_back(trainable[li]);
            std::sort(sel.selected.begin(), sel.selected.end());
            for (std::size_t g : sel.selected)
                if (data.pair(g).label == data.pair(g).clean_label) ++sel.clean_count;
            sel.mean_selection_loss =
                std::accumulate(losses.begin(), losses.end(), 0.0) / static_cast<double>(losses.size());
            clean_sum[j] = static_cast<double>(sel.clean_count) / static_cast<double>(sel.selected.size());
            loss_sum[j] = sel.mean_selection_loss;
        }
        stats.steps = 1;
        if (report_sink != nullptr) report_sink->push_back(rep);

        for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
            for (std::size_t j = 0; j < kM; ++j) {
                const std::size_t k = schedule.student_of[j];
                std::vector<std::size_t> order = rep.by_teacher[j].selected;
                auto rng = make_rng(derive_seed(ensemble.perm_seeds[j], session_index * 1000003ull + epoch));
                std::shuffle(order.begin(), order.end(), rng);
                for (std::size_t lo = 0; lo < order.size(); lo += cfg.batch_size) {
                    const std::size_t hi = std::min(order.size(), lo + cfg.batch_size);
                    std::vector<std::size_t> chunk(order.begin() + lo, order.begin() + hi);
                    ParamSet grads = selected_pairs_grad(ensemble.members[k], data, chunk);
                    adam_step(ensemble.opt[k], ensemble.members[k], grads);
                }
            }
        }
    }

    const double denom = stats.steps > 0 ? static_cast<double>(stats.steps) : 1.0;
    for (std::size_t j = 0; j < kM; ++j) {
        stats.selected_clean_ratio[j] = clean_sum[j] / denom;
        stats.mean_loss[j] = loss_sum[j] / denom;
    }
    return stats;
}

}  // namespace trend
