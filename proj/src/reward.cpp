#include "trend/reward.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "trend/rng.hpp"

namespace trend {

double label_y0(PrefLabel label) {
    switch (label) {
        case PrefLabel::kFirst: return 1.0;
        case PrefLabel::kSecond: return 0.0;
        case PrefLabel::kTie: return 0.5;
    }
    return 0.5;
}

PrefLabel flip_label(PrefLabel label) {
    if (label == PrefLabel::kFirst) return PrefLabel::kSecond;
    if (label == PrefLabel::kSecond) return PrefLabel::kFirst;
    return PrefLabel::kTie;
}

Tensor2 segment_features(const Segment& segment) {
    const std::size_t h = segment.actions.size();
    if (h == 0 || segment.states.size() != h) throw std::invalid_argument("segment_features: malformed segment");
    const std::size_t od = obs_dim(segment.states.front().kind);
    Tensor2 feats(h, od + kActionDim);
    for (std::size_t i = 0; i < h; ++i) {
        std::vector<double> obs = encode_obs(segment.states[i]);
        std::copy(obs.begin(), obs.end(), feats.row(i).begin());
        feats.at(i, od) = segment.actions[i][0];
        feats.at(i, od + 1) = segment.actions[i][1];
    }
    return feats;
}

void PrefDataset::add(PreferencePair pair) {
    feats0_.push_back(segment_features(pair.seg0));
    feats1_.push_back(segment_features(pair.seg1));
    pairs_.push_back(std::move(pair));
}

std::vector<std::size_t> PrefDataset::trainable_indices() const {
    std::vector<std::size_t> idx;
    idx.reserve(pairs_.size());
    for (std::size_t i = 0; i < pairs_.size(); ++i) {
        if (!pairs_[i].skipped) idx.push_back(i);
    }
    return idx;
}

std::size_t PrefDataset::skipped_count() const {
    std::size_t n = 0;
    for (const auto& p : pairs_)
        if (p.skipped) ++n;
    return n;
}

double PrefDataset::clean_ratio() const {
    std::size_t n = 0, clean = 0;
    for (const auto& p : pairs_) {
        if (p.skipped) continue;
        ++n;
        if (p.label == p.clean_label) ++clean;
    }
    return n == 0 ? 0.0 : static_cast<double>(clean) / static_cast<double>(n);
}

void PrefDataset::scramble_clean_labels_for_test() {
    for (auto& p : pairs_) p.clean_label = flip_label(p.clean_label);
}

RewardEnsemble RewardEnsemble::initialized(EnvKind kind, std::size_t hidden_width, std::size_t hidden_layers,
                                           double lr, std::uint64_t seed) {
    RewardEnsemble e;
    e.spec = MlpSpec::make(obs_dim(kind) + kActionDim, hidden_width, hidden_layers, 1, Activation::kTanh,
                           OutputActivation::kTanh);
    for (std::size_t k = 0; k < kMembers; ++k) {
        e.members[k] = ParamSet::initialized(e.spec, derive_seed(seed, 100 + k));
        e.opt[k] = AdamState::for_params(e.members[k], lr);
        e.perm_seeds[k] = derive_seed(seed, 200 + k);
    }
    return e;
}

double segment_return_sum(const ParamSet& member, const Tensor2& feats) {
    Tensor2 out = mlp_forward_batch(member, feats);
    double sum = 0.0;
    for (double v : out.data) sum += v;
    return sum;
}

double stable_sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

double pref_prob_cached(const ParamSet& member, const Tensor2& feats0, const Tensor2& feats1) {
    return stable_sigmoid(segment_return_sum(member, feats0) - segment_return_sum(member, feats1));
}

double pref_prob(const ParamSet& member, const PreferencePair& pair) {
    return pref_prob_cached(member, segment_features(pair.seg0), segment_features(pair.seg1));
}

double pair_loss_from_prob(double p, PrefLabel label) {
    const double pc = std::clamp(p, 1e-12, 1.0 - 1e-12);
    const double y0 = label_y0(label);
    return -(y0 * std::log(pc) + (1.0 - y0) * std::log(1.0 - pc));
}

double pair_loss(const ParamSet& member, const PreferencePair& pair) {
    return pair_loss_from_prob(pref_prob(member, pair), pair.label);
}

PackedSegments PackedSegments::pack(std::span<const Tensor2* const> blocks) {
    PackedSegments packed;
    if (blocks.empty()) return packed;
    std::size_t total = 0;
    for (const Tensor2* b : blocks) total += b->rows;
    const std::size_t width = blocks.front()->cols;
    packed.rows = Tensor2(total, width);
    packed.offsets.reserve(blocks.size() + 1);
    packed.offsets.push_back(0);
    std::size_t at = 0;
    for (const Tensor2* b : blocks) {
        if (b->cols != width) throw std::invalid_argument("PackedSegments: feature width mismatch");
        std::copy(b->data.begin(), b->data.end(), packed.rows.data.begin() + at * width);
        at += b->rows;
        packed.offsets.push_back(at);
    }
    return packed;
}

std::vector<double> PackedSegments::sums(const ParamSet& member) const {
    const Tensor2 out = mlp_forward_batch(member, rows);
    std::vector<double> sums(segment_count(), 0.0);
    for (std::size_t i = 0; i < sums.size(); ++i) {
        for (std::size_t r = offsets[i]; r < offsets[i + 1]; ++r) sums[i] += out.at(r, 0);
    }
    return sums;
}

double ensemble_reward(const RewardEnsemble& ensemble, std::span<const double> obs, std::span<const double> action) {
    Tensor2 sa(1, obs.size() + action.size());
    std::copy(obs.begin(), obs.end(), sa.data.begin());
    std::copy(action.begin(), action.end(), sa.data.begin() + obs.size());
    double sum = 0.0;
    for (const auto& m : ensemble.members) sum += mlp_forward_batch(m, sa).at(0, 0);
    return sum / static_cast<double>(RewardEnsemble::kMembers);
}

std::vector<double> ensemble_reward_batch(const RewardEnsemble& ensemble, const Tensor2& sa) {
    std::vector<double> out(sa.rows, 0.0);
    for (const auto& m : ensemble.members) {
        Tensor2 v = mlp_forward_batch(m, sa);
        for (std::size_t r = 0; r < sa.rows; ++r) out[r] += v.at(r, 0);
    }
    for (double& v : out) v /= static_cast<double>(RewardEnsemble::kMembers);
    return out;
}

}  // namespace trend
