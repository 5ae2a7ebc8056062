#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "trend/adam.hpp"
#include "trend/env.hpp"
#include "trend/mlp.hpp"
#include "trend/tensor.hpp"

namespace trend {

// Preference over a pair of segments: first preferred, second preferred, or
// indifferent. Skipped queries are represented on the pair, not as a label.
enum class PrefLabel { kFirst, kSecond, kTie };

// The two label components (y(0), y(1)); they always sum to one.
double label_y0(PrefLabel label);
PrefLabel flip_label(PrefLabel label);

struct PreferencePair {
    Segment seg0;
    Segment seg1;
    PrefLabel label = PrefLabel::kTie;        // observed, possibly corrupted
    PrefLabel clean_label = PrefLabel::kTie;  // pre-corruption truth; metrics only
    bool skipped = false;
};

// Per-step network features of one segment: rows of obs(state) || action.
Tensor2 segment_features(const Segment& segment);

// Growable preference dataset with per-pair feature caches so reward training
// does not re-encode segments every epoch.
class PrefDataset {
  public:
    void add(PreferencePair pair);
    std::size_t size() const { return pairs_.size(); }
    const PreferencePair& pair(std::size_t i) const { return pairs_[i]; }
    const Tensor2& feats0(std::size_t i) const { return feats0_[i]; }
    const Tensor2& feats1(std::size_t i) const { return feats1_[i]; }

    std::vector<std::size_t> trainable_indices() const;  // non-skipped pairs
    std::size_t skipped_count() const;
    // Fraction of non-skipped pairs whose observed label matches the clean one.
    double clean_ratio() const;

    // Metrics-only hook used to verify that hidden labels never influence
    // training: remaps every clean_label without touching anything else.
    void scramble_clean_labels_for_test();

  private:
    std::vector<PreferencePair> pairs_;
    std::vector<Tensor2> feats0_;
    std::vector<Tensor2> feats1_;
};

// Three Bradley-Terry reward models over the same architecture, diversified
// by distinct init seeds and per-member batch permutation seeds.
struct RewardEnsemble {
    static constexpr std::size_t kMembers = 3;
    MlpSpec spec;
    std::array<ParamSet, kMembers> members;
    std::array<AdamState, kMembers> opt;
    std::array<std::uint64_t, kMembers> perm_seeds{};

    static RewardEnsemble initialized(EnvKind kind, std::size_t hidden_width, std::size_t hidden_layers, double lr,
                                      std::uint64_t seed);
};

// Sum of predicted per-step rewards over the feature rows of one segment.
double segment_return_sum(const ParamSet& member, const Tensor2& feats);

// P[seg0 > seg1] = sigmoid(sum0 - sum1); the numerically stable form of the
// two-segment softmax over exponentiated return sums.
double pref_prob(const ParamSet& member, const PreferencePair& pair);
double pref_prob_cached(const ParamSet& member, const Tensor2& feats0, const Tensor2& feats1);

// Cross-entropy of the predicted preference against the (possibly soft)
// label; the probability is clamped to [1e-12, 1-1e-12] before the logs.
double pair_loss(const ParamSet& member, const PreferencePair& pair);
double pair_loss_from_prob(double p, PrefLabel label);

double stable_sigmoid(double x);

// Feature rows of many segments stacked into one matrix so a whole batch of
// pairs costs one forward pass per member.
struct PackedSegments {
    Tensor2 rows;
    std::vector<std::size_t> offsets;  // segment i spans [offsets[i], offsets[i+1])

    static PackedSegments pack(std::span<const Tensor2* const> blocks);
    std::size_t segment_count() const { return offsets.empty() ? 0 : offsets.size() - 1; }
    // Per-segment sums of the member's per-step outputs.
    std::vector<double> sums(const ParamSet& member) const;
};

// Mean of the three member predictions for one state-action pair.
double ensemble_reward(const RewardEnsemble& ensemble, std::span<const double> obs, std::span<const double> action);

// Batched variant over rows of obs||action features.
std::vector<double> ensemble_reward_batch(const RewardEnsemble& ensemble, const Tensor2& sa);

}  // namespace trend
