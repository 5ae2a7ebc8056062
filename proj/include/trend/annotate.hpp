#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "trend/env.hpp"
#include "trend/reward.hpp"

namespace trend {

// Synchronous preference source. nullopt means the annotator abstains
// ("no preference") and the pair must be excluded from reward training.
class Annotator {
  public:
    virtual ~Annotator() = default;
    virtual std::optional<PrefLabel> label(const Segment& seg0, const Segment& seg1) = 0;
};

// Oracle preference from hidden ground-truth returns: first segment wins if
// its return exceeds the other's by more than tie_tolerance.
PrefLabel scripted_label(const Segment& seg0, const Segment& seg1, double tie_tolerance);

// Flips a strict preference with probability epsilon; ties pass through
// untouched and consume no randomness.
PrefLabel corrupt(PrefLabel label, double epsilon, std::mt19937_64& rng);

class NoisyScriptedAnnotator : public Annotator {
  public:
    NoisyScriptedAnnotator(double epsilon, double tie_tolerance, std::uint64_t seed);
    std::optional<PrefLabel> label(const Segment& seg0, const Segment& seg1) override;

  private:
    double epsilon_;
    double tie_tolerance_;
    std::mt19937_64 rng_;
};

enum class VlmResponse { kPrefer0, kPrefer1, kNoPreference };

// Replays recorded VLM-style responses from a fixture file in order.
// Exhausting the fixture is a hard error naming the file.
class MockVlmAnnotator : public Annotator {
  public:
    explicit MockVlmAnnotator(const std::string& fixture_path);
    std::optional<PrefLabel> label(const Segment& seg0, const Segment& seg1) override;
    std::size_t remaining() const { return responses_.size() - cursor_; }

    static std::vector<VlmResponse> parse_fixture(const std::string& path);
    static void write_fixture(const std::string& path, const std::vector<VlmResponse>& responses);

  private:
    std::string path_;
    std::vector<VlmResponse> responses_;
    std::size_t cursor_ = 0;
};

struct QueryBudget {
    std::size_t total = 1400;
    std::size_t used = 0;
    std::size_t per_session = 20;     // M
    std::size_t candidate_pool = 200;  // C
    std::size_t session_interval = 2000;
    bool count_skips = true;  // abstained queries still spend budget by default

    std::size_t remaining() const { return total > used ? total - used : 0; }
};

// Completed episodes kept around as segment-sampling material. Oldest
// episodes are forgotten beyond the cap.
class EpisodeStore {
  public:
    explicit EpisodeStore(std::size_t max_episodes = 512);
    void add(Episode episode);
    std::size_t episode_count() const { return episodes_.size(); }
    std::size_t eligible_count(std::size_t window_len) const;
    // Uniformly random window: uniform over eligible episodes, then uniform
    // over start offsets within the episode.
    Segment sample_window(std::size_t window_len, std::mt19937_64& rng) const;

  private:
    std::deque<Episode> episodes_;
    std::size_t cap_;
};

struct CandidatePair {
    Segment seg0;
    Segment seg1;
};

// Indices of the M candidates whose ensemble preference probabilities have
// the largest population variance; ties broken by candidate index.
std::vector<std::size_t> disagreement_select(const std::vector<CandidatePair>& candidates,
                                             const RewardEnsemble& ensemble, std::size_t m);

struct QuerySessionResult {
    std::size_t queried = 0;
    std::size_t skipped = 0;
    std::size_t appended = 0;
    bool starved = false;  // no eligible episodes or no budget
};

// One feedback round: sample candidate windows, pick the most disputed M,
// ask the annotator, append results (including skips) to the dataset.
QuerySessionResult query_session(const EpisodeStore& store, std::size_t segment_len, Annotator& annotator,
                                 QueryBudget& budget, const RewardEnsemble& ensemble, PrefDataset& dataset,
                                 std::mt19937_64& rng, double tie_tolerance, bool drop_tie_pairs);

// Deterministic candidate stream used by the VLM fixture generator and its
// verification: random-policy rollouts, then uniformly sampled window pairs.
std::vector<CandidatePair> fixture_pair_stream(EnvKind kind, std::uint64_t seed, std::size_t n_pairs,
                                               std::size_t segment_len);

// Emits a fixture whose strict-pair answers disagree with the oracle on
// exactly round(noise_rate * n_strict) pairs; oracle ties become
// no_preference responses. Returns the realized disagreement rate.
double generate_vlm_fixture(const std::string& path, EnvKind kind, std::uint64_t seed, std::size_t n_pairs,
                            double noise_rate, double skip_rate, std::size_t segment_len);

}  // namespace trend
