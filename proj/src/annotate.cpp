#include "trend/annotate.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "trend/errors.hpp"
#include "trend/rng.hpp"

namespace trend {

PrefLabel scripted_label(const Segment& seg0, const Segment& seg1, double tie_tolerance) {
    const double margin = seg0.oracle_return - seg1.oracle_return;
    if (margin > tie_tolerance) return PrefLabel::kFirst;
    if (margin < -tie_tolerance) return PrefLabel::kSecond;
    return PrefLabel::kTie;
}

PrefLabel corrupt(PrefLabel label, double epsilon, std::mt19937_64& rng) {
    if (label == PrefLabel::kTie) return label;
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    return dist(rng) < epsilon ? flip_label(label) : label;
}

NoisyScriptedAnnotator::NoisyScriptedAnnotator(double epsilon, double tie_tolerance, std::uint64_t seed)
    : epsilon_(epsilon), tie_tolerance_(tie_tolerance), rng_(seed) {
    if (epsilon < 0.0 || epsilon > 1.0) throw ConfigError("NoisyScriptedAnnotator: epsilon must be in [0, 1]");
    if (tie_tolerance < 0.0) throw ConfigError("NoisyScriptedAnnotator: tie_tolerance must be >= 0");
}

std::optional<PrefLabel> NoisyScriptedAnnotator::label(const Segment& seg0, const Segment& seg1) {
    return corrupt(scripted_label(seg0, seg1, tie_tolerance_), epsilon_, rng_);
}

MockVlmAnnotator::MockVlmAnnotator(const std::string& fixture_path)
    : path_(fixture_path), responses_(parse_fixture(fixture_path)) {}

std::optional<PrefLabel> MockVlmAnnotator::label(const Segment&, const Segment&) {
    if (cursor_ >= responses_.size())
        throw std::runtime_error("mock-vlm fixture exhausted: " + path_);
    switch (responses_[cursor_++]) {
        case VlmResponse::kPrefer0: return PrefLabel::kFirst;
        case VlmResponse::kPrefer1: return PrefLabel::kSecond;
        case VlmResponse::kNoPreference: return std::nullopt;
    }
    return std::nullopt;
}

std::vector<VlmResponse> MockVlmAnnotator::parse_fixture(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open mock-vlm fixture: " + path);
    std::string line;
    if (!std::getline(in, line) || line != "mockvlm-v1")
        throw ConfigError("bad mock-vlm fixture header in " + path + " (expected 'mockvlm-v1')");
    std::vector<VlmResponse> out;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        if (line == "prefer0")
            out.push_back(VlmResponse::kPrefer0);
        else if (line == "prefer1")
            out.push_back(VlmResponse::kPrefer1);
        else if (line == "no_preference")
            out.push_back(VlmResponse::kNoPreference);
        else
            throw ConfigError("bad token '" + line + "' at " + path + ":" + std::to_string(line_no));
    }
    return out;
}

void MockVlmAnnotator::write_fixture(const std::string& path, const std::vector<VlmResponse>& responses) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write mock-vlm fixture: " + path);
    out << "mockvlm-v1\n";
    for (VlmResponse r : responses) {
        switch (r) {
            case VlmResponse::kPrefer0: out << "prefer0\n"; break;
            case VlmResponse::kPrefer1: out << "prefer1\n"; break;
            case VlmResponse::kNoPreference: out << "no_preference\n"; break;
        }
    }
}

EpisodeStore::EpisodeStore(std::size_t max_episodes) : cap_(max_episodes) {
    if (max_episodes == 0) throw std::invalid_argument("EpisodeStore: cap must be positive");
}

void EpisodeStore::add(Episode episode) {
    episodes_.push_back(std::move(episode));
    if (episodes_.size() > cap_) episodes_.pop_front();
}

std::size_t EpisodeStore::eligible_count(std::size_t window_len) const {
    std::size_t n = 0;
    for (const auto& e : episodes_)
        if (e.length() >= window_len) ++n;
    return n;
}

Segment EpisodeStore::sample_window(std::size_t window_len, std::mt19937_64& rng) const {
    std::vector<std::size_t> eligible;
    eligible.reserve(episodes_.size());
    for (std::size_t i = 0; i < episodes_.size(); ++i)
        if (episodes_[i].length() >= window_len) eligible.push_back(i);
    if (eligible.empty()) throw std::runtime_error("EpisodeStore: no episode long enough for a segment");
    std::uniform_int_distribution<std::size_t> pick_ep(0, eligible.size() - 1);
    const Episode& ep = episodes_[eligible[pick_ep(rng)]];
    std::uniform_int_distribution<std::size_t> pick_start(0, ep.length() - window_len);
    return make_segment(ep, pick_start(rng), window_len);
}

std::vector<std::size_t> disagreement_select(const std::vector<CandidatePair>& candidates,
                                             const RewardEnsemble& ensemble, std::size_t m) {
    if (m > candidates.size()) throw std::invalid_argument("disagreement_select: m exceeds candidate count");
    const std::size_t n = candidates.size();
    std::vector<Tensor2> feats;
    feats.reserve(2 * n);
    std::vector<const Tensor2*> blocks;
    blocks.reserve(2 * n);
    for (const CandidatePair& cand : candidates) {
        feats.push_back(segment_features(cand.seg0));
        feats.push_back(segment_features(cand.seg1));
    }
    for (const Tensor2& f : feats) blocks.push_back(&f);
    const PackedSegments packed = PackedSegments::pack(blocks);

    std::array<std::vector<double>, RewardEnsemble::kMembers> sums;
    for (std::size_t k = 0; k < RewardEnsemble::kMembers; ++k) sums[k] = packed.sums(ensemble.members[k]);

    std::vector<double> variance(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        std::array<double, RewardEnsemble::kMembers> p{};
        for (std::size_t k = 0; k < RewardEnsemble::kMembers; ++k)
            p[k] = stable_sigmoid(sums[k][2 * i] - sums[k][2 * i + 1]);
        // Population variance via pairwise differences: exactly zero when the
        // members agree, so index tie-breaking is meaningful.
        const double d01 = p[0] - p[1], d12 = p[1] - p[2], d02 = p[0] - p[2];
        variance[i] = (d01 * d01 + d12 * d12 + d02 * d02) / 9.0;
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (variance[a] != variance[b]) return variance[a] > variance[b];
        return a < b;
    });
    order.resize(m);
    return order;
}

QuerySessionResult query_session(const EpisodeStore& store, std::size_t segment_len, Annotator& annotator,
                                 QueryBudget& budget, const RewardEnsemble& ensemble, PrefDataset& dataset,
                                 std::mt19937_64& rng, double tie_tolerance, bool drop_tie_pairs) {
    QuerySessionResult result;
    if (budget.remaining() == 0 || store.eligible_count(segment_len) == 0) {
        result.starved = true;
        return result;
    }
    const std::size_t m = std::min(budget.per_session, budget.remaining());
    const std::size_t c = std::max(budget.candidate_pool, m);

    std::vector<CandidatePair> candidates;
    candidates.reserve(c);
    for (std::size_t i = 0; i < c; ++i) {
        CandidatePair cand;
        cand.seg0 = store.sample_window(segment_len, rng);
        cand.seg1 = store.sample_window(segment_len, rng);
        candidates.push_back(std::move(cand));
    }

    for (std::size_t idx : disagreement_select(candidates, ensemble, m)) {
        CandidatePair& cand = candidates[idx];
        const PrefLabel clean = scripted_label(cand.seg0, cand.seg1, tie_tolerance);
        const std::optional<PrefLabel> observed = annotator.label(cand.seg0, cand.seg1);
        result.queried += 1;

        PreferencePair pair;
        pair.seg0 = std::move(cand.seg0);
        pair.seg1 = std::move(cand.seg1);
        pair.clean_label = clean;
        if (!observed.has_value()) {
            pair.label = PrefLabel::kTie;
            pair.skipped = true;
            result.skipped += 1;
            budget.used += budget.count_skips ? 1 : 0;
            dataset.add(std::move(pair));
            result.appended += 1;
            continue;
        }
        budget.used += 1;
        if (drop_tie_pairs && *observed == PrefLabel::kTie) continue;
        pair.label = *observed;
        dataset.add(std::move(pair));
        result.appended += 1;
    }
    return result;
}

std::vector<CandidatePair> fixture_pair_stream(EnvKind kind, std::uint64_t seed, std::size_t n_pairs,
                                               std::size_t segment_len) {
    std::mt19937_64 rng(derive_seed(seed, 0xf1f1));
    std::uniform_real_distribution<double> act_dist(-1.0, 1.0);

    // Enough random-policy rollouts to give the window sampler variety.
    EpisodeStore store(256);
    const std::size_t n_episodes = std::max<std::size_t>(16, n_pairs / 16);
    for (std::size_t e = 0; e < n_episodes; ++e) {
        EnvState s = env_reset(kind, derive_seed(seed, 0xe000 + e));
        Episode ep;
        for (int t = 0; t < kEpisodeLen; ++t) {
            Action a{act_dist(rng), act_dist(rng)};
            StepResult r = env_step(s, a);
            ep.states.push_back(s);
            ep.actions.push_back(a);
            ep.true_rewards.push_back(r.true_reward);
            ep.success = ep.success || r.success;
            s = r.next;
            if (r.done) break;
        }
        store.add(std::move(ep));
    }

    std::vector<CandidatePair> pairs;
    pairs.reserve(n_pairs);
    for (std::size_t i = 0; i < n_pairs; ++i) {
        CandidatePair cand;
        cand.seg0 = store.sample_window(segment_len, rng);
        cand.seg1 = store.sample_window(segment_len, rng);
        pairs.push_back(std::move(cand));
    }
    return pairs;
}

double generate_vlm_fixture(const std::string& path, EnvKind kind, std::uint64_t seed, std::size_t n_pairs,
                            double noise_rate, double skip_rate, std::size_t segment_len) {
    if (noise_rate < 0.0 || noise_rate > 1.0) throw ConfigError("fixture noise rate must be in [0, 1]");
    if (skip_rate < 0.0 || skip_rate > 1.0) throw ConfigError("fixture skip rate must be in [0, 1]");
    if (n_pairs == 0) throw ConfigError("fixture needs at least one pair");

    const std::vector<CandidatePair> pairs = fixture_pair_stream(kind, seed, n_pairs, segment_len);
    std::mt19937_64 rng(derive_seed(seed, 0xf1f2));

    // Forced skips first (simulating "too similar" refusals), then exact-count
    // disagreement among the remaining strict-label pairs.
    std::vector<std::size_t> indices(n_pairs);
    std::iota(indices.begin(), indices.end(), 0);
    std::shuffle(indices.begin(), indices.end(), rng);
    const std::size_t n_forced_skips = static_cast<std::size_t>(std::llround(skip_rate * static_cast<double>(n_pairs)));
    std::vector<bool> forced_skip(n_pairs, false);
    for (std::size_t i = 0; i < n_forced_skips; ++i) forced_skip[indices[i]] = true;

    std::vector<std::size_t> strict;
    std::vector<PrefLabel> clean(n_pairs, PrefLabel::kTie);
    for (std::size_t i = 0; i < n_pairs; ++i) {
        clean[i] = scripted_label(pairs[i].seg0, pairs[i].seg1, 1e-9);
        if (!forced_skip[i] && clean[i] != PrefLabel::kTie) strict.push_back(i);
    }
    if (strict.empty()) throw std::runtime_error("fixture generation produced no strict-label pairs");

    std::shuffle(strict.begin(), strict.end(), rng);
    const std::size_t n_flip = static_cast<std::size_t>(std::llround(noise_rate * static_cast<double>(strict.size())));
    std::vector<bool> flip(n_pairs, false);
    for (std::size_t i = 0; i < n_flip; ++i) flip[strict[i]] = true;

    std::vector<VlmResponse> responses(n_pairs);
    for (std::size_t i = 0; i < n_pairs; ++i) {
        if (forced_skip[i] || clean[i] == PrefLabel::kTie) {
            responses[i] = VlmResponse::kNoPreference;
            continue;
        }
        const PrefLabel emitted = flip[i] ? flip_label(clean[i]) : clean[i];
        responses[i] = emitted == PrefLabel::kFirst ? VlmResponse::kPrefer0 : VlmResponse::kPrefer1;
    }
    MockVlmAnnotator::write_fixture(path, responses);
    return static_cast<double>(n_flip) / static_cast<double>(strict.size());
}

}  // namespace trend
