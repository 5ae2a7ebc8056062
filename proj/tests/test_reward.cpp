#include <cmath>
#include <random>

#include "doctest.h"
#include "trend/env.hpp"
#include "trend/reward.hpp"

using namespace trend;

namespace {

// Segment whose per-step network inputs are exactly [dx, dy, ax, ay].
Segment craft_segment(const std::vector<std::array<double, 4>>& rows) {
    Segment seg;
    for (const auto& row : rows) {
        EnvState s;
        s.kind = EnvKind::kPointReach;
        s.agent = {0.0, 0.0};
        s.goal = {row[0], row[1]};
        seg.states.push_back(s);
        seg.actions.push_back({row[2], row[3]});
    }
    return seg;
}

// Single linear reward unit r(x) = w . x so segment sums are easy to stage.
ParamSet linear_member(std::array<double, 4> w) {
    MlpSpec spec;
    spec.layer_sizes = {4, 1};
    ParamSet p = ParamSet::zeros(spec);
    for (std::size_t i = 0; i < 4; ++i) p.weights[0].at(0, i) = w[i];
    return p;
}

Segment random_segment(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    EnvState s = env_reset(EnvKind::kPointReach, seed);
    Episode ep;
    for (int t = 0; t < 12; ++t) {
        Action a{dist(rng), dist(rng)};
        StepResult r = env_step(s, a);
        ep.states.push_back(s);
        ep.actions.push_back(a);
        ep.true_rewards.push_back(r.true_reward);
        s = r.next;
    }
    return make_segment(ep, 0, 12);
}

}  // namespace

TEST_CASE("equal return sums give probability one half exactly") {
    ParamSet member = linear_member({1.0, 0.0, 0.0, 0.0});
    PreferencePair pair;
    pair.seg0 = craft_segment({{0.7, 0.0, 0.0, 0.0}});
    pair.seg1 = craft_segment({{0.7, 0.0, 0.0, 0.0}});
    CHECK(pref_prob(member, pair) == 0.5);
}

TEST_CASE("sum margin of one gives the closed-form sigmoid") {
    ParamSet member = linear_member({1.0, 0.0, 0.0, 0.0});
    PreferencePair pair;
    pair.seg0 = craft_segment({{2.0, 0.0, 0.0, 0.0}});
    pair.seg1 = craft_segment({{1.0, 0.0, 0.0, 0.0}});
    CHECK(pref_prob(member, pair) == doctest::Approx(0.7310585786300049).epsilon(1e-9));
}

TEST_CASE("preference probabilities are normalized for random nets") {
    std::mt19937_64 rng(3);
    for (int rep = 0; rep < 30; ++rep) {
        MlpSpec spec = MlpSpec::make(4, 16, 3, 1, Activation::kTanh, OutputActivation::kIdentity);
        ParamSet member = ParamSet::initialized(spec, 900 + rep);
        PreferencePair fwd, rev;
        fwd.seg0 = random_segment(10 + rep);
        fwd.seg1 = random_segment(200 + rep);
        rev.seg0 = fwd.seg1;
        rev.seg1 = fwd.seg0;
        const double p01 = pref_prob(member, fwd);
        const double p10 = pref_prob(member, rev);
        CHECK(std::fabs(p01 + p10 - 1.0) < 1e-12);
    }
}

TEST_CASE("pref_prob agrees with the cached-features path") {
    MlpSpec spec = MlpSpec::make(4, 8, 2, 1, Activation::kTanh, OutputActivation::kIdentity);
    ParamSet member = ParamSet::initialized(spec, 1234);
    PreferencePair pair;
    pair.seg0 = random_segment(77);
    pair.seg1 = random_segment(78);
    const double direct = pref_prob(member, pair);
    const double cached = pref_prob_cached(member, segment_features(pair.seg0), segment_features(pair.seg1));
    CHECK(direct == cached);
}

TEST_CASE("pair loss closed forms") {
    CHECK(pair_loss_from_prob(0.5, PrefLabel::kFirst) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK(pair_loss_from_prob(1.0 - 1e-13, PrefLabel::kFirst) < 1e-11);
    CHECK(pair_loss_from_prob(1e-15, PrefLabel::kFirst) > 20.0);  // clamped, finite

    // Soft labels are minimized at p = 0.5 with value ln 2.
    double best_p = -1.0, best_v = 1e18;
    for (int i = 1; i < 1000; ++i) {
        const double p = static_cast<double>(i) / 1000.0;
        const double v = pair_loss_from_prob(p, PrefLabel::kTie);
        if (v < best_v) {
            best_v = v;
            best_p = p;
        }
    }
    CHECK(best_p == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(best_v == doctest::Approx(std::log(2.0)).epsilon(1e-9));
}

TEST_CASE("flipping the label mirrors the loss in p") {
    for (double p : {0.03, 0.2, 0.44, 0.71, 0.98}) {
        CHECK(pair_loss_from_prob(p, PrefLabel::kFirst) ==
              doctest::Approx(pair_loss_from_prob(1.0 - p, PrefLabel::kSecond)).epsilon(1e-12));
    }
}

TEST_CASE("preference probability is shift invariant for scripted reward functions") {
    // Analytic property of the two-segment softmax: adding a constant to a
    // reward function cancels over equal-length segments.
    auto r1 = [](double x, double a) { return std::sin(3.0 * x) + 0.2 * a; };
    const double shift = 17.5;
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    for (int rep = 0; rep < 50; ++rep) {
        double sum0_a = 0.0, sum0_b = 0.0, sum1_a = 0.0, sum1_b = 0.0;
        for (int t = 0; t < 10; ++t) {
            const double x0 = dist(rng), a0 = dist(rng), x1 = dist(rng), a1 = dist(rng);
            sum0_a += r1(x0, a0);
            sum0_b += r1(x0, a0) + shift;
            sum1_a += r1(x1, a1);
            sum1_b += r1(x1, a1) + shift;
        }
        CHECK(stable_sigmoid(sum0_a - sum1_a) == doctest::Approx(stable_sigmoid(sum0_b - sum1_b)).epsilon(1e-12));
    }
}

TEST_CASE("preference probability increases strictly with the margin") {
    ParamSet member = linear_member({1.0, 0.0, 0.0, 0.0});
    double prev = 0.0;
    for (double margin : {-3.0, -1.0, -0.25, 0.0, 0.4, 1.2, 5.0}) {
        PreferencePair pair;
        pair.seg0 = craft_segment({{margin, 0.0, 0.0, 0.0}});
        pair.seg1 = craft_segment({{0.0, 0.0, 0.0, 0.0}});
        const double p = pref_prob(member, pair);
        if (margin > -3.0) CHECK(p > prev);
        prev = p;
    }
}

TEST_CASE("ensemble reward is the member mean") {
    RewardEnsemble ens = RewardEnsemble::initialized(EnvKind::kPointReach, 8, 2, 3e-4, 5);
    // Identical members: mean equals any single member.
    RewardEnsemble same = ens;
    same.members[1] = same.members[0];
    same.members[2] = same.members[0];
    const std::vector<double> obs{0.3, -0.2};
    const std::vector<double> act{0.5, 0.1};
    std::vector<double> input{0.3, -0.2, 0.5, 0.1};
    CHECK(ensemble_reward(same, obs, act) ==
          doctest::Approx(mlp_forward(same.members[0], input)[0]).epsilon(1e-15));

    // Members outputting exactly 1, 2, 3: constant identity-output units.
    RewardEnsemble biased = ens;
    for (std::size_t k = 0; k < 3; ++k) {
        MlpSpec flat;
        flat.layer_sizes = {4, 1};
        flat.output = OutputActivation::kIdentity;
        biased.members[k] = ParamSet::zeros(flat);
        biased.members[k].biases.back()[0] = static_cast<double>(k + 1);
    }
    CHECK(ensemble_reward(biased, obs, act) == doctest::Approx(2.0).epsilon(1e-15));

    // Mean of three hand-computed forward passes.
    double want = 0.0;
    for (const auto& m : ens.members) want += mlp_forward(m, input)[0];
    want /= 3.0;
    CHECK(ensemble_reward(ens, obs, act) == doctest::Approx(want).epsilon(1e-12));

    // Batch path agrees with the scalar path.
    Tensor2 sa(1, 4);
    sa.data = input;
    CHECK(ensemble_reward_batch(ens, sa)[0] == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("ensemble members are initialized from distinct seeds") {
    RewardEnsemble ens = RewardEnsemble::initialized(EnvKind::kPointReach, 16, 3, 3e-4, 42);
    CHECK(ens.members[0].weights[0].data != ens.members[1].weights[0].data);
    CHECK(ens.members[1].weights[0].data != ens.members[2].weights[0].data);
    CHECK(ens.perm_seeds[0] != ens.perm_seeds[1]);

    RewardEnsemble again = RewardEnsemble::initialized(EnvKind::kPointReach, 16, 3, 3e-4, 42);
    CHECK(ens.members[0].weights[0].data == again.members[0].weights[0].data);
}

TEST_CASE("dataset clean ratio and skip bookkeeping") {
    PrefDataset data;
    for (int i = 0; i < 10; ++i) {
        PreferencePair pair;
        pair.seg0 = random_segment(300 + i);
        pair.seg1 = random_segment(400 + i);
        pair.clean_label = PrefLabel::kFirst;
        pair.label = i < 6 ? PrefLabel::kFirst : PrefLabel::kSecond;  // 6 clean, 4 flipped
        pair.skipped = i == 9;                                        // one skipped flipped pair
        data.add(std::move(pair));
    }
    CHECK(data.size() == 10);
    CHECK(data.skipped_count() == 1);
    CHECK(data.trainable_indices().size() == 9);
    CHECK(data.clean_ratio() == doctest::Approx(6.0 / 9.0).epsilon(1e-12));
}
