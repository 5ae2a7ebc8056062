#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "trend/adam.hpp"
#include "trend/mlp.hpp"
#include "trend/replay.hpp"
#include "trend/tensor.hpp"

namespace trend {

struct SacConfig {
    std::size_t obs_dim = 2;
    std::size_t act_dim = 2;
    std::size_t hidden_width = 64;
    std::size_t hidden_layers = 2;
    Activation hidden_act = Activation::kTanh;
    double lr = 3e-4;
    double discount = 0.99;
    double tau = 0.005;
    double alpha_ent = 0.1;  // fixed entropy temperature, no auto-tuning
    std::size_t batch_size = 256;
    std::size_t buffer_capacity = 100000;
    double log_std_min = -5.0;
    double log_std_max = 2.0;
};

enum class ActionMode { kStochastic, kMean };

struct SacLosses {
    double critic1 = 0.0;
    double critic2 = 0.0;
    double actor = 0.0;
    double bc = 0.0;
};

namespace sacdet {

// Gaussian policy head evaluated on a batch with injected standard-normal
// noise (reparameterized: pre_tanh = mean + sigma * noise). All matrices are
// N×act_dim; log_prob is per row and includes the tanh change of variables.
struct PolicyEval {
    Tensor2 mean;
    Tensor2 log_std;     // after clamping
    Tensor2 sigma;
    Tensor2 clamp_pass;  // 1 where the raw log-std was inside the clamp range
    Tensor2 pre_tanh;
    Tensor2 action;
    std::vector<double> log_prob;
};

PolicyEval policy_eval(const ParamSet& policy, const Tensor2& obs, const Tensor2& noise, const SacConfig& cfg);

Tensor2 concat_cols(const Tensor2& a, const Tensor2& b);
Tensor2 standard_normal(std::size_t rows, std::size_t cols, std::mt19937_64& rng);

std::vector<double> critic_values(const ParamSet& q, const Tensor2& sa);

// y = r + discount * (1 - done) * (min(tq1, tq2)(s', a') - alpha_ent * log pi(a'|s')).
std::vector<double> td_targets(const ParamSet& tq1, const ParamSet& tq2, const Tensor2& next_obs,
                               const PolicyEval& next_eval, std::span<const double> rewards,
                               std::span<const double> dones, double discount, double alpha_ent);

// Mean squared Bellman residual; writes dLoss/dparams into *grads if non-null.
double critic_loss_grad(const ParamSet& q, const Tensor2& sa, std::span<const double> targets, ParamSet* grads);

// Reparameterized actor objective mean(alpha_ent * log pi - min(Q1, Q2));
// gradients flow through the squashed sample into the policy only.
double actor_loss_grad(const ParamSet& policy, const ParamSet& q1, const ParamSet& q2, const Tensor2& obs,
                       const Tensor2& noise, const SacConfig& cfg, ParamSet* grads);

void soft_update(ParamSet& target, const ParamSet& main, double tau);

}  // namespace sacdet

// Twin-critic SAC agent with a tanh-squashed Gaussian policy and Polyak
// target networks. One agent instance is owned by one training loop.
struct SacAgent {
    SacConfig cfg;
    ParamSet policy;
    ParamSet q1, q2;
    ParamSet q1_target, q2_target;
    AdamState policy_opt, q1_opt, q2_opt;
    std::mt19937_64 rng;

    SacAgent(const SacConfig& cfg, std::uint64_t seed);

    std::vector<double> act(std::span<const double> obs, ActionMode mode);

    struct ActionSample {
        std::vector<double> action;
        double log_prob = 0.0;
        std::vector<double> mean;
        std::vector<double> sigma;
        std::vector<double> pre_tanh;
    };
    ActionSample sample_with_log_prob(std::span<const double> obs);

    // One gradient step of critics and actor plus target soft-update on the
    // given transitions. Throws NumericError naming the head on non-finite loss.
    SacLosses update(std::span<const Transition* const> batch);
};

}  // namespace trend
