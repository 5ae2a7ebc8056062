#include "trend/sac.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "trend/errors.hpp"

namespace trend {

namespace {

constexpr double kHalfLog2Pi = 0.91893853320467274178;  // 0.5 * ln(2*pi)

double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

// log(1 - tanh(u)^2) = 2 * (log 2 - u - softplus(-2u)); exact and never log(0).
double log_one_minus_tanh_sq(double u) { return 2.0 * (0.6931471805599453 - u - softplus(-2.0 * u)); }

MlpSpec policy_spec(const SacConfig& cfg) {
    return MlpSpec::make(cfg.obs_dim, cfg.hidden_width, cfg.hidden_layers, 2 * cfg.act_dim, cfg.hidden_act,
                         OutputActivation::kIdentity);
}

MlpSpec critic_spec(const SacConfig& cfg) {
    return MlpSpec::make(cfg.obs_dim + cfg.act_dim, cfg.hidden_width, cfg.hidden_layers, 1, cfg.hidden_act,
                         OutputActivation::kIdentity);
}

}  // namespace

namespace sacdet {

Tensor2 concat_cols(const Tensor2& a, const Tensor2& b) {
    if (a.rows != b.rows) throw std::invalid_argument("concat_cols: row count mismatch");
    Tensor2 c(a.rows, a.cols + b.cols);
    for (std::size_t r = 0; r < a.rows; ++r) {
        std::copy(a.row(r).begin(), a.row(r).end(), c.row(r).begin());
        std::copy(b.row(r).begin(), b.row(r).end(), c.row(r).begin() + a.cols);
    }
    return c;
}

Tensor2 standard_normal(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
    Tensor2 out(rows, cols);
    std::normal_distribution<double> dist(0.0, 1.0);
    for (double& v : out.data) v = dist(rng);
    return out;
}

PolicyEval policy_eval(const ParamSet& policy, const Tensor2& obs, const Tensor2& noise, const SacConfig& cfg) {
    const std::size_t n = obs.rows;
    const std::size_t d = cfg.act_dim;
    if (noise.rows != n || noise.cols != d) throw std::invalid_argument("policy_eval: noise shape mismatch");

    Tensor2 head = mlp_forward_batch(policy, obs);  // N × 2d: [mean | log_std]
    PolicyEval pe;
    pe.mean = Tensor2(n, d);
    pe.log_std = Tensor2(n, d);
    pe.sigma = Tensor2(n, d);
    pe.clamp_pass = Tensor2(n, d);
    pe.pre_tanh = Tensor2(n, d);
    pe.action = Tensor2(n, d);
    pe.log_prob.assign(n, 0.0);

    for (std::size_t r = 0; r < n; ++r) {
        double lp = 0.0;
        for (std::size_t i = 0; i < d; ++i) {
            const double mu = head.at(r, i);
            const double raw = head.at(r, d + i);
            const double ls = std::clamp(raw, cfg.log_std_min, cfg.log_std_max);
            const double sigma = std::exp(ls);
            const double xi = noise.at(r, i);
            const double u = mu + sigma * xi;
            const double a = std::tanh(u);
            pe.mean.at(r, i) = mu;
            pe.log_std.at(r, i) = ls;
            pe.sigma.at(r, i) = sigma;
            pe.clamp_pass.at(r, i) = (raw > cfg.log_std_min && raw < cfg.log_std_max) ? 1.0 : 0.0;
            pe.pre_tanh.at(r, i) = u;
            pe.action.at(r, i) = a;
            lp += -0.5 * xi * xi - ls - kHalfLog2Pi - log_one_minus_tanh_sq(u);
        }
        pe.log_prob[r] = lp;
    }
    return pe;
}

std::vector<double> critic_values(const ParamSet& q, const Tensor2& sa) {
    Tensor2 out = mlp_forward_batch(q, sa);
    return out.data;
}

std::vector<double> td_targets(const ParamSet& tq1, const ParamSet& tq2, const Tensor2& next_obs,
                               const PolicyEval& next_eval, std::span<const double> rewards,
                               std::span<const double> dones, double discount, double alpha_ent) {
    Tensor2 sa = concat_cols(next_obs, next_eval.action);
    std::vector<double> v1 = critic_values(tq1, sa);
    std::vector<double> v2 = critic_values(tq2, sa);
    std::vector<double> y(rewards.size());
    for (std::size_t r = 0; r < y.size(); ++r) {
        const double soft_v = std::min(v1[r], v2[r]) - alpha_ent * next_eval.log_prob[r];
        y[r] = rewards[r] + discount * (1.0 - dones[r]) * soft_v;
    }
    return y;
}

double critic_loss_grad(const ParamSet& q, const Tensor2& sa, std::span<const double> targets, ParamSet* grads) {
    const std::size_t n = sa.rows;
    if (targets.size() != n) throw std::invalid_argument("critic_loss_grad: target count mismatch");
    Tensor2 values = mlp_forward_batch(q, sa);
    double loss = 0.0;
    Tensor2 upstream(n, 1);
    for (std::size_t r = 0; r < n; ++r) {
        const double diff = values.at(r, 0) - targets[r];
        loss += diff * diff;
        upstream.at(r, 0) = 2.0 * diff / static_cast<double>(n);
    }
    loss /= static_cast<double>(n);
    if (grads != nullptr) *grads = mlp_backward_batch(q, sa, upstream);
    return loss;
}

double actor_loss_grad(const ParamSet& policy, const ParamSet& q1, const ParamSet& q2, const Tensor2& obs,
                       const Tensor2& noise, const SacConfig& cfg, ParamSet* grads) {
    const std::size_t n = obs.rows;
    const std::size_t d = cfg.act_dim;
    const double inv_n = 1.0 / static_cast<double>(n);

    PolicyEval pe = policy_eval(policy, obs, noise, cfg);
    Tensor2 sa = concat_cols(obs, pe.action);
    std::vector<double> v1 = critic_values(q1, sa);
    std::vector<double> v2 = critic_values(q2, sa);

    double loss = 0.0;
    for (std::size_t r = 0; r < n; ++r) loss += cfg.alpha_ent * pe.log_prob[r] - std::min(v1[r], v2[r]);
    loss *= inv_n;
    if (grads == nullptr) return loss;

    // d(-minQ)/d(action) per row, via the input gradient of the active critic.
    Tensor2 up1(n, 1), up2(n, 1);
    for (std::size_t r = 0; r < n; ++r) {
        if (v1[r] <= v2[r])
            up1.at(r, 0) = -inv_n;
        else
            up2.at(r, 0) = -inv_n;
    }
    Tensor2 in_grad1, in_grad2;
    mlp_backward_batch(q1, sa, up1, &in_grad1);
    mlp_backward_batch(q2, sa, up2, &in_grad2);

    // Upstream gradient on the policy head [d mean | d log_std_raw].
    Tensor2 head_up(n, 2 * d);
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t i = 0; i < d; ++i) {
            const double a = pe.action.at(r, i);
            const double one_m_a2 = 1.0 - a * a;
            const double qg = in_grad1.at(r, cfg.obs_dim + i) + in_grad2.at(r, cfg.obs_dim + i);
            // dL/du: the entropy term contributes alpha*2a/n through the tanh
            // correction; the critic term enters through the squashed action.
            const double dl_du = cfg.alpha_ent * 2.0 * a * inv_n + qg * one_m_a2;
            head_up.at(r, i) = dl_du;
            const double dl_dls = dl_du * pe.sigma.at(r, i) * noise.at(r, i) - cfg.alpha_ent * inv_n;
            head_up.at(r, d + i) = dl_dls * pe.clamp_pass.at(r, i);
        }
    }
    *grads = mlp_backward_batch(policy, obs, head_up);
    return loss;
}

void soft_update(ParamSet& target, const ParamSet& main, double tau) {
    for (std::size_t l = 0; l < target.weights.size(); ++l) {
        for (std::size_t i = 0; i < target.weights[l].data.size(); ++i)
            target.weights[l].data[i] = (1.0 - tau) * target.weights[l].data[i] + tau * main.weights[l].data[i];
        for (std::size_t i = 0; i < target.biases[l].size(); ++i)
            target.biases[l][i] = (1.0 - tau) * target.biases[l][i] + tau * main.biases[l][i];
    }
}

}  // namespace sacdet

SacAgent::SacAgent(const SacConfig& config, std::uint64_t seed)
    : cfg(config),
      policy(ParamSet::initialized(policy_spec(config), seed)),
      q1(ParamSet::initialized(critic_spec(config), seed + 1)),
      q2(ParamSet::initialized(critic_spec(config), seed + 2)),
      q1_target(q1),
      q2_target(q2),
      policy_opt(AdamState::for_params(policy, config.lr)),
      q1_opt(AdamState::for_params(q1, config.lr)),
      q2_opt(AdamState::for_params(q2, config.lr)),
      rng(seed + 3) {}

std::vector<double> SacAgent::act(std::span<const double> obs, ActionMode mode) {
    Tensor2 o(1, obs.size());
    std::copy(obs.begin(), obs.end(), o.data.begin());
    if (mode == ActionMode::kMean) {
        Tensor2 head = mlp_forward_batch(policy, o);
        std::vector<double> a(cfg.act_dim);
        for (std::size_t i = 0; i < cfg.act_dim; ++i) a[i] = std::tanh(head.at(0, i));
        return a;
    }
    Tensor2 noise = sacdet::standard_normal(1, cfg.act_dim, rng);
    sacdet::PolicyEval pe = sacdet::policy_eval(policy, o, noise, cfg);
    return pe.action.data;
}

SacAgent::ActionSample SacAgent::sample_with_log_prob(std::span<const double> obs) {
    Tensor2 o(1, obs.size());
    std::copy(obs.begin(), obs.end(), o.data.begin());
    Tensor2 noise = sacdet::standard_normal(1, cfg.act_dim, rng);
    sacdet::PolicyEval pe = sacdet::policy_eval(policy, o, noise, cfg);
    ActionSample s;
    s.action = pe.action.data;
    s.log_prob = pe.log_prob[0];
    s.mean = pe.mean.data;
    s.sigma = pe.sigma.data;
    s.pre_tanh = pe.pre_tanh.data;
    return s;
}

SacLosses SacAgent::update(std::span<const Transition* const> batch) {
    const std::size_t n = batch.size();
    if (n == 0) throw std::invalid_argument("sac update: empty batch");
    const std::size_t d = cfg.act_dim;

    Tensor2 obs(n, cfg.obs_dim), act(n, d), next_obs(n, cfg.obs_dim);
    std::vector<double> rewards(n), dones(n);
    for (std::size_t r = 0; r < n; ++r) {
        const Transition& t = *batch[r];
        std::copy(t.s.begin(), t.s.end(), obs.row(r).begin());
        std::copy(t.a.begin(), t.a.end(), act.row(r).begin());
        std::copy(t.s_next.begin(), t.s_next.end(), next_obs.row(r).begin());
        rewards[r] = t.r_hat;
        dones[r] = t.done ? 1.0 : 0.0;
    }

    Tensor2 next_noise = sacdet::standard_normal(n, d, rng);
    sacdet::PolicyEval next_eval = sacdet::policy_eval(policy, next_obs, next_noise, cfg);
    std::vector<double> y =
        sacdet::td_targets(q1_target, q2_target, next_obs, next_eval, rewards, dones, cfg.discount, cfg.alpha_ent);

    Tensor2 sa = sacdet::concat_cols(obs, act);
    SacLosses losses;
    ParamSet g1, g2, gp;
    losses.critic1 = sacdet::critic_loss_grad(q1, sa, y, &g1);
    losses.critic2 = sacdet::critic_loss_grad(q2, sa, y, &g2);
    if (!std::isfinite(losses.critic1)) throw NumericError("sac: non-finite critic1 loss");
    if (!std::isfinite(losses.critic2)) throw NumericError("sac: non-finite critic2 loss");
    adam_step(q1_opt, q1, g1);
    adam_step(q2_opt, q2, g2);

    Tensor2 actor_noise = sacdet::standard_normal(n, d, rng);
    losses.actor = sacdet::actor_loss_grad(policy, q1, q2, obs, actor_noise, cfg, &gp);
    if (!std::isfinite(losses.actor)) throw NumericError("sac: non-finite actor loss");
    adam_step(policy_opt, policy, gp);

    sacdet::soft_update(q1_target, q1, cfg.tau);
    sacdet::soft_update(q2_target, q2, cfg.tau);
    return losses;
}

}  // namespace trend
