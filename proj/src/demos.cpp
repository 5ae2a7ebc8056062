#include "trend/demos.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "trend/errors.hpp"
#include "trend/rng.hpp"

namespace trend {

std::size_t DemoSet::step_count() const {
    std::size_t n = 0;
    for (const auto& t : trajectories) n += t.length();
    return n;
}

DemoSet generate_demos(EnvKind kind, std::size_t n, std::uint64_t seed) {
    if (n < 1 || n > 3) throw ConfigError("generate_demos: demo count must be 1..3");
    DemoSet demos;
    demos.kind = kind;
    std::size_t attempt = 0;
    while (demos.trajectories.size() < n) {
        if (attempt > 100 * n) throw std::runtime_error("generate_demos: expert kept failing");
        EnvState s = env_reset(kind, derive_seed(seed, 0xdeb0 + attempt));
        ++attempt;
        Episode ep;
        for (int t = 0; t < kEpisodeLen; ++t) {
            const Action a = expert_action(kind, s);
            StepResult r = env_step(s, a);
            ep.states.push_back(s);
            ep.actions.push_back(a);
            ep.true_rewards.push_back(r.true_reward);
            s = r.next;
            if (r.done) {
                ep.success = r.success;
                break;
            }
        }
        if (!ep.success) {
            std::cerr << "warning: expert rollout failed on seed attempt " << attempt << ", resampling\n";
            continue;
        }
        demos.trajectories.push_back(std::move(ep));
    }
    return demos;
}

namespace {

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

void save_demos(const DemoSet& demos, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write demo file: " + path);
    out << "trenddemo-v1\n" << env_kind_name(demos.kind) << "\n";
    for (std::size_t ti = 0; ti < demos.trajectories.size(); ++ti) {
        if (ti > 0) out << "\n";
        const Episode& ep = demos.trajectories[ti];
        for (std::size_t i = 0; i < ep.length(); ++i) {
            const std::vector<double> comps = state_to_components(ep.states[i]);
            for (double c : comps) out << format_double(c) << ",";
            out << format_double(ep.actions[i][0]) << "," << format_double(ep.actions[i][1]) << "\n";
        }
    }
}

DemoSet load_demos(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open demo file: " + path);
    std::string line;
    if (!std::getline(in, line) || line != "trenddemo-v1")
        throw ConfigError("bad demo file header in " + path + " (expected 'trenddemo-v1')");
    if (!std::getline(in, line)) throw ConfigError("demo file missing env kind: " + path);
    DemoSet demos;
    demos.kind = env_kind_from_name(line);
    const std::size_t sd = state_dim(demos.kind);

    Episode current;
    std::size_t line_no = 2;
    auto flush = [&]() {
        if (current.length() == 0) return;
        current.success = true;  // validated below
        demos.trajectories.push_back(std::move(current));
        current = Episode{};
    };
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) {
            flush();
            continue;
        }
        std::vector<double> vals;
        std::stringstream ss(line);
        std::string tok;
        while (std::getline(ss, tok, ',')) {
            try {
                vals.push_back(std::stod(tok));
            } catch (const std::exception&) {
                throw ConfigError("bad number '" + tok + "' at " + path + ":" + std::to_string(line_no));
            }
        }
        if (vals.size() != sd + kActionDim)
            throw ConfigError("wrong column count at " + path + ":" + std::to_string(line_no));
        for (double v : vals)
            if (!std::isfinite(v)) throw ConfigError("non-finite value at " + path + ":" + std::to_string(line_no));
        current.states.push_back(
            state_from_components(demos.kind, std::span<const double>(vals.data(), sd), static_cast<int>(current.length())));
        current.actions.push_back({vals[sd], vals[sd + 1]});
        current.true_rewards.push_back(0.0);  // recomputed below by replay
    }
    flush();
    if (demos.trajectories.empty()) throw ConfigError("demo file holds no trajectories: " + path);
    if (demos.trajectories.size() > 3) throw ConfigError("demo file holds more than 3 trajectories: " + path);

    // Recompute rewards and the success flag by replaying the dynamics.
    for (auto& ep : demos.trajectories) {
        ep.success = false;
        for (std::size_t i = 0; i < ep.length(); ++i) {
            StepResult r = env_step(ep.states[i], ep.actions[i]);
            ep.true_rewards[i] = r.true_reward;
            if (r.success) ep.success = true;
        }
        if (!ep.success) throw ConfigError("demo trajectory does not end in success: " + path);
    }
    return demos;
}

double AlphaSchedule::fraction(long t) const {
    if (horizon_steps <= 0) return end;
    const double u = std::min(1.0, std::max(0.0, static_cast<double>(t) / static_cast<double>(horizon_steps)));
    return start + (end - start) * u;
}

namespace {

// Flattens every demo step into (obs, action) training rows.
std::pair<Tensor2, Tensor2> demo_rows(const DemoSet& demos) {
    const std::size_t n = demos.step_count();
    const std::size_t od = obs_dim(demos.kind);
    Tensor2 obs(n, od), act(n, kActionDim);
    std::size_t r = 0;
    for (const auto& ep : demos.trajectories) {
        for (std::size_t i = 0; i < ep.length(); ++i, ++r) {
            const std::vector<double> o = encode_obs(ep.states[i]);
            std::copy(o.begin(), o.end(), obs.row(r).begin());
            act.at(r, 0) = ep.actions[i][0];
            act.at(r, 1) = ep.actions[i][1];
        }
    }
    return {std::move(obs), std::move(act)};
}

}  // namespace

double bc_loss_grad(const ParamSet& policy, const Tensor2& obs, const Tensor2& target_actions, std::size_t act_dim,
                    ParamSet* grads) {
    const std::size_t n = obs.rows;
    if (target_actions.rows != n || target_actions.cols != act_dim)
        throw std::invalid_argument("bc_loss_grad: target shape mismatch");
    std::vector<Tensor2> trace = mlp_forward_trace(policy, obs);
    const Tensor2& head = trace.back();  // N × 2d
    const double inv_n = 1.0 / static_cast<double>(n);

    double loss = 0.0;
    Tensor2 upstream(n, head.cols);
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t i = 0; i < act_dim; ++i) {
            const double a = std::tanh(head.at(r, i));
            const double diff = a - target_actions.at(r, i);
            loss += diff * diff;
            upstream.at(r, i) = 2.0 * diff * (1.0 - a * a) * inv_n;
        }
    }
    loss *= inv_n;
    if (grads != nullptr) *grads = mlp_backward_from_trace(policy, trace, upstream);
    return loss;
}

BcResult bc_pretrain(ParamSet& policy, const DemoSet& demos, const BcConfig& cfg) {
    if (demos.trajectories.empty()) throw ConfigError("bc_pretrain: empty demo set");
    BcResult result;
    if (cfg.epochs == 0) return result;

    auto [obs, act] = demo_rows(demos);
    const std::size_t act_dim = act.cols;
    AdamState opt = AdamState::for_params(policy, cfg.lr);

    double best = std::numeric_limits<double>::infinity();
    std::size_t since_best = 0;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        ParamSet grads;
        const double loss = bc_loss_grad(policy, obs, act, act_dim, &grads);
        adam_step(opt, policy, grads);
        result.final_loss = loss;
        result.epochs_run = epoch + 1;
        if (loss < best * (1.0 - cfg.plateau_rel_tol)) {
            best = loss;
            since_best = 0;
        } else if (++since_best >= cfg.patience) {
            break;
        }
    }
    return result;
}

SacLosses mixed_policy_update(SacAgent& agent, ReplayBuffer& buffer, const DemoSet& demos, long t, double lambda_bc,
                              const AlphaSchedule& schedule) {
    const double alpha = schedule.fraction(t);
    const std::size_t batch = agent.cfg.batch_size;
    std::size_t n_demo =
        static_cast<std::size_t>(std::ceil(alpha * static_cast<double>(batch) - 1e-9));
    n_demo = std::min(n_demo, batch);
    const std::size_t n_replay = batch - n_demo;
    if (n_demo > 0 && demos.trajectories.empty())
        throw ConfigError("mixed_policy_update: demo fraction positive but demo set empty");
    if (buffer.size() < n_replay) throw std::invalid_argument("mixed_policy_update: replay buffer too small");

    const std::size_t d = agent.cfg.act_dim;
    const std::size_t od = agent.cfg.obs_dim;

    // Replay part: standard SAC critic targets and updates.
    std::vector<std::size_t> idx = buffer.sample_indices(n_replay, agent.rng);
    Tensor2 obs(n_replay, od), act(n_replay, d), next_obs(n_replay, od);
    std::vector<double> rewards(n_replay), dones(n_replay);
    for (std::size_t r = 0; r < n_replay; ++r) {
        const Transition& tr = buffer[idx[r]];
        std::copy(tr.s.begin(), tr.s.end(), obs.row(r).begin());
        std::copy(tr.a.begin(), tr.a.end(), act.row(r).begin());
        std::copy(tr.s_next.begin(), tr.s_next.end(), next_obs.row(r).begin());
        rewards[r] = tr.r_hat;
        dones[r] = tr.done ? 1.0 : 0.0;
    }

    Tensor2 next_noise = sacdet::standard_normal(n_replay, d, agent.rng);
    sacdet::PolicyEval next_eval = sacdet::policy_eval(agent.policy, next_obs, next_noise, agent.cfg);
    std::vector<double> y = sacdet::td_targets(agent.q1_target, agent.q2_target, next_obs, next_eval, rewards, dones,
                                               agent.cfg.discount, agent.cfg.alpha_ent);

    Tensor2 sa = sacdet::concat_cols(obs, act);
    SacLosses losses;
    ParamSet g1, g2;
    losses.critic1 = sacdet::critic_loss_grad(agent.q1, sa, y, &g1);
    losses.critic2 = sacdet::critic_loss_grad(agent.q2, sa, y, &g2);
    if (!std::isfinite(losses.critic1)) throw NumericError("sac: non-finite critic1 loss");
    if (!std::isfinite(losses.critic2)) throw NumericError("sac: non-finite critic2 loss");
    adam_step(agent.q1_opt, agent.q1, g1);
    adam_step(agent.q2_opt, agent.q2, g2);

    // Actor: SAC objective on the replay part plus lambda * BC on demo steps.
    Tensor2 actor_noise = sacdet::standard_normal(n_replay, d, agent.rng);
    ParamSet gp;
    losses.actor = sacdet::actor_loss_grad(agent.policy, agent.q1, agent.q2, obs, actor_noise, agent.cfg, &gp);

    if (n_demo > 0) {
        auto [demo_obs_all, demo_act_all] = demo_rows(demos);
        Tensor2 demo_obs(n_demo, od), demo_act(n_demo, d);
        std::uniform_int_distribution<std::size_t> pick(0, demo_obs_all.rows - 1);
        for (std::size_t r = 0; r < n_demo; ++r) {
            const std::size_t s = pick(agent.rng);
            std::copy(demo_obs_all.row(s).begin(), demo_obs_all.row(s).end(), demo_obs.row(r).begin());
            std::copy(demo_act_all.row(s).begin(), demo_act_all.row(s).end(), demo_act.row(r).begin());
        }
        ParamSet gbc;
        losses.bc = bc_loss_grad(agent.policy, demo_obs, demo_act, d, &gbc);
        gp.add_scaled(gbc, lambda_bc);
    }
    if (!std::isfinite(losses.actor) || !std::isfinite(losses.bc))
        throw NumericError("sac: non-finite actor/bc loss");
    adam_step(agent.policy_opt, agent.policy, gp);

    sacdet::soft_update(agent.q1_target, agent.q1, agent.cfg.tau);
    sacdet::soft_update(agent.q2_target, agent.q2, agent.cfg.tau);
    return losses;
}

}  // namespace trend
