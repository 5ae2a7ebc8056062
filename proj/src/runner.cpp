#include "trend/runner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <thread>

#include "trend/annotate.hpp"
#include "trend/demos.hpp"
#include "trend/errors.hpp"
#include "trend/rng.hpp"

namespace trend {

namespace {

// Substream tags for the single-root-seed fan-out.
enum SeedStream : std::uint64_t {
    kEnvStream = 1,
    kAgentStream = 2,
    kEnsembleStream = 3,
    kAnnotatorStream = 4,
    kQueryStream = 5,
    kWarmupStream = 6,
    kDemoStream = 7,
    kEvalStream = 8,
};

SacConfig sac_config_for(const RunConfig& cfg) {
    SacConfig s;
    s.obs_dim = obs_dim(cfg.env);
    s.act_dim = kActionDim;
    s.hidden_width = cfg.policy_hidden;
    s.hidden_layers = cfg.policy_layers;
    s.hidden_act = cfg.policy_act;
    s.lr = cfg.sac_lr;
    s.discount = cfg.discount;
    s.tau = cfg.tau;
    s.alpha_ent = cfg.alpha_ent;
    s.batch_size = cfg.sac_batch;
    s.buffer_capacity = cfg.sac_capacity;
    return s;
}

void relabel_with_ensemble(ReplayBuffer& buffer, const RewardEnsemble& ensemble, std::size_t od) {
    if (buffer.size() == 0) return;
    Tensor2 sa(buffer.size(), od + kActionDim);
    for (std::size_t i = 0; i < buffer.size(); ++i) {
        const Transition& t = buffer[i];
        std::copy(t.s.begin(), t.s.end(), sa.row(i).begin());
        std::copy(t.a.begin(), t.a.end(), sa.row(i).begin() + od);
    }
    const std::vector<double> r = ensemble_reward_batch(ensemble, sa);
    for (std::size_t i = 0; i < buffer.size(); ++i) buffer[i].r_hat = r[i];
}

void write_params(std::ofstream& out, const char* name, const ParamSet& p) {
    out << "[" << name << "]\n";
    char buf[32];
    for (std::size_t l = 0; l < p.weights.size(); ++l) {
        out << "layer " << l << " " << p.weights[l].rows << " " << p.weights[l].cols << "\n";
        for (std::size_t i = 0; i < p.weights[l].data.size(); ++i) {
            std::snprintf(buf, sizeof(buf), "%.17g", p.weights[l].data[i]);
            out << buf << (i + 1 == p.weights[l].data.size() ? "\n" : " ");
        }
        for (std::size_t i = 0; i < p.biases[l].size(); ++i) {
            std::snprintf(buf, sizeof(buf), "%.17g", p.biases[l][i]);
            out << buf << (i + 1 == p.biases[l].size() ? "\n" : " ");
        }
    }
}

}  // namespace

void save_checkpoint(const std::string& path, const SacAgent& agent, const RewardEnsemble& ensemble) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write checkpoint: " + path);
    out << "trendckpt-v1\n";
    write_params(out, "policy", agent.policy);
    write_params(out, "q1", agent.q1);
    write_params(out, "q2", agent.q2);
    write_params(out, "q1_target", agent.q1_target);
    write_params(out, "q2_target", agent.q2_target);
    write_params(out, "reward_1", ensemble.members[0]);
    write_params(out, "reward_2", ensemble.members[1]);
    write_params(out, "reward_3", ensemble.members[2]);
}

EvalResult evaluate_policy(SacAgent& agent, EnvKind kind, std::size_t episodes, std::uint64_t seed_base) {
    EvalResult res;
    for (std::size_t e = 0; e < episodes; ++e) {
        EnvState s = env_reset(kind, derive_seed(seed_base, e));
        double ep_return = 0.0;
        bool succeeded = false;
        for (int t = 0; t < kEpisodeLen; ++t) {
            const std::vector<double> a = agent.act(encode_obs(s), ActionMode::kMean);
            StepResult r = env_step(s, Action{a[0], a[1]});
            ep_return += r.true_reward;
            s = r.next;
            if (r.success) succeeded = true;
            if (r.done) break;
        }
        res.success_rate += succeeded ? 1.0 : 0.0;
        res.mean_return += ep_return;
    }
    res.success_rate /= static_cast<double>(episodes);
    res.mean_return /= static_cast<double>(episodes);
    return res;
}

RunResult run_experiment(const RunConfig& cfg, const std::string& out_dir, const RunHooks* hooks) {
    cfg.validate();
    const EnvKind env = cfg.env;
    const std::size_t od = obs_dim(env);

    SacAgent agent(sac_config_for(cfg), derive_seed(cfg.seed, kAgentStream));
    RewardEnsemble ensemble = RewardEnsemble::initialized(env, cfg.reward_hidden, cfg.reward_layers, cfg.reward_lr,
                                                          derive_seed(cfg.seed, kEnsembleStream));
    ReplayBuffer buffer(cfg.sac_capacity);
    EpisodeStore store(512);
    PrefDataset dataset;
    QueryBudget budget;
    budget.total = cfg.budget;
    budget.per_session = cfg.per_session;
    budget.candidate_pool = cfg.candidate_pool;
    budget.session_interval = static_cast<std::size_t>(cfg.session_interval);
    budget.count_skips = cfg.count_skips;

    std::unique_ptr<Annotator> annotator;
    if (cfg.annotator == AnnotatorKind::kScripted) {
        annotator = std::make_unique<NoisyScriptedAnnotator>(cfg.epsilon, cfg.tie_tolerance,
                                                             derive_seed(cfg.seed, kAnnotatorStream));
    } else {
        annotator = std::make_unique<MockVlmAnnotator>(cfg.fixture);
    }
    std::mt19937_64 query_rng(derive_seed(cfg.seed, kQueryStream));
    std::mt19937_64 warmup_rng(derive_seed(cfg.seed, kWarmupStream));
    std::uniform_real_distribution<double> uniform_action(-1.0, 1.0);

    const TeachSchedule schedule = cfg.schedule == TeachKind::kTri ? TeachSchedule::cyclic()
                                                                   : TeachSchedule::self_teach();
    RewardTrainConfig reward_cfg;
    reward_cfg.gamma_rate = cfg.gamma_rate;
    reward_cfg.epochs = cfg.reward_epochs;
    reward_cfg.batch_size = cfg.reward_batch;
    reward_cfg.fresh_selection_per_batch = cfg.fresh_selection;

    DemoSet demos;
    AlphaSchedule alpha;
    alpha.start = cfg.alpha_start;
    alpha.end = cfg.alpha_end;
    alpha.horizon_steps = std::max<long>(1, static_cast<long>(cfg.alpha_horizon_frac *
                                                              static_cast<double>(cfg.total_steps)));
    if (cfg.n_demos > 0) {
        demos = cfg.demo_file.empty() ? generate_demos(env, cfg.n_demos, derive_seed(cfg.seed, kDemoStream))
                                      : load_demos(cfg.demo_file);
        if (demos.kind != env) throw ConfigError("demo file env kind does not match run.env");
        if (demos.trajectories.size() != cfg.n_demos)
            throw ConfigError("demo file holds a different trajectory count than demos.n_demos");
        BcConfig bc;
        bc.epochs = cfg.bc_epochs;
        bc.lr = cfg.bc_lr;
        bc_pretrain(agent.policy, demos, bc);
    }

    RunResult result;
    std::array<double, 3> last_sel_clean{};
    std::array<double, 3> last_loss{};
    std::uint64_t episode_counter = 0;
    std::uint64_t session_counter = 0;

    EnvState state = env_reset(env, derive_seed(derive_seed(cfg.seed, kEnvStream), episode_counter));
    Episode episode;

    try {
        for (long t = 1; t <= cfg.total_steps; ++t) {
            const std::vector<double> obs = encode_obs(state);
            std::vector<double> action;
            // Random-action warmup runs in every mode: preference learning
            // needs decorrelated (state, action) coverage or the reward model
            // assigns arbitrary credit off the policy manifold. The policy
            // itself is untouched until the first reward session either way.
            if (t <= cfg.warmup_steps) {
                action = {uniform_action(warmup_rng), uniform_action(warmup_rng)};
            } else {
                action = agent.act(obs, ActionMode::kStochastic);
            }
            StepResult step = env_step(state, Action{action[0], action[1]});

            Transition tr;
            tr.s = obs;
            tr.a = action;
            tr.r_hat = ensemble_reward(ensemble, obs, action);
            tr.s_next = encode_obs(step.next);
            tr.done = step.done;
            buffer.push(std::move(tr));

            episode.states.push_back(state);
            episode.actions.push_back({action[0], action[1]});
            episode.true_rewards.push_back(step.true_reward);
            episode.success = episode.success || step.success;

            // Collection episodes run to the horizon (success is a flag, not a
            // terminator) so every episode yields full-length segment windows.
            if (step.next.t >= kEpisodeLen) {
                store.add(std::move(episode));
                episode = Episode{};
                ++episode_counter;
                state = env_reset(env, derive_seed(derive_seed(cfg.seed, kEnvStream), episode_counter));
            } else {
                state = step.next;
            }

            if (t % cfg.session_interval == 0) {
                const QuerySessionResult q = query_session(store, cfg.segment_len, *annotator, budget, ensemble,
                                                           dataset, query_rng, cfg.tie_tolerance,
                                                           cfg.drop_tie_pairs);
                if (q.starved) {
                    std::fprintf(stderr, "note: query session at step %ld skipped (%s)\n", t,
                                 budget.remaining() == 0 ? "budget exhausted" : "no eligible episodes");
                }
                if (q.queried > 0 && !dataset.trainable_indices().empty()) {
                    SessionStats stats =
                        run_reward_session(ensemble, dataset, reward_cfg, schedule, session_counter++,
                                           hooks != nullptr ? hooks->selection_sink : nullptr);
                    relabel_with_ensemble(buffer, ensemble, od);
                    last_sel_clean = stats.selected_clean_ratio;
                    last_loss = stats.mean_loss;
                    result.sessions.push_back(stats);
                }
            }

            // Policy learning starts once the critics have a trained reward to
            // chase; before the first session the stored rewards are noise
            // from the untrained ensemble.
            if (session_counter > 0 && buffer.size() >= cfg.sac_batch && t % cfg.update_every == 0) {
                if (cfg.n_demos > 0) {
                    mixed_policy_update(agent, buffer, demos, t, cfg.lambda_bc, alpha);
                } else {
                    const std::vector<std::size_t> idx = buffer.sample_indices(cfg.sac_batch, agent.rng);
                    std::vector<const Transition*> batch;
                    batch.reserve(idx.size());
                    for (std::size_t i : idx) batch.push_back(&buffer[i]);
                    agent.update(batch);
                }
            }

            if (t % cfg.eval_interval == 0) {
                const EvalResult ev =
                    evaluate_policy(agent, env, cfg.eval_episodes, derive_seed(derive_seed(cfg.seed, kEvalStream),
                                                                               static_cast<std::uint64_t>(t)));
                MetricsRow row;
                row.step = t;
                row.eval_success = ev.success_rate;
                row.eval_return = ev.mean_return;
                row.sel_clean = last_sel_clean;
                row.dataset_clean = dataset.clean_ratio();
                row.reward_loss = last_loss;
                row.feedback_used = budget.used;
                row.alpha_bc = cfg.n_demos > 0 ? alpha.fraction(t) : 0.0;
                result.rows.push_back(row);
            }
        }
    } catch (const NumericError& e) {
        throw NumericError(std::string(e.what()) + " (run aborted; mode " + run_mode_name(cfg.mode) + ", env " +
                           env_kind_name(cfg.env) + ")");
    }

    if (!result.rows.empty()) {
        result.final_success = result.rows.back().eval_success;
        result.final_return = result.rows.back().eval_return;
    }
    result.feedback_used = budget.used;
    result.dataset_clean_ratio = dataset.clean_ratio();
    result.dataset_size = dataset.size();
    result.skipped_pairs = dataset.skipped_count();

    if (!out_dir.empty()) {
        std::filesystem::create_directories(out_dir);
        write_metrics_csv((std::filesystem::path(out_dir) / "metrics.csv").string(), result.rows);
        save_checkpoint((std::filesystem::path(out_dir) / "checkpoint.txt").string(), agent, ensemble);
    }
    return result;
}

SweepResult run_sweep(const RunConfig& base, const std::vector<std::uint64_t>& seeds, const std::string& out_dir,
                      std::size_t jobs) {
    if (seeds.empty()) throw ConfigError("sweep needs at least one seed");
    SweepResult sweep;
    sweep.runs.resize(seeds.size());

    auto run_one = [&](std::size_t i) {
        RunConfig cfg = base;
        cfg.seed = seeds[i];
        std::string dir;
        if (!out_dir.empty())
            dir = (std::filesystem::path(out_dir) / ("seed_" + std::to_string(seeds[i]))).string();
        sweep.runs[i].seed = seeds[i];
        sweep.runs[i].result = run_experiment(cfg, dir);
    };

    if (jobs <= 1) {
        for (std::size_t i = 0; i < seeds.size(); ++i) run_one(i);
    } else {
        std::size_t next = 0;
        while (next < seeds.size()) {
            const std::size_t batch = std::min(jobs, seeds.size() - next);
            std::vector<std::thread> workers;
            for (std::size_t j = 0; j < batch; ++j) workers.emplace_back(run_one, next + j);
            for (auto& w : workers) w.join();
            next += batch;
        }
    }

    double sum_s = 0.0, sum_r = 0.0;
    for (const SweepRun& r : sweep.runs) {
        sum_s += r.result.final_success;
        sum_r += r.result.final_return;
    }
    const double n = static_cast<double>(sweep.runs.size());
    sweep.mean_final_success = sum_s / n;
    sweep.mean_final_return = sum_r / n;
    double var_s = 0.0, var_r = 0.0;
    for (const SweepRun& r : sweep.runs) {
        var_s += (r.result.final_success - sweep.mean_final_success) * (r.result.final_success - sweep.mean_final_success);
        var_r += (r.result.final_return - sweep.mean_final_return) * (r.result.final_return - sweep.mean_final_return);
    }
    sweep.std_final_success = std::sqrt(var_s / n);
    sweep.std_final_return = std::sqrt(var_r / n);

    if (!out_dir.empty()) {
        std::filesystem::create_directories(out_dir);
        std::ofstream out(std::filesystem::path(out_dir) / "summary.csv");
        if (!out) throw ConfigError("cannot write sweep summary in " + out_dir);
        char buf[160];
        out << "seed,final_success,final_return,feedback_used\n";
        for (const SweepRun& r : sweep.runs) {
            std::snprintf(buf, sizeof(buf), "%llu,%.6f,%.6f,%zu",
                          static_cast<unsigned long long>(r.seed), r.result.final_success, r.result.final_return,
                          r.result.feedback_used);
            out << buf << "\n";
        }
        std::snprintf(buf, sizeof(buf), "mean,%.6f,%.6f,", sweep.mean_final_success, sweep.mean_final_return);
        out << buf << "\n";
        std::snprintf(buf, sizeof(buf), "std,%.6f,%.6f,", sweep.std_final_success, sweep.std_final_return);
        out << buf << "\n";
    }
    return sweep;
}

}  // namespace trend
