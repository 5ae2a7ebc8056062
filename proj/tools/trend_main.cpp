#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "trend/annotate.hpp"
#include "trend/config.hpp"
#include "trend/demos.hpp"
#include "trend/errors.hpp"
#include "trend/runner.hpp"

namespace {

int run_command(const std::string& config_path, long seed_override, const std::string& out_dir) {
    trend::RunConfig cfg = trend::load_config(config_path);
    if (seed_override >= 0) cfg.seed = static_cast<std::uint64_t>(seed_override);
    cfg.validate();
    trend::RunResult result = trend::run_experiment(cfg, out_dir);
    std::printf("run complete: mode=%s env=%s seed=%llu final_success=%.3f final_return=%.3f feedback=%zu\n",
                trend::run_mode_name(cfg.mode), trend::env_kind_name(cfg.env),
                static_cast<unsigned long long>(cfg.seed), result.final_success, result.final_return,
                result.feedback_used);
    std::printf("metrics: %s/metrics.csv\n", out_dir.c_str());
    return 0;
}

int demos_command(const std::string& env_name, std::size_t n, long seed, const std::string& out_path) {
    const trend::EnvKind kind = trend::env_kind_from_name(env_name);
    trend::DemoSet demos = trend::generate_demos(kind, n, static_cast<std::uint64_t>(seed));
    trend::save_demos(demos, out_path);
    std::printf("wrote %zu expert trajectories (%zu steps) to %s\n", demos.trajectories.size(), demos.step_count(),
                out_path.c_str());
    return 0;
}

int sweep_command(const std::string& config_path, const std::vector<long>& seeds, const std::string& out_dir,
                  std::size_t jobs) {
    trend::RunConfig cfg = trend::load_config(config_path);
    std::vector<std::uint64_t> s;
    for (long v : seeds) {
        if (v < 0) throw trend::ConfigError("--seeds entries must be non-negative");
        s.push_back(static_cast<std::uint64_t>(v));
    }
    trend::SweepResult sweep = trend::run_sweep(cfg, s, out_dir, jobs);
    std::printf("sweep complete over %zu seeds: final_success mean=%.3f std=%.3f\n", s.size(),
                sweep.mean_final_success, sweep.std_final_success);
    std::printf("summary: %s/summary.csv\n", out_dir.c_str());
    return 0;
}

int fixture_command(const std::string& env_name, long seed, std::size_t pairs, double noise_rate, double skip_rate,
                    std::size_t segment_len, const std::string& out_path) {
    const trend::EnvKind kind = trend::env_kind_from_name(env_name);
    const double realized = trend::generate_vlm_fixture(out_path, kind, static_cast<std::uint64_t>(seed), pairs,
                                                        noise_rate, skip_rate, segment_len);
    std::printf("wrote fixture %s: %zu pairs, realized oracle-disagreement rate %.4f\n", out_path.c_str(), pairs,
                realized);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"TREND: tri-teaching preference-based RL on toy control tasks"};
    app.require_subcommand(1);

    std::string config_path, out_dir = "out", out_path, env_name = "point_reach";
    long seed = -1;
    std::size_t n_demos = 1, pairs = 1000, jobs = 1, segment_len = 50;
    double noise_rate = 0.0, skip_rate = 0.0;
    std::vector<long> seeds;

    CLI::App* run = app.add_subcommand("run", "run one experiment from a config file");
    run->add_option("--config", config_path, "config file path")->required();
    run->add_option("--seed", seed, "override run.seed");
    run->add_option("--out", out_dir, "output directory")->required();

    CLI::App* demos = app.add_subcommand("demos", "expert demonstration tools");
    CLI::App* demos_gen = demos->add_subcommand("generate", "generate expert demonstrations");
    demos_gen->add_option("--env", env_name, "point_reach or two_phase_pull")->required();
    demos_gen->add_option("--n", n_demos, "number of demos (1..3)")->required();
    demos_gen->add_option("--seed", seed, "generation seed")->required();
    demos_gen->add_option("--out", out_path, "demo file path")->required();
    demos->require_subcommand(1);

    CLI::App* sweep = app.add_subcommand("sweep", "run one config across several seeds");
    sweep->add_option("--config", config_path, "config file path")->required();
    sweep->add_option("--seeds", seeds, "seed list")->required()->delimiter(',');
    sweep->add_option("--out", out_dir, "output directory")->required();
    sweep->add_option("--jobs", jobs, "concurrent runs (default 1)");

    CLI::App* fixture = app.add_subcommand("fixture", "mock-VLM fixture tools");
    CLI::App* fixture_gen = fixture->add_subcommand("gen-vlm", "generate a mock-VLM response fixture");
    fixture_gen->add_option("--noise-rate", noise_rate, "oracle-disagreement rate in [0,1]")->required();
    fixture_gen->add_option("--pairs", pairs, "number of responses")->required();
    fixture_gen->add_option("--out", out_path, "fixture file path")->required();
    fixture_gen->add_option("--env", env_name, "environment (default point_reach)");
    fixture_gen->add_option("--seed", seed, "pair-stream seed (default 1)");
    fixture_gen->add_option("--skip-rate", skip_rate, "forced no_preference fraction");
    fixture_gen->add_option("--segment-len", segment_len, "segment length H (default 50)");
    fixture->require_subcommand(1);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        std::fprintf(stderr, "argument error: %s\n", e.what());
        return 2;
    }

    try {
        if (app.got_subcommand(run)) return run_command(config_path, seed, out_dir);
        if (app.got_subcommand(demos)) return demos_command(env_name, n_demos, seed < 0 ? 1 : seed, out_path);
        if (app.got_subcommand(sweep)) return sweep_command(config_path, seeds, out_dir, jobs);
        if (app.got_subcommand(fixture))
            return fixture_command(env_name, seed < 0 ? 1 : seed, pairs, noise_rate, skip_rate, segment_len,
                                   out_path);
    } catch (const trend::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const trend::NumericError& e) {
        std::fprintf(stderr, "numeric failure: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
