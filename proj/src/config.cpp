#include "trend/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <sstream>

#include "trend/errors.hpp"

namespace trend {

const char* run_mode_name(RunMode mode) {
    switch (mode) {
        case RunMode::kTrend: return "trend";
        case RunMode::kTrendNoDemo: return "trend_no_demo";
        case RunMode::kPebble: return "pebble";
        case RunMode::kPebbleDemo: return "pebble_demo";
        case RunMode::kSelfTeach: return "self_teach";
    }
    return "?";
}

namespace {

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

RunMode parse_mode(const std::string& v) {
    if (v == "trend") return RunMode::kTrend;
    if (v == "trend_no_demo") return RunMode::kTrendNoDemo;
    if (v == "pebble") return RunMode::kPebble;
    if (v == "pebble_demo") return RunMode::kPebbleDemo;
    if (v == "self_teach") return RunMode::kSelfTeach;
    throw ConfigError("run.mode: unknown mode '" + v + "'");
}

double to_double(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const double d = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("trailing");
        return d;
    } catch (const std::exception&) {
        throw ConfigError(key + ": expected a number, got '" + v + "'");
    }
}

long to_long(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const long d = std::stol(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("trailing");
        return d;
    } catch (const std::exception&) {
        throw ConfigError(key + ": expected an integer, got '" + v + "'");
    }
}

std::size_t to_size(const std::string& key, const std::string& v) {
    const long d = to_long(key, v);
    if (d < 0) throw ConfigError(key + ": must be non-negative");
    return static_cast<std::size_t>(d);
}

bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw ConfigError(key + ": expected true/false, got '" + v + "'");
}

std::size_t default_demo_count(EnvKind env) { return env == EnvKind::kPointReach ? 1u : 3u; }

}  // namespace

RunConfig parse_config_text(const std::string& text) {
    std::map<std::string, std::string> kv;
    std::vector<std::string> order;
    std::string section;
    std::istringstream in(text);
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        std::string line = raw;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError("line " + std::to_string(line_no) + ": malformed section header");
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
        const std::string key = (section.empty() ? "" : section + ".") + trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (kv.count(key)) throw ConfigError("duplicate key '" + key + "'");
        kv[key] = value;
        order.push_back(key);
    }

    RunConfig cfg;
    // Mode and env first; they drive the defaults the other keys override.
    if (auto it = kv.find("run.env"); it != kv.end()) cfg.env = env_kind_from_name(it->second);
    if (auto it = kv.find("run.mode"); it != kv.end()) cfg.mode = parse_mode(it->second);

    switch (cfg.mode) {
        case RunMode::kTrend:
            cfg.schedule = TeachKind::kTri;
            cfg.gamma_rate = 0.6;
            cfg.n_demos = default_demo_count(cfg.env);
            break;
        case RunMode::kTrendNoDemo:
            cfg.schedule = TeachKind::kTri;
            cfg.gamma_rate = 0.6;
            cfg.n_demos = 0;
            break;
        case RunMode::kPebble:
            cfg.schedule = TeachKind::kSelf;
            cfg.gamma_rate = 1.0;
            cfg.n_demos = 0;
            break;
        case RunMode::kPebbleDemo:
            cfg.schedule = TeachKind::kSelf;
            cfg.gamma_rate = 1.0;
            cfg.n_demos = default_demo_count(cfg.env);
            break;
        case RunMode::kSelfTeach:
            cfg.schedule = TeachKind::kSelf;
            cfg.gamma_rate = 0.6;
            cfg.n_demos = default_demo_count(cfg.env);
            break;
    }

    for (const std::string& key : order) {
        const std::string& v = kv[key];
        if (key == "run.env" || key == "run.mode") continue;
        if (key == "run.seed") cfg.seed = static_cast<std::uint64_t>(to_long(key, v));
        else if (key == "run.total_steps") cfg.total_steps = to_long(key, v);
        else if (key == "run.eval_interval") cfg.eval_interval = to_long(key, v);
        else if (key == "run.eval_episodes") cfg.eval_episodes = to_size(key, v);
        else if (key == "run.warmup_steps") cfg.warmup_steps = to_long(key, v);
        else if (key == "noise.epsilon") cfg.epsilon = to_double(key, v);
        else if (key == "noise.tie_tolerance") cfg.tie_tolerance = to_double(key, v);
        else if (key == "noise.drop_tie_pairs") cfg.drop_tie_pairs = to_bool(key, v);
        else if (key == "teach.gamma_rate") cfg.gamma_rate = to_double(key, v);
        else if (key == "teach.schedule") {
            if (v == "tri") cfg.schedule = TeachKind::kTri;
            else if (v == "self") cfg.schedule = TeachKind::kSelf;
            else throw ConfigError("teach.schedule: expected tri or self, got '" + v + "'");
        } else if (key == "teach.reward_epochs") cfg.reward_epochs = to_size(key, v);
        else if (key == "teach.reward_batch") cfg.reward_batch = to_size(key, v);
        else if (key == "teach.fresh_selection") cfg.fresh_selection = to_bool(key, v);
        else if (key == "demos.n_demos") cfg.n_demos = to_size(key, v);
        else if (key == "demos.demo_file") cfg.demo_file = v;
        else if (key == "demos.lambda_bc") cfg.lambda_bc = to_double(key, v);
        else if (key == "demos.alpha_start") cfg.alpha_start = to_double(key, v);
        else if (key == "demos.alpha_end") cfg.alpha_end = to_double(key, v);
        else if (key == "demos.alpha_horizon_frac") cfg.alpha_horizon_frac = to_double(key, v);
        else if (key == "demos.bc_epochs") cfg.bc_epochs = to_size(key, v);
        else if (key == "demos.bc_lr") cfg.bc_lr = to_double(key, v);
        else if (key == "query.budget") cfg.budget = to_size(key, v);
        else if (key == "query.per_session") cfg.per_session = to_size(key, v);
        else if (key == "query.candidate_pool") cfg.candidate_pool = to_size(key, v);
        else if (key == "query.session_interval") cfg.session_interval = to_long(key, v);
        else if (key == "query.annotator") {
            if (v == "scripted") cfg.annotator = AnnotatorKind::kScripted;
            else if (v == "mockvlm") cfg.annotator = AnnotatorKind::kMockVlm;
            else throw ConfigError("query.annotator: expected scripted or mockvlm, got '" + v + "'");
        } else if (key == "query.fixture") cfg.fixture = v;
        else if (key == "query.count_skips") cfg.count_skips = to_bool(key, v);
        else if (key == "query.segment_len") cfg.segment_len = to_size(key, v);
        else if (key == "sac.lr") cfg.sac_lr = to_double(key, v);
        else if (key == "sac.batch") cfg.sac_batch = to_size(key, v);
        else if (key == "sac.capacity") cfg.sac_capacity = to_size(key, v);
        else if (key == "sac.alpha_ent") cfg.alpha_ent = to_double(key, v);
        else if (key == "sac.discount") cfg.discount = to_double(key, v);
        else if (key == "sac.tau") cfg.tau = to_double(key, v);
        else if (key == "sac.update_every") cfg.update_every = to_long(key, v);
        else if (key == "nets.reward_hidden") cfg.reward_hidden = to_size(key, v);
        else if (key == "nets.reward_layers") cfg.reward_layers = to_size(key, v);
        else if (key == "nets.reward_lr") cfg.reward_lr = to_double(key, v);
        else if (key == "nets.policy_hidden") cfg.policy_hidden = to_size(key, v);
        else if (key == "nets.policy_layers") cfg.policy_layers = to_size(key, v);
        else if (key == "nets.policy_act") {
            if (v == "tanh") cfg.policy_act = Activation::kTanh;
            else if (v == "relu") cfg.policy_act = Activation::kRelu;
            else throw ConfigError("nets.policy_act: expected tanh or relu, got '" + v + "'");
        } else {
            throw ConfigError("unknown config key '" + key + "'");
        }
    }

    cfg.validate();
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

void RunConfig::validate() const {
    const std::string m = run_mode_name(mode);
    // Mode consistency on the resolved values.
    if (mode == RunMode::kPebble || mode == RunMode::kPebbleDemo) {
        if (gamma_rate != 1.0)
            throw ConfigError("mode " + m + " forces teach.gamma_rate = 1.0 (no denoising)");
        if (schedule != TeachKind::kSelf) throw ConfigError("mode " + m + " forces teach.schedule = self");
    }
    if (mode == RunMode::kPebble && n_demos != 0) throw ConfigError("mode pebble forces demos.n_demos = 0");
    if (mode == RunMode::kPebbleDemo && n_demos == 0)
        throw ConfigError("mode pebble_demo requires demos.n_demos >= 1");
    if (mode == RunMode::kTrendNoDemo && n_demos != 0)
        throw ConfigError("mode trend_no_demo forces demos.n_demos = 0");
    if (mode == RunMode::kSelfTeach && schedule != TeachKind::kSelf)
        throw ConfigError("mode self_teach forces teach.schedule = self");

    if (total_steps < 1) throw ConfigError("run.total_steps must be >= 1");
    if (eval_interval < 1 || eval_interval > total_steps)
        throw ConfigError("run.eval_interval must be in [1, total_steps]");
    if (eval_episodes < 1) throw ConfigError("run.eval_episodes must be >= 1");
    if (warmup_steps < 0) throw ConfigError("run.warmup_steps must be >= 0");
    if (epsilon < 0.0 || epsilon > 1.0) throw ConfigError("noise.epsilon must be in [0, 1]");
    if (tie_tolerance < 0.0) throw ConfigError("noise.tie_tolerance must be >= 0");
    if (!(gamma_rate > 0.0) || gamma_rate > 1.0) throw ConfigError("teach.gamma_rate must be in (0, 1]");
    if (reward_epochs < 1) throw ConfigError("teach.reward_epochs must be >= 1");
    if (reward_batch < 1) throw ConfigError("teach.reward_batch must be >= 1");
    if (n_demos > 3) throw ConfigError("demos.n_demos must be <= 3");
    if (lambda_bc < 0.0) throw ConfigError("demos.lambda_bc must be >= 0");
    if (alpha_start < 0.0 || alpha_start > 1.0) throw ConfigError("demos.alpha_start must be in [0, 1]");
    if (alpha_end < 0.0 || alpha_end > alpha_start)
        throw ConfigError("demos.alpha_end must be in [0, alpha_start]");
    if (alpha_horizon_frac <= 0.0 || alpha_horizon_frac > 1.0)
        throw ConfigError("demos.alpha_horizon_frac must be in (0, 1]");
    if (per_session < 1) throw ConfigError("query.per_session must be >= 1");
    if (candidate_pool < per_session) throw ConfigError("query.candidate_pool must be >= query.per_session");
    if (session_interval < 1) throw ConfigError("query.session_interval must be >= 1");
    if (annotator == AnnotatorKind::kMockVlm && fixture.empty())
        throw ConfigError("query.annotator = mockvlm requires query.fixture");
    if (segment_len < 1 || segment_len > static_cast<std::size_t>(kEpisodeLen))
        throw ConfigError("query.segment_len must be in [1, episode length]");
    if (sac_batch < 1 || sac_batch > sac_capacity) throw ConfigError("sac.batch must be in [1, sac.capacity]");
    if (sac_lr <= 0.0 || reward_lr <= 0.0 || bc_lr <= 0.0) throw ConfigError("learning rates must be positive");
    if (discount < 0.0 || discount >= 1.0) throw ConfigError("sac.discount must be in [0, 1)");
    if (tau <= 0.0 || tau > 1.0) throw ConfigError("sac.tau must be in (0, 1]");
    if (update_every < 1) throw ConfigError("sac.update_every must be >= 1");
    if (reward_hidden < 1 || reward_layers < 1 || policy_hidden < 1 || policy_layers < 1)
        throw ConfigError("nets.* sizes must be >= 1");
}

}  // namespace trend
