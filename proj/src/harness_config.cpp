#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "vge/harness.hpp"
#include "vge/ioutil.hpp"

namespace vge {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    std::size_t b = s.find_last_not_of(" \t\r");
    if (a == std::string::npos) return "";
    return s.substr(a, b - a + 1);
}

struct IniData {
    // (section, key) -> value, plus seen-tracking for unknown-key errors
    std::map<std::pair<std::string, std::string>, std::string> kv;

    static IniData parse(const std::string& text) {
        IniData d;
        std::istringstream in(text);
        std::string line, section;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            const std::string t = trim(line.substr(0, line.find('#')));
            if (t.empty()) continue;
            if (t.front() == '[') {
                if (t.back() != ']') throw ConfigError("bad section at line " + std::to_string(lineno));
                section = trim(t.substr(1, t.size() - 2));
                continue;
            }
            const std::size_t eq = t.find('=');
            if (eq == std::string::npos)
                throw ConfigError("expected key = value at line " + std::to_string(lineno));
            const std::string key = trim(t.substr(0, eq));
            const std::string val = trim(t.substr(eq + 1));
            if (section.empty()) throw ConfigError("key outside a [section] at line " + std::to_string(lineno));
            d.kv[{section, key}] = val;
        }
        return d;
    }

    bool take(const std::string& sec, const std::string& key, std::string& out) {
        auto it = kv.find({sec, key});
        if (it == kv.end()) return false;
        out = it->second;
        kv.erase(it);
        return true;
    }
};

long long to_int(const std::string& v, const std::string& what) {
    try {
        std::size_t pos = 0;
        const long long r = std::stoll(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return r;
    } catch (...) {
        throw ConfigError("expected integer for " + what + ", got '" + v + "'");
    }
}

double to_real(const std::string& v, const std::string& what) {
    try {
        std::size_t pos = 0;
        const double r = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return r;
    } catch (...) {
        throw ConfigError("expected number for " + what + ", got '" + v + "'");
    }
}

bool to_bool(const std::string& v, const std::string& what) {
    if (v == "true" || v == "1" || v == "on") return true;
    if (v == "false" || v == "0" || v == "off") return false;
    throw ConfigError("expected boolean for " + what + ", got '" + v + "'");
}

template <class T, class F>
std::vector<T> to_list(const std::string& v, const std::string& what, F conv) {
    std::vector<T> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(T(conv(item, what)));
    }
    if (out.empty()) throw ConfigError("expected nonempty list for " + what);
    return out;
}

std::string join_ints(const std::vector<int>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
    return s;
}

std::string join_seeds(const std::vector<std::uint64_t>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
    return s;
}

}  // namespace

RunConfig RunConfig::defaults(const std::string& env_name) {
    RunConfig c;
    c.env.name = env_name;
    if (env_name == "gridnav") {
        c.env.t_max = 40;
        c.policy.h = 1;
        c.policy.h_exec = 1;
        c.explore.replan_on_exhaust = true;
        c.explore.tau_goal = 0.5f;  // one-hot cell match
    }
    c.finalize();
    return c;
}

void RunConfig::finalize() {
    env.validate();
    auto probe = make_env(env);
    policy.obs_dim = probe->obs_dim();
    policy.action_dim = probe->action_dim();
    policy.discrete = probe->discrete();
    policy.n_actions = probe->action_count();
    if (policy.discrete && policy.h != 1)
        throw ConfigError("discrete environments use single-action policies (h = 1)");
    policy.validate();
    explore.validate();
    corruption.validate(explore.subgoal_horizon);
    if (eval_cadence < 1) throw ConfigError("eval cadence must be >= 1");
    if (eval_episodes < 1) throw ConfigError("eval episodes must be >= 1");
    if (seeds.empty()) throw ConfigError("at least one seed required");
    if (gcbc_goal_mode != "oracle" && gcbc_goal_mode != "final")
        throw ConfigError("gcbc_goal_mode must be oracle or final");
    if (demos_per_task < 1) throw ConfigError("demos_per_task must be >= 1");
    if (baseline_iterations < 1) throw ConfigError("baseline_iterations must be >= 1");
}

RunConfig RunConfig::from_ini(const std::string& text) {
    IniData ini = IniData::parse(text);
    std::string v;
    RunConfig c;
    if (ini.take("env", "name", v)) c.env.name = v;
    c = defaults(c.env.name);
    ini = IniData::parse(text);  // reparse; defaults consumed nothing else

    if (ini.take("env", "name", v)) c.env.name = v;
    if (ini.take("env", "t_max", v)) c.env.t_max = int(to_int(v, "env.t_max"));
    if (ini.take("env", "move_bound", v)) c.env.move_bound = real(to_real(v, "env.move_bound"));
    if (ini.take("env", "grasp_radius", v)) c.env.grasp_radius = real(to_real(v, "env.grasp_radius"));
    if (ini.take("env", "target_radius", v))
        c.env.target_radius = real(to_real(v, "env.target_radius"));
    if (ini.take("env", "grid_size", v)) c.env.grid_size = int(to_int(v, "env.grid_size"));
    if (ini.take("env", "wall_seed", v)) c.env.wall_seed = std::uint64_t(to_int(v, "env.wall_seed"));
    if (ini.take("env", "map_path", v)) c.env.map_path = v;
    if (ini.take("env", "raster_obs", v)) c.env.raster_obs = to_bool(v, "env.raster_obs");

    if (ini.take("policy", "kind", v)) c.policy.kind = policy_kind_from_string(v);
    if (ini.take("policy", "h", v)) c.policy.h = int(to_int(v, "policy.h"));
    if (ini.take("policy", "h_exec", v)) c.policy.h_exec = int(to_int(v, "policy.h_exec"));
    if (ini.take("policy", "diffusion_steps", v))
        c.policy.diffusion_steps = int(to_int(v, "policy.diffusion_steps"));
    if (ini.take("policy", "beta_start", v)) c.policy.beta_start = real(to_real(v, "policy.beta_start"));
    if (ini.take("policy", "beta_end", v)) c.policy.beta_end = real(to_real(v, "policy.beta_end"));
    if (ini.take("policy", "sampler", v)) {
        if (v == "ancestral")
            c.policy.sampler = SamplerKind::ancestral;
        else if (v == "strided")
            c.policy.sampler = SamplerKind::strided;
        else
            throw ConfigError("policy.sampler must be ancestral or strided");
    }
    if (ini.take("policy", "sample_stride", v))
        c.policy.sample_stride = int(to_int(v, "policy.sample_stride"));
    if (ini.take("policy", "time_embed_dim", v))
        c.policy.time_embed_dim = int(to_int(v, "policy.time_embed_dim"));
    if (ini.take("policy", "hidden", v)) c.policy.hidden = to_list<int>(v, "policy.hidden", to_int);
    if (ini.take("policy", "denoiser_hidden", v))
        c.policy.denoiser_hidden = to_list<int>(v, "policy.denoiser_hidden", to_int);
    if (ini.take("policy", "lr", v)) c.policy.lr = real(to_real(v, "policy.lr"));

    if (ini.take("explore", "n_r", v)) c.explore.n_r = int(to_int(v, "explore.n_r"));
    if (ini.take("explore", "q_v", v)) c.explore.q_v = to_int(v, "explore.q_v");
    if (ini.take("explore", "q_r", v)) c.explore.q_r = to_int(v, "explore.q_r");
    if (ini.take("explore", "n_e", v)) c.explore.n_e = int(to_int(v, "explore.n_e"));
    if (ini.take("explore", "l_c", v)) c.explore.l_c = int(to_int(v, "explore.l_c"));
    if (ini.take("explore", "sigma", v)) c.explore.sigma = real(to_real(v, "explore.sigma"));
    if (ini.take("explore", "p_grasp", v)) c.explore.p_grasp = real(to_real(v, "explore.p_grasp"));
    if (ini.take("explore", "k_sub", v)) c.explore.k_sub = int(to_int(v, "explore.k_sub"));
    if (ini.take("explore", "tau_goal", v)) c.explore.tau_goal = real(to_real(v, "explore.tau_goal"));
    if (ini.take("explore", "iterations", v)) c.explore.iterations = to_int(v, "explore.iterations");
    if (ini.take("explore", "subgoal_horizon", v))
        c.explore.subgoal_horizon = int(to_int(v, "explore.subgoal_horizon"));
    if (ini.take("explore", "replan_on_exhaust", v))
        c.explore.replan_on_exhaust = to_bool(v, "explore.replan_on_exhaust");
    if (ini.take("explore", "capacity", v)) c.explore.capacity = int(to_int(v, "explore.capacity"));
    if (ini.take("explore", "batch_size", v))
        c.explore.batch_size = int(to_int(v, "explore.batch_size"));

    if (ini.take("oracle", "corruption", v)) c.corruption.kind = corruption_kind_from_string(v);
    if (ini.take("oracle", "hallucinate_from", v))
        c.corruption.hallucinate_from = int(to_int(v, "oracle.hallucinate_from"));
    if (ini.take("oracle", "jitter_sigma", v))
        c.corruption.jitter_sigma = real(to_real(v, "oracle.jitter_sigma"));

    if (ini.take("eval", "cadence", v)) c.eval_cadence = int(to_int(v, "eval.cadence"));
    if (ini.take("eval", "episodes", v)) c.eval_episodes = int(to_int(v, "eval.episodes"));

    if (ini.take("run", "seeds", v)) c.seeds = to_list<std::uint64_t>(v, "run.seeds", to_int);
    if (ini.take("run", "out_dir", v)) c.out_dir = v;
    if (ini.take("run", "gcbc_goal_mode", v)) c.gcbc_goal_mode = v;
    if (ini.take("run", "demos_per_task", v)) c.demos_per_task = int(to_int(v, "run.demos_per_task"));
    if (ini.take("run", "baseline_iterations", v))
        c.baseline_iterations = to_int(v, "run.baseline_iterations");

    if (!ini.kv.empty()) {
        const auto& [sk, val] = *ini.kv.begin();
        throw ConfigError("unknown config key: [" + sk.first + "] " + sk.second);
    }
    c.finalize();
    return c;
}

RunConfig RunConfig::from_ini_file(const std::string& path) {
    return from_ini(read_file(path));
}

std::string RunConfig::canonical_ini() const {
    std::ostringstream o;
    o << "[env]\n";
    o << "name = " << env.name << "\n";
    o << "t_max = " << env.t_max << "\n";
    o << "move_bound = " << fmt_double(env.move_bound) << "\n";
    o << "grasp_radius = " << fmt_double(env.grasp_radius) << "\n";
    o << "target_radius = " << fmt_double(env.target_radius) << "\n";
    o << "grid_size = " << env.grid_size << "\n";
    o << "wall_seed = " << env.wall_seed << "\n";
    o << "map_path = " << env.map_path << "\n";
    o << "raster_obs = " << (env.raster_obs ? "true" : "false") << "\n";
    o << "\n[policy]\n";
    o << "kind = " << to_string(policy.kind) << "\n";
    o << "h = " << policy.h << "\n";
    o << "h_exec = " << policy.h_exec << "\n";
    o << "diffusion_steps = " << policy.diffusion_steps << "\n";
    o << "beta_start = " << fmt_double(policy.beta_start) << "\n";
    o << "beta_end = " << fmt_double(policy.beta_end) << "\n";
    o << "sampler = " << (policy.sampler == SamplerKind::ancestral ? "ancestral" : "strided") << "\n";
    o << "sample_stride = " << policy.sample_stride << "\n";
    o << "time_embed_dim = " << policy.time_embed_dim << "\n";
    o << "hidden = " << join_ints(policy.hidden) << "\n";
    o << "denoiser_hidden = " << join_ints(policy.denoiser_hidden) << "\n";
    o << "lr = " << fmt_double(policy.lr) << "\n";
    o << "\n[explore]\n";
    o << "n_r = " << explore.n_r << "\n";
    o << "q_v = " << explore.q_v << "\n";
    o << "q_r = " << explore.q_r << "\n";
    o << "n_e = " << explore.n_e << "\n";
    o << "l_c = " << explore.l_c << "\n";
    o << "sigma = " << fmt_double(explore.sigma) << "\n";
    o << "p_grasp = " << fmt_double(explore.p_grasp) << "\n";
    o << "k_sub = " << explore.k_sub << "\n";
    o << "tau_goal = " << fmt_double(explore.tau_goal) << "\n";
    o << "iterations = " << explore.iterations << "\n";
    o << "subgoal_horizon = " << explore.subgoal_horizon << "\n";
    o << "replan_on_exhaust = " << (explore.replan_on_exhaust ? "true" : "false") << "\n";
    o << "capacity = " << explore.capacity << "\n";
    o << "batch_size = " << explore.batch_size << "\n";
    o << "\n[oracle]\n";
    o << "corruption = " << to_string(corruption.kind) << "\n";
    o << "hallucinate_from = " << corruption.hallucinate_from << "\n";
    o << "jitter_sigma = " << fmt_double(corruption.jitter_sigma) << "\n";
    o << "\n[eval]\n";
    o << "cadence = " << eval_cadence << "\n";
    o << "episodes = " << eval_episodes << "\n";
    o << "\n[run]\n";
    o << "seeds = " << join_seeds(seeds) << "\n";
    o << "out_dir = " << out_dir << "\n";
    o << "gcbc_goal_mode = " << gcbc_goal_mode << "\n";
    o << "demos_per_task = " << demos_per_task << "\n";
    o << "baseline_iterations = " << baseline_iterations << "\n";
    return o.str();
}

std::string RunConfig::config_hash() const { return sha1_hex(canonical_ini()); }
std::string RunConfig::content_hash() const { return git_blob_hash(canonical_ini()); }

std::string artifact_header(const RunConfig& cfg) {
    return "config_hash=" + cfg.config_hash() + " content_hash=" + cfg.content_hash();
}

Policy make_policy(const RunConfig& cfg) {
    auto env = make_env(cfg.env);
    return Policy(cfg.policy, env->bounds());
}

TrainingSetup make_setup(const RunConfig& cfg, const std::string& checkpoint_dir) {
    TrainingSetup s;
    s.env = cfg.env;
    s.explore = cfg.explore;
    s.corruption = cfg.corruption;
    s.eval_every = cfg.eval_cadence;
    s.eval_episodes = cfg.eval_episodes;
    s.checkpoint_dir = checkpoint_dir;
    return s;
}

void save_checkpoint(const Policy& policy, const std::string& path) { policy.save(path); }

Policy load_checkpoint(const std::string& path) { return Policy::load(path); }

Policy load_checkpoint_checked(const std::string& path, const RunConfig& cfg) {
    Policy p = Policy::load(path);
    const PolicyConfig& got = p.config();
    const PolicyConfig& want = cfg.policy;
    if (got.obs_dim != want.obs_dim || got.action_dim != want.action_dim ||
        got.discrete != want.discrete || got.n_actions != want.n_actions)
        throw ConfigMismatch("checkpoint was trained for a different environment");
    if (got.kind != want.kind || got.h != want.h)
        throw ConfigMismatch("checkpoint head does not match the configured policy");
    return p;
}

}  // namespace vge
