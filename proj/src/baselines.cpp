#include "vge/baselines.hpp"

#include <algorithm>
#include <cmath>

#include "vge/explore.hpp"
#include "vge/oracle.hpp"
#include "vge/replay.hpp"

namespace vge {

void DemoDataset::ingest(Episode e) {
    e.validate();
    if (e.source != EpisodeSource::expert)
        throw std::invalid_argument("demo dataset only accepts expert episodes");
    if (!e.success) throw std::invalid_argument("demo dataset only accepts successful episodes");
    if (int(per_task_count.size()) <= e.task.id) per_task_count.resize(std::size_t(e.task.id) + 1, 0);
    ++per_task_count[std::size_t(e.task.id)];
    episodes.push_back(std::move(e));
}

DemoDataset generate_demos(Env& env, const std::vector<Task>& tasks, int n_per_task,
                           RngStream rng) {
    if (n_per_task < 1) throw std::invalid_argument("n_per_task must be >= 1");
    DemoDataset out;
    out.seed = rng.seed();
    std::uint64_t attempt = 0;
    for (const Task& t : tasks) {
        int got = 0;
        std::uint64_t tries = 0;
        while (got < n_per_task) {
            if (tries++ > std::uint64_t(n_per_task) * 10)
                throw PlanningFailure("demo generation exceeded 10x oversampling");
            try {
                Episode e = expert_rollout(env, t, rng.fork("demo", attempt++));
                out.ingest(std::move(e));
                ++got;
            } catch (const PlanningFailure&) {
                continue;  // fresh reset on the next attempt
            }
        }
    }
    return out;
}

BaselineKind baseline_kind_from_string(const std::string& s) {
    if (s == "bc") return BaselineKind::bc;
    if (s == "gcbc") return BaselineKind::gcbc;
    if (s == "dp_bc") return BaselineKind::dp_bc;
    if (s == "dp_gcbc") return BaselineKind::dp_gcbc;
    throw ConfigError("unknown baseline kind: " + s);
}

const char* to_string(BaselineKind k) {
    switch (k) {
        case BaselineKind::bc: return "bc";
        case BaselineKind::gcbc: return "gcbc";
        case BaselineKind::dp_bc: return "dp_bc";
        case BaselineKind::dp_gcbc: return "dp_gcbc";
    }
    return "unknown";
}

void BaselineConfig::validate() const {
    if (iterations < 1 || batch_size < 1) throw ConfigError("bad baseline training sizes");
    if (lr <= 0) throw ConfigError("lr must be > 0");
    if (goal_offset < 1) throw ConfigError("goal_offset must be >= 1");
    if (hidden.empty()) throw ConfigError("hidden widths required");
    if (chunk_h < 1 || chunk_h_exec < 1 || chunk_h_exec > chunk_h)
        throw ConfigError("bad baseline chunk sizes");
}

// ---------------------------------------------------------------------------

BcPolicy::BcPolicy(const Env& env, const std::vector<int>& hidden, real lr)
    : discrete_(env.discrete()),
      n_actions_(env.action_count()),
      action_dim_(env.action_dim()),
      bounds_(env.bounds()) {
    spec_.widths.push_back(env.obs_dim());
    spec_.widths.insert(spec_.widths.end(), hidden.begin(), hidden.end());
    spec_.widths.push_back(discrete_ ? n_actions_ : action_dim_);
    spec_.validate();
    adam_ = nn::AdamState::make(spec_.param_count(), lr);
}

void BcPolicy::init(RngStream& rng) {
    params_ = nn::he_init<real>(spec_, rng);
    initialized_ = true;
}

std::uint64_t BcPolicy::params_hash() const {
    return fnv1a64(params_.flat.data(), params_.flat.size() * sizeof(real));
}

ActionChunk BcPolicy::predict(const Observation& obs, const Observation&, RngStream&) const {
    if (!initialized_) throw IllegalState("bc policy not initialized");
    const std::vector<real> y = nn::forward1(spec_, params_, obs);
    ActionChunk c;
    c.valid_len = 1;
    if (discrete_) {
        int best = 0;
        for (int i = 1; i < n_actions_; ++i)
            if (y[std::size_t(i)] > y[std::size_t(best)]) best = i;
        c.actions.push_back({real(best)});
    } else {
        c.actions.push_back(clamp_action(Action(y.begin(), y.end()), bounds_));
    }
    return c;
}

double BcPolicy::train_step(const std::vector<std::pair<Observation, Action>>& batch) {
    if (!initialized_) throw IllegalState("bc policy not initialized");
    const int b = int(batch.size());
    std::vector<real> x(std::size_t(b) * spec_.input());
    for (int n = 0; n < b; ++n)
        std::copy(batch[std::size_t(n)].first.begin(), batch[std::size_t(n)].first.end(),
                  x.begin() + std::size_t(n) * spec_.input());

    nn::ForwardCache cache;
    const std::vector<real> y = nn::forward(spec_, params_, x, b, &cache);
    const int k = spec_.output();
    double loss = 0;
    std::vector<real> grad(y.size());
    if (discrete_) {
        for (int n = 0; n < b; ++n) {
            const int target = int(std::lround(batch[std::size_t(n)].second.front()));
            const real* l = y.data() + std::size_t(n) * k;
            real m = l[0];
            for (int i = 1; i < k; ++i) m = std::max(m, l[i]);
            double z = 0;
            for (int i = 0; i < k; ++i) z += std::exp(double(l[i]) - double(m));
            loss += std::log(z) + double(m) - double(l[target]);
            for (int i = 0; i < k; ++i) {
                const double p = std::exp(double(l[i]) - double(m)) / z;
                grad[std::size_t(n) * k + std::size_t(i)] = real((p - (i == target ? 1.0 : 0.0)) / b);
            }
        }
        loss /= b;
    } else {
        const double denom = double(b) * k;
        for (int n = 0; n < b; ++n) {
            for (int i = 0; i < k; ++i) {
                const std::size_t j = std::size_t(n) * k + std::size_t(i);
                const real r = y[j] - batch[std::size_t(n)].second[std::size_t(i)];
                loss += double(r) * double(r);
                grad[j] = real(2.0 * double(r) / denom);
            }
        }
        loss /= denom;
    }
    if (!std::isfinite(loss)) return loss;  // numeric fault: skip the update
    const auto grads = nn::backward(spec_, params_, cache, grad);
    nn::adam_step(params_, grads, adam_);
    return loss;
}

// ---------------------------------------------------------------------------

namespace {

// (obs_i, a_i) pair for BC training.
std::pair<Observation, Action> sample_bc_pair(const DemoDataset& d, RngStream& rng) {
    const Episode& e = d.episodes[rng.uniform_int(d.episodes.size())];
    const int i = int(rng.uniform_int(std::uint64_t(e.length())));
    return {e.observations[std::size_t(i)], e.actions[std::size_t(i)]};
}

}  // namespace

GcbcSample sample_gcbc_pair(const DemoDataset& d, int goal_offset, RngStream& rng) {
    const Episode& e = d.episodes[rng.uniform_int(d.episodes.size())];
    const int i = int(rng.uniform_int(std::uint64_t(e.length())));
    GcbcSample s;
    s.obs_index = i;
    s.goal_index = std::min(i + goal_offset, e.length());
    s.window.obs = e.observations[std::size_t(i)];
    s.window.goal = e.observations[std::size_t(s.goal_index)];
    s.window.chunk.actions.push_back(e.actions[std::size_t(i)]);
    s.window.chunk.valid_len = 1;
    return s;
}

TrainedBaseline train_baseline(const DemoDataset& demos, const Env& env, const BaselineConfig& cfg,
                               RngStream rng) {
    cfg.validate();
    if (demos.episodes.empty()) throw std::invalid_argument("empty demo dataset");
    for (const Episode& e : demos.episodes)
        if (e.source != EpisodeSource::expert || !e.success)
            throw std::invalid_argument("demo dataset contains non-expert episodes");

    TrainedBaseline out;
    RngStream init_rng = rng.fork("init");
    RngStream train_rng = rng.fork("train");

    if (cfg.kind == BaselineKind::bc) {
        auto bc = std::make_unique<BcPolicy>(env, cfg.hidden, cfg.lr);
        bc->init(init_rng);
        for (std::int64_t it = 0; it < cfg.iterations; ++it) {
            std::vector<std::pair<Observation, Action>> batch;
            batch.reserve(std::size_t(cfg.batch_size));
            for (int b = 0; b < cfg.batch_size; ++b) batch.push_back(sample_bc_pair(demos, train_rng));
            out.final_loss = bc->train_step(batch);
        }
        out.policy = std::move(bc);
        return out;
    }

    if (cfg.kind == BaselineKind::gcbc) {
        PolicyConfig pc;
        pc.kind = PolicyKind::regression;
        pc.h = 1;
        pc.h_exec = 1;
        pc.obs_dim = env.obs_dim();
        pc.action_dim = env.action_dim();
        pc.discrete = env.discrete();
        pc.n_actions = env.action_count();
        pc.hidden = cfg.hidden;
        pc.lr = cfg.lr;
        auto policy = std::make_unique<Policy>(pc, env.bounds());
        policy->init(init_rng);
        for (std::int64_t it = 0; it < cfg.iterations; ++it) {
            std::vector<Window> batch;
            batch.reserve(std::size_t(cfg.batch_size));
            for (int b = 0; b < cfg.batch_size; ++b)
                batch.push_back(sample_gcbc_pair(demos, cfg.goal_offset, train_rng).window);
            out.final_loss = policy->train_step(batch, train_rng);
        }
        out.as_policy = policy.get();
        out.policy = std::move(policy);
        return out;
    }

    // Diffusion variants reuse the policy module's chunk head on demo
    // windows; dp_bc zeroes the goal input instead of adding a new path.
    if (env.discrete()) throw ConfigError("diffusion baselines need a continuous action space");
    PolicyConfig pc;
    pc.kind = PolicyKind::diffusion;
    pc.h = cfg.chunk_h;
    pc.h_exec = cfg.chunk_h_exec;
    pc.obs_dim = env.obs_dim();
    pc.action_dim = env.action_dim();
    pc.zero_goal = cfg.kind == BaselineKind::dp_bc;
    pc.lr = cfg.lr;
    auto policy = std::make_unique<Policy>(pc, env.bounds());
    policy->init(init_rng);

    ReplayBuffer demo_buffer(std::max(1, demos.size()), null_action_for(env));
    for (const Episode& e : demos.episodes) demo_buffer.append(e);
    for (std::int64_t it = 0; it < cfg.iterations; ++it) {
        std::vector<Window> batch;
        batch.reserve(std::size_t(cfg.batch_size));
        for (int b = 0; b < cfg.batch_size; ++b)
            batch.push_back(demo_buffer.sample_window(pc.h, train_rng));
        out.final_loss = policy->train_step(batch, train_rng);
    }
    out.as_policy = policy.get();
    out.policy = std::move(policy);
    return out;
}

}  // namespace vge
