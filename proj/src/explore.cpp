#include "vge/explore.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>

namespace vge {

void ExploreConfig::validate() const {
    if (n_r < 0 || n_e < 0) throw ConfigError("episode counts must be >= 0");
    if (l_c < 1) throw ConfigError("l_c must be >= 1");
    if (sigma < 0) throw ConfigError("sigma must be >= 0");
    if (p_grasp < 0 || p_grasp > 1) throw ConfigError("p_grasp must be in [0,1]");
    if (k_sub < 1) throw ConfigError("k_sub must be >= 1");
    if (tau_goal <= 0) throw ConfigError("tau_goal must be > 0");
    if (iterations < 1) throw ConfigError("iterations must be >= 1");
    if (subgoal_horizon < 1) throw ConfigError("subgoal_horizon must be >= 1");
    if (capacity < 1) throw ConfigError("capacity must be >= 1");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
}

Action null_action_for(const Env& env) {
    if (env.discrete()) return {real(kNoOpIndex)};
    return Action(std::size_t(env.action_dim()), 0.0f);
}

Episode random_chunk_episode(Env& env, const Task& task, const ExploreConfig& cfg, RngStream rng) {
    cfg.validate();
    Episode e;
    e.task = task;
    e.source = EpisodeSource::random;
    e.observations.push_back(env.reset(task, rng));

    const bool discrete = env.discrete();
    const ActionBounds& b = env.bounds();
    const int d = env.action_dim();
    TableSimEnv* table = env.kind() == EnvKind::table_sim ? static_cast<TableSimEnv*>(&env) : nullptr;

    while (!env.done()) {
        Action mean(static_cast<std::size_t>(d));
        if (discrete) {
            mean[0] = real(rng.uniform_int(std::uint64_t(env.action_count())));
        } else {
            for (int k = 0; k < d; ++k) mean[std::size_t(k)] = real(rng.uniform(b.low[k], b.high[k]));
        }
        bool grasp_latched = false;
        for (int j = 0; j < cfg.l_c && !env.done(); ++j) {
            Action a(static_cast<std::size_t>(d));
            if (discrete) {
                a[0] = mean[0];
            } else {
                for (int k = 0; k < d; ++k) {
                    const real v = mean[std::size_t(k)] + cfg.sigma * real(rng.normal());
                    a[std::size_t(k)] = std::min(b.high[k], std::max(b.low[k], v));
                }
                if (table) {
                    if (!grasp_latched && table->grasp_trigger(cfg.p_grasp, rng)) grasp_latched = true;
                    if (grasp_latched) a[2] = 1.0f;  // hold the grasp until the chunk ends
                }
            }
            StepResult r = env.step(a);
            e.actions.push_back(std::move(a));
            e.observations.push_back(std::move(r.obs));
            e.success = r.success;
        }
    }
    return e;
}

namespace {

// Executes up to h_exec actions of one predicted chunk. Returns true when the
// episode ended.
bool execute_chunk(Env& env, const ChunkPolicy& policy, const Observation& goal,
                   const Observation* advance_frame, real tau_goal, Episode& e, Observation& obs,
                   bool& reached, RngStream& rng) {
    const ActionChunk chunk = policy.predict(obs, goal, rng);
    const int n = std::min(policy.exec_horizon(), chunk.valid_len);
    for (int j = 0; j < n; ++j) {
        StepResult r = env.step(chunk.actions[std::size_t(j)]);
        e.actions.push_back(chunk.actions[std::size_t(j)]);
        e.observations.push_back(r.obs);
        obs = r.obs;
        e.success = r.success;
        if (r.done) return true;
        if (advance_frame && env.goal_distance(obs, *advance_frame) <= tau_goal) {
            reached = true;
            return false;
        }
    }
    return false;
}

}  // namespace

Episode video_guided_rollout(Env& env, const Task& task, const ChunkPolicy& policy,
                             const CorruptionMode& corruption, const ExploreConfig& cfg,
                             RngStream rng) {
    cfg.validate();
    Episode e;
    e.task = task;
    e.source = EpisodeSource::video_guided;
    Observation obs = env.reset(task, rng);
    e.observations.push_back(obs);

    bool ended = false;
    while (!ended) {
        const SubgoalPlan plan =
            generate_plan(env, task, obs, cfg.subgoal_horizon, corruption, rng);
        for (const Observation& frame : plan.frames) {
            bool reached = false;
            for (int attempt = 0; attempt < cfg.k_sub && !reached; ++attempt) {
                ended = execute_chunk(env, policy, frame, &frame, cfg.tau_goal, e, obs, reached, rng);
                if (ended) break;
            }
            if (ended) break;
        }
        if (!cfg.replan_on_exhaust) break;
    }
    return e;
}

Episode plain_rollout(Env& env, const Task& task, const ChunkPolicy& policy, GoalSource goal_source,
                      RngStream rng) {
    Episode e;
    e.task = task;
    e.source = EpisodeSource::video_guided;
    Observation obs = env.reset(task, rng);
    e.observations.push_back(obs);

    Observation goal(obs.size(), 0.0f);
    if (goal_source == GoalSource::final_obs) {
        const SubgoalPlan p = generate_plan(env, task, obs, 1, CorruptionMode{}, rng);
        goal = p.frames.front();
    }
    bool reached = false;  // unused: no frame advancing here
    while (!execute_chunk(env, policy, goal, nullptr, 0.0f, e, obs, reached, rng)) {
    }
    return e;
}

std::vector<double> evaluate_rates(Env& env, const std::vector<Task>& tasks,
                                   const ChunkPolicy& policy, int episodes_per_task,
                                   GoalSource goal_source, const ExploreConfig& cfg, RngStream rng,
                                   const EpisodeSink& on_episode) {
    if (episodes_per_task < 1) throw std::invalid_argument("episodes_per_task must be >= 1");
    std::vector<double> rates;
    rates.reserve(tasks.size());
    for (std::size_t ti = 0; ti < tasks.size(); ++ti) {
        int ok = 0;
        for (int ep = 0; ep < episodes_per_task; ++ep) {
            RngStream r = rng.fork("ep", ti * 100000 + std::uint64_t(ep));
            Episode rolled;
            if (goal_source == GoalSource::oracle_plan)
                rolled = video_guided_rollout(env, tasks[ti], policy, CorruptionMode{}, cfg, r);
            else
                rolled = plain_rollout(env, tasks[ti], policy, goal_source, r);
            if (rolled.success) ++ok;
            if (on_episode) on_episode(tasks[ti], rolled);
        }
        rates.push_back(double(ok) / episodes_per_task);
    }
    return rates;
}

// ---------------------------------------------------------------------------

namespace {

void log_episode(MetricsWriter* m, std::int64_t iter, const char* event, const Episode& e,
                 const ReplayBuffer& buffer, std::int64_t vid_rolls, std::int64_t vid_succ) {
    if (!m) return;
    MetricsRow r;
    r.iter = iter;
    r.event = event;
    r.task_id = e.task.id;
    r.source = to_string(e.source);
    r.success = e.success;
    r.episode_len = e.length();
    r.buffer_size = buffer.size();
    r.cum_video_rollouts = vid_rolls;
    r.cum_video_successes = vid_succ;
    m->row(r);
}

}  // namespace

TrainResult run_training(const TrainingSetup& setup, Policy& policy, std::uint64_t seed,
                         MetricsWriter* metrics) {
    setup.env.validate();
    setup.explore.validate();
    if (setup.eval_every < 1 || setup.eval_episodes < 1)
        throw ConfigError("eval cadence and episode count must be >= 1");

    const ExploreConfig& cfg = setup.explore;
    RngStream root(seed);
    auto env = make_env(setup.env);
    std::vector<Task> tasks = setup.tasks.empty() ? env->tasks() : setup.tasks;
    if (tasks.empty()) throw ConfigError("no tasks to train on");

    if (!policy.initialized()) {
        RngStream init_rng = root.fork("policy_init");
        policy.init(init_rng);
    }

    ReplayBuffer buffer(cfg.capacity, null_action_for(*env));
    TrainResult out;
    RngStream train_rng = root.fork("train");
    std::int64_t rand_index = 0, video_index = 0, extra_index = 0;

    auto run_eval = [&](std::int64_t iter, std::uint64_t eval_index) {
        RngStream eval_rng = root.fork("eval", eval_index);
        EpisodeSink sink = nullptr;
        if (metrics) {
            sink = [&](const Task& t, const Episode& e) {
                MetricsRow r;
                r.iter = iter;
                r.event = "eval";
                r.task_id = t.id;
                r.source = to_string(e.source);
                r.success = e.success;
                r.episode_len = e.length();
                r.buffer_size = buffer.size();
                r.cum_video_rollouts = out.video_rollouts;
                r.cum_video_successes = out.video_successes;
                metrics->row(r);
            };
        }
        EvalPoint p;
        p.iter = iter;
        p.cum_video_rollouts = out.video_rollouts;
        p.task_rates = evaluate_rates(*env, tasks, policy, setup.eval_episodes,
                                      GoalSource::oracle_plan, cfg, eval_rng, sink);
        double sum = 0;
        for (double v : p.task_rates) sum += v;
        p.mean_rate = sum / double(p.task_rates.size());
        out.evals.push_back(std::move(p));
    };

    // Random action bootstrapping before training starts.
    for (const Task& t : tasks) {
        for (int i = 0; i < cfg.n_r; ++i) {
            Episode e = random_chunk_episode(*env, t, cfg, root.fork("random", std::uint64_t(rand_index)));
            ++rand_index;
            ++out.random_episodes;
            log_episode(metrics, 0, "random", e, buffer, out.video_rollouts, out.video_successes);
            buffer.append(std::move(e));
        }
    }

    std::uint64_t eval_index = 0;
    run_eval(0, eval_index++);

    for (std::int64_t i = 1; i <= cfg.iterations; ++i) {
        if (cfg.q_v > 0 && i % cfg.q_v == 0) {
            for (const Task& t : tasks) {
                try {
                    Episode e = video_guided_rollout(*env, t, policy, setup.corruption, cfg,
                                                     root.fork("video", std::uint64_t(video_index)));
                    ++video_index;
                    ++out.video_rollouts;
                    if (e.success) ++out.video_successes;
                    log_episode(metrics, i, "video", e, buffer, out.video_rollouts,
                                out.video_successes);
                    buffer.append(std::move(e));
                } catch (const PlanningFailure&) {
                    ++video_index;
                    ++out.planning_failures;
                    if (metrics) {
                        MetricsRow r;
                        r.iter = i;
                        r.event = "error";
                        r.task_id = t.id;
                        r.cum_video_rollouts = out.video_rollouts;
                        r.cum_video_successes = out.video_successes;
                        metrics->row(r);
                    }
                }
            }
        }
        if (cfg.q_r > 0 && i % cfg.q_r == 0) {
            for (int j = 0; j < cfg.n_e; ++j) {
                const Task& t = tasks[std::size_t(extra_index) % tasks.size()];
                ++extra_index;
                Episode e =
                    random_chunk_episode(*env, t, cfg, root.fork("random", std::uint64_t(rand_index)));
                ++rand_index;
                ++out.random_episodes;
                log_episode(metrics, i, "random", e, buffer, out.video_rollouts,
                            out.video_successes);
                buffer.append(std::move(e));
            }
        }

        std::vector<Window> batch;
        batch.reserve(std::size_t(cfg.batch_size));
        for (int bi = 0; bi < cfg.batch_size; ++bi)
            batch.push_back(buffer.sample_window(policy.config().h, train_rng));
        out.final_loss = policy.train_step(batch, train_rng);
        ++out.train_steps;

        if (metrics && i % setup.log_train_every == 0) {
            MetricsRow r;
            r.iter = i;
            r.event = "train";
            r.loss = out.final_loss;
            r.buffer_size = buffer.size();
            r.cum_video_rollouts = out.video_rollouts;
            r.cum_video_successes = out.video_successes;
            metrics->row(r);
        }

        if (i % setup.eval_every == 0) {
            if (!setup.checkpoint_dir.empty()) {
                std::filesystem::create_directories(setup.checkpoint_dir);
                char name[64];
                std::snprintf(name, sizeof(name), "ckpt_%06lld.vgp", static_cast<long long>(i));
                const std::string path = setup.checkpoint_dir + "/" + name;
                policy.save(path);
                out.checkpoints.push_back(path);
            }
            run_eval(i, eval_index++);
        }
    }
    if (metrics) metrics->flush();
    return out;
}

}  // namespace vge
