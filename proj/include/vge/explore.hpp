#ifndef VGE_EXPLORE_HPP
#define VGE_EXPLORE_HPP

// Video-guided goal-conditioned exploration: chunked random bootstrapping,
// subgoal-following rollouts, hindsight window training, and the full
// training loop tying them together.

#include <functional>
#include <string>
#include <vector>

#include "vge/core.hpp"
#include "vge/env.hpp"
#include "vge/metrics.hpp"
#include "vge/oracle.hpp"
#include "vge/policy.hpp"
#include "vge/replay.hpp"

namespace vge {

struct ExploreConfig {
    int n_r = 50;              // initial random episodes per task
    std::int64_t q_v = 200;    // video-guided exploration period; <= 0 disables
    std::int64_t q_r = 1000;   // extra random period; <= 0 disables
    int n_e = 2;               // extra random episodes per period
    int l_c = 8;               // random chunk length
    real sigma = 0.01f;        // random chunk spread around its mean
    real p_grasp = 1.0f;       // grasp primitive probability (tablesim)
    int k_sub = 2;             // chunk executions per subgoal frame
    real tau_goal = 0.05f;     // subgoal-reached tolerance (L-inf)
    std::int64_t iterations = 20000;
    int subgoal_horizon = 7;   // H
    bool replan_on_exhaust = false;
    int capacity = 2000;       // replay capacity, in episodes
    int batch_size = 64;

    void validate() const;
};

Action null_action_for(const Env& env);

// Chunked random bootstrapping: draw a chunk mean uniformly inside the
// action bounds, then l_c Gaussian actions around it. In TableSim the grasp
// primitive latches the gripper closed for the rest of the chunk when it
// fires.
Episode random_chunk_episode(Env& env, const Task& task, const ExploreConfig& cfg, RngStream rng);

// Follow oracle frames sequentially, k_sub chunk executions per frame with
// early advance once within tau_goal. replan_on_exhaust chains new plans
// from the latest observation until the episode ends.
Episode video_guided_rollout(Env& env, const Task& task, const ChunkPolicy& policy,
                             const CorruptionMode& corruption, const ExploreConfig& cfg,
                             RngStream rng);

// Rollout without subgoal frames: goal is all-zero ("none", BC-style) or the
// oracle's final task-completion frame. Runs until the episode ends.
enum class GoalSource { oracle_plan, final_obs, none };
Episode plain_rollout(Env& env, const Task& task, const ChunkPolicy& policy, GoalSource goal_source,
                      RngStream rng);

// Success rates per task over E evaluation episodes; never touches a buffer.
// on_episode, when set, sees every evaluation episode (for logging).
using EpisodeSink = std::function<void(const Task&, const Episode&)>;
std::vector<double> evaluate_rates(Env& env, const std::vector<Task>& tasks,
                                   const ChunkPolicy& policy, int episodes_per_task,
                                   GoalSource goal_source, const ExploreConfig& cfg, RngStream rng,
                                   const EpisodeSink& on_episode = nullptr);

struct TrainingSetup {
    EnvConfig env;
    std::vector<Task> tasks;  // empty = all tasks of the environment
    ExploreConfig explore;
    CorruptionMode corruption;  // applied to exploration plans, never to eval
    int eval_every = 1000;      // C
    int eval_episodes = 25;     // E
    std::string checkpoint_dir;  // empty = keep checkpoints off disk
    int log_train_every = 100;
};

struct EvalPoint {
    std::int64_t iter = 0;
    std::int64_t cum_video_rollouts = 0;
    std::vector<double> task_rates;
    double mean_rate = 0;
};

struct TrainResult {
    std::vector<EvalPoint> evals;
    std::vector<std::string> checkpoints;
    std::int64_t video_rollouts = 0;
    std::int64_t video_successes = 0;
    std::int64_t random_episodes = 0;
    std::int64_t planning_failures = 0;
    std::int64_t train_steps = 0;
    double final_loss = 0;
};

// Algorithm: seed the buffer with n_r random chunk episodes per task, then
// alternate periodic video-guided exploration, periodic extra random
// episodes, and one hindsight-window train step per iteration.
TrainResult run_training(const TrainingSetup& setup, Policy& policy, std::uint64_t seed,
                         MetricsWriter* metrics = nullptr);

}  // namespace vge

#endif  // VGE_EXPLORE_HPP
