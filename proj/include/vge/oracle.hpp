#ifndef VGE_ORACLE_HPP
#define VGE_ORACLE_HPP

// Frozen subgoal generator standing in for a video model f(x_start, task):
// plans are built by running a scripted expert from the state decoded out of
// the conditioning observation, then sampling H frames at uniform indices.
// Appendix-style failure modes (hallucination, jitter, task mismatch) can be
// injected on top.

#include <string>
#include <vector>

#include "vge/core.hpp"
#include "vge/env.hpp"
#include "vge/policy.hpp"

namespace vge {

enum class CorruptionKind { none, hallucinate, jitter, mismatch };

struct CorruptionMode {
    CorruptionKind kind = CorruptionKind::none;
    int hallucinate_from = 0;  // frames [k, H) replaced
    real jitter_sigma = 0.0f;

    static CorruptionMode none_mode() { return {}; }
    void validate(int horizon) const;
};

const char* to_string(CorruptionKind k);
CorruptionKind corruption_kind_from_string(const std::string& s);

struct SubgoalPlan {
    std::vector<Observation> frames;  // ordered start -> goal, length H
    Task task;
    CorruptionKind corruption_applied = CorruptionKind::none;

    int horizon() const { return int(frames.size()); }
};

// Scripted expert episode from a fresh randomized reset.
Episode expert_rollout(Env& env, const Task& task, RngStream rng);

// Scripted expert episode continuing from the environment's current state.
// The env is stepped in place; throws PlanningFailure if the task cannot be
// completed within t_max.
Episode expert_from_current_state(Env& env, const Task& task);

// One expert action for the environment's current state.
Action expert_action(const Env& env, const Task& task);

SubgoalPlan generate_plan(const Env& env, const Task& task, const Observation& start_obs,
                          int horizon, const CorruptionMode& mode, RngStream& rng);

SubgoalPlan corrupt(const Env& env, const SubgoalPlan& plan, const CorruptionMode& mode,
                    const Observation& start_obs, RngStream& rng);

// Frame indices used by generate_plan: round(j*T/H) for j = 1..H, ties up.
std::vector<int> plan_frame_indices(int episode_len, int horizon);

// Cheating policy that replays scripted expert actions for whatever state
// the observation decodes to; used as an upper-bound self-check of the
// rollout and evaluation machinery.
class ExpertReplayPolicy final : public ChunkPolicy {
public:
    ExpertReplayPolicy(const Env& env, int h, int h_exec)
        : proto_(env.clone_blank()), h_(h), h_exec_(h_exec) {}

    ActionChunk predict(const Observation& obs, const Observation& goal,
                        RngStream& rng) const override;
    int exec_horizon() const override { return h_exec_; }

private:
    std::unique_ptr<Env> proto_;
    int h_;
    int h_exec_;
};

}  // namespace vge

#endif  // VGE_ORACLE_HPP
