#ifndef VGE_BASELINES_HPP
#define VGE_BASELINES_HPP

// Action-supervised comparison points trained on scripted expert
// demonstrations: BC (obs -> next action), GCBC (obs + hindsight goal ->
// next action) and the diffusion-head variants, which reuse the policy
// module on demo windows.

#include <memory>
#include <string>
#include <vector>

#include "vge/core.hpp"
#include "vge/env.hpp"
#include "vge/policy.hpp"

namespace vge {

struct DemoDataset {
    std::vector<Episode> episodes;
    std::vector<int> per_task_count;  // indexed by task id
    std::uint64_t seed = 0;

    void ingest(Episode e);  // rejects non-expert or unsuccessful episodes
    int size() const { return int(episodes.size()); }
};

// n_per_task successful expert episodes per task; resets that make the
// planner fail are retried, capped at 10x oversampling.
DemoDataset generate_demos(Env& env, const std::vector<Task>& tasks, int n_per_task,
                           RngStream rng);

enum class BaselineKind { bc, gcbc, dp_bc, dp_gcbc };
BaselineKind baseline_kind_from_string(const std::string& s);
const char* to_string(BaselineKind k);

struct BaselineConfig {
    BaselineKind kind = BaselineKind::gcbc;
    std::int64_t iterations = 20000;
    int batch_size = 64;
    real lr = 1e-4f;
    int goal_offset = 16;               // hindsight goal index spacing for GCBC
    std::vector<int> hidden = {256, 128};  // 3-layer MLP head for BC/GCBC
    int chunk_h = 16;                   // diffusion variants predict chunks
    int chunk_h_exec = 8;

    void validate() const;
};

// All four baselines are ChunkPolicy implementations and evaluate through
// the shared rollout machinery.
struct TrainedBaseline {
    std::unique_ptr<ChunkPolicy> policy;
    double final_loss = 0;
    // gcbc/dp_* reuse Policy and can be checkpointed; bc has its own head.
    Policy* as_policy = nullptr;
};

TrainedBaseline train_baseline(const DemoDataset& demos, const Env& env, const BaselineConfig& cfg,
                               RngStream rng);

// One GCBC supervision pair: (obs_i, goal at i+goal_offset clamped to the
// episode end) -> a_i. goal_index > obs_index always holds.
struct GcbcSample {
    Window window;
    int obs_index = 0;
    int goal_index = 0;
};
GcbcSample sample_gcbc_pair(const DemoDataset& demos, int goal_offset, RngStream& rng);

// BC head: plain observation -> single action regression (or softmax for
// discrete envs). Exposed for tests.
class BcPolicy final : public ChunkPolicy {
public:
    BcPolicy(const Env& env, const std::vector<int>& hidden, real lr);
    void init(RngStream& rng);

    ActionChunk predict(const Observation& obs, const Observation& goal,
                        RngStream& rng) const override;
    int exec_horizon() const override { return 1; }

    double train_step(const std::vector<std::pair<Observation, Action>>& batch);
    const nn::MlpSpec& spec() const { return spec_; }
    const nn::MlpParams& params() const { return params_; }
    nn::MlpParams& mutable_params() { return params_; }
    std::uint64_t params_hash() const;

private:
    bool discrete_;
    int n_actions_;
    int action_dim_;
    ActionBounds bounds_;
    nn::MlpSpec spec_;
    nn::MlpParams params_;
    nn::AdamState adam_;
    bool initialized_ = false;
};

}  // namespace vge

#endif  // VGE_BASELINES_HPP
