#ifndef VGE_POLICY_HPP
#define VGE_POLICY_HPP

// Goal-conditioned action-chunk policies: an MSE regression head (with a
// softmax variant for discrete single-action environments) and a DDPM
// diffusion head over flattened chunks.

#include <functional>
#include <string>
#include <vector>

#include "vge/core.hpp"
#include "vge/nn.hpp"
#include "vge/replay.hpp"

namespace vge {

enum class PolicyKind : std::uint8_t { regression = 0, diffusion = 1 };
enum class SamplerKind : std::uint8_t { ancestral = 0, strided = 1 };

PolicyKind policy_kind_from_string(const std::string& s);
const char* to_string(PolicyKind k);

struct PolicyConfig {
    PolicyKind kind = PolicyKind::regression;
    int h = 16;       // prediction horizon
    int h_exec = 8;   // actions executed per inference
    int action_dim = 3;
    int obs_dim = 7;
    bool discrete = false;  // softmax over n_actions, requires h = 1
    int n_actions = 0;
    bool zero_goal = false;  // BC-style variants ignore the goal input

    // diffusion head
    int diffusion_steps = 100;
    // Endpoints follow the usual 1000-step convention; the schedule builder
    // rescales them to diffusion_steps so the terminal alpha-bar still
    // destroys the signal.
    real beta_start = 1e-4f;
    real beta_end = 0.02f;
    SamplerKind sampler = SamplerKind::ancestral;
    int sample_stride = 1;
    int time_embed_dim = 32;

    std::vector<int> hidden = {256, 256};            // regression trunk
    std::vector<int> denoiser_hidden = {256, 256, 256};

    real lr = 1e-4f;

    int chunk_values() const { return h * action_dim; }
    void validate() const;
};

struct DiffusionSchedule {
    std::vector<real> beta;
    std::vector<real> alpha;
    std::vector<real> alpha_bar;

    int steps() const { return int(beta.size()); }
    static DiffusionSchedule make(int t_d, real beta_start, real beta_end);
};

// Reverse diffusion driven by an arbitrary noise predictor, so tests can run
// the sampler against an analytically perfect oracle. stride 1 is plain
// ancestral DDPM; stride k subsamples the timestep ladder.
using EpsFn = std::function<std::vector<real>(const std::vector<real>& x, int t)>;
std::vector<real> ddpm_reverse_sample(const DiffusionSchedule& sched, int stride,
                                      const EpsFn& eps, int dim, RngStream& rng);

// Interface shared by learned policies and scripted stand-ins.
class ChunkPolicy {
public:
    virtual ~ChunkPolicy() = default;
    virtual ActionChunk predict(const Observation& obs, const Observation& goal,
                                RngStream& rng) const = 0;
    virtual int exec_horizon() const = 0;
};

class Policy final : public ChunkPolicy {
public:
    Policy() = default;
    Policy(const PolicyConfig& cfg, const ActionBounds& bounds);

    void init(RngStream& rng);  // builds the network and optimizer state
    bool initialized() const { return initialized_; }

    const PolicyConfig& config() const { return cfg_; }
    const nn::MlpSpec& spec() const { return spec_; }
    const nn::MlpParams& params() const { return params_; }
    nn::MlpParams& mutable_params() { return params_; }
    const ActionBounds& bounds() const { return bounds_; }
    const DiffusionSchedule& schedule() const { return sched_; }
    std::int64_t numeric_faults() const { return faults_ + adam_.skipped; }
    std::uint64_t params_hash() const;

    ActionChunk predict(const Observation& obs, const Observation& goal,
                        RngStream& rng) const override;
    int exec_horizon() const override { return cfg_.h_exec; }

    // One Adam update on a batch of hindsight windows; returns the loss
    // before the step. Non-finite losses skip the update and are counted.
    double train_step(const std::vector<Window>& batch, RngStream& rng);

    ActionChunk ddpm_sample(const Observation& obs, const Observation& goal, RngStream& rng) const;

    void save(const std::string& path) const;
    static Policy load(const std::string& path);

private:
    double train_step_regression(const std::vector<Window>& batch);
    double train_step_discrete(const std::vector<Window>& batch);
    double train_step_ddpm(const std::vector<Window>& batch, RngStream& rng);
    std::vector<real> trunk_input(const Observation& obs, const Observation& goal) const;
    ActionChunk to_chunk(const std::vector<real>& flat) const;

    PolicyConfig cfg_;
    ActionBounds bounds_;
    nn::MlpSpec spec_;
    nn::MlpParams params_;
    nn::AdamState adam_;
    DiffusionSchedule sched_;
    bool initialized_ = false;
    std::int64_t faults_ = 0;
};

}  // namespace vge

#endif  // VGE_POLICY_HPP
