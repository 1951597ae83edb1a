#ifndef VGE_REPLAY_HPP
#define VGE_REPLAY_HPP

#include <array>
#include <mutex>
#include <vector>

#include "vge/core.hpp"

namespace vge {

// One hindsight training window: the chunk of actions taken from obs, with
// the observation actually reached h steps later relabeled as the goal.
struct Window {
    Observation obs;
    Observation goal;
    ActionChunk chunk;
};

// FIFO ring of episodes with episode-granularity thread safety: append and
// sample never expose a partially written episode.
class ReplayBuffer {
public:
    ReplayBuffer(int capacity, Action null_action);

    void append(Episode e);  // validates; evicts oldest when full

    // Uniform episode, then start index i ~ U[0, max(0, T-h)]; goal is
    // obs[min(i+h, T)] and the chunk is zero-padded to h with valid_len set.
    Window sample_window(int h, RngStream& rng) const;

    // Deterministic accessor used by sample_window and by the test oracles.
    Window window_at(int episode_index, int start, int h) const;
    static int max_start(int episode_len, int h) { return episode_len > h ? episode_len - h : 0; }

    int size() const;
    int capacity() const { return capacity_; }
    std::int64_t total_appended() const;
    std::int64_t appended(EpisodeSource s) const;
    std::int64_t successes(EpisodeSource s) const;
    Episode episode_copy(int index) const;
    std::vector<Episode> snapshot() const;

private:
    Window window_locked(int episode_index, int start, int h) const;

    int capacity_;
    Action null_action_;
    mutable std::mutex mu_;
    std::vector<Episode> ring_;
    std::size_t head_ = 0;  // next write slot once full
    std::array<std::int64_t, 3> appended_{0, 0, 0};
    std::array<std::int64_t, 3> successes_{0, 0, 0};
};

}  // namespace vge

#endif  // VGE_REPLAY_HPP
