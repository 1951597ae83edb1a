#include "vge/replay.hpp"

#include <algorithm>

namespace vge {

ReplayBuffer::ReplayBuffer(int capacity, Action null_action)
    : capacity_(capacity), null_action_(std::move(null_action)) {
    if (capacity < 1) throw std::invalid_argument("capacity must be >= 1");
    if (null_action_.empty()) throw std::invalid_argument("null action must be nonempty");
    ring_.reserve(std::size_t(capacity));
}

void ReplayBuffer::append(Episode e) {
    e.validate();
    if (e.actions.front().size() != null_action_.size())
        throw std::invalid_argument("episode action dim does not match buffer");
    std::lock_guard<std::mutex> lock(mu_);
    const auto s = std::size_t(e.source);
    ++appended_[s];
    if (e.success) ++successes_[s];
    if (int(ring_.size()) < capacity_) {
        ring_.push_back(std::move(e));
    } else {
        ring_[head_] = std::move(e);  // evict oldest, strictly FIFO
        head_ = (head_ + 1) % ring_.size();
    }
}

int ReplayBuffer::size() const {
    std::lock_guard<std::mutex> lock(mu_);
    return int(ring_.size());
}

std::int64_t ReplayBuffer::total_appended() const {
    std::lock_guard<std::mutex> lock(mu_);
    return appended_[0] + appended_[1] + appended_[2];
}

std::int64_t ReplayBuffer::appended(EpisodeSource s) const {
    std::lock_guard<std::mutex> lock(mu_);
    return appended_[std::size_t(s)];
}

std::int64_t ReplayBuffer::successes(EpisodeSource s) const {
    std::lock_guard<std::mutex> lock(mu_);
    return successes_[std::size_t(s)];
}

Episode ReplayBuffer::episode_copy(int index) const {
    std::lock_guard<std::mutex> lock(mu_);
    return ring_.at(std::size_t(index));
}

std::vector<Episode> ReplayBuffer::snapshot() const {
    std::lock_guard<std::mutex> lock(mu_);
    return ring_;
}

Window ReplayBuffer::window_locked(int episode_index, int start, int h) const {
    const Episode& e = ring_.at(std::size_t(episode_index));
    const int t = e.length();
    if (start < 0 || start > max_start(t, h)) throw std::invalid_argument("bad window start");
    const int end = std::min(start + h, t);

    Window w;
    w.obs = e.observations[std::size_t(start)];
    w.goal = e.observations[std::size_t(end)];
    w.chunk.actions.reserve(std::size_t(h));
    for (int i = start; i < end; ++i) w.chunk.actions.push_back(e.actions[std::size_t(i)]);
    w.chunk.valid_len = end - start;
    while (int(w.chunk.actions.size()) < h) w.chunk.actions.push_back(null_action_);
    return w;
}

Window ReplayBuffer::window_at(int episode_index, int start, int h) const {
    if (h < 1) throw std::invalid_argument("window horizon must be >= 1");
    std::lock_guard<std::mutex> lock(mu_);
    return window_locked(episode_index, start, h);
}

Window ReplayBuffer::sample_window(int h, RngStream& rng) const {
    if (h < 1) throw std::invalid_argument("window horizon must be >= 1");
    std::lock_guard<std::mutex> lock(mu_);
    if (ring_.empty()) throw IllegalState("sample from empty replay buffer");
    const int ep = int(rng.uniform_int(ring_.size()));
    const int hi = max_start(ring_[std::size_t(ep)].length(), h);
    const int start = int(rng.uniform_int(std::uint64_t(hi) + 1));
    return window_locked(ep, start, h);
}

}  // namespace vge
