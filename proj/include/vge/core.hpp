#ifndef VGE_CORE_HPP
#define VGE_CORE_HPP

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace vge {

using real = float;

// ---------------------------------------------------------------------------
// Errors

struct IllegalState : std::logic_error {
    using std::logic_error::logic_error;
};
struct NumericFault : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct PlanningFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct CorruptCheckpoint : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ConfigMismatch : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Hashing (FNV-1a 64), used for labels, episode hashes and config hashes.

inline std::uint64_t fnv1a64(const void* data, std::size_t n,
                             std::uint64_t h = 0xcbf29ce484222325ULL) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::uint64_t fnv1a64(std::string_view s, std::uint64_t h = 0xcbf29ce484222325ULL) {
    return fnv1a64(s.data(), s.size(), h);
}

// Standard CRC-32 (IEEE 802.3), used by checkpoint trailers.
std::uint32_t crc32(const void* data, std::size_t n, std::uint32_t crc = 0);

// ---------------------------------------------------------------------------
// Deterministic counter-based RNG with labeled forks.
//
// A stream is identified by (seed, stream_id); the n-th draw is a pure
// function of (seed, stream_id, n). Forking by label derives a child
// stream_id without consuming parent state, so fork(s, "x") twice yields
// identical children and sibling labels yield unrelated streams.

class RngStream {
public:
    RngStream() : RngStream(0, 0) {}
    explicit RngStream(std::uint64_t seed, std::uint64_t stream_id = 0)
        : seed_(seed), stream_(stream_id), counter_(0) {
        key_ = mix64(mix64(seed_ + 0x9e3779b97f4a7c15ULL) ^ mix64(stream_ + 0xd1b54a32d192ed03ULL));
    }

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream_id() const { return stream_; }
    std::uint64_t counter() const { return counter_; }

    RngStream fork(std::string_view label) const {
        if (label.empty()) throw std::invalid_argument("rng fork label must be nonempty");
        return RngStream(seed_, mix64(stream_ ^ fnv1a64(label)));
    }
    RngStream fork(std::string_view label, std::uint64_t index) const {
        if (label.empty()) throw std::invalid_argument("rng fork label must be nonempty");
        return RngStream(seed_, mix64(mix64(stream_ ^ fnv1a64(label)) + index));
    }

    std::uint64_t next_u64() { return mix64(key_ + (counter_++) * 0x9e3779b97f4a7c15ULL); }

    // Uniform in [0, 1), 53-bit resolution.
    double uniform01() { return double(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // Uniform integer in [0, n).
    std::uint64_t uniform_int(std::uint64_t n) {
        if (n == 0) throw std::invalid_argument("uniform_int(0)");
        return std::uint64_t(uniform01() * double(n)) % n;
    }

    // Standard normal via Box-Muller; consumes exactly two draws.
    double normal();

private:
    static std::uint64_t mix64(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    std::uint64_t seed_;
    std::uint64_t stream_;
    std::uint64_t key_;
    std::uint64_t counter_;
};

// ---------------------------------------------------------------------------
// Actions and bounds

// Continuous environments use a length-d real vector; discrete environments
// use a length-1 vector holding the action index.
using Action = std::vector<real>;
using Observation = std::vector<real>;

// Reserved no-op index used as chunk padding in discrete environments.
inline constexpr int kNoOpIndex = 4;

struct ActionBounds {
    std::vector<real> low;
    std::vector<real> high;

    std::size_t dim() const { return low.size(); }
    void validate() const;
};

Action clamp_action(const Action& a, const ActionBounds& b);

struct ActionChunk {
    std::vector<Action> actions;
    int valid_len = 0;

    int horizon() const { return int(actions.size()); }
    void validate() const;
};

// ---------------------------------------------------------------------------
// Tasks and episodes

struct Task {
    int id = 0;
    std::string description;
    std::string env_name;
};

enum class EpisodeSource : std::uint8_t { random = 0, video_guided = 1, expert = 2 };

const char* to_string(EpisodeSource s);

struct Episode {
    Task task;
    std::vector<Observation> observations;  // length T+1
    std::vector<Action> actions;            // length T
    bool success = false;
    EpisodeSource source = EpisodeSource::random;

    int length() const { return int(actions.size()); }
    void validate() const;  // throws std::invalid_argument on violation
};

std::uint64_t episode_hash(const Episode& e);

// ---------------------------------------------------------------------------
// Episode serialization: "VGE1" records, little-endian u32 lengths and f32
// payloads. Used for replay snapshots and demo files.

void write_episodes(const std::string& path, const std::vector<Episode>& episodes);
std::vector<Episode> read_episodes(const std::string& path);

}  // namespace vge

#endif  // VGE_CORE_HPP
