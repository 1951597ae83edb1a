#include "vge/core.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>

namespace vge {

double RngStream::normal() {
    // u1 in (0, 1] so the log is finite.
    double u1 = 1.0 - uniform01();
    double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

std::uint32_t crc32(const void* data, std::size_t n, std::uint32_t crc) {
    static const auto table = [] {
        std::array<std::uint32_t, 256> t{};
        for (std::uint32_t i = 0; i < 256; ++i) {
            std::uint32_t c = i;
            for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xedb88320u ^ (c >> 1) : c >> 1;
            t[i] = c;
        }
        return t;
    }();
    const auto* p = static_cast<const unsigned char*>(data);
    crc ^= 0xffffffffu;
    for (std::size_t i = 0; i < n; ++i) crc = table[(crc ^ p[i]) & 0xffu] ^ (crc >> 8);
    return crc ^ 0xffffffffu;
}

void ActionBounds::validate() const {
    if (low.size() != high.size()) throw std::invalid_argument("bounds dim mismatch");
    if (low.empty()) throw std::invalid_argument("empty bounds");
    for (std::size_t k = 0; k < low.size(); ++k)
        if (!(low[k] < high[k])) throw std::invalid_argument("bounds require low < high");
}

Action clamp_action(const Action& a, const ActionBounds& b) {
    if (a.size() != b.low.size()) throw std::invalid_argument("clamp_action: dim mismatch");
    Action out(a.size());
    for (std::size_t k = 0; k < a.size(); ++k)
        out[k] = std::min(b.high[k], std::max(b.low[k], a[k]));
    return out;
}

void ActionChunk::validate() const {
    if (actions.empty()) throw std::invalid_argument("empty chunk");
    if (valid_len < 1 || valid_len > horizon())
        throw std::invalid_argument("chunk valid_len out of range");
}

const char* to_string(EpisodeSource s) {
    switch (s) {
        case EpisodeSource::random: return "random";
        case EpisodeSource::video_guided: return "video_guided";
        case EpisodeSource::expert: return "expert";
    }
    return "unknown";
}

void Episode::validate() const {
    if (actions.empty()) throw std::invalid_argument("episode with no actions");
    if (observations.size() != actions.size() + 1)
        throw std::invalid_argument("episode requires len(obs) = len(act)+1");
    const std::size_t obs_dim = observations.front().size();
    for (const auto& o : observations) {
        if (o.size() != obs_dim) throw std::invalid_argument("inconsistent observation length");
        for (real v : o)
            if (!std::isfinite(v)) throw std::invalid_argument("non-finite observation");
    }
    const std::size_t act_dim = actions.front().size();
    for (const auto& a : actions) {
        if (a.size() != act_dim) throw std::invalid_argument("inconsistent action length");
        for (real v : a)
            if (!std::isfinite(v)) throw std::invalid_argument("non-finite action");
    }
}

std::uint64_t episode_hash(const Episode& e) {
    std::uint64_t h = fnv1a64(e.task.env_name);
    std::uint32_t id = std::uint32_t(e.task.id);
    h = fnv1a64(&id, sizeof(id), h);
    std::uint8_t flags[2] = {std::uint8_t(e.success), std::uint8_t(e.source)};
    h = fnv1a64(flags, 2, h);
    for (const auto& o : e.observations) h = fnv1a64(o.data(), o.size() * sizeof(real), h);
    for (const auto& a : e.actions) h = fnv1a64(a.data(), a.size() * sizeof(real), h);
    return h;
}

// ---------------------------------------------------------------------------
// Binary episode records

namespace {

void put_u32(std::string& buf, std::uint32_t v) {
    char b[4];
    std::memcpy(b, &v, 4);
    buf.append(b, 4);
}

void put_f32(std::string& buf, const real* p, std::size_t n) {
    buf.append(reinterpret_cast<const char*>(p), n * sizeof(real));
}

struct Reader {
    const std::string& buf;
    std::size_t pos = 0;

    void need(std::size_t n) const {
        if (pos + n > buf.size()) throw std::runtime_error("truncated episode file");
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v;
        std::memcpy(&v, buf.data() + pos, 4);
        pos += 4;
        return v;
    }
    std::uint8_t u8() {
        need(1);
        return std::uint8_t(buf[pos++]);
    }
    std::string bytes(std::size_t n) {
        need(n);
        std::string s = buf.substr(pos, n);
        pos += n;
        return s;
    }
    void f32(real* out, std::size_t n) {
        need(n * sizeof(real));
        std::memcpy(out, buf.data() + pos, n * sizeof(real));
        pos += n * sizeof(real);
    }
};

}  // namespace

void write_episodes(const std::string& path, const std::vector<Episode>& episodes) {
    std::string buf;
    buf.append("VGE1", 4);
    put_u32(buf, 1);  // version
    put_u32(buf, std::uint32_t(episodes.size()));
    for (const auto& e : episodes) {
        e.validate();
        put_u32(buf, std::uint32_t(e.task.id));
        put_u32(buf, std::uint32_t(e.task.env_name.size()));
        buf.append(e.task.env_name);
        put_u32(buf, std::uint32_t(e.task.description.size()));
        buf.append(e.task.description);
        buf.push_back(char(e.source));
        buf.push_back(char(e.success ? 1 : 0));
        const std::uint32_t t = std::uint32_t(e.actions.size());
        const std::uint32_t obs_dim = std::uint32_t(e.observations.front().size());
        const std::uint32_t act_dim = std::uint32_t(e.actions.front().size());
        put_u32(buf, t);
        put_u32(buf, obs_dim);
        put_u32(buf, act_dim);
        for (const auto& o : e.observations) put_f32(buf, o.data(), o.size());
        for (const auto& a : e.actions) put_f32(buf, a.data(), a.size());
    }
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open for write: " + path);
    f.write(buf.data(), std::streamsize(buf.size()));
    if (!f) throw std::runtime_error("write failed: " + path);
}

std::vector<Episode> read_episodes(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open: " + path);
    std::string buf((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    Reader r{buf};
    if (r.bytes(4) != "VGE1") throw std::runtime_error("bad magic in " + path);
    if (r.u32() != 1) throw std::runtime_error("unsupported episode file version");
    const std::uint32_t count = r.u32();
    std::vector<Episode> out;
    out.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        Episode e;
        e.task.id = int(r.u32());
        e.task.env_name = r.bytes(r.u32());
        e.task.description = r.bytes(r.u32());
        e.source = EpisodeSource(r.u8());
        e.success = r.u8() != 0;
        const std::uint32_t t = r.u32();
        const std::uint32_t obs_dim = r.u32();
        const std::uint32_t act_dim = r.u32();
        e.observations.assign(t + 1, Observation(obs_dim));
        for (auto& o : e.observations) r.f32(o.data(), obs_dim);
        e.actions.assign(t, Action(act_dim));
        for (auto& a : e.actions) r.f32(a.data(), act_dim);
        e.validate();
        out.push_back(std::move(e));
    }
    return out;
}

}  // namespace vge
