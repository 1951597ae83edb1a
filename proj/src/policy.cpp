#include "vge/policy.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

namespace vge {

PolicyKind policy_kind_from_string(const std::string& s) {
    if (s == "regression") return PolicyKind::regression;
    if (s == "diffusion") return PolicyKind::diffusion;
    throw ConfigError("unknown policy kind: " + s);
}

const char* to_string(PolicyKind k) {
    return k == PolicyKind::regression ? "regression" : "diffusion";
}

void PolicyConfig::validate() const {
    if (h < 1) throw ConfigError("policy h must be >= 1");
    if (h_exec < 1 || h_exec > h) throw ConfigError("policy requires 1 <= h_exec <= h");
    if (action_dim < 1 || obs_dim < 1) throw ConfigError("policy dims must be >= 1");
    if (discrete) {
        if (h != 1) throw ConfigError("discrete policy requires h = 1");
        if (n_actions < 2) throw ConfigError("discrete policy requires n_actions >= 2");
        if (kind == PolicyKind::diffusion) throw ConfigError("discrete policy must be regression");
    }
    if (kind == PolicyKind::diffusion) {
        if (diffusion_steps < 1) throw ConfigError("diffusion_steps must be >= 1");
        if (!(beta_start > 0 && beta_start < 1 && beta_end > 0 && beta_end < 1))
            throw ConfigError("beta endpoints must be in (0,1)");
        if (!(beta_start < beta_end)) throw ConfigError("beta endpoints must be increasing");
        if (sample_stride < 1) throw ConfigError("sample_stride must be >= 1");
        if (time_embed_dim < 2 || time_embed_dim % 2 != 0)
            throw ConfigError("time_embed_dim must be even and >= 2");
    }
    if (hidden.empty() || denoiser_hidden.empty()) throw ConfigError("hidden widths required");
    if (lr <= 0) throw ConfigError("lr must be > 0");
}

DiffusionSchedule DiffusionSchedule::make(int t_d, real beta_start, real beta_end) {
    if (t_d < 1) throw std::invalid_argument("diffusion steps must be >= 1");
    DiffusionSchedule s;
    s.beta.resize(std::size_t(t_d));
    s.alpha.resize(std::size_t(t_d));
    s.alpha_bar.resize(std::size_t(t_d));
    const double scale = 1000.0 / t_d;
    double bar = 1.0;
    for (int t = 0; t < t_d; ++t) {
        const double frac = t_d > 1 ? double(t) / (t_d - 1) : 0.0;
        double b = (beta_start + (beta_end - beta_start) * frac) * scale;
        b = std::min(b, 0.999);
        s.beta[std::size_t(t)] = real(b);
        s.alpha[std::size_t(t)] = real(1.0 - b);
        bar *= 1.0 - b;
        s.alpha_bar[std::size_t(t)] = real(bar);
    }
    return s;
}

std::vector<real> ddpm_reverse_sample(const DiffusionSchedule& sched, int stride, const EpsFn& eps,
                                      int dim, RngStream& rng) {
    if (stride < 1) throw std::invalid_argument("stride must be >= 1");
    const int t_d = sched.steps();
    std::vector<int> steps;
    for (int t = t_d - 1; t >= 0; t -= stride) steps.push_back(t);
    if (steps.back() != 0) steps.push_back(0);

    std::vector<double> x(static_cast<std::size_t>(dim));
    for (auto& v : x) v = rng.normal();

    std::vector<real> xf(static_cast<std::size_t>(dim));
    for (std::size_t k = 0; k < steps.size(); ++k) {
        const int t = steps[k];
        const double abar_c = sched.alpha_bar[std::size_t(t)];
        const double abar_p = k + 1 < steps.size() ? sched.alpha_bar[std::size_t(steps[k + 1])] : 1.0;

        for (int i = 0; i < dim; ++i) xf[std::size_t(i)] = real(x[std::size_t(i)]);
        const std::vector<real> e = eps(xf, t);
        if (int(e.size()) != dim) throw std::invalid_argument("eps predictor returned wrong size");

        // Posterior q(x_prev | x_t, x0_hat); collapses to x0_hat at the end
        // where abar_p = 1.
        const double beta_eff = 1.0 - abar_c / abar_p;
        const double c0 = std::sqrt(abar_p) * beta_eff / (1.0 - abar_c);
        const double cx = std::sqrt(1.0 - beta_eff) * (1.0 - abar_p) / (1.0 - abar_c);
        const double var = (1.0 - abar_p) / (1.0 - abar_c) * beta_eff;
        const double sd = var > 0 ? std::sqrt(var) : 0.0;
        const double inv_sqrt_abar = 1.0 / std::sqrt(abar_c);
        const double noise_coef = std::sqrt(1.0 - abar_c);
        for (int i = 0; i < dim; ++i) {
            const double x0 = (x[std::size_t(i)] - noise_coef * double(e[std::size_t(i)])) * inv_sqrt_abar;
            double nxt = c0 * x0 + cx * x[std::size_t(i)];
            if (sd > 0) nxt += sd * rng.normal();
            x[std::size_t(i)] = nxt;
        }
    }
    for (int i = 0; i < dim; ++i) xf[std::size_t(i)] = real(x[std::size_t(i)]);
    return xf;
}

// ---------------------------------------------------------------------------

Policy::Policy(const PolicyConfig& cfg, const ActionBounds& bounds) : cfg_(cfg), bounds_(bounds) {
    cfg_.validate();
    if (!cfg_.discrete) {
        bounds_.validate();
        if (int(bounds_.dim()) != cfg_.action_dim)
            throw ConfigError("bounds dim does not match policy action dim");
    }
    const int in_obs = 2 * cfg_.obs_dim;
    std::vector<int> widths;
    if (cfg_.kind == PolicyKind::regression) {
        widths.push_back(in_obs);
        widths.insert(widths.end(), cfg_.hidden.begin(), cfg_.hidden.end());
        widths.push_back(cfg_.discrete ? cfg_.n_actions : cfg_.chunk_values());
    } else {
        widths.push_back(cfg_.chunk_values() + in_obs + cfg_.time_embed_dim);
        widths.insert(widths.end(), cfg_.denoiser_hidden.begin(), cfg_.denoiser_hidden.end());
        widths.push_back(cfg_.chunk_values());
        sched_ = DiffusionSchedule::make(cfg_.diffusion_steps, cfg_.beta_start, cfg_.beta_end);
    }
    spec_.widths = std::move(widths);
    spec_.validate();
}

void Policy::init(RngStream& rng) {
    params_ = nn::he_init<real>(spec_, rng);
    adam_ = nn::AdamState::make(params_.flat.size(), cfg_.lr);
    initialized_ = true;
}

std::uint64_t Policy::params_hash() const {
    return fnv1a64(params_.flat.data(), params_.flat.size() * sizeof(real));
}

std::vector<real> Policy::trunk_input(const Observation& obs, const Observation& goal) const {
    if (int(obs.size()) != cfg_.obs_dim || int(goal.size()) != cfg_.obs_dim)
        throw std::invalid_argument("observation/goal length mismatch");
    std::vector<real> x;
    x.reserve(std::size_t(2) * cfg_.obs_dim);
    x.insert(x.end(), obs.begin(), obs.end());
    if (cfg_.zero_goal)
        x.insert(x.end(), std::size_t(cfg_.obs_dim), 0.0f);
    else
        x.insert(x.end(), goal.begin(), goal.end());
    return x;
}

ActionChunk Policy::to_chunk(const std::vector<real>& flat) const {
    ActionChunk c;
    c.valid_len = cfg_.h;
    c.actions.reserve(std::size_t(cfg_.h));
    for (int i = 0; i < cfg_.h; ++i) {
        Action a(flat.begin() + std::size_t(i) * cfg_.action_dim,
                 flat.begin() + std::size_t(i + 1) * cfg_.action_dim);
        c.actions.push_back(clamp_action(a, bounds_));
    }
    return c;
}

ActionChunk Policy::predict(const Observation& obs, const Observation& goal,
                            RngStream& rng) const {
    if (!initialized_) throw IllegalState("policy parameters not loaded");
    if (cfg_.kind == PolicyKind::diffusion) return ddpm_sample(obs, goal, rng);
    const std::vector<real> y = nn::forward1(spec_, params_, trunk_input(obs, goal));
    if (cfg_.discrete) {
        int best = 0;
        for (int i = 1; i < cfg_.n_actions; ++i)
            if (y[std::size_t(i)] > y[std::size_t(best)]) best = i;
        ActionChunk c;
        c.actions.push_back({real(best)});
        c.valid_len = 1;
        return c;
    }
    return to_chunk(y);
}

ActionChunk Policy::ddpm_sample(const Observation& obs, const Observation& goal,
                                RngStream& rng) const {
    if (!initialized_) throw IllegalState("policy parameters not loaded");
    if (cfg_.kind != PolicyKind::diffusion) throw IllegalState("not a diffusion policy");
    const std::vector<real> cond = trunk_input(obs, goal);
    const int nv = cfg_.chunk_values();
    EpsFn eps = [&](const std::vector<real>& x, int t) {
        std::vector<real> in;
        in.reserve(x.size() + cond.size() + std::size_t(cfg_.time_embed_dim));
        in.insert(in.end(), x.begin(), x.end());
        in.insert(in.end(), cond.begin(), cond.end());
        const auto emb = nn::timestep_embedding<real>(t, cfg_.diffusion_steps, cfg_.time_embed_dim);
        in.insert(in.end(), emb.begin(), emb.end());
        return nn::forward1(spec_, params_, in);
    };
    const int stride = cfg_.sampler == SamplerKind::strided ? cfg_.sample_stride : 1;
    return to_chunk(ddpm_reverse_sample(sched_, stride, eps, nv, rng));
}

double Policy::train_step(const std::vector<Window>& batch, RngStream& rng) {
    if (!initialized_) throw IllegalState("policy parameters not loaded");
    if (batch.empty()) throw std::invalid_argument("empty training batch");
    if (cfg_.kind == PolicyKind::diffusion) return train_step_ddpm(batch, rng);
    return cfg_.discrete ? train_step_discrete(batch) : train_step_regression(batch);
}

double Policy::train_step_regression(const std::vector<Window>& batch) {
    const int b = int(batch.size());
    const int nv = cfg_.chunk_values();
    std::vector<real> x(std::size_t(b) * spec_.input());
    std::vector<real> target(std::size_t(b) * nv, 0.0f);
    std::vector<real> mask(std::size_t(b) * nv, 0.0f);
    double mask_total = 0;
    for (int n = 0; n < b; ++n) {
        const Window& w = batch[std::size_t(n)];
        const auto in = trunk_input(w.obs, w.goal);
        std::copy(in.begin(), in.end(), x.begin() + std::size_t(n) * spec_.input());
        const int valid = std::min(w.chunk.valid_len, cfg_.h);
        for (int i = 0; i < valid; ++i) {
            const Action& a = w.chunk.actions[std::size_t(i)];
            if (int(a.size()) != cfg_.action_dim)
                throw std::invalid_argument("window action dim mismatch");
            for (int k = 0; k < cfg_.action_dim; ++k) {
                target[std::size_t(n) * nv + std::size_t(i) * cfg_.action_dim + k] = a[std::size_t(k)];
                mask[std::size_t(n) * nv + std::size_t(i) * cfg_.action_dim + k] = 1.0f;
            }
        }
        mask_total += valid * cfg_.action_dim;
    }

    nn::ForwardCache cache;
    const std::vector<real> y = nn::forward(spec_, params_, x, b, &cache);
    double loss = 0;
    std::vector<real> grad(y.size());
    const real inv = real(1.0 / mask_total);
    for (std::size_t i = 0; i < y.size(); ++i) {
        const real r = (y[i] - target[i]) * mask[i];
        loss += double(r) * double(r);
        grad[i] = 2.0f * r * inv;
    }
    loss /= mask_total;
    if (!std::isfinite(loss)) {
        ++faults_;
        return loss;
    }
    const auto grads = nn::backward(spec_, params_, cache, grad);
    nn::adam_step(params_, grads, adam_);
    return loss;
}

double Policy::train_step_discrete(const std::vector<Window>& batch) {
    const int b = int(batch.size());
    std::vector<real> x(std::size_t(b) * spec_.input());
    std::vector<int> target(static_cast<std::size_t>(b));
    for (int n = 0; n < b; ++n) {
        const Window& w = batch[std::size_t(n)];
        const auto in = trunk_input(w.obs, w.goal);
        std::copy(in.begin(), in.end(), x.begin() + std::size_t(n) * spec_.input());
        const int idx = int(std::lround(w.chunk.actions.front().front()));
        if (idx < 0 || idx >= cfg_.n_actions)
            throw std::invalid_argument("action index out of range in training window");
        target[std::size_t(n)] = idx;
    }

    nn::ForwardCache cache;
    const std::vector<real> logits = nn::forward(spec_, params_, x, b, &cache);
    const int k = cfg_.n_actions;
    double loss = 0;
    std::vector<real> grad(logits.size());
    for (int n = 0; n < b; ++n) {
        const real* l = logits.data() + std::size_t(n) * k;
        real m = l[0];
        for (int i = 1; i < k; ++i) m = std::max(m, l[i]);
        double z = 0;
        for (int i = 0; i < k; ++i) z += std::exp(double(l[i]) - double(m));
        loss += std::log(z) + double(m) - double(l[target[std::size_t(n)]]);
        for (int i = 0; i < k; ++i) {
            const double p = std::exp(double(l[i]) - double(m)) / z;
            grad[std::size_t(n) * k + std::size_t(i)] =
                real((p - (i == target[std::size_t(n)] ? 1.0 : 0.0)) / b);
        }
    }
    loss /= b;
    if (!std::isfinite(loss)) {
        ++faults_;
        return loss;
    }
    const auto grads = nn::backward(spec_, params_, cache, grad);
    nn::adam_step(params_, grads, adam_);
    return loss;
}

double Policy::train_step_ddpm(const std::vector<Window>& batch, RngStream& rng) {
    const int b = int(batch.size());
    const int nv = cfg_.chunk_values();
    std::vector<real> x(std::size_t(b) * spec_.input());
    std::vector<real> noise(std::size_t(b) * nv);
    std::vector<real> mask(std::size_t(b) * nv, 0.0f);
    double mask_total = 0;

    for (int n = 0; n < b; ++n) {
        const Window& w = batch[std::size_t(n)];
        const int t = int(rng.uniform_int(std::uint64_t(cfg_.diffusion_steps)));
        const real sa = std::sqrt(sched_.alpha_bar[std::size_t(t)]);
        const real sn = std::sqrt(1.0f - sched_.alpha_bar[std::size_t(t)]);
        real* row = x.data() + std::size_t(n) * spec_.input();
        const int valid = std::min(w.chunk.valid_len, cfg_.h);
        for (int i = 0; i < cfg_.h; ++i) {
            for (int k = 0; k < cfg_.action_dim; ++k) {
                const std::size_t j = std::size_t(i) * cfg_.action_dim + k;
                // Padded slots are forced to the null action before noising,
                // so their (arbitrary) stored values can never leak in.
                const real a0 = i < valid ? w.chunk.actions[std::size_t(i)][std::size_t(k)] : 0.0f;
                const real e = real(rng.normal());
                noise[std::size_t(n) * nv + j] = e;
                row[j] = sa * a0 + sn * e;
                if (i < valid) mask[std::size_t(n) * nv + j] = 1.0f;
            }
        }
        mask_total += valid * cfg_.action_dim;
        const auto in = trunk_input(w.obs, w.goal);
        std::copy(in.begin(), in.end(), row + nv);
        const auto emb = nn::timestep_embedding<real>(t, cfg_.diffusion_steps, cfg_.time_embed_dim);
        std::copy(emb.begin(), emb.end(), row + nv + in.size());
    }

    nn::ForwardCache cache;
    const std::vector<real> pred = nn::forward(spec_, params_, x, b, &cache);
    double loss = 0;
    std::vector<real> grad(pred.size());
    const real inv = real(1.0 / mask_total);
    for (int n = 0; n < b; ++n) {
        for (int j = 0; j < nv; ++j) {
            const std::size_t i = std::size_t(n) * nv + std::size_t(j);
            const real r = (pred[i] - noise[i]) * mask[i];
            loss += double(r) * double(r);
            grad[i] = 2.0f * r * inv;
        }
    }
    loss /= mask_total;
    if (!std::isfinite(loss)) {
        ++faults_;
        return loss;
    }
    const auto grads = nn::backward(spec_, params_, cache, grad);
    nn::adam_step(params_, grads, adam_);
    return loss;
}

// ---------------------------------------------------------------------------
// Checkpoints: "VGP1", config header, f32 parameter payload, trailing CRC32.

namespace {

void put_u32(std::string& b, std::uint32_t v) {
    char c[4];
    std::memcpy(c, &v, 4);
    b.append(c, 4);
}
void put_f32(std::string& b, real v) {
    char c[4];
    std::memcpy(c, &v, 4);
    b.append(c, 4);
}

struct CkptReader {
    const std::string& buf;
    std::size_t pos = 0;
    void need(std::size_t n) const {
        if (pos + n > buf.size()) throw CorruptCheckpoint("truncated checkpoint");
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v;
        std::memcpy(&v, buf.data() + pos, 4);
        pos += 4;
        return v;
    }
    real f32() {
        need(4);
        real v;
        std::memcpy(&v, buf.data() + pos, 4);
        pos += 4;
        return v;
    }
    std::uint8_t u8() {
        need(1);
        return std::uint8_t(buf[pos++]);
    }
};

}  // namespace

void Policy::save(const std::string& path) const {
    if (!initialized_) throw IllegalState("cannot save an uninitialized policy");
    std::string b;
    b.append("VGP1", 4);
    put_u32(b, 1);
    b.push_back(char(cfg_.kind));
    b.push_back(char(cfg_.discrete ? 1 : 0));
    b.push_back(char(cfg_.sampler));
    b.push_back(char(cfg_.zero_goal ? 1 : 0));
    for (std::uint32_t v : {std::uint32_t(cfg_.h), std::uint32_t(cfg_.h_exec),
                            std::uint32_t(cfg_.action_dim), std::uint32_t(cfg_.obs_dim),
                            std::uint32_t(cfg_.n_actions), std::uint32_t(cfg_.diffusion_steps),
                            std::uint32_t(cfg_.sample_stride), std::uint32_t(cfg_.time_embed_dim)})
        put_u32(b, v);
    put_f32(b, cfg_.beta_start);
    put_f32(b, cfg_.beta_end);
    put_f32(b, cfg_.lr);
    put_u32(b, std::uint32_t(bounds_.dim()));
    for (real v : bounds_.low) put_f32(b, v);
    for (real v : bounds_.high) put_f32(b, v);
    put_u32(b, std::uint32_t(spec_.widths.size()));
    for (int w : spec_.widths) put_u32(b, std::uint32_t(w));
    put_u32(b, std::uint32_t(params_.flat.size()));
    b.append(reinterpret_cast<const char*>(params_.flat.data()), params_.flat.size() * sizeof(real));
    put_u32(b, crc32(b.data(), b.size()));

    const std::string tmp = path + ".tmp";
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open for write: " + tmp);
    f.write(b.data(), std::streamsize(b.size()));
    f.close();
    if (!f) throw std::runtime_error("write failed: " + tmp);
    if (std::rename(tmp.c_str(), path.c_str()) != 0)
        throw std::runtime_error("rename failed: " + path);
}

Policy Policy::load(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open: " + path);
    std::string buf((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    if (buf.size() < 12) throw CorruptCheckpoint("checkpoint too small");
    std::uint32_t stored;
    std::memcpy(&stored, buf.data() + buf.size() - 4, 4);
    if (crc32(buf.data(), buf.size() - 4) != stored)
        throw CorruptCheckpoint("checkpoint CRC mismatch");

    CkptReader r{buf};
    if (buf.compare(0, 4, "VGP1") != 0) throw CorruptCheckpoint("bad checkpoint magic");
    r.pos = 4;
    if (r.u32() != 1) throw CorruptCheckpoint("unsupported checkpoint version");

    PolicyConfig cfg;
    cfg.kind = PolicyKind(r.u8());
    cfg.discrete = r.u8() != 0;
    cfg.sampler = SamplerKind(r.u8());
    cfg.zero_goal = r.u8() != 0;
    cfg.h = int(r.u32());
    cfg.h_exec = int(r.u32());
    cfg.action_dim = int(r.u32());
    cfg.obs_dim = int(r.u32());
    cfg.n_actions = int(r.u32());
    cfg.diffusion_steps = int(r.u32());
    cfg.sample_stride = int(r.u32());
    cfg.time_embed_dim = int(r.u32());
    cfg.beta_start = r.f32();
    cfg.beta_end = r.f32();
    cfg.lr = r.f32();

    ActionBounds bounds;
    const std::uint32_t bdim = r.u32();
    bounds.low.resize(bdim);
    bounds.high.resize(bdim);
    for (auto& v : bounds.low) v = r.f32();
    for (auto& v : bounds.high) v = r.f32();

    std::vector<int> widths(r.u32());
    for (auto& w : widths) w = int(r.u32());

    // Hidden widths are recovered from the stored spec.
    if (widths.size() < 3) throw CorruptCheckpoint("bad stored spec");
    std::vector<int> hidden(widths.begin() + 1, widths.end() - 1);
    if (cfg.kind == PolicyKind::regression)
        cfg.hidden = hidden;
    else
        cfg.denoiser_hidden = hidden;

    Policy p(cfg, bounds);
    if (p.spec_.widths != widths) throw CorruptCheckpoint("stored spec is inconsistent");
    const std::uint32_t n = r.u32();
    if (n != p.spec_.param_count()) throw CorruptCheckpoint("parameter count mismatch");
    p.params_.flat.resize(n);
    r.need(std::size_t(n) * sizeof(real));
    std::memcpy(p.params_.flat.data(), buf.data() + r.pos, std::size_t(n) * sizeof(real));
    p.adam_ = nn::AdamState::make(p.params_.flat.size(), cfg.lr);
    p.initialized_ = true;
    return p;
}

}  // namespace vge
