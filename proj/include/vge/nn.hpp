#ifndef VGE_NN_HPP
#define VGE_NN_HPP

// Minimal dense-network kernel: batched forward, analytic backprop and Adam
// on a flat parameter vector. Templated on the scalar so the test suite can
// run the identical code path in 64-bit shadow mode; production code uses
// vge::real (float).

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "vge/core.hpp"

namespace vge::nn {

struct MlpSpec {
    // widths[0] = input, widths.back() = output, ReLU on hidden layers,
    // identity on the output layer.
    std::vector<int> widths;

    int input() const { return widths.front(); }
    int output() const { return widths.back(); }
    int layers() const { return int(widths.size()) - 1; }

    void validate() const {
        if (widths.size() < 3) throw std::invalid_argument("MlpSpec needs >= 1 hidden layer");
        for (int w : widths)
            if (w < 1) throw std::invalid_argument("MlpSpec widths must be >= 1");
    }

    // Layer l holds W (widths[l+1] x widths[l], row-major) then bias.
    std::size_t layer_offset(int l) const {
        std::size_t off = 0;
        for (int i = 0; i < l; ++i)
            off += std::size_t(widths[i + 1]) * (widths[i] + 1);
        return off;
    }
    std::size_t param_count() const { return layer_offset(layers()); }

    bool operator==(const MlpSpec& o) const { return widths == o.widths; }
};

template <class T>
struct MlpParamsT {
    std::vector<T> flat;
};

using MlpParams = MlpParamsT<real>;

template <class T>
MlpParamsT<T> he_init(const MlpSpec& spec, RngStream& rng) {
    spec.validate();
    MlpParamsT<T> p;
    p.flat.assign(spec.param_count(), T(0));
    for (int l = 0; l < spec.layers(); ++l) {
        const int fan_in = spec.widths[l];
        const int fan_out = spec.widths[l + 1];
        const double scale = std::sqrt(2.0 / fan_in);
        T* w = p.flat.data() + spec.layer_offset(l);
        for (int i = 0; i < fan_out * fan_in; ++i) w[i] = T(rng.normal() * scale);
        // biases stay zero
    }
    return p;
}

// Cache of one forward pass, consumed by backward().
template <class T>
struct ForwardCacheT {
    int batch = 0;
    std::vector<std::vector<T>> act;  // act[0] = input, act[l] = post-activation of layer l
};

using ForwardCache = ForwardCacheT<real>;

// y = act(W x + b) per layer; returns batch x output, row-major.
template <class T>
std::vector<T> forward(const MlpSpec& spec, const MlpParamsT<T>& params,
                       const std::vector<T>& input, int batch, ForwardCacheT<T>* cache = nullptr) {
    if (params.flat.size() != spec.param_count()) throw IllegalState("params/spec size mismatch");
    if (input.size() != std::size_t(batch) * spec.input())
        throw std::invalid_argument("forward: input width mismatch");
    if (cache) {
        cache->batch = batch;
        cache->act.assign(spec.layers() + 1, {});
        cache->act[0] = input;
    }
    std::vector<T> cur = input;
    for (int l = 0; l < spec.layers(); ++l) {
        const int in_w = spec.widths[l];
        const int out_w = spec.widths[l + 1];
        const T* w = params.flat.data() + spec.layer_offset(l);
        const T* b = w + std::size_t(out_w) * in_w;
        std::vector<T> next(std::size_t(batch) * out_w);
        const bool relu = l + 1 < spec.layers();
        for (int n = 0; n < batch; ++n) {
            const T* x = cur.data() + std::size_t(n) * in_w;
            T* y = next.data() + std::size_t(n) * out_w;
            for (int o = 0; o < out_w; ++o) {
                const T* wr = w + std::size_t(o) * in_w;
                T acc = b[o];
                for (int i = 0; i < in_w; ++i) acc += wr[i] * x[i];
                y[o] = relu && acc < T(0) ? T(0) : acc;
            }
        }
        cur = std::move(next);
        if (cache) cache->act[l + 1] = cur;
    }
    return cur;
}

// Convenience single-sample forward.
template <class T>
std::vector<T> forward1(const MlpSpec& spec, const MlpParamsT<T>& params, const std::vector<T>& x) {
    return forward(spec, params, x, 1);
}

// Gradient of sum(output .* grad_output) w.r.t. the flat parameter vector.
template <class T>
std::vector<T> backward(const MlpSpec& spec, const MlpParamsT<T>& params,
                        const ForwardCacheT<T>& cache, const std::vector<T>& grad_output) {
    const int batch = cache.batch;
    if (int(cache.act.size()) != spec.layers() + 1)
        throw IllegalState("backward: cache does not match spec");
    if (grad_output.size() != std::size_t(batch) * spec.output())
        throw std::invalid_argument("backward: grad_output width mismatch");

    std::vector<T> grads(spec.param_count(), T(0));
    std::vector<T> delta = grad_output;
    for (int l = spec.layers() - 1; l >= 0; --l) {
        const int in_w = spec.widths[l];
        const int out_w = spec.widths[l + 1];
        const T* w = params.flat.data() + spec.layer_offset(l);
        T* gw = grads.data() + spec.layer_offset(l);
        T* gb = gw + std::size_t(out_w) * in_w;
        const std::vector<T>& x = cache.act[l];
        // Post-activation of this layer gates delta through the ReLU; the
        // output layer is identity so no gating there.
        if (l + 1 < spec.layers()) {
            const std::vector<T>& y = cache.act[l + 1];
            for (std::size_t i = 0; i < delta.size(); ++i)
                if (y[i] <= T(0)) delta[i] = T(0);
        }
        for (int n = 0; n < batch; ++n) {
            const T* dn = delta.data() + std::size_t(n) * out_w;
            const T* xn = x.data() + std::size_t(n) * in_w;
            for (int o = 0; o < out_w; ++o) {
                const T d = dn[o];
                if (d == T(0)) continue;
                T* gwr = gw + std::size_t(o) * in_w;
                for (int i = 0; i < in_w; ++i) gwr[i] += d * xn[i];
                gb[o] += d;
            }
        }
        if (l > 0) {
            std::vector<T> prev(std::size_t(batch) * in_w, T(0));
            for (int n = 0; n < batch; ++n) {
                const T* dn = delta.data() + std::size_t(n) * out_w;
                T* pn = prev.data() + std::size_t(n) * in_w;
                for (int o = 0; o < out_w; ++o) {
                    const T d = dn[o];
                    if (d == T(0)) continue;
                    const T* wr = w + std::size_t(o) * in_w;
                    for (int i = 0; i < in_w; ++i) pn[i] += d * wr[i];
                }
            }
            delta = std::move(prev);
        }
    }
    return grads;
}

template <class T>
struct AdamStateT {
    std::vector<T> m;
    std::vector<T> v;
    std::int64_t step = 0;
    T lr = T(1e-4);
    T beta1 = T(0.9);
    T beta2 = T(0.999);
    T eps = T(1e-8);
    std::int64_t skipped = 0;  // non-finite gradient batches

    static AdamStateT make(std::size_t n, T lr_) {
        AdamStateT s;
        s.m.assign(n, T(0));
        s.v.assign(n, T(0));
        s.lr = lr_;
        return s;
    }
};

using AdamState = AdamStateT<real>;

// Bias-corrected Adam update in place. Non-finite gradients skip the update
// and are counted instead of propagating NaNs into the parameters.
template <class T>
bool adam_step(MlpParamsT<T>& params, const std::vector<T>& grads, AdamStateT<T>& state) {
    if (grads.size() != params.flat.size() || state.m.size() != params.flat.size())
        throw std::invalid_argument("adam_step: shape mismatch");
    for (T g : grads) {
        if (!std::isfinite(g)) {
            ++state.skipped;
            return false;
        }
    }
    ++state.step;
    const T b1t = T(1) - T(std::pow(double(state.beta1), double(state.step)));
    const T b2t = T(1) - T(std::pow(double(state.beta2), double(state.step)));
    T* p = params.flat.data();
    T* m = state.m.data();
    T* v = state.v.data();
    const T* g = grads.data();
    const std::size_t n = params.flat.size();
    for (std::size_t i = 0; i < n; ++i) {
        m[i] = state.beta1 * m[i] + (T(1) - state.beta1) * g[i];
        v[i] = state.beta2 * v[i] + (T(1) - state.beta2) * g[i] * g[i];
        const T mhat = m[i] / b1t;
        const T vhat = v[i] / b2t;
        p[i] -= state.lr * mhat / (std::sqrt(vhat) + state.eps);
    }
    return true;
}

// Sinusoidal embedding of a diffusion timestep. First dim/2 entries are
// sines, last dim/2 cosines; angular frequencies fall geometrically from 1
// to 1/10^4.
template <class T>
std::vector<T> timestep_embedding(int t, int t_total, int dim) {
    if (dim < 2 || dim % 2 != 0) throw std::invalid_argument("embedding dim must be even");
    if (t < 0 || t >= t_total) throw std::invalid_argument("timestep out of range");
    const int half = dim / 2;
    std::vector<T> out(dim);
    for (int k = 0; k < half; ++k) {
        const double freq = std::pow(10000.0, -double(k) / double(half - 1 > 0 ? half - 1 : 1));
        out[k] = T(std::sin(t * freq));
        out[half + k] = T(std::cos(t * freq));
    }
    return out;
}

}  // namespace vge::nn

#endif  // VGE_NN_HPP
