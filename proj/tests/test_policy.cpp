#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>

#include "vge/policy.hpp"

using namespace vge;

namespace {

ActionBounds table_bounds() {
    ActionBounds b;
    b.low = {-0.05f, -0.05f, -1.0f};
    b.high = {0.05f, 0.05f, 1.0f};
    return b;
}

PolicyConfig regression_cfg() {
    PolicyConfig c;
    c.kind = PolicyKind::regression;
    c.h = 16;
    c.h_exec = 8;
    c.action_dim = 3;
    c.obs_dim = 7;
    return c;
}

PolicyConfig diffusion_cfg(int h = 4, int d = 2, std::vector<int> hidden = {64, 64}) {
    PolicyConfig c;
    c.kind = PolicyKind::diffusion;
    c.h = h;
    c.h_exec = h;
    c.action_dim = d;
    c.obs_dim = 3;
    c.denoiser_hidden = std::move(hidden);
    ActionBounds b;
    return c;
}

Observation obs7(RngStream& rng) {
    Observation o(7);
    for (auto& v : o) v = real(rng.uniform01());
    return o;
}

Window window_from(const Observation& obs, const Observation& goal,
                   const std::vector<Action>& acts, int h, const Action& null_a) {
    Window w;
    w.obs = obs;
    w.goal = goal;
    w.chunk.actions = acts;
    w.chunk.valid_len = int(acts.size());
    while (int(w.chunk.actions.size()) < h) w.chunk.actions.push_back(null_a);
    return w;
}

}  // namespace

TEST_CASE("schedule: alpha-bar decreasing, terminal value destroys the signal") {
    const DiffusionSchedule s = DiffusionSchedule::make(100, 1e-4f, 0.02f);
    REQUIRE(s.steps() == 100);
    CHECK(s.alpha_bar[0] == s.alpha[0]);
    for (int t = 0; t < 100; ++t) {
        CHECK(s.beta[std::size_t(t)] > 0.0f);
        CHECK(s.beta[std::size_t(t)] < 1.0f);
        CHECK(s.alpha_bar[std::size_t(t)] > 0.0f);
        CHECK(s.alpha_bar[std::size_t(t)] < 1.0f);
        if (t > 0) CHECK(s.alpha_bar[std::size_t(t)] < s.alpha_bar[std::size_t(t - 1)]);
    }
    CHECK(s.alpha_bar[99] < 0.02f);
}

TEST_CASE("regression head: zero-initialized net emits the all-zero chunk") {
    Policy p(regression_cfg(), table_bounds());
    RngStream rng(1);
    p.init(rng);
    p.mutable_params().flat.assign(p.mutable_params().flat.size(), 0.0f);
    RngStream dummy(2);
    const ActionChunk c = p.predict(Observation(7, 0.3f), Observation(7, 0.9f), dummy);
    REQUIRE(c.horizon() == 16);
    CHECK(c.valid_len == 16);
    for (const Action& a : c.actions)
        for (real v : a) CHECK(v == 0.0f);
}

TEST_CASE("regression head: deterministic and always inside the bounds") {
    Policy p(regression_cfg(), table_bounds());
    RngStream rng(3);
    p.init(rng);
    RngStream scan(4);
    for (int i = 0; i < 10000; ++i) {
        const Observation o = obs7(scan), g = obs7(scan);
        RngStream d1(0), d2(0);
        const ActionChunk c1 = p.predict(o, g, d1);
        const ActionChunk c2 = p.predict(o, g, d2);
        for (int j = 0; j < c1.horizon(); ++j) {
            CHECK(c1.actions[std::size_t(j)] == c2.actions[std::size_t(j)]);
            const Action& a = c1.actions[std::size_t(j)];
            CHECK(a[0] >= -0.05f);
            CHECK(a[0] <= 0.05f);
            CHECK(a[1] >= -0.05f);
            CHECK(a[1] <= 0.05f);
            CHECK(a[2] >= -1.0f);
            CHECK(a[2] <= 1.0f);
        }
    }
}

TEST_CASE("regression training: fixed point has zero loss and zero movement") {
    // Zero parameters predict the all-zero chunk; training against all-zero
    // targets is a fixed point: zero loss, zero grads, parameters intact.
    Policy p(regression_cfg(), table_bounds());
    RngStream rng(5);
    p.init(rng);
    p.mutable_params().flat.assign(p.mutable_params().flat.size(), 0.0f);

    Window w;
    w.obs = Observation(7, 0.4f);
    w.goal = Observation(7, 0.6f);
    w.chunk.actions.assign(16, Action{0.0f, 0.0f, 0.0f});
    w.chunk.valid_len = 16;
    RngStream trng(1);
    const double loss = p.train_step({w}, trng);
    CHECK(loss == 0.0);
    for (real v : p.params().flat) CHECK(v == 0.0f);
}

TEST_CASE("regression training: memorizes a single window") {
    PolicyConfig cfg = regression_cfg();
    cfg.hidden = {64, 64};
    Policy p(cfg, table_bounds());
    RngStream rng(6);
    p.init(rng);
    RngStream gen(7);
    const Observation o = obs7(gen), g = obs7(gen);
    std::vector<Action> acts;
    for (int i = 0; i < 16; ++i)
        acts.push_back({real(gen.uniform(-0.05, 0.05)), real(gen.uniform(-0.05, 0.05)),
                        real(gen.uniform(-1, 1))});
    const std::vector<Window> batch{window_from(o, g, acts, 16, {0, 0, 0})};
    RngStream trng(8);
    double loss = 1;
    for (int i = 0; i < 2000; ++i) loss = p.train_step(batch, trng);
    CHECK(loss < 1e-4);
}

TEST_CASE("masked loss: garbage in padded targets changes nothing") {
    Policy p(regression_cfg(), table_bounds());
    RngStream rng(9);
    p.init(rng);
    Policy q = p;  // identical twin

    RngStream gen(10);
    const Observation o = obs7(gen), g = obs7(gen);
    std::vector<Action> acts;
    for (int i = 0; i < 5; ++i)
        acts.push_back({real(gen.uniform(-0.05, 0.05)), real(gen.uniform(-0.05, 0.05)), 0.0f});

    std::vector<Window> clean{window_from(o, g, acts, 16, {0, 0, 0})};
    std::vector<Window> garbage = clean;
    for (int i = 5; i < 16; ++i)
        garbage[0].chunk.actions[std::size_t(i)] = {9.0f, -9.0f, 5.0f};

    RngStream t1(11), t2(11);
    const double l1 = p.train_step(clean, t1);
    const double l2 = q.train_step(garbage, t2);
    CHECK(l1 == l2);
    CHECK(p.params_hash() == q.params_hash());
}

TEST_CASE("discrete head: argmax prediction and CE training") {
    PolicyConfig cfg;
    cfg.kind = PolicyKind::regression;
    cfg.h = 1;
    cfg.h_exec = 1;
    cfg.obs_dim = 88;
    cfg.action_dim = 1;
    cfg.discrete = true;
    cfg.n_actions = 4;
    cfg.hidden = {64, 64};
    ActionBounds b;
    b.low = {0.0f};
    b.high = {3.0f};
    Policy p(cfg, b);
    RngStream rng(12);
    p.init(rng);

    RngStream gen(13);
    Observation o(88, 0.0f);
    o[3] = 1.0f;
    Observation g(88, 0.0f);
    g[5] = 1.0f;
    Window w;
    w.obs = o;
    w.goal = g;
    w.chunk.actions = {{2.0f}};
    w.chunk.valid_len = 1;
    const std::vector<Window> batch{w};
    RngStream trng(14);
    double loss0 = p.train_step(batch, trng), loss = loss0;
    for (int i = 0; i < 500; ++i) loss = p.train_step(batch, trng);
    CHECK(loss < 0.01);
    CHECK(loss < loss0);
    RngStream dummy(0);
    const ActionChunk c = p.predict(o, g, dummy);
    CHECK(int(std::lround(c.actions[0][0])) == 2);
}

TEST_CASE("ddpm: initial loss is about 1 with a zero denoiser") {
    PolicyConfig cfg = diffusion_cfg(16, 3, {64});
    cfg.obs_dim = 7;
    Policy p(cfg, table_bounds());
    RngStream rng(15);
    p.init(rng);
    p.mutable_params().flat.assign(p.mutable_params().flat.size(), 0.0f);

    RngStream gen(16);
    std::vector<Window> batch;
    for (int i = 0; i < 64; ++i) {
        std::vector<Action> acts;
        for (int j = 0; j < 16; ++j)
            acts.push_back({real(gen.uniform(-0.05, 0.05)), real(gen.uniform(-0.05, 0.05)),
                            real(gen.uniform(-1, 1))});
        batch.push_back(window_from(obs7(gen), obs7(gen), acts, 16, {0, 0, 0}));
    }
    RngStream trng(17);
    const double loss = p.train_step(batch, trng);
    CHECK(loss == doctest::Approx(1.0).epsilon(0.1));
}

TEST_CASE("ddpm: loss drops by half over 5k steps on a fixed buffer") {
    PolicyConfig cfg = diffusion_cfg(8, 2, {64, 64});
    cfg.obs_dim = 3;
    ActionBounds b;
    b.low = {-0.05f, -0.05f};
    b.high = {0.05f, 0.05f};
    Policy p(cfg, b);
    RngStream rng(18);
    p.init(rng);

    // small fixed set of (obs, goal, chunk) windows
    RngStream gen(19);
    std::vector<Window> data;
    for (int k = 0; k < 16; ++k) {
        Observation o(3), g(3);
        for (auto& v : o) v = real(gen.uniform01());
        for (auto& v : g) v = real(gen.uniform01());
        std::vector<Action> acts;
        for (int j = 0; j < 8; ++j)
            acts.push_back({real(0.04 * (g[0] - o[0])), real(0.04 * (g[1] - o[1]))});
        data.push_back(window_from(o, g, acts, 8, {0, 0}));
    }
    RngStream trng(20);
    double first_avg = 0, last_avg = 0;
    const int steps = 5000;
    for (int i = 0; i < steps; ++i) {
        std::vector<Window> batch;
        for (int j = 0; j < 16; ++j) batch.push_back(data[trng.uniform_int(data.size())]);
        const double loss = p.train_step(batch, trng);
        if (i < 200) first_avg += loss / 200;
        if (i >= steps - 200) last_avg += loss / 200;
    }
    CHECK(last_avg < 0.5 * first_avg);
}

TEST_CASE("ddpm sampler: perfect noise oracle recovers the target chunk") {
    const DiffusionSchedule sched = DiffusionSchedule::make(100, 1e-4f, 0.02f);
    const int dim = 6;
    std::vector<real> target = {0.03f, -0.02f, 0.01f, 0.5f, -0.7f, 0.0f};
    // exact eps for x_t = sqrt(abar) x0 + sqrt(1-abar) eps
    EpsFn oracle = [&](const std::vector<real>& x, int t) {
        const double abar = sched.alpha_bar[std::size_t(t)];
        std::vector<real> e(x.size());
        for (std::size_t i = 0; i < x.size(); ++i)
            e[i] = real((double(x[i]) - std::sqrt(abar) * double(target[i])) /
                        std::sqrt(1.0 - abar));
        return e;
    };
    RngStream rng(21);
    std::vector<double> mean(dim, 0.0);
    const int n = 200;
    for (int s = 0; s < n; ++s) {
        const auto x = ddpm_reverse_sample(sched, 1, oracle, dim, rng);
        for (int i = 0; i < dim; ++i) mean[std::size_t(i)] += double(x[std::size_t(i)]) / n;
    }
    for (int i = 0; i < dim; ++i)
        CHECK(std::abs(mean[std::size_t(i)] - double(target[std::size_t(i)])) < 0.05);
}

TEST_CASE("ddpm sampler: strided(10) agrees with ancestral under the oracle") {
    const DiffusionSchedule sched = DiffusionSchedule::make(100, 1e-4f, 0.02f);
    const int dim = 4;
    std::vector<real> target = {0.02f, -0.01f, 0.3f, -0.4f};
    EpsFn oracle = [&](const std::vector<real>& x, int t) {
        const double abar = sched.alpha_bar[std::size_t(t)];
        std::vector<real> e(x.size());
        for (std::size_t i = 0; i < x.size(); ++i)
            e[i] = real((double(x[i]) - std::sqrt(abar) * double(target[i])) /
                        std::sqrt(1.0 - abar));
        return e;
    };
    RngStream r1(22), r2(23);
    std::vector<double> m1(dim, 0.0), m2(dim, 0.0);
    for (int s = 0; s < 200; ++s) {
        const auto a = ddpm_reverse_sample(sched, 1, oracle, dim, r1);
        const auto b = ddpm_reverse_sample(sched, 10, oracle, dim, r2);
        for (int i = 0; i < dim; ++i) {
            m1[std::size_t(i)] += double(a[std::size_t(i)]) / 200;
            m2[std::size_t(i)] += double(b[std::size_t(i)]) / 200;
        }
    }
    for (int i = 0; i < dim; ++i) CHECK(std::abs(m1[std::size_t(i)] - m2[std::size_t(i)]) < 0.05);
}

TEST_CASE("ddpm policy: same seed gives the identical sample, output in bounds") {
    PolicyConfig cfg = diffusion_cfg(4, 3, {32});
    cfg.obs_dim = 7;
    Policy p(cfg, table_bounds());
    RngStream rng(24);
    p.init(rng);
    const Observation o(7, 0.2f), g(7, 0.8f);
    RngStream s1(9), s2(9);
    const ActionChunk a = p.predict(o, g, s1);
    const ActionChunk b = p.predict(o, g, s2);
    REQUIRE(a.horizon() == b.horizon());
    for (int i = 0; i < a.horizon(); ++i) {
        CHECK(a.actions[std::size_t(i)] == b.actions[std::size_t(i)]);
        CHECK(a.actions[std::size_t(i)][0] >= -0.05f);
        CHECK(a.actions[std::size_t(i)][0] <= 0.05f);
        CHECK(a.actions[std::size_t(i)][2] >= -1.0f);
        CHECK(a.actions[std::size_t(i)][2] <= 1.0f);
    }
}

TEST_CASE("checkpoints: save/load round-trip preserves parameters") {
    Policy p(regression_cfg(), table_bounds());
    RngStream rng(25);
    p.init(rng);
    const std::string path = "test_policy.vgp";
    p.save(path);
    const Policy q = Policy::load(path);
    CHECK(q.params_hash() == p.params_hash());
    CHECK(q.config().h == 16);
    CHECK(q.spec().widths == p.spec().widths);
    std::remove(path.c_str());
}

TEST_CASE("checkpoints: truncation is detected, nothing half-loads") {
    Policy p(regression_cfg(), table_bounds());
    RngStream rng(26);
    p.init(rng);
    const std::string path = "test_policy_trunc.vgp";
    p.save(path);
    // truncate
    std::string data;
    {
        std::FILE* f = std::fopen(path.c_str(), "rb");
        char buf[4096];
        std::size_t n;
        while ((n = std::fread(buf, 1, sizeof(buf), f)) > 0) data.append(buf, n);
        std::fclose(f);
    }
    data.resize(data.size() / 2);
    {
        std::FILE* f = std::fopen(path.c_str(), "wb");
        std::fwrite(data.data(), 1, data.size(), f);
        std::fclose(f);
    }
    CHECK_THROWS_AS(Policy::load(path), CorruptCheckpoint);
    std::remove(path.c_str());
}

TEST_CASE("policy: predicting before init is an illegal state") {
    Policy p(regression_cfg(), table_bounds());
    RngStream rng(0);
    CHECK_THROWS_AS(p.predict(Observation(7, 0.0f), Observation(7, 0.0f), rng), IllegalState);
}
