#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>

#include "vge/explore.hpp"
#include "vge/ioutil.hpp"

using namespace vge;

namespace {

EnvConfig table_cfg() {
    EnvConfig c;
    c.name = "tablesim";
    return c;
}

ExploreConfig tiny_explore() {
    ExploreConfig c;
    c.n_r = 2;
    c.q_v = 100;
    c.q_r = 150;
    c.n_e = 1;
    c.iterations = 300;
    c.capacity = 64;
    c.batch_size = 8;
    return c;
}

PolicyConfig tiny_policy() {
    PolicyConfig c;
    c.h = 16;
    c.h_exec = 8;
    c.action_dim = 3;
    c.obs_dim = 7;
    c.hidden = {32, 32};
    return c;
}

ActionBounds table_bounds() {
    ActionBounds b;
    b.low = {-0.05f, -0.05f, -1.0f};
    b.high = {0.05f, 0.05f, 1.0f};
    return b;
}

// Always-zero policy (untrained stand-in).
struct ZeroPolicy : ChunkPolicy {
    int h, hx;
    ZeroPolicy(int h_, int hx_) : h(h_), hx(hx_) {}
    ActionChunk predict(const Observation&, const Observation&, RngStream&) const override {
        ActionChunk c;
        c.actions.assign(std::size_t(h), Action{0.0f, 0.0f, 0.0f});
        c.valid_len = h;
        return c;
    }
    int exec_horizon() const override { return hx; }
};

struct FixedStartTable : TableSimEnv {
    TableSimState fixed;
    FixedStartTable(const EnvConfig& cfg, TableSimState s) : TableSimEnv(cfg), fixed(s) {}
    Observation reset(const Task&, RngStream&) override {
        set_state(fixed);
        return observe();
    }
    std::unique_ptr<Env> clone_blank() const override {
        return std::make_unique<TableSimEnv>(config());
    }
};

}  // namespace

TEST_CASE("random chunks: sigma = 0 repeats the chunk mean exactly") {
    TableSimEnv env(table_cfg());
    ExploreConfig cfg;
    cfg.sigma = 0.0f;
    cfg.p_grasp = 0.0f;  // keep the gripper channel untouched
    cfg.l_c = 8;
    const Episode e = random_chunk_episode(env, env.tasks()[0], cfg, RngStream(1));
    REQUIRE(e.length() >= cfg.l_c);
    for (int start = 0; start + cfg.l_c <= e.length(); start += cfg.l_c) {
        const Action& first = e.actions[std::size_t(start)];
        for (int j = 1; j < cfg.l_c; ++j)
            CHECK(e.actions[std::size_t(start + j)] == first);
    }
}

TEST_CASE("random chunks: l_c = 1 gives fresh means every step") {
    TableSimEnv env(table_cfg());
    ExploreConfig cfg;
    cfg.sigma = 0.0f;
    cfg.p_grasp = 0.0f;
    cfg.l_c = 1;
    const Episode e = random_chunk_episode(env, env.tasks()[0], cfg, RngStream(2));
    std::set<real> dx;
    for (const Action& a : e.actions) dx.insert(a[0]);
    // i.i.d. uniform means: overwhelmingly distinct values
    CHECK(int(dx.size()) > e.length() / 2);
}

TEST_CASE("random chunks: the grasp primitive latches within a chunk") {
    EnvConfig ec = table_cfg();
    TableSimState s;
    s.effector = {0.5f, 0.5f};
    s.object = {0.51f, 0.5f};  // within grasp radius
    s.target = {0.2f, 0.5f};
    FixedStartTable env(ec, s);
    ExploreConfig cfg;
    cfg.p_grasp = 1.0f;
    cfg.sigma = 0.0f;
    const Episode e = random_chunk_episode(env, env.tasks()[0], cfg, RngStream(3));
    // the very first action must have been overridden to close
    CHECK(e.actions[0][2] == 1.0f);
    CHECK(e.observations[1][2] == 1.0f);  // gripper closed in the next obs
}

TEST_CASE("random chunks: episodes respect episode length invariants") {
    TableSimEnv env(table_cfg());
    ExploreConfig cfg;
    RngStream rng(4);
    for (int i = 0; i < 20; ++i) {
        const Episode e = random_chunk_episode(env, env.tasks()[i % 2], cfg, rng.fork("e", i));
        CHECK_NOTHROW(e.validate());
        CHECK(e.source == EpisodeSource::random);
        CHECK(e.length() <= env.config().t_max);
    }
}

TEST_CASE("video rollout: zero policy runs H*k_sub*h_exec steps and fails") {
    TableSimEnv env(table_cfg());
    ExploreConfig cfg;  // defaults: H=7, k_sub=2, h_exec comes from the policy (8)
    ZeroPolicy zero(16, 8);
    const Episode e =
        video_guided_rollout(env, env.tasks()[0], zero, CorruptionMode{}, cfg, RngStream(5));
    CHECK_FALSE(e.success);
    CHECK(e.length() == std::min(7 * 2 * 8, env.config().t_max));
}

TEST_CASE("video rollout: start at the goal ends within h_exec steps, success") {
    EnvConfig ec = table_cfg();
    TableSimState s;
    s.effector = {0.2f, 0.5f};
    s.object = {0.21f, 0.5f};  // already within the target radius
    s.target = {0.2f, 0.5f};
    FixedStartTable env(ec, s);
    ExploreConfig cfg;
    cfg.subgoal_horizon = 1;
    ZeroPolicy zero(16, 8);
    const Episode e =
        video_guided_rollout(env, env.tasks()[0], zero, CorruptionMode{}, cfg, RngStream(6));
    CHECK(e.success);
    CHECK(e.length() <= 8);
}

TEST_CASE("video rollout: expert-replay policy matches expert success") {
    TableSimEnv env(table_cfg());
    ExpertReplayPolicy expert(env, 16, 8);
    ExploreConfig cfg;
    int ok = 0;
    for (int i = 0; i < 25; ++i) {
        const Episode e = video_guided_rollout(env, env.tasks()[i % 2], expert, CorruptionMode{},
                                               cfg, RngStream(100 + std::uint64_t(i)));
        if (e.success) ++ok;
    }
    CHECK(ok == 25);
}

TEST_CASE("hindsight consistency: replayed windows reproduce goals bit-exactly") {
    TableSimEnv env(table_cfg());
    ExploreConfig cfg;
    ReplayBuffer buf(64, null_action_for(env));
    RngStream rng(7);
    for (int i = 0; i < 30; ++i)
        buf.append(random_chunk_episode(env, env.tasks()[i % 2], cfg, rng.fork("e", i)));

    RngStream srng(8);
    for (int i = 0; i < 200; ++i) {
        const Window w = buf.sample_window(16, srng);
        TableSimEnv replay(table_cfg());
        replay.set_from_observation(w.obs);
        Observation last = w.obs;
        for (int j = 0; j < w.chunk.valid_len; ++j)
            last = replay.step(w.chunk.actions[std::size_t(j)]).obs;
        CHECK(last == w.goal);
    }
}

TEST_CASE("run_training: tiny run produces the expected eval cadence and counters") {
    TrainingSetup setup;
    setup.env = table_cfg();
    setup.explore = tiny_explore();
    setup.eval_every = 100;
    setup.eval_episodes = 2;
    Policy policy(tiny_policy(), table_bounds());
    const TrainResult r = run_training(setup, policy, 11);
    // evals at 0, 100, 200, 300
    REQUIRE(r.evals.size() == 4);
    CHECK(r.evals[0].cum_video_rollouts == 0);
    // one video rollout per task at 100, 200, 300
    CHECK(r.video_rollouts == 3 * 2);
    CHECK(r.random_episodes == 2 * 2 + 2 * 1);  // seeding + q_r hits at 150, 300
    CHECK(r.train_steps == 300);
}

TEST_CASE("run_training: ablation switches behave as pure config") {
    TrainingSetup setup;
    setup.env = table_cfg();
    setup.explore = tiny_explore();
    setup.eval_every = 300;
    setup.eval_episodes = 1;

    SUBCASE("q_v disabled means zero video rollouts") {
        setup.explore.q_v = 0;
        Policy policy(tiny_policy(), table_bounds());
        const TrainResult r = run_training(setup, policy, 12);
        CHECK(r.video_rollouts == 0);
    }
    SUBCASE("n_r = 0 and q_r disabled leaves only video episodes") {
        setup.explore.n_r = 0;
        setup.explore.q_r = 0;
        Policy policy(tiny_policy(), table_bounds());
        const TrainResult r = run_training(setup, policy, 13);
        CHECK(r.random_episodes == 0);
        CHECK(r.video_rollouts > 0);
    }
}

TEST_CASE("run_training: identical seeds give byte-identical metrics") {
    auto run_once = [&](const std::string& path) {
        TrainingSetup setup;
        setup.env = table_cfg();
        setup.explore = tiny_explore();
        setup.eval_every = 100;
        setup.eval_episodes = 2;
        Policy policy(tiny_policy(), table_bounds());
        MetricsWriter m(path);
        m.header({{"seed", "7"}});
        run_training(setup, policy, 7, &m);
    };
    run_once("metrics_a.jsonl");
    run_once("metrics_b.jsonl");
    CHECK(read_file("metrics_a.jsonl") == read_file("metrics_b.jsonl"));
    CHECK(read_file("metrics_a.jsonl").find("\"event\":\"video\"") != std::string::npos);
    std::remove("metrics_a.jsonl");
    std::remove("metrics_b.jsonl");
}

TEST_CASE("run_training: cumulative video successes are monotone in the log") {
    TrainingSetup setup;
    setup.env = table_cfg();
    setup.explore = tiny_explore();
    setup.eval_every = 100;
    setup.eval_episodes = 1;
    Policy policy(tiny_policy(), table_bounds());
    MetricsWriter m("metrics_mono.jsonl");
    run_training(setup, policy, 21, &m);
    m.flush();

    std::ifstream f("metrics_mono.jsonl");
    std::string line;
    long long prev_succ = -1, prev_roll = -1;
    while (std::getline(f, line)) {
        const auto p = line.find("\"cum_video_successes\":");
        const auto q = line.find("\"cum_video_rollouts\":");
        if (p == std::string::npos || q == std::string::npos) continue;
        const long long succ = std::stoll(line.substr(p + 22));
        const long long roll = std::stoll(line.substr(q + 21));
        CHECK(succ >= prev_succ);
        CHECK(roll >= prev_roll);
        prev_succ = succ;
        prev_roll = roll;
    }
    f.close();
    std::remove("metrics_mono.jsonl");
}

TEST_CASE("gridnav: replanning rollout keeps going until the episode ends") {
    EnvConfig ec;
    ec.name = "gridnav";
    ec.t_max = 40;
    GridNavEnv env(ec);
    ExploreConfig cfg;
    cfg.replan_on_exhaust = true;
    cfg.subgoal_horizon = 7;
    // a policy that always turns left never reaches anything
    struct TurnPolicy : ChunkPolicy {
        ActionChunk predict(const Observation&, const Observation&, RngStream&) const override {
            ActionChunk c;
            c.actions = {{real(kTurnLeft)}};
            c.valid_len = 1;
            return c;
        }
        int exec_horizon() const override { return 1; }
    } turner;
    const Episode e =
        video_guided_rollout(env, env.tasks()[0], turner, CorruptionMode{}, cfg, RngStream(31));
    CHECK_FALSE(e.success);
    CHECK(e.length() == ec.t_max);  // replanning drives it to the cap
}
