#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <sstream>

#include "vge/harness.hpp"
#include "vge/ioutil.hpp"
#include "vge/oracle.hpp"

using namespace vge;

TEST_CASE("run config: defaults are environment-aware") {
    const RunConfig t = RunConfig::defaults("tablesim");
    CHECK(t.policy.obs_dim == 7);
    CHECK(t.policy.action_dim == 3);
    CHECK(t.policy.h == 16);
    CHECK_FALSE(t.explore.replan_on_exhaust);

    const RunConfig g = RunConfig::defaults("gridnav");
    CHECK(g.policy.discrete);
    CHECK(g.policy.h == 1);
    CHECK(g.policy.n_actions == 4);
    CHECK(g.explore.replan_on_exhaust);
}

TEST_CASE("run config: canonical dump round-trips and hashes stably") {
    RunConfig c = RunConfig::defaults("tablesim");
    c.explore.q_v = 400;
    c.seeds = {5, 6};
    const std::string ini = c.canonical_ini();
    const RunConfig back = RunConfig::from_ini(ini);
    CHECK(back.canonical_ini() == ini);
    CHECK(back.config_hash() == c.config_hash());
    CHECK(back.content_hash() == c.content_hash());
    CHECK(c.config_hash().size() == 40);
}

TEST_CASE("run config: unknown keys and bad values are config errors") {
    CHECK_THROWS_AS(RunConfig::from_ini("[env]\nname = tablesim\nbogus = 1\n"), ConfigError);
    CHECK_THROWS_AS(RunConfig::from_ini("[env]\nname = tablesim\nt_max = soon\n"), ConfigError);
    CHECK_THROWS_AS(RunConfig::from_ini("[env]\nname = venus\n"), ConfigError);
    CHECK_THROWS_AS(RunConfig::from_ini("stray = 1\n"), ConfigError);
}

TEST_CASE("git blob hash matches the known empty/file vectors") {
    // git hash-object of an empty file
    CHECK(git_blob_hash("") == "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391");
    // echo 'hello' | git hash-object --stdin
    CHECK(git_blob_hash("hello\n") == "ce013625030ba8dba906f756967f9e9ca394464a");
}

TEST_CASE("evaluate: expert replay policy scores 100% on both environments") {
    RunConfig cfg = RunConfig::defaults("tablesim");
    auto env = make_env(cfg.env);
    ExpertReplayPolicy expert(*env, 16, 8);
    const EvalReport r = evaluate(*env, env->tasks(), expert, 10, GoalSource::oracle_plan,
                                  cfg.explore, RngStream(1), cfg.config_hash());
    CHECK(r.mean_rate == 1.0);
    CHECK(r.task_rates == std::vector<double>{1.0, 1.0});
    CHECK(r.wall_clock_sec >= 0.0);

    RunConfig gcfg = RunConfig::defaults("gridnav");
    auto genv = make_env(gcfg.env);
    ExpertReplayPolicy gexpert(*genv, 1, 1);
    const EvalReport gr = evaluate(*genv, genv->tasks(), gexpert, 10, GoalSource::oracle_plan,
                                   gcfg.explore, RngStream(2), gcfg.config_hash());
    CHECK(gr.mean_rate == 1.0);
}

TEST_CASE("evaluate: zero-init policy scores 0% on tablesim place tasks") {
    RunConfig cfg = RunConfig::defaults("tablesim");
    auto env = make_env(cfg.env);
    Policy p = make_policy(cfg);
    RngStream rng(3);
    p.init(rng);
    p.mutable_params().flat.assign(p.mutable_params().flat.size(), 0.0f);
    const EvalReport r = evaluate(*env, env->tasks(), p, 10, GoalSource::oracle_plan, cfg.explore,
                                  RngStream(4));
    CHECK(r.mean_rate == 0.0);
}

TEST_CASE("evaluate: same seed and checkpoint give an identical report") {
    RunConfig cfg = RunConfig::defaults("tablesim");
    auto env = make_env(cfg.env);
    Policy p = make_policy(cfg);
    RngStream rng(5);
    p.init(rng);
    const EvalReport a =
        evaluate(*env, env->tasks(), p, 5, GoalSource::oracle_plan, cfg.explore, RngStream(6));
    const EvalReport b =
        evaluate(*env, env->tasks(), p, 5, GoalSource::oracle_plan, cfg.explore, RngStream(6));
    CHECK(a.task_rates == b.task_rates);
}

TEST_CASE("ablation variants map to the documented config switches") {
    const RunConfig base = RunConfig::defaults("tablesim");
    const RunConfig wo_rand = apply_variant(base, AblationVariant::wo_rand);
    CHECK(wo_rand.explore.n_r == 0);
    CHECK(wo_rand.explore.q_r == 0);
    const RunConfig wo_video = apply_variant(base, AblationVariant::wo_video);
    CHECK(wo_video.explore.q_v == 0);
    const RunConfig wo_extra = apply_variant(base, AblationVariant::wo_extra_rand);
    CHECK(wo_extra.explore.q_r == 0);
    CHECK(wo_extra.explore.n_r == base.explore.n_r);
    const RunConfig single = apply_variant(base, AblationVariant::single_action);
    CHECK(single.policy.h == 1);
    CHECK(single.policy.h_exec == 1);
    CHECK(single.explore.k_sub == base.explore.k_sub * base.policy.h_exec);
    CHECK(variant_from_string("single_action") == AblationVariant::single_action);
}

TEST_CASE("emit_plot: two-point series produces svg plus matching sidecar") {
    Series s;
    s.x = {0, 100};
    s.y = {0.1, 0.9};
    s.x_label = "rollouts";
    s.y_label = "success";
    s.title = "two points";
    emit_plot(s, PlotKind::success_vs_rollouts, "plot_test.svg", "config_hash=x content_hash=y");
    const std::string svg = read_file("plot_test.svg");
    CHECK(svg.find("<svg") != std::string::npos);
    CHECK(svg.find("config_hash=x") != std::string::npos);
    CHECK(svg.find("<circle") != std::string::npos);

    const std::string csv = read_file("plot_test.svg.csv");
    std::istringstream in(csv);
    std::string line;
    std::getline(in, line);  // header comment
    std::getline(in, line);  // column names
    double x0, y0;
    char comma;
    std::getline(in, line);
    std::istringstream(line) >> x0 >> comma >> y0;
    CHECK(x0 == 0.0);
    CHECK(y0 == 0.1);
    std::remove("plot_test.svg");
    std::remove("plot_test.svg.csv");
}

TEST_CASE("emit_plot: byte-identical output for identical input (golden)") {
    Series s;
    s.x = {0, 50, 100, 150};
    s.y = {0.0, 0.25, 0.75, 0.8};
    s.x_label = "video-guided rollouts";
    s.y_label = "success rate";
    s.title = "golden curve";
    emit_plot(s, PlotKind::success_vs_rollouts, "golden_a.svg", "run=golden");
    emit_plot(s, PlotKind::success_vs_rollouts, "golden_b.svg", "run=golden");
    CHECK(read_file("golden_a.svg") == read_file("golden_b.svg"));
    const std::string golden_path = std::string(TEST_GOLDEN_DIR) + "/curve.svg";
    if (std::filesystem::exists(golden_path)) {
        CHECK(read_file("golden_a.svg") == read_file(golden_path));
    } else {
        // first run: freeze the golden file
        write_file_atomic(golden_path, read_file("golden_a.svg"));
    }
    std::remove("golden_a.svg");
    std::remove("golden_b.svg");
}

TEST_CASE("emit_plot: bar chart variant") {
    Series s;
    s.labels = {"full", "wo_rand", "wo_video"};
    s.y = {0.8, 0.02, 0.01};
    s.y_label = "success";
    s.title = "rates";
    emit_plot(s, PlotKind::rate_bars, "bars_test.svg", "");
    const std::string svg = read_file("bars_test.svg");
    CHECK(svg.find("<rect") != std::string::npos);
    CHECK(svg.find("wo_video") != std::string::npos);
    std::remove("bars_test.svg");
    std::remove("bars_test.svg.csv");
}

TEST_CASE("checkpoints: loading the wrong environment head is a config mismatch") {
    RunConfig gcfg = RunConfig::defaults("gridnav");
    Policy gp = make_policy(gcfg);
    RngStream rng(7);
    gp.init(rng);
    gp.save("gridnav_test.vgp");

    const RunConfig tcfg = RunConfig::defaults("tablesim");
    CHECK_THROWS_AS(load_checkpoint_checked("gridnav_test.vgp", tcfg), ConfigMismatch);
    CHECK_NOTHROW(load_checkpoint_checked("gridnav_test.vgp", gcfg));
    std::remove("gridnav_test.vgp");
}

TEST_CASE("sweep: checkpoint axis reuses one training run") {
    RunConfig cfg = RunConfig::defaults("tablesim");
    cfg.policy.hidden = {32, 32};
    cfg.explore.n_r = 2;
    cfg.explore.q_v = 100;
    cfg.explore.q_r = 0;
    cfg.explore.iterations = 200;
    cfg.explore.capacity = 32;
    cfg.explore.batch_size = 8;
    cfg.eval_cadence = 100;
    cfg.eval_episodes = 1;
    cfg.seeds = {1};
    cfg.finalize();
    const auto rows = sweep(cfg, "checkpoints", {}, 1);
    REQUIRE(rows.size() == 3);  // evals at 0, 100, 200
    CHECK(rows[0].value == 0.0);
    CHECK(rows[1].value == 100.0);
    CHECK(rows[2].value == 200.0);
    const std::string csv = sweep_csv(cfg, rows);
    CHECK(csv.find("axis,value,task_id,rate,std,n,seed_list") != std::string::npos);
}

TEST_CASE("plain rollouts: BC-style policies run to the episode cap") {
    RunConfig cfg = RunConfig::defaults("tablesim");
    auto env = make_env(cfg.env);
    Policy p = make_policy(cfg);
    RngStream rng(8);
    p.init(rng);
    p.mutable_params().flat.assign(p.mutable_params().flat.size(), 0.0f);
    const Episode e = plain_rollout(*env, env->tasks()[0], p, GoalSource::none, RngStream(9));
    CHECK(e.length() == cfg.env.t_max);
    CHECK_FALSE(e.success);
}
