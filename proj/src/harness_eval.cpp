#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <sstream>
#include <thread>

#include "vge/harness.hpp"
#include "vge/ioutil.hpp"

namespace vge {

EvalReport evaluate(Env& env, const std::vector<Task>& tasks, const ChunkPolicy& policy,
                    int episodes_per_task, GoalSource goal_source, const ExploreConfig& cfg,
                    RngStream rng, const std::string& config_hash) {
    const auto t0 = std::chrono::steady_clock::now();
    EvalReport r;
    r.episodes_per_task = episodes_per_task;
    r.config_hash = config_hash;
    r.task_rates = evaluate_rates(env, tasks, policy, episodes_per_task, goal_source, cfg, rng);
    for (const Task& t : tasks) r.task_ids.push_back(t.id);
    double sum = 0;
    for (double v : r.task_rates) sum += v;
    r.mean_rate = r.task_rates.empty() ? 0 : sum / double(r.task_rates.size());
    r.wall_clock_sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return r;
}

double final_rate_last5(const TrainResult& r) {
    if (r.evals.empty()) return 0;
    const std::size_t n = std::min<std::size_t>(5, r.evals.size());
    double sum = 0;
    for (std::size_t i = r.evals.size() - n; i < r.evals.size(); ++i) sum += r.evals[i].mean_rate;
    return sum / double(n);
}

double final_task_rate_last5(const TrainResult& r, std::size_t task_index) {
    if (r.evals.empty()) return 0;
    const std::size_t n = std::min<std::size_t>(5, r.evals.size());
    double sum = 0;
    for (std::size_t i = r.evals.size() - n; i < r.evals.size(); ++i)
        sum += r.evals[i].task_rates.at(task_index);
    return sum / double(n);
}

// ---------------------------------------------------------------------------

AblationVariant variant_from_string(const std::string& s) {
    if (s == "full") return AblationVariant::full;
    if (s == "wo_rand") return AblationVariant::wo_rand;
    if (s == "wo_video") return AblationVariant::wo_video;
    if (s == "wo_extra_rand") return AblationVariant::wo_extra_rand;
    if (s == "single_action") return AblationVariant::single_action;
    throw ConfigError("unknown ablation variant: " + s);
}

const char* to_string(AblationVariant v) {
    switch (v) {
        case AblationVariant::full: return "full";
        case AblationVariant::wo_rand: return "wo_rand";
        case AblationVariant::wo_video: return "wo_video";
        case AblationVariant::wo_extra_rand: return "wo_extra_rand";
        case AblationVariant::single_action: return "single_action";
    }
    return "unknown";
}

RunConfig apply_variant(RunConfig base, AblationVariant v) {
    switch (v) {
        case AblationVariant::full:
            break;
        case AblationVariant::wo_rand:
            base.explore.n_r = 0;
            base.explore.q_r = 0;
            break;
        case AblationVariant::wo_video:
            base.explore.q_v = 0;
            break;
        case AblationVariant::wo_extra_rand:
            base.explore.q_r = 0;
            break;
        case AblationVariant::single_action:
            // Same per-frame step budget as the chunked policy, spent one
            // action at a time.
            base.explore.k_sub *= base.policy.h_exec;
            base.policy.h = 1;
            base.policy.h_exec = 1;
            break;
    }
    base.finalize();
    return base;
}

namespace {

double sample_std(const std::vector<double>& xs, double mean) {
    if (xs.size() < 2) return std::nan("");
    double acc = 0;
    for (double x : xs) acc += (x - mean) * (x - mean);
    return std::sqrt(acc / double(xs.size() - 1));
}

std::string seed_list_string(const std::vector<std::uint64_t>& seeds) {
    std::string s;
    for (std::size_t i = 0; i < seeds.size(); ++i) s += (i ? "|" : "") + std::to_string(seeds[i]);
    return s;
}

std::string csv_num(double v) {
    if (std::isnan(v)) return "";
    return fmt_double(v);
}

// Runs jobs [0, n) on `workers` threads; each job writes only its own slot.
void parallel_for_jobs(int n, int workers, const std::function<void(int)>& job) {
    workers = std::max(1, std::min(workers, n));
    if (workers == 1) {
        for (int i = 0; i < n; ++i) job(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(std::size_t(workers));
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) job(i);
        });
    }
    for (auto& t : pool) t.join();
}

TrainResult run_one(const RunConfig& cfg, std::uint64_t seed, const std::string& metrics_path) {
    Policy policy = make_policy(cfg);
    TrainingSetup setup = make_setup(cfg);
    if (metrics_path.empty()) return run_training(setup, policy, seed, nullptr);
    std::filesystem::create_directories(std::filesystem::path(metrics_path).parent_path());
    MetricsWriter metrics(metrics_path);
    metrics.header({{"config_hash", cfg.config_hash()},
                    {"content_hash", cfg.content_hash()},
                    {"seed", std::to_string(seed)}});
    return run_training(setup, policy, seed, &metrics);
}

}  // namespace

AblationReport run_ablation(const RunConfig& base, const std::vector<AblationVariant>& variants,
                            int workers, bool write_artifacts) {
    AblationReport report;
    struct Cell {
        int variant_index;
        std::uint64_t seed;
        RunConfig cfg;
        std::string metrics_path;
        TrainResult result;
    };
    std::vector<Cell> cells;
    for (std::size_t vi = 0; vi < variants.size(); ++vi) {
        const RunConfig cfg = apply_variant(base, variants[vi]);
        for (std::uint64_t seed : base.seeds) {
            Cell c;
            c.variant_index = int(vi);
            c.seed = seed;
            c.cfg = cfg;
            if (write_artifacts)
                c.metrics_path = base.out_dir + "/ablate/" + to_string(variants[vi]) + "_seed" +
                                 std::to_string(seed) + "/metrics.jsonl";
            cells.push_back(std::move(c));
        }
    }

    parallel_for_jobs(int(cells.size()), workers, [&](int i) {
        Cell& c = cells[std::size_t(i)];
        c.result = run_one(c.cfg, c.seed, c.metrics_path);
    });

    auto env = make_env(base.env);
    const std::vector<Task> tasks = env->tasks();

    std::ostringstream csv;
    csv << "# " << artifact_header(base) << "\n";
    csv << "variant,task_id,rate,std,n,seed_list\n";

    for (std::size_t vi = 0; vi < variants.size(); ++vi) {
        VariantOutcome out;
        out.variant = variants[vi];
        out.seeds = base.seeds;
        for (const Cell& c : cells)
            if (c.variant_index == int(vi)) {
                out.runs.push_back(c.result);
                out.seed_final_rates.push_back(final_rate_last5(c.result));
            }
        double sum = 0;
        for (double r : out.seed_final_rates) sum += r;
        out.mean_final = out.seed_final_rates.empty() ? 0 : sum / double(out.seed_final_rates.size());
        out.std_final = sample_std(out.seed_final_rates, out.mean_final);

        for (std::size_t ti = 0; ti < tasks.size(); ++ti) {
            std::vector<double> rates;
            for (const TrainResult& r : out.runs) rates.push_back(final_task_rate_last5(r, ti));
            double tsum = 0;
            for (double r : rates) tsum += r;
            const double mean = rates.empty() ? 0 : tsum / double(rates.size());
            csv << to_string(variants[vi]) << "," << tasks[ti].id << "," << fmt_double(mean) << ","
                << csv_num(sample_std(rates, mean)) << "," << rates.size() << ","
                << seed_list_string(base.seeds) << "\n";
        }
        csv << to_string(variants[vi]) << ",all," << fmt_double(out.mean_final) << ","
            << csv_num(out.std_final) << "," << out.seed_final_rates.size() << ","
            << seed_list_string(base.seeds) << "\n";
        report.variants.push_back(std::move(out));
    }

    report.report_csv = csv.str();
    if (write_artifacts) {
        std::filesystem::create_directories(base.out_dir + "/ablate");
        write_file_atomic(base.out_dir + "/ablate/report.csv", report.report_csv);

        // Success-vs-rollouts curve from the first seed of the first variant
        // that actually explores with video guidance.
        for (const VariantOutcome& out : report.variants) {
            const RunConfig cfg = apply_variant(base, out.variant);
            if (cfg.explore.q_v <= 0 || out.runs.empty()) continue;
            Series s;
            s.title = std::string("evaluation success vs video-guided rollouts (") +
                      to_string(out.variant) + ")";
            s.x_label = "video-guided rollouts";
            s.y_label = "success rate";
            for (const EvalPoint& p : out.runs.front().evals) {
                s.x.push_back(double(p.cum_video_rollouts));
                s.y.push_back(p.mean_rate);
            }
            report.curve_svg = base.out_dir + "/ablate/success_vs_rollouts.svg";
            emit_plot(s, PlotKind::success_vs_rollouts, report.curve_svg, artifact_header(base));
            break;
        }
    }
    return report;
}

// ---------------------------------------------------------------------------

std::vector<SweepRow> sweep(const RunConfig& base, const std::string& axis,
                            const std::vector<double>& values, int workers) {
    if (axis != "q_v" && axis != "H" && axis != "h" && axis != "demos" && axis != "checkpoints")
        throw ConfigError("sweep axis must be one of q_v, H, h, demos, checkpoints");
    if (values.empty() && axis != "checkpoints") throw ConfigError("sweep needs values");

    std::vector<SweepRow> rows;
    auto env = make_env(base.env);
    const std::vector<Task> tasks = env->tasks();

    if (axis == "checkpoints") {
        // Reuses one training run's checkpoint evaluations per seed.
        struct Slot {
            TrainResult r;
            bool failed = false;
        };
        std::vector<Slot> slots(base.seeds.size());
        parallel_for_jobs(int(base.seeds.size()), workers, [&](int i) {
            try {
                slots[std::size_t(i)].r = run_one(base, base.seeds[std::size_t(i)], "");
            } catch (const std::exception&) {
                slots[std::size_t(i)].failed = true;
            }
        });
        const std::size_t npoints = slots.empty() || slots[0].failed ? 0 : slots[0].r.evals.size();
        for (std::size_t pi = 0; pi < npoints; ++pi) {
            std::vector<double> rates;
            for (const Slot& s : slots)
                if (!s.failed && pi < s.r.evals.size()) rates.push_back(s.r.evals[pi].mean_rate);
            double sum = 0;
            for (double r : rates) sum += r;
            SweepRow row;
            row.axis = axis;
            row.value = double(slots[0].r.evals[pi].iter);
            row.task = "all";
            row.rate = rates.empty() ? std::nan("") : sum / double(rates.size());
            row.stddev = sample_std(rates, row.rate);
            row.n = int(rates.size());
            row.seed_list = seed_list_string(base.seeds);
            row.failed = rates.empty();
            rows.push_back(std::move(row));
        }
        return rows;
    }

    struct Cell {
        std::size_t value_index;
        std::uint64_t seed;
        double rate = std::nan("");
        std::vector<double> task_rates;
        bool failed = false;
    };
    std::vector<Cell> cells;
    for (std::size_t vi = 0; vi < values.size(); ++vi)
        for (std::uint64_t seed : base.seeds) cells.push_back({vi, seed, std::nan(""), {}, false});

    parallel_for_jobs(int(cells.size()), workers, [&](int i) {
        Cell& c = cells[std::size_t(i)];
        const double v = values[c.value_index];
        try {
            RunConfig cfg = base;
            if (axis == "q_v") cfg.explore.q_v = std::int64_t(v);
            if (axis == "H") cfg.explore.subgoal_horizon = int(v);
            if (axis == "h") {
                cfg.policy.h = int(v);
                cfg.policy.h_exec = std::min(cfg.policy.h_exec, cfg.policy.h);
            }
            if (axis == "demos") {
                // BC trained on <value> demos per task, evaluated goal-free.
                cfg.finalize();
                auto cell_env = make_env(cfg.env);
                RngStream rng(c.seed);
                DemoDataset demos =
                    generate_demos(*cell_env, cell_env->tasks(), int(v), rng.fork("demos"));
                BaselineConfig bc;
                bc.kind = BaselineKind::bc;
                bc.iterations = cfg.baseline_iterations;
                TrainedBaseline trained = train_baseline(demos, *cell_env, bc, rng.fork("bc"));
                c.task_rates = evaluate_rates(*cell_env, cell_env->tasks(), *trained.policy,
                                              cfg.eval_episodes, GoalSource::none, cfg.explore,
                                              rng.fork("eval"));
                double sum = 0;
                for (double r : c.task_rates) sum += r;
                c.rate = sum / double(c.task_rates.size());
                return;
            }
            cfg.finalize();
            const TrainResult r = run_one(cfg, c.seed, "");
            c.rate = final_rate_last5(r);
            for (std::size_t ti = 0; ti < tasks.size(); ++ti)
                c.task_rates.push_back(final_task_rate_last5(r, ti));
        } catch (const std::exception&) {
            c.failed = true;
        }
    });

    for (std::size_t vi = 0; vi < values.size(); ++vi) {
        std::vector<double> all_rates;
        std::vector<std::vector<double>> per_task(tasks.size());
        for (const Cell& c : cells) {
            if (c.value_index != vi || c.failed) continue;
            all_rates.push_back(c.rate);
            for (std::size_t ti = 0; ti < c.task_rates.size() && ti < tasks.size(); ++ti)
                per_task[ti].push_back(c.task_rates[ti]);
        }
        for (std::size_t ti = 0; ti < tasks.size(); ++ti) {
            if (per_task[ti].empty()) continue;
            double sum = 0;
            for (double r : per_task[ti]) sum += r;
            SweepRow row;
            row.axis = axis;
            row.value = values[vi];
            row.task = std::to_string(tasks[ti].id);
            row.rate = sum / double(per_task[ti].size());
            row.stddev = sample_std(per_task[ti], row.rate);
            row.n = int(per_task[ti].size());
            row.seed_list = seed_list_string(base.seeds);
            rows.push_back(std::move(row));
        }
        SweepRow row;
        row.axis = axis;
        row.value = values[vi];
        row.task = "all";
        row.n = int(all_rates.size());
        row.seed_list = seed_list_string(base.seeds);
        if (all_rates.empty()) {
            row.failed = true;
            row.rate = std::nan("");
            row.stddev = std::nan("");
        } else {
            double sum = 0;
            for (double r : all_rates) sum += r;
            row.rate = sum / double(all_rates.size());
            row.stddev = sample_std(all_rates, row.rate);
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string sweep_csv(const RunConfig& cfg, const std::vector<SweepRow>& rows) {
    std::ostringstream o;
    o << "# " << artifact_header(cfg) << "\n";
    o << "axis,value,task_id,rate,std,n,seed_list\n";
    for (const SweepRow& r : rows) {
        o << r.axis << "," << fmt_double(r.value) << "," << r.task << "," << csv_num(r.rate) << ","
          << csv_num(r.stddev) << "," << r.n << "," << r.seed_list << "\n";
    }
    return o.str();
}

}  // namespace vge
