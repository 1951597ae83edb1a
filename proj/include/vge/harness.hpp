#ifndef VGE_HARNESS_HPP
#define VGE_HARNESS_HPP

// Operational surface: run configuration (INI), evaluation protocol,
// ablation and sweep runners, plot/report emission, checkpoint helpers.

#include <string>
#include <vector>

#include "vge/baselines.hpp"
#include "vge/explore.hpp"

namespace vge {

struct RunConfig {
    EnvConfig env;
    PolicyConfig policy;
    ExploreConfig explore;
    CorruptionMode corruption;
    int eval_cadence = 1000;  // C
    int eval_episodes = 25;   // E
    std::vector<std::uint64_t> seeds = {1, 2, 3};
    std::string out_dir = "out";
    // GCBC-style baselines evaluate with oracle subgoals by default.
    std::string gcbc_goal_mode = "oracle";  // oracle | final
    int demos_per_task = 20;
    std::int64_t baseline_iterations = 20000;

    static RunConfig defaults(const std::string& env_name);
    static RunConfig from_ini(const std::string& text);
    static RunConfig from_ini_file(const std::string& path);

    // Normalized dump with a fixed key order; identical configs hash equal.
    std::string canonical_ini() const;
    std::string config_hash() const;   // sha1 of the canonical dump
    std::string content_hash() const;  // git blob hash of the canonical dump

    // Fills policy dims from the environment, resolves per-env defaults and
    // validates everything.
    void finalize();
};

// "# config_hash=... content_hash=..." line stamped into artifacts.
std::string artifact_header(const RunConfig& cfg);

Policy make_policy(const RunConfig& cfg);
TrainingSetup make_setup(const RunConfig& cfg, const std::string& checkpoint_dir = "");

// ---------------------------------------------------------------------------
// Evaluation

struct EvalReport {
    std::vector<int> task_ids;
    std::vector<double> task_rates;
    double mean_rate = 0;
    int episodes_per_task = 0;
    std::string config_hash;
    double wall_clock_sec = 0;
};

EvalReport evaluate(Env& env, const std::vector<Task>& tasks, const ChunkPolicy& policy,
                    int episodes_per_task, GoalSource goal_source, const ExploreConfig& cfg,
                    RngStream rng, const std::string& config_hash = "");

// Mean task success over the last (up to) five evaluation points, mirroring
// checkpoint averaging.
double final_rate_last5(const TrainResult& r);
double final_task_rate_last5(const TrainResult& r, std::size_t task_index);

// ---------------------------------------------------------------------------
// Ablations

enum class AblationVariant { full, wo_rand, wo_video, wo_extra_rand, single_action };
AblationVariant variant_from_string(const std::string& s);
const char* to_string(AblationVariant v);
RunConfig apply_variant(RunConfig base, AblationVariant v);

struct VariantOutcome {
    AblationVariant variant = AblationVariant::full;
    std::vector<std::uint64_t> seeds;
    std::vector<TrainResult> runs;          // one per seed
    std::vector<double> seed_final_rates;   // last-5-checkpoint mean per seed
    double mean_final = 0;
    double std_final = 0;  // across seeds; NaN when < 2 seeds
};

struct AblationReport {
    std::vector<VariantOutcome> variants;
    std::string report_csv;
    std::string curve_svg;
};

AblationReport run_ablation(const RunConfig& base, const std::vector<AblationVariant>& variants,
                            int workers, bool write_artifacts);

// ---------------------------------------------------------------------------
// Sweeps

struct SweepRow {
    std::string axis;
    double value = 0;
    std::string task;  // task id or "all"
    double rate = 0;
    double stddev = 0;  // NaN when < 2 samples
    int n = 0;
    std::string seed_list;
    bool failed = false;
};

std::vector<SweepRow> sweep(const RunConfig& base, const std::string& axis,
                            const std::vector<double>& values, int workers);
std::string sweep_csv(const RunConfig& cfg, const std::vector<SweepRow>& rows);

// ---------------------------------------------------------------------------
// Plots: self-contained SVG plus a sidecar CSV holding the plotted series.

struct Series {
    std::vector<double> x;
    std::vector<double> y;
    std::vector<std::string> labels;  // bar charts
    std::string x_label = "x";
    std::string y_label = "y";
    std::string title;
};

enum class PlotKind { success_vs_rollouts, rate_bars };

void emit_plot(const Series& s, PlotKind kind, const std::string& path,
               const std::string& header_comment);

// ---------------------------------------------------------------------------
// Checkpoints

void save_checkpoint(const Policy& policy, const std::string& path);
Policy load_checkpoint(const std::string& path);
// Throws ConfigMismatch when the stored head does not fit the run config.
Policy load_checkpoint_checked(const std::string& path, const RunConfig& cfg);

}  // namespace vge

#endif  // VGE_HARNESS_HPP
