#include "vge/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

namespace vge {

void CorruptionMode::validate(int horizon) const {
    switch (kind) {
        case CorruptionKind::none:
        case CorruptionKind::mismatch:
            break;
        case CorruptionKind::hallucinate:
            if (hallucinate_from < 0 || hallucinate_from >= horizon)
                throw std::invalid_argument("hallucinate index must be in [0, H)");
            break;
        case CorruptionKind::jitter:
            if (jitter_sigma < 0) throw std::invalid_argument("jitter sigma must be >= 0");
            break;
    }
}

const char* to_string(CorruptionKind k) {
    switch (k) {
        case CorruptionKind::none: return "none";
        case CorruptionKind::hallucinate: return "hallucinate";
        case CorruptionKind::jitter: return "jitter";
        case CorruptionKind::mismatch: return "mismatch";
    }
    return "unknown";
}

CorruptionKind corruption_kind_from_string(const std::string& s) {
    if (s == "none") return CorruptionKind::none;
    if (s == "hallucinate") return CorruptionKind::hallucinate;
    if (s == "jitter") return CorruptionKind::jitter;
    if (s == "mismatch") return CorruptionKind::mismatch;
    throw ConfigError("unknown corruption kind: " + s);
}

// ---------------------------------------------------------------------------
// TableSim expert: approach the object with an open gripper, close to grasp,
// carry the object to the target, release.

namespace {

Action tablesim_expert_action(const TableSimEnv& env) {
    const TableSimState& s = env.state();
    const real lim = env.config().move_bound;
    auto clamped = [lim](real v) { return std::min(lim, std::max(-lim, v)); };

    if (!s.attached) {
        const real dx = s.object[0] - s.effector[0];
        const real dy = s.object[1] - s.effector[1];
        const real dist = std::sqrt(dx * dx + dy * dy);
        if (dist > 0.6f * env.config().grasp_radius)
            return {clamped(dx), clamped(dy), -1.0f};
        return {0.0f, 0.0f, 1.0f};  // grasp
    }
    const real dx = s.target[0] - s.object[0];
    const real dy = s.target[1] - s.object[1];
    const real dist = std::sqrt(dx * dx + dy * dy);
    if (dist > 0.5f * env.config().target_radius)
        return {clamped(dx), clamped(dy), 1.0f};
    return {0.0f, 0.0f, -1.0f};  // release
}

// GridNav expert: BFS over (row, col, heading) to any pose facing the target
// cell, then Done.
std::vector<int> gridnav_expert_plan(const GridNavEnv& env) {
    const GridLayout& g = env.layout();
    const GridNavState& s = env.state();
    auto [tr, tc] = g.target_cell(s.target_id);

    constexpr int kDr[4] = {-1, 0, 1, 0};
    constexpr int kDc[4] = {0, 1, 0, -1};
    const int n = g.n;
    auto id = [n](int r, int c, int h) { return (r * n + c) * 4 + h; };

    std::vector<int> prev_state(std::size_t(n) * n * 4, -1);
    std::vector<int> prev_action(std::size_t(n) * n * 4, -1);
    std::queue<int> q;
    const int start = id(s.row, s.col, s.heading);
    prev_state[start] = start;
    q.push(start);
    int goal = -1;
    while (!q.empty() && goal < 0) {
        const int cur = q.front();
        q.pop();
        const int h = cur % 4;
        const int c = (cur / 4) % n;
        const int r = cur / (4 * n);
        if (r + kDr[h] == tr && c + kDc[h] == tc) {
            goal = cur;
            break;
        }
        const int moves[3][3] = {{kMoveAhead, r + kDr[h], c + kDc[h]},
                                 {kTurnLeft, r, c},
                                 {kTurnRight, r, c}};
        for (const auto& m : moves) {
            int nr = m[1], nc = m[2], nh = h;
            if (m[0] == kMoveAhead && !g.walkable(nr, nc)) continue;
            if (m[0] == kTurnLeft) nh = (h + 3) % 4;
            if (m[0] == kTurnRight) nh = (h + 1) % 4;
            const int nxt = id(nr, nc, nh);
            if (prev_state[nxt] >= 0) continue;
            prev_state[nxt] = cur;
            prev_action[nxt] = m[0];
            q.push(nxt);
        }
    }
    if (goal < 0) throw PlanningFailure("gridnav target unreachable");
    std::vector<int> plan;
    for (int cur = goal; cur != start; cur = prev_state[cur]) plan.push_back(prev_action[cur]);
    std::reverse(plan.begin(), plan.end());
    plan.push_back(kDone);
    return plan;
}

}  // namespace

Action expert_action(const Env& env, const Task& task) {
    if (env.kind() == EnvKind::table_sim)
        return tablesim_expert_action(static_cast<const TableSimEnv&>(env));
    const auto& nav = static_cast<const GridNavEnv&>(env);
    if (task.id != nav.state().target_id) throw std::invalid_argument("task/state target mismatch");
    return {real(gridnav_expert_plan(nav).front())};
}

Episode expert_from_current_state(Env& env, const Task& task) {
    Episode e;
    e.task = task;
    e.source = EpisodeSource::expert;
    e.observations.push_back(env.observe());

    if (env.kind() == EnvKind::grid_nav) {
        auto& nav = static_cast<GridNavEnv&>(env);
        if (task.id != nav.state().target_id)
            throw std::invalid_argument("task/state target mismatch");
        for (int a : gridnav_expert_plan(nav)) {
            if (env.done()) throw PlanningFailure("gridnav expert ran out of steps");
            StepResult r = env.step({real(a)});
            e.actions.push_back({real(a)});
            e.observations.push_back(r.obs);
            e.success = r.success;
        }
        if (!e.success) throw PlanningFailure("gridnav expert failed");
        return e;
    }

    auto& table = static_cast<TableSimEnv&>(env);
    // The expert always pursues the task's own target, which matters when
    // the conditioning state was decoded for a different task (mismatch
    // corruption).
    TableSimState s = table.state();
    if (s.target != TableSimEnv::target_for(task.id)) {
        s.target = TableSimEnv::target_for(task.id);
        table.set_state(s);
        e.observations.back() = env.observe();
    }
    while (!env.done()) {
        const Action a = tablesim_expert_action(table);
        StepResult r = env.step(a);
        e.actions.push_back(a);
        e.observations.push_back(r.obs);
        e.success = r.success;
    }
    if (!e.success) throw PlanningFailure("tablesim expert failed");
    return e;
}

Episode expert_rollout(Env& env, const Task& task, RngStream rng) {
    env.reset(task, rng);
    return expert_from_current_state(env, task);
}

std::vector<int> plan_frame_indices(int episode_len, int horizon) {
    if (horizon < 1) throw std::invalid_argument("horizon must be >= 1");
    if (episode_len < 1) throw std::invalid_argument("episode length must be >= 1");
    std::vector<int> idx(horizon);
    for (int j = 1; j <= horizon; ++j)
        idx[j - 1] = int(std::floor(double(j) * episode_len / horizon + 0.5));
    return idx;
}

SubgoalPlan generate_plan(const Env& env, const Task& task, const Observation& start_obs,
                          int horizon, const CorruptionMode& mode, RngStream& rng) {
    if (horizon < 1) throw std::invalid_argument("plan horizon must be >= 1");
    mode.validate(horizon);

    auto scratch = env.clone_blank();
    scratch->set_from_observation(start_obs);  // decode failure -> invalid_argument
    const Episode e = expert_from_current_state(*scratch, task);

    SubgoalPlan plan;
    plan.task = task;
    for (int i : plan_frame_indices(e.length(), horizon))
        plan.frames.push_back(e.observations[std::size_t(i)]);
    if (mode.kind == CorruptionKind::none) return plan;
    return corrupt(env, plan, mode, start_obs, rng);
}

ActionChunk ExpertReplayPolicy::predict(const Observation& obs, const Observation&,
                                        RngStream&) const {
    auto env = proto_->clone_blank();
    env->set_from_observation(obs);
    const Task task = [&] {
        if (env->kind() == EnvKind::grid_nav) {
            const int tid = static_cast<GridNavEnv&>(*env).state().target_id;
            for (const Task& t : env->tasks())
                if (t.id == tid) return t;
        }
        // TableSim tasks differ only by target, which the state carries.
        const auto& st = static_cast<TableSimEnv&>(*env).state();
        return env->tasks()[st.target[0] < 0.5f ? 0 : 1];
    }();

    const Action null_action =
        proto_->discrete() ? Action{real(kNoOpIndex)} : Action(std::size_t(proto_->action_dim()), 0.0f);
    ActionChunk c;
    for (int i = 0; i < h_ && !env->done(); ++i) {
        const Action a = expert_action(*env, task);
        env->step(a);
        c.actions.push_back(a);
        if (env->done()) break;
    }
    if (c.actions.empty()) c.actions.push_back(null_action);
    c.valid_len = int(c.actions.size());
    while (int(c.actions.size()) < h_) c.actions.push_back(null_action);
    return c;
}

SubgoalPlan corrupt(const Env& env, const SubgoalPlan& plan, const CorruptionMode& mode,
                    const Observation& start_obs, RngStream& rng) {
    mode.validate(plan.horizon());
    SubgoalPlan out = plan;
    out.corruption_applied = mode.kind;
    if (mode.kind == CorruptionKind::none) return out;

    if (mode.kind == CorruptionKind::jitter) {
        const bool table = env.kind() == EnvKind::table_sim;
        for (auto& f : out.frames) {
            if (table) {
                for (int i : {0, 1, 3, 4}) {
                    f[i] = real(f[i] + mode.jitter_sigma * rng.normal());
                    f[i] = std::min(1.0f, std::max(0.0f, f[i]));
                }
            } else {
                for (auto& v : f) v = real(v + mode.jitter_sigma * rng.normal());
            }
        }
        return out;
    }

    // hallucinate / mismatch need a different task from the same suite.
    std::vector<Task> others;
    for (const Task& t : env.tasks())
        if (t.id != plan.task.id) others.push_back(t);
    if (others.empty()) throw std::invalid_argument("corruption needs >= 2 tasks");
    const Task& wrong = others[rng.uniform_int(others.size())];

    if (env.kind() == EnvKind::grid_nav) {
        // A gridnav start observation encodes the conditioning task's target;
        // redirect it before planning for the wrong task.
        auto scratch = env.clone_blank();
        scratch->set_from_observation(start_obs);
        GridNavState s = static_cast<GridNavEnv&>(*scratch).state();
        s.target_id = wrong.id;
        static_cast<GridNavEnv&>(*scratch).set_state(s);
        const Observation redirected = scratch->observe();
        SubgoalPlan other =
            generate_plan(env, wrong, redirected, plan.horizon(), CorruptionMode{}, rng);
        const int from = mode.kind == CorruptionKind::mismatch ? 0 : mode.hallucinate_from;
        for (int i = from; i < out.horizon(); ++i) out.frames[i] = other.frames[i];
        return out;
    }

    SubgoalPlan other = generate_plan(env, wrong, start_obs, plan.horizon(), CorruptionMode{}, rng);
    const int from = mode.kind == CorruptionKind::mismatch ? 0 : mode.hallucinate_from;
    for (int i = from; i < out.horizon(); ++i) out.frames[i] = other.frames[i];
    return out;
}

}  // namespace vge
