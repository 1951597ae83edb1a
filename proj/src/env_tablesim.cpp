#include <algorithm>
#include <cmath>

#include "vge/env.hpp"

namespace vge {

EnvKind EnvConfig::kind() const {
    if (name == "tablesim") return EnvKind::table_sim;
    if (name == "gridnav") return EnvKind::grid_nav;
    throw ConfigError("unknown environment: " + name);
}

void EnvConfig::validate() const {
    kind();
    if (t_max < 1) throw ConfigError("t_max must be >= 1");
    if (move_bound <= 0) throw ConfigError("move_bound must be > 0");
    if (grasp_radius <= 0 || target_radius <= 0) throw ConfigError("radii must be > 0");
    if (grid_size < 5) throw ConfigError("grid_size must be >= 5");
}

std::unique_ptr<Env> make_env(const EnvConfig& cfg) {
    cfg.validate();
    if (cfg.kind() == EnvKind::table_sim) return std::make_unique<TableSimEnv>(cfg);
    return std::make_unique<GridNavEnv>(cfg);
}

namespace {

real clamp01(real v) { return std::min(1.0f, std::max(0.0f, v)); }

real dist2d(const std::array<real, 2>& a, const std::array<real, 2>& b) {
    const real dx = a[0] - b[0];
    const real dy = a[1] - b[1];
    return std::sqrt(dx * dx + dy * dy);
}

}  // namespace

TableSimEnv::TableSimEnv(const EnvConfig& cfg) : cfg_(cfg) {
    bounds_.low = {-cfg.move_bound, -cfg.move_bound, -1.0f};
    bounds_.high = {cfg.move_bound, cfg.move_bound, 1.0f};
    bounds_.validate();
}

std::vector<Task> TableSimEnv::tasks() const {
    return {{0, "place-left", "tablesim"}, {1, "place-right", "tablesim"}};
}

std::array<real, 2> TableSimEnv::target_for(int task_id) {
    if (task_id < 0 || task_id > 1) throw std::invalid_argument("unknown tablesim task");
    return task_id == 0 ? std::array<real, 2>{0.2f, 0.5f} : std::array<real, 2>{0.8f, 0.5f};
}

Observation TableSimEnv::reset(const Task& task, RngStream& rng) {
    if (task.env_name != "tablesim" || task.id < 0 || task.id > 1)
        throw std::invalid_argument("unknown tablesim task");
    TableSimState s;
    s.target = target_for(task.id);
    // Rejection-sample: object away from the target, effector away from the
    // object, both by at least 2 * target_radius.
    const real margin = 2.0f * cfg_.target_radius;
    do {
        s.object = {real(rng.uniform(0.1, 0.9)), real(rng.uniform(0.1, 0.9))};
    } while (dist2d(s.object, s.target) < margin);
    do {
        s.effector = {real(rng.uniform(0.1, 0.9)), real(rng.uniform(0.1, 0.9))};
    } while (dist2d(s.effector, s.object) < margin);
    set_state(s);
    return observe();
}

void TableSimEnv::set_state(const TableSimState& s) {
    state_ = s;
    done_ = false;
}

StepResult TableSimEnv::step(const Action& a) {
    if (done_) throw IllegalState("step after episode end");
    if (a.size() != 3) throw std::invalid_argument("tablesim action must have 3 components");

    const Action c = clamp_action(a, bounds_);
    real dx = c[0], dy = c[1];
    const bool closed = c[2] > 0.0f;

    TableSimState& s = state_;
    if (s.attached && closed) {
        // Move effector and object jointly; clamp the delta so both stay in
        // the unit square and the attach offset is preserved exactly.
        dx = std::min(dx, std::min(1.0f - s.effector[0], 1.0f - s.object[0]));
        dx = std::max(dx, std::max(-s.effector[0], -s.object[0]));
        dy = std::min(dy, std::min(1.0f - s.effector[1], 1.0f - s.object[1]));
        dy = std::max(dy, std::max(-s.effector[1], -s.object[1]));
        s.effector[0] += dx;
        s.effector[1] += dy;
        s.object[0] += dx;
        s.object[1] += dy;
    } else {
        s.effector[0] = clamp01(s.effector[0] + dx);
        s.effector[1] = clamp01(s.effector[1] + dy);
        // Attach on contact with a closed gripper. Evaluating the predicate
        // every step (not just on the closing edge) keeps the state an exact
        // function of the observation.
        s.attached = closed && dist2d(s.effector, s.object) <= cfg_.grasp_radius;
    }
    s.gripper_closed = closed;
    ++s.step_count;

    StepResult r;
    r.success = success_state();
    done_ = r.success || s.step_count >= cfg_.t_max;
    r.done = done_;
    r.obs = observe();
    return r;
}

bool TableSimEnv::success_state() const {
    return !state_.gripper_closed && dist2d(state_.object, state_.target) <= cfg_.target_radius;
}

Observation TableSimEnv::observe() const {
    const TableSimState& s = state_;
    return {s.effector[0], s.effector[1], s.gripper_closed ? 1.0f : 0.0f,
            s.object[0],   s.object[1],   s.target[0],
            s.target[1]};
}

void TableSimEnv::set_from_observation(const Observation& obs) {
    if (obs.size() != 7) throw std::invalid_argument("tablesim observation must have 7 entries");
    for (real v : obs)
        if (!std::isfinite(v)) throw std::invalid_argument("non-finite observation");
    TableSimState s;
    s.effector = {obs[0], obs[1]};
    s.gripper_closed = obs[2] > 0.5f;
    s.object = {obs[3], obs[4]};
    s.target = {obs[5], obs[6]};
    s.attached = s.gripper_closed && dist2d(s.effector, s.object) <= cfg_.grasp_radius;
    s.step_count = 0;
    set_state(s);
}

double TableSimEnv::goal_distance(const Observation& a, const Observation& b) const {
    if (a.size() != 7 || b.size() != 7) throw std::invalid_argument("bad observation length");
    // L-inf over effector and object positions; gripper and target excluded.
    double d = 0;
    for (int i : {0, 1, 3, 4}) d = std::max(d, std::abs(double(a[i]) - double(b[i])));
    return d;
}

bool TableSimEnv::grasp_trigger(real p_grasp, RngStream& rng) const {
    if (state_.gripper_closed) return false;
    if (dist2d(state_.effector, state_.object) > cfg_.grasp_radius) return false;
    return rng.uniform01() < p_grasp;
}

std::unique_ptr<Env> TableSimEnv::clone_blank() const {
    return std::make_unique<TableSimEnv>(cfg_);
}

}  // namespace vge
