#ifndef VGE_ENV_HPP
#define VGE_ENV_HPP

#include <array>
#include <memory>
#include <string>
#include <vector>

#include "vge/core.hpp"

namespace vge {

enum class EnvKind { table_sim, grid_nav };

struct EnvConfig {
    std::string name = "tablesim";  // "tablesim" | "gridnav"
    int t_max = 120;

    // tablesim
    real move_bound = 0.05f;  // per-axis |dx|, |dy| limit
    real grasp_radius = 0.05f;
    real target_radius = 0.07f;

    // gridnav
    int grid_size = 9;
    std::uint64_t wall_seed = 0;  // 0 = built-in default layout
    std::string map_path;         // optional ASCII map file, overrides wall_seed
    bool raster_obs = false;      // 5x5 egocentric raster instead of one-hot

    EnvKind kind() const;
    void validate() const;
};

struct StepResult {
    Observation obs;
    bool done = false;
    bool success = false;
};

class Env {
public:
    virtual ~Env() = default;

    virtual EnvKind kind() const = 0;
    virtual const EnvConfig& config() const = 0;
    virtual int obs_dim() const = 0;
    virtual int action_dim() const = 0;
    virtual bool discrete() const = 0;
    virtual int action_count() const { return 0; }  // discrete envs only
    virtual const ActionBounds& bounds() const = 0;
    virtual std::vector<Task> tasks() const = 0;

    virtual Observation reset(const Task& task, RngStream& rng) = 0;
    virtual StepResult step(const Action& a) = 0;
    virtual Observation observe() const = 0;
    virtual bool done() const = 0;
    virtual int step_count() const = 0;

    // Decodes an observation back into internal state (step counter reset).
    // Toy observations are injective encodings, so this is exact; throws
    // std::invalid_argument where it is not (e.g. ambiguous raster).
    virtual void set_from_observation(const Observation& obs) = 0;

    // True if the current state satisfies the task's success predicate
    // (GridNav: the state from which issuing Done would succeed).
    virtual bool success_state() const = 0;

    // L-inf distance over the positional part of two observations; used for
    // the subgoal-reached test during video-guided rollouts.
    virtual double goal_distance(const Observation& a, const Observation& b) const = 0;

    // Fresh instance with identical configuration and unset state.
    virtual std::unique_ptr<Env> clone_blank() const = 0;
};

std::unique_ptr<Env> make_env(const EnvConfig& cfg);

// ---------------------------------------------------------------------------
// TableSim: continuous 2D pick-and-place on the unit square. Action is
// (dx, dy, grip) with grip > 0 closing the gripper; closing within
// grasp_radius attaches the object, which then tracks the effector.

struct TableSimState {
    std::array<real, 2> effector{0.5f, 0.5f};
    bool gripper_closed = false;
    std::array<real, 2> object{0.5f, 0.5f};
    bool attached = false;
    std::array<real, 2> target{0.5f, 0.5f};
    int step_count = 0;
};

class TableSimEnv : public Env {
public:
    explicit TableSimEnv(const EnvConfig& cfg);

    EnvKind kind() const override { return EnvKind::table_sim; }
    const EnvConfig& config() const override { return cfg_; }
    int obs_dim() const override { return 7; }
    int action_dim() const override { return 3; }
    bool discrete() const override { return false; }
    const ActionBounds& bounds() const override { return bounds_; }
    std::vector<Task> tasks() const override;

    Observation reset(const Task& task, RngStream& rng) override;
    StepResult step(const Action& a) override;
    Observation observe() const override;
    bool done() const override { return done_; }
    int step_count() const override { return state_.step_count; }
    void set_from_observation(const Observation& obs) override;
    bool success_state() const override;
    double goal_distance(const Observation& a, const Observation& b) const override;
    std::unique_ptr<Env> clone_blank() const override;

    const TableSimState& state() const { return state_; }
    void set_state(const TableSimState& s);

    // Canonical target position of each task ("place-left" / "place-right").
    static std::array<real, 2> target_for(int task_id);

    // Grasp primitive (random exploration): with probability p_grasp, true
    // iff the gripper is open and the effector is within grasp_radius of the
    // object; always false otherwise.
    bool grasp_trigger(real p_grasp, RngStream& rng) const;

private:
    EnvConfig cfg_;
    ActionBounds bounds_;
    TableSimState state_;
    bool done_ = true;  // must reset or set state first
};

// ---------------------------------------------------------------------------
// GridNav: discrete navigation on an N x N occupancy grid. Actions are
// MoveAhead, TurnLeft, TurnRight, Done; success requires issuing Done while
// the task's target cell is directly in front of the agent.

enum GridAction : int { kMoveAhead = 0, kTurnLeft = 1, kTurnRight = 2, kDone = 3 };

struct GridLayout {
    int n = 9;
    std::vector<char> cells;  // '#' wall, '.' free, '0'.. target ids
    int n_targets = 0;

    char at(int r, int c) const { return cells[std::size_t(r) * n + c]; }
    bool walkable(int r, int c) const {
        return r >= 0 && c >= 0 && r < n && c < n && at(r, c) == '.';
    }
    std::pair<int, int> target_cell(int id) const;
    std::string to_ascii() const;

    static GridLayout parse_ascii(const std::string& text);
    static GridLayout generate(int n, std::uint64_t seed, int n_targets = 3);
    static GridLayout builtin_default();
};

struct GridNavState {
    int row = 1, col = 1;
    int heading = 0;  // 0=N, 1=E, 2=S, 3=W
    int target_id = 0;
    int step_count = 0;
};

class GridNavEnv : public Env {
public:
    explicit GridNavEnv(const EnvConfig& cfg);

    EnvKind kind() const override { return EnvKind::grid_nav; }
    const EnvConfig& config() const override { return cfg_; }
    int obs_dim() const override;
    int action_dim() const override { return 1; }
    bool discrete() const override { return true; }
    int action_count() const override { return 4; }
    const ActionBounds& bounds() const override { return bounds_; }
    std::vector<Task> tasks() const override;

    Observation reset(const Task& task, RngStream& rng) override;
    StepResult step(const Action& a) override;
    Observation observe() const override;
    bool done() const override { return done_; }
    int step_count() const override { return state_.step_count; }
    void set_from_observation(const Observation& obs) override;
    bool success_state() const override;
    double goal_distance(const Observation& a, const Observation& b) const override;
    std::unique_ptr<Env> clone_blank() const override;

    const GridLayout& layout() const { return layout_; }
    const GridNavState& state() const { return state_; }
    void set_state(const GridNavState& s);

    // Cell directly in front of the agent.
    std::pair<int, int> front_cell() const;

private:
    Observation observe_onehot() const;
    Observation observe_raster() const;

    EnvConfig cfg_;
    ActionBounds bounds_;
    GridLayout layout_;
    GridNavState state_;
    bool done_ = true;
};

}  // namespace vge

#endif  // VGE_ENV_HPP
