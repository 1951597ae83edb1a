#include <algorithm>
#include <cmath>
#include <fstream>
#include <queue>
#include <sstream>

#include "vge/env.hpp"

namespace vge {

namespace {

// Heading deltas: N, E, S, W.
constexpr int kDr[4] = {-1, 0, 1, 0};
constexpr int kDc[4] = {0, 1, 0, -1};

}  // namespace

std::pair<int, int> GridLayout::target_cell(int id) const {
    const char wanted = char('0' + id);
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c)
            if (at(r, c) == wanted) return {r, c};
    throw std::invalid_argument("target id not present in layout");
}

std::string GridLayout::to_ascii() const {
    std::string out;
    for (int r = 0; r < n; ++r) {
        out.append(cells.begin() + std::size_t(r) * n, cells.begin() + std::size_t(r + 1) * n);
        out.push_back('\n');
    }
    return out;
}

GridLayout GridLayout::parse_ascii(const std::string& text) {
    GridLayout g;
    std::istringstream in(text);
    std::string line;
    std::vector<std::string> rows;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty()) rows.push_back(line);
    }
    if (rows.empty()) throw std::invalid_argument("empty map");
    g.n = int(rows.size());
    g.cells.reserve(std::size_t(g.n) * g.n);
    int max_target = -1;
    for (const auto& row : rows) {
        if (int(row.size()) != g.n) throw std::invalid_argument("map must be square");
        for (char ch : row) {
            if (ch != '#' && ch != '.' && !(ch >= '0' && ch <= '9'))
                throw std::invalid_argument("map cells must be '#', '.' or digits");
            if (ch >= '0' && ch <= '9') max_target = std::max(max_target, ch - '0');
            g.cells.push_back(ch);
        }
    }
    g.n_targets = max_target + 1;
    if (g.n_targets < 1) throw std::invalid_argument("map has no targets");
    for (int t = 0; t < g.n_targets; ++t) g.target_cell(t);  // all ids present
    return g;
}

GridLayout GridLayout::builtin_default() {
    return parse_ascii(
        "#########\n"
        "#0......#\n"
        "#.##.##.#\n"
        "#.......#\n"
        "#.#.#.#.#\n"
        "#...#...#\n"
        "#.##.##.#\n"
        "#......1#\n"
        "####2####\n");
}

namespace {

// All '.' cells reachable from one another, and every target has at least
// one walkable neighbor.
bool layout_usable(const GridLayout& g) {
    int start_r = -1, start_c = -1, free_count = 0;
    for (int r = 0; r < g.n; ++r)
        for (int c = 0; c < g.n; ++c)
            if (g.at(r, c) == '.') {
                ++free_count;
                start_r = r;
                start_c = c;
            }
    if (free_count < g.n) return false;
    std::vector<char> seen(std::size_t(g.n) * g.n, 0);
    std::queue<std::pair<int, int>> q;
    q.push({start_r, start_c});
    seen[std::size_t(start_r) * g.n + start_c] = 1;
    int reached = 0;
    while (!q.empty()) {
        auto [r, c] = q.front();
        q.pop();
        ++reached;
        for (int h = 0; h < 4; ++h) {
            const int nr = r + kDr[h], nc = c + kDc[h];
            if (g.walkable(nr, nc) && !seen[std::size_t(nr) * g.n + nc]) {
                seen[std::size_t(nr) * g.n + nc] = 1;
                q.push({nr, nc});
            }
        }
    }
    if (reached != free_count) return false;
    for (int t = 0; t < g.n_targets; ++t) {
        auto [tr, tc] = g.target_cell(t);
        bool ok = false;
        for (int h = 0; h < 4; ++h)
            if (g.walkable(tr + kDr[h], tc + kDc[h]) &&
                seen[std::size_t(tr + kDr[h]) * g.n + (tc + kDc[h])])
                ok = true;
        if (!ok) return false;
    }
    return true;
}

}  // namespace

GridLayout GridLayout::generate(int n, std::uint64_t seed, int n_targets) {
    if (n < 5) throw std::invalid_argument("grid too small");
    if (n_targets < 1 || n_targets > 9) throw std::invalid_argument("1..9 targets supported");
    RngStream rng(seed, 0x9d1dULL);
    for (int attempt = 0; attempt < 1000; ++attempt) {
        GridLayout g;
        g.n = n;
        g.n_targets = n_targets;
        g.cells.assign(std::size_t(n) * n, '.');
        for (int r = 0; r < n; ++r)
            for (int c = 0; c < n; ++c)
                if (r == 0 || c == 0 || r == n - 1 || c == n - 1 || rng.uniform01() < 0.12)
                    g.cells[std::size_t(r) * n + c] = '#';
        for (int t = 0; t < n_targets; ++t) {
            const int r = 1 + int(rng.uniform_int(std::uint64_t(n - 2)));
            const int c = 1 + int(rng.uniform_int(std::uint64_t(n - 2)));
            if (g.at(r, c) != '.') {
                --t;
                continue;
            }
            g.cells[std::size_t(r) * n + c] = char('0' + t);
        }
        if (layout_usable(g)) return g;
    }
    throw PlanningFailure("could not generate a usable grid layout");
}

// ---------------------------------------------------------------------------

GridNavEnv::GridNavEnv(const EnvConfig& cfg) : cfg_(cfg) {
    bounds_.low = {0.0f};
    bounds_.high = {3.0f};
    if (!cfg.map_path.empty()) {
        std::ifstream f(cfg.map_path);
        if (!f) throw ConfigError("cannot open map file: " + cfg.map_path);
        std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
        layout_ = GridLayout::parse_ascii(text);
    } else if (cfg.wall_seed != 0) {
        layout_ = GridLayout::generate(cfg.grid_size, cfg.wall_seed);
    } else {
        layout_ = GridLayout::builtin_default();
    }
}

int GridNavEnv::obs_dim() const {
    if (cfg_.raster_obs) return 25;
    return layout_.n * layout_.n + 4 + layout_.n_targets;
}

std::vector<Task> GridNavEnv::tasks() const {
    std::vector<Task> out;
    for (int t = 0; t < layout_.n_targets; ++t)
        out.push_back({t, "goto-" + std::to_string(t), "gridnav"});
    return out;
}

Observation GridNavEnv::reset(const Task& task, RngStream& rng) {
    if (task.env_name != "gridnav" || task.id < 0 || task.id >= layout_.n_targets)
        throw std::invalid_argument("unknown gridnav task");
    GridNavState s;
    s.target_id = task.id;
    do {
        s.row = int(rng.uniform_int(std::uint64_t(layout_.n)));
        s.col = int(rng.uniform_int(std::uint64_t(layout_.n)));
    } while (!layout_.walkable(s.row, s.col));
    s.heading = int(rng.uniform_int(4));
    set_state(s);
    return observe();
}

void GridNavEnv::set_state(const GridNavState& s) {
    if (!layout_.walkable(s.row, s.col)) throw std::invalid_argument("agent cell not walkable");
    if (s.heading < 0 || s.heading > 3) throw std::invalid_argument("bad heading");
    if (s.target_id < 0 || s.target_id >= layout_.n_targets)
        throw std::invalid_argument("bad target id");
    state_ = s;
    done_ = false;
}

std::pair<int, int> GridNavEnv::front_cell() const {
    return {state_.row + kDr[state_.heading], state_.col + kDc[state_.heading]};
}

bool GridNavEnv::success_state() const {
    auto [fr, fc] = front_cell();
    auto [tr, tc] = layout_.target_cell(state_.target_id);
    return fr == tr && fc == tc;
}

StepResult GridNavEnv::step(const Action& a) {
    if (done_) throw IllegalState("step after episode end");
    if (a.size() != 1) throw std::invalid_argument("gridnav action must have 1 component");
    const int act = int(std::lround(a[0]));
    if (act < 0 || act > 3) throw std::invalid_argument("gridnav action index out of range");

    StepResult r;
    GridNavState& s = state_;
    switch (act) {
        case kMoveAhead: {
            auto [nr, nc] = front_cell();
            if (layout_.walkable(nr, nc)) {
                s.row = nr;
                s.col = nc;
            }
            break;
        }
        case kTurnLeft:
            s.heading = (s.heading + 3) % 4;
            break;
        case kTurnRight:
            s.heading = (s.heading + 1) % 4;
            break;
        case kDone:
            r.success = success_state();
            done_ = true;
            break;
    }
    ++s.step_count;
    if (s.step_count >= cfg_.t_max) done_ = true;
    r.done = done_;
    r.obs = observe();
    return r;
}

Observation GridNavEnv::observe() const {
    return cfg_.raster_obs ? observe_raster() : observe_onehot();
}

Observation GridNavEnv::observe_onehot() const {
    Observation o(obs_dim(), 0.0f);
    const int n = layout_.n;
    o[std::size_t(state_.row) * n + state_.col] = 1.0f;
    o[std::size_t(n) * n + state_.heading] = 1.0f;
    o[std::size_t(n) * n + 4 + state_.target_id] = 1.0f;
    return o;
}

// 5x5 egocentric window, row 0 furthest ahead, agent at the center.
// free = 0, wall / out of bounds / other target = 1, task target = 0.5.
Observation GridNavEnv::observe_raster() const {
    Observation o(25, 0.0f);
    auto [tr, tc] = layout_.target_cell(state_.target_id);
    for (int i = 0; i < 5; ++i) {
        for (int j = 0; j < 5; ++j) {
            const int fwd = 2 - i;    // cells ahead
            const int right = j - 2;  // cells to the right
            const int r = state_.row + fwd * kDr[state_.heading] + right * kDr[(state_.heading + 1) % 4];
            const int c = state_.col + fwd * kDc[state_.heading] + right * kDc[(state_.heading + 1) % 4];
            real v;
            if (r < 0 || c < 0 || r >= layout_.n || c >= layout_.n)
                v = 1.0f;
            else if (r == tr && c == tc)
                v = 0.5f;
            else
                v = layout_.at(r, c) == '.' ? 0.0f : 1.0f;
            o[std::size_t(i) * 5 + j] = v;
        }
    }
    return o;
}

void GridNavEnv::set_from_observation(const Observation& obs) {
    if (int(obs.size()) != obs_dim()) throw std::invalid_argument("bad observation length");
    const int n = layout_.n;
    GridNavState s;
    if (!cfg_.raster_obs) {
        int cell = -1, heading = -1, target = -1;
        for (int i = 0; i < n * n; ++i)
            if (obs[i] > 0.5f) cell = cell < 0 ? i : -2;
        for (int i = 0; i < 4; ++i)
            if (obs[std::size_t(n) * n + i] > 0.5f) heading = heading < 0 ? i : -2;
        for (int i = 0; i < layout_.n_targets; ++i)
            if (obs[std::size_t(n) * n + 4 + i] > 0.5f) target = target < 0 ? i : -2;
        if (cell < 0 || heading < 0 || target < 0)
            throw std::invalid_argument("observation is not a valid one-hot encoding");
        s.row = cell / n;
        s.col = cell % n;
        s.heading = heading;
        s.target_id = target;
    } else {
        // Exhaustive match over poses; ambiguous rasters cannot be decoded.
        int matches = 0;
        for (int t = 0; t < layout_.n_targets; ++t) {
            for (int r = 0; r < n; ++r) {
                for (int c = 0; c < n; ++c) {
                    if (!layout_.walkable(r, c)) continue;
                    for (int h = 0; h < 4; ++h) {
                        GridNavState cand{r, c, h, t, 0};
                        GridNavEnv probe(cfg_);
                        probe.set_state(cand);
                        if (probe.observe() == obs) {
                            ++matches;
                            s = cand;
                        }
                    }
                }
            }
        }
        if (matches == 0) throw std::invalid_argument("raster matches no state");
        if (matches > 1) throw std::invalid_argument("raster is ambiguous");
    }
    s.step_count = 0;
    set_state(s);
}

double GridNavEnv::goal_distance(const Observation& a, const Observation& b) const {
    if (a.size() != b.size() || int(a.size()) != obs_dim())
        throw std::invalid_argument("bad observation length");
    // L-inf over the positional block: cell one-hot, or the whole raster.
    const int span = cfg_.raster_obs ? 25 : layout_.n * layout_.n;
    double d = 0;
    for (int i = 0; i < span; ++i) d = std::max(d, std::abs(double(a[i]) - double(b[i])));
    return d;
}

std::unique_ptr<Env> GridNavEnv::clone_blank() const {
    return std::make_unique<GridNavEnv>(cfg_);
}

}  // namespace vge
