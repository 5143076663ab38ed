#include "dblab/dp.hpp"

#include "dblab/numerics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <fstream>
#include <functional>
#include <limits>
#include <stdexcept>

namespace dblab {

using num::fmt;

std::string action_name(Action a) {
    switch (a) {
        case Action::Do: return "DO";
        case Action::Think: return "THINK";
        case Action::Idle: return "IDLE";
        case Action::Mix: return "MIX";
    }
    return "?";
}

long grid_steps(const Grid& g, double T) {
    if (!(g.dt > 0.0)) throw std::invalid_argument("grid step must be > 0");
    if (g.dt > g.max_dt)
        throw std::invalid_argument("grid too coarse: dt = " + fmt(g.dt) + " exceeds cap " +
                                    fmt(g.max_dt));
    if (!(T >= 0.0)) throw std::invalid_argument("horizon must be >= 0");
    long n = std::lround(T / g.dt);
    if (n > g.max_steps)
        throw std::invalid_argument("state-space guard: " + std::to_string(n) +
                                    " steps exceed the limit of " + std::to_string(g.max_steps));
    return n;
}

TriTable::TriTable(long n_steps, int resolution) : n_(n_steps), res_(resolution) {
    offsets_.resize(static_cast<std::size_t>(n_ + 2));
    offsets_[0] = 0;
    for (long k = 0; k <= n_; ++k)
        offsets_[k + 1] = offsets_[k] + static_cast<std::size_t>(row_size(k));
}

std::size_t TriTable::index(long k, long m) const {
    if (k < 0 || k > n_ || m < 0 || m >= row_size(k))
        throw std::out_of_range("table index (" + std::to_string(k) + ", " + std::to_string(m) +
                                ") out of range");
    return offsets_[k] + static_cast<std::size_t>(m);
}

double DPSolution::value_at(long k, long m) const {
    if (value.empty()) throw std::logic_error("value table was not kept");
    return value[layout.index(k, m)];
}

Action DPSolution::policy_at(long k, long m) const {
    if (k == 0) throw std::out_of_range("no action at the deadline");
    return static_cast<Action>(policy[layout.index(k, m)] & 0x3);
}

bool DPSolution::tie_at(long k, long m, Action a) const {
    return (policy[layout.index(k, m)] >> (2 + static_cast<int>(a))) & 1;
}

std::vector<double> DPSolution::switch_times() const {
    std::vector<double> out;
    for (std::size_t i = 1; i < path.size(); ++i)
        if (path[i] != path[i - 1]) out.push_back(static_cast<double>(i) * dt);
    return out;
}

std::vector<double> DPSolution::refined_switch_times() const {
    std::vector<double> out;
    for (std::size_t i = 1; i < path.size(); ++i) {
        if (path[i] == path[i - 1]) continue;
        double a0 = path_advantage[i - 1], a1 = path_advantage[i];
        bool pair = (path[i] == Action::Do || path[i] == Action::Think) &&
                    (path[i - 1] == Action::Do || path[i - 1] == Action::Think);
        if (pair && a0 != a1 && ((a0 >= 0) != (a1 >= 0) || a0 == 0 || a1 == 0)) {
            double t0 = (static_cast<double>(i) - 0.5) * dt;
            out.push_back(t0 + dt * a0 / (a0 - a1));
        } else {
            out.push_back(static_cast<double>(i) * dt);
        }
    }
    return out;
}

std::vector<ActionInterval> extract_schedule(const DPSolution& dp) {
    std::vector<ActionInterval> out;
    for (std::size_t i = 0; i < dp.path.size(); ++i) {
        double t0 = static_cast<double>(i) * dp.dt, t1 = t0 + dp.dt;
        if (!out.empty() && out.back().action == dp.path[i]) out.back().t_end = t1;
        else out.push_back({dp.path[i], t0, t1});
    }
    return out;
}

std::vector<EffortWindow> thinking_share(const DPSolution& dp, double window) {
    if (!(window > 0.0)) throw std::invalid_argument("window must be > 0");
    long w = std::max(1L, std::lround(window / dp.dt));
    std::vector<EffortWindow> out;
    long n = static_cast<long>(dp.path.size());
    for (long i = 0; i < n; i += w) {
        long end = std::min(n, i + w);
        double think = 0.0;
        for (long j = i; j < end; ++j) {
            if (dp.path[j] == Action::Think) think += 1.0;
            else if (dp.path[j] == Action::Mix) think += 0.5;
        }
        out.push_back({i * dp.dt, end * dp.dt, think / static_cast<double>(end - i)});
    }
    return out;
}

std::vector<ActionInterval> thinking_intervals(const DPSolution& dp, double window,
                                               double threshold) {
    std::vector<ActionInterval> out;
    bool open = false;
    for (const auto& win : thinking_share(dp, window)) {
        if (win.think_share > threshold) {
            if (open) out.back().t_end = win.t_end;
            else out.push_back({Action::Think, win.t_start, win.t_end});
            open = true;
        } else {
            open = false;
        }
    }
    return out;
}

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// One transition of the recursion: Q = reward + stay * W(k-1, m + dm).
struct Step {
    double reward;
    double stay;
};

// Model-specific transition rule for action a at state (k, m).
using StepFn = std::function<bool(long k, long m, Action a, Step& out)>;

struct Engine {
    long n;
    int res;
    double dt;
    std::array<int, 4> dm;  // doing usage increment per action
    std::vector<Action> actions;
    StepFn step;
};

// Backward recursion. When `on_row` is set it is called with each finished
// row (k, row-values, previous row).
void backward(const Engine& e, DPSolution& sol, bool fill_tables,
              const std::function<void(long, const std::vector<double>&)>& on_prev_row) {
    std::vector<double> prev(static_cast<std::size_t>(e.res * e.n + 1), 0.0), cur;
    if (fill_tables && !sol.value.empty())
        for (long m = 0; m < sol.layout.row_size(0); ++m) sol.value[sol.layout.index(0, m)] = 0.0;
    for (long k = 1; k <= e.n; ++k) {
        if (on_prev_row) on_prev_row(k, prev);
        long len = e.res * (e.n - k) + 1;
        cur.assign(static_cast<std::size_t>(len), 0.0);
        for (long m = 0; m < len; ++m) {
            std::array<double, 4> q;
            q.fill(kNegInf);
            double best = kNegInf;
            int best_a = 0;
            for (Action a : e.actions) {
                Step s;
                if (!e.step(k, m, a, s)) continue;
                int ai = static_cast<int>(a);
                q[ai] = s.reward + s.stay * prev[static_cast<std::size_t>(m + e.dm[ai])];
                if (q[ai] > best) {
                    best = q[ai];
                    best_a = ai;
                }
            }
            cur[m] = best;
            if (fill_tables) {
                double tol = 1e-12 * std::max(1.0, std::fabs(best));
                std::uint8_t code = static_cast<std::uint8_t>(best_a);
                for (int ai = 0; ai < 4; ++ai)
                    if (q[ai] >= best - tol) code |= static_cast<std::uint8_t>(1u << (2 + ai));
                std::size_t idx = sol.layout.index(k, m);
                sol.policy[idx] = code;
                if (!sol.value.empty()) sol.value[idx] = best;
            }
        }
        prev.swap(cur);
    }
    sol.root_value = prev[0];
}

DPSolution run(const Engine& e, const Grid& grid) {
    DPSolution sol;
    sol.dt = e.dt;
    sol.n_steps = e.n;
    sol.resolution = e.res;
    sol.layout = TriTable(e.n, e.res);
    sol.policy.assign(sol.layout.size(), 0);
    if (grid.keep_values && static_cast<long>(sol.layout.size()) <= grid.value_table_cap)
        sol.value.assign(sol.layout.size(), 0.0);

    backward(e, sol, true, nullptr);
    if (e.n == 0) return sol;

    // No-arrival path; ties go to the action already in use.
    long m = 0;
    int incumbent = -1;
    for (long i = 0; i < e.n; ++i) {
        long k = e.n - i;
        std::uint8_t code = sol.policy[sol.layout.index(k, m)];
        int a = code & 0x3;
        if (incumbent >= 0 && ((code >> (2 + incumbent)) & 1)) a = incumbent;
        sol.path.push_back(static_cast<Action>(a));
        sol.path_m.push_back(m);
        m += e.dm[a];
        incumbent = a;
    }

    // Think-minus-do advantage along the path, from the kept table or a second pass.
    sol.path_advantage.assign(static_cast<std::size_t>(e.n), 0.0);
    auto advantage = [&](long k, long mm, const std::function<double(long)>& prev_at) {
        Step sd, st;
        bool has_d = e.step(k, mm, Action::Do, sd);
        bool has_t = e.step(k, mm, Action::Think, st);
        if (!has_d || !has_t) return 0.0;
        double qd = sd.reward + sd.stay * prev_at(mm + e.dm[0]);
        double qt = st.reward + st.stay * prev_at(mm + e.dm[1]);
        return qt - qd;
    };
    if (!sol.value.empty()) {
        for (long i = 0; i < e.n; ++i) {
            long k = e.n - i, mm = sol.path_m[i];
            sol.path_advantage[i] =
                advantage(k, mm, [&](long j) { return sol.value[sol.layout.index(k - 1, j)]; });
        }
    } else {
        DPSolution scratch;
        backward(e, scratch, false, [&](long k, const std::vector<double>& prev) {
            long i = e.n - k;
            sol.path_advantage[i] = advantage(k, sol.path_m[i], [&](long j) { return prev[j]; });
        });
    }
    sol.intervals = extract_schedule(sol);
    return sol;
}

std::vector<Action> action_list(const Grid& g) {
    std::vector<Action> a{Action::Do, Action::Think};
    if (g.idle) a.push_back(Action::Idle);
    if (g.mix) a.push_back(Action::Mix);
    return a;
}

// Shared one-step rules for the reduced and two-stage recursions. `progress(k)`
// is the payoff of a thinking arrival during step k.
Engine belief_engine(const ModelParams& params, const Grid& grid, long n,
                     std::function<double(long)> progress) {
    Engine e;
    e.n = n;
    e.dt = grid.dt;
    e.res = grid.mix ? 2 : 1;
    e.dm = {e.res, 0, 0, e.res / 2};
    e.actions = action_list(grid);

    const double dt = grid.dt, lam = params.lambda, mu = params.mu, B = params.B;
    const double cost = params.c * dt;
    auto post = std::make_shared<std::vector<double>>(static_cast<std::size_t>(e.res * n + 1));
    for (std::size_t j = 0; j < post->size(); ++j)
        (*post)[j] = posterior(params.p_bar, lam, static_cast<double>(j) * dt / e.res);
    auto prog = std::make_shared<std::vector<double>>(static_cast<std::size_t>(n + 1), 0.0);
    for (long k = 1; k <= n; ++k) (*prog)[k] = progress(k);

    const double hit_d = -std::expm1(-lam * dt);
    const double hit_t = -std::expm1(-mu * dt);
    const double hit_mix = -std::expm1(-0.5 * (lam + mu) * dt);
    const double hit_mix_t = -std::expm1(-0.5 * mu * dt);
    e.step = [=](long k, long m, Action a, Step& s) {
        double p = (*post)[static_cast<std::size_t>(m)];
        double Vk = (*prog)[static_cast<std::size_t>(k)];
        switch (a) {
            case Action::Do: {
                double h = p * hit_d;
                s = {h * B - cost, 1.0 - h};
                return true;
            }
            case Action::Think:
                s = {hit_t * Vk - cost, 1.0 - hit_t};
                return true;
            case Action::Idle:
                s = {0.0, 1.0};
                return true;
            case Action::Mix: {
                // Half effort on each arm: competing exponential clocks.
                double good_d = p * hit_mix * lam / (lam + mu);
                double good_t = p * hit_mix * mu / (lam + mu);
                double bad_t = (1.0 - p) * hit_mix_t;
                s = {good_d * B + (good_t + bad_t) * Vk - cost, 1.0 - good_d - good_t - bad_t};
                return true;
            }
        }
        return false;
    };
    return e;
}

}  // namespace

DPSolution dp_reduced(const ModelParams& params, const ProgressModel& model, const Grid& grid) {
    params.check();
    long n = grid_steps(grid, params.T);
    const double dt = grid.dt;
    auto e = belief_engine(params, grid, n, [&](long k) {
        return model.value((static_cast<double>(k) - 0.5) * dt, 0);
    });
    return run(e, grid);
}

DPSolution dp_two_stage(const ModelParams& params, const ProgressModel& stage2,
                        const Grid& grid) {
    params.check();
    long n = grid_steps(grid, params.T);
    const double dt = grid.dt;

    // Post-progress value with k steps left, starting the second arm fresh.
    std::vector<double> P(static_cast<std::size_t>(n + 1), 0.0);
    if (auto* s = std::get_if<SafeArm>(&stage2.params())) {
        double hit = -std::expm1(-s->nu * dt);
        for (long k = 1; k <= n; ++k)
            P[k] = std::max(0.0, hit * s->B_nu - s->c_nu * dt + (1.0 - hit) * P[k - 1]);
    } else if (auto* r = std::get_if<RiskyArm>(&stage2.params())) {
        // Row k holds P(k, j) for second-arm usage j = 0..n-k.
        double hit = -std::expm1(-r->nu * dt);
        std::vector<double> prev(static_cast<std::size_t>(n + 1), 0.0), cur;
        std::vector<double> belief(static_cast<std::size_t>(n + 1));
        for (long j = 0; j <= n; ++j)
            belief[j] = posterior(r->p_bar_nu, r->nu, static_cast<double>(j) * dt);
        for (long k = 1; k <= n; ++k) {
            cur.assign(static_cast<std::size_t>(n - k + 1), 0.0);
            for (long j = 0; j <= n - k; ++j) {
                double h = belief[j] * hit;
                cur[j] = std::max(0.0, h * r->B_nu - r->c_nu * dt + (1.0 - h) * prev[j + 1]);
            }
            P[k] = cur[0];
            prev.swap(cur);
        }
    } else {
        throw std::invalid_argument("two-stage oracle needs a SafeArm or RiskyArm second stage, got " +
                                    family_name(stage2.family()));
    }

    auto e = belief_engine(params, grid, n, [&](long k) { return 0.5 * (P[k] + P[k - 1]); });
    auto sol = run(e, grid);
    sol.post_value = std::move(P);
    return sol;
}

DPSolution dp_no_feedback(const NoFeedbackModel& nf, double T, const Grid& grid) {
    nf.check();
    if (grid.idle || grid.mix)
        throw std::invalid_argument(
            "no-feedback oracle supports DO and THINK only (thinking time is t - A)");
    long n = grid_steps(grid, T);
    const double dt = grid.dt;

    Engine e;
    e.n = n;
    e.dt = dt;
    e.res = 1;
    e.dm = {1, 0, 0, 0};
    e.actions = {Action::Do, Action::Think};

    auto surv = std::make_shared<std::vector<double>>(static_cast<std::size_t>(n + 2));
    for (long j = 0; j <= n + 1; ++j)
        (*surv)[j] = no_solution_survival(nf, static_cast<double>(j) * dt);
    auto post = std::make_shared<std::vector<double>>(static_cast<std::size_t>(n + 1));
    for (long j = 0; j <= n; ++j)
        (*post)[j] = posterior(nf.p_bar, nf.lambda, static_cast<double>(j) * dt);
    const double hit_d = -std::expm1(-nf.lambda * dt), cost = nf.c * dt, B = nf.B;
    e.step = [=](long k, long m, Action a, Step& s) {
        if (a == Action::Do) {
            double h = (*post)[m] * hit_d;
            s = {h * B - cost, 1.0 - h};
            return true;
        }
        if (a == Action::Think) {
            long j = (n - k) - m;  // thinking steps so far
            double h = 1.0 - (*surv)[j + 1] / (*surv)[j];
            s = {h * B - cost, 1.0 - h};
            return true;
        }
        return false;
    };
    return run(e, grid);
}

void write_dump(const DPSolution& dp, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open dump file '" + path + "' for writing");
    os.write("DBL1", 4);
    std::int64_t n = dp.n_steps, res = dp.resolution;
    std::uint8_t has_value = dp.value.empty() ? 0 : 1;
    os.write(reinterpret_cast<const char*>(&dp.dt), sizeof(double));
    os.write(reinterpret_cast<const char*>(&n), sizeof n);
    os.write(reinterpret_cast<const char*>(&res), sizeof res);
    os.write(reinterpret_cast<const char*>(&has_value), 1);
    if (has_value)
        os.write(reinterpret_cast<const char*>(dp.value.data()),
                 static_cast<std::streamsize>(dp.value.size() * sizeof(double)));
    for (std::uint8_t code : dp.policy) {
        double v = code;
        os.write(reinterpret_cast<const char*>(&v), sizeof v);
    }
    if (!os) throw std::runtime_error("failed writing dump file '" + path + "'");
}

DPSolution read_dump(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open dump file '" + path + "'");
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "DBL1", 4) != 0)
        throw std::runtime_error("'" + path + "' is not a DBL1 dump");
    DPSolution dp;
    std::int64_t n = 0, res = 1;
    std::uint8_t has_value = 0;
    is.read(reinterpret_cast<char*>(&dp.dt), sizeof(double));
    is.read(reinterpret_cast<char*>(&n), sizeof n);
    is.read(reinterpret_cast<char*>(&res), sizeof res);
    is.read(reinterpret_cast<char*>(&has_value), 1);
    if (!is || n < 0 || res < 1 || res > 2) throw std::runtime_error("corrupt dump header");
    dp.n_steps = n;
    dp.resolution = static_cast<int>(res);
    dp.layout = TriTable(n, dp.resolution);
    if (has_value) {
        dp.value.resize(dp.layout.size());
        is.read(reinterpret_cast<char*>(dp.value.data()),
                static_cast<std::streamsize>(dp.value.size() * sizeof(double)));
    }
    dp.policy.resize(dp.layout.size());
    for (auto& code : dp.policy) {
        double v;
        is.read(reinterpret_cast<char*>(&v), sizeof v);
        code = static_cast<std::uint8_t>(v);
    }
    if (!is) throw std::runtime_error("truncated dump file '" + path + "'");
    if (has_value && n > 0) dp.root_value = dp.value[dp.layout.index(n, 0)];
    return dp;
}

}  // namespace dblab
