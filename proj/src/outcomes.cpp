#include "dblab/outcomes.hpp"

#include "dblab/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <thread>

namespace dblab {

using num::fmt;

namespace {

void check_schedule(const PolicySchedule& s, const ModelParams& params) {
    params.check();
    if (s.tau1 < 0 || s.tau2 < 0 || s.tau3 < 0)
        throw std::invalid_argument("schedule has a negative period length");
    if (std::fabs(s.horizon() - params.T) > 1e-8)
        throw std::invalid_argument("schedule spans " + fmt(s.horizon()) + " but T = " +
                                    fmt(params.T));
}

// (1 - e^{-x w}) / x, with the x -> 0 limit.
double decay_int(double x, double w) {
    if (x == 0.0) return w;
    return -std::expm1(-x * w) / x;
}

// P(progress within w of thinking and converted within u >= w of the start of
// thinking) for a unit-mass thinking phase.
double converted(double mu, double nu, double u, double w) {
    if (w <= 0.0) return 0.0;
    return -std::expm1(-mu * w) - mu * std::exp(-nu * (u - w) - mu * w) * decay_int(nu - mu, w);
}

struct Curves {
    const PolicySchedule& s;
    const ModelParams& p;
    double nu;

    double survive_first() const {  // no doing success in the first period
        return p.p_bar * std::exp(-p.lambda * s.tau1) + 1.0 - p.p_bar;
    }
    double think_time(double t) const { return std::clamp(t - s.tau1, 0.0, s.tau2); }
    double doing_solution(double t) const {
        double first = -p.p_bar * std::expm1(-p.lambda * std::min(t, s.tau1));
        double start3 = s.tau1 + s.tau2;
        if (t <= start3) return first;
        return first - p.p_bar * std::exp(-p.lambda * s.tau1 - p.mu * s.tau2) *
                           std::expm1(-p.lambda * (t - start3));
    }
    double progress(double t) const {
        return survive_first() * -std::expm1(-p.mu * think_time(t));
    }
    double conversion(double t) const {
        if (t <= s.tau1) return 0.0;
        return survive_first() * converted(p.mu, nu, t - s.tau1, think_time(t));
    }
};

}  // namespace

double conversion_rate(const ProgressModel& model) {
    if (auto* s = std::get_if<SafeArm>(&model.params())) return s->nu;
    throw std::invalid_argument("conversion rate is implied only by SafeArm models; supply it "
                                "explicitly for family " + family_name(model.family()));
}

OutcomeSummary route_probabilities(const PolicySchedule& s, const ModelParams& params,
                                   double nu) {
    check_schedule(s, params);
    if (!(nu > 0.0)) throw std::invalid_argument("conversion rate must be > 0");
    Curves c{s, params, nu};
    OutcomeSummary o;
    o.p_initial_doing = -params.p_bar * std::expm1(-params.lambda * s.tau1);
    o.p_think_route = c.conversion(params.T);
    o.p_hail_mary = -params.p_bar * std::exp(-params.lambda * s.tau1 - params.mu * s.tau2) *
                    std::expm1(-params.lambda * s.tau3);
    o.p_total = o.p_initial_doing + o.p_think_route + o.p_hail_mary;
    o.expected_work = expected_work_time(s, params, nu);
    return o;
}

double expected_work_time(const PolicySchedule& s, const ModelParams& params, double nu) {
    check_schedule(s, params);
    if (!(nu > 0.0)) throw std::invalid_argument("conversion rate must be > 0");
    Curves c{s, params, nu};
    auto alive = [&](double t) { return 1.0 - c.doing_solution(t) - c.conversion(t); };
    double b1 = s.tau1, b2 = s.tau1 + s.tau2, T = params.T;
    return num::integrate(alive, 0.0, b1, 1e-10) + num::integrate(alive, b1, b2, 1e-10) +
           num::integrate(alive, b2, T, 1e-10);
}

PolicySchedule backload(const PolicySchedule& s) {
    PolicySchedule b = make_schedule(0.0, s.tau2, s.tau1 + s.tau3);
    b.terminal_belief = s.terminal_belief;  // same total doing
    return b;
}

namespace {

// SplitMix64 output function.
std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

}  // namespace

// The replication index is hashed before it meets the seed so that nearby
// (seed, rep) pairs start far apart on the Weyl sequence.
Stream::Stream(std::uint64_t seed, std::uint64_t rep)
    : state_(mix64(seed + kGolden) ^ mix64(rep * kGolden + 1)) {}

std::uint64_t Stream::next() { return mix64(state_ += kGolden); }

double Stream::uniform() { return (static_cast<double>(next() >> 11) + 1.0) * 0x1.0p-53; }

double Stream::exponential(double rate) { return -std::log(uniform()) / rate; }

int worker_count(int requested) {
    int hw = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    int n = requested > 0 ? requested : hw;
    if (const char* env = std::getenv("DBLAB_THREADS")) {
        int cap = std::atoi(env);
        if (cap > 0) n = std::min(n, cap);
    }
    return std::max(1, n);
}

namespace {

// Runs body(i) for i in [0, n) on up to `threads` workers.
template <class Body>
void parallel_for(long n, int threads, Body body) {
    threads = static_cast<int>(std::min<long>(threads, std::max<long>(n, 1)));
    if (threads <= 1) {
        for (long i = 0; i < n; ++i) body(i);
        return;
    }
    std::vector<std::thread> pool;
    for (int w = 0; w < threads; ++w)
        pool.emplace_back([&, w] {
            for (long i = w; i < n; i += threads) body(i);
        });
    for (auto& t : pool) t.join();
}

struct Tally {
    long n_init = 0, n_think = 0, n_hm = 0;
    double work = 0.0, work_sq = 0.0;
};

}  // namespace

SimResult simulate(const PolicySchedule& s, const ModelParams& params, double nu,
                   const SimConfig& sim) {
    if (sim.reps < 1) throw std::invalid_argument("simulate: reps must be >= 1");
    if (!(nu > 0.0)) throw std::invalid_argument("conversion rate must be > 0");
    if (!(params.p_bar >= 0.0 && params.p_bar <= 1.0))
        throw std::invalid_argument("simulate: p_bar outside [0,1]");
    if (std::fabs(s.horizon() - params.T) > 1e-8)
        throw std::invalid_argument("schedule spans " + fmt(s.horizon()) + " but T = " +
                                    fmt(params.T));

    constexpr long kChunk = 8192;
    long n_chunks = (sim.reps + kChunk - 1) / kChunk;
    std::vector<Tally> tallies(static_cast<std::size_t>(n_chunks));
    const double T = params.T, b2 = s.tau1 + s.tau2;

    parallel_for(n_chunks, worker_count(sim.threads), [&](long ci) {
        Tally t;
        long end = std::min(sim.reps, (ci + 1) * kChunk);
        for (long r = ci * kChunk; r < end; ++r) {
            Stream rng(sim.seed, static_cast<std::uint64_t>(r));
            bool good = rng.uniform() <= params.p_bar;
            double done = T;
            int route = 0;
            if (good && s.tau1 > 0.0) {
                double x = rng.exponential(params.lambda);
                if (x < s.tau1) {
                    done = x;
                    route = 1;
                }
            }
            if (route == 0) {
                double y = s.tau2 > 0.0 ? rng.exponential(params.mu) : s.tau2 + 1.0;
                if (y < s.tau2) {
                    double z = rng.exponential(nu);
                    if (s.tau1 + y + z < T) {
                        done = s.tau1 + y + z;
                        route = 2;
                    }
                } else if (good && s.tau3 > 0.0) {
                    double x = rng.exponential(params.lambda);
                    if (x < s.tau3) {
                        done = b2 + x;
                        route = 3;
                    }
                }
            }
            t.n_init += route == 1;
            t.n_think += route == 2;
            t.n_hm += route == 3;
            t.work += done;
            t.work_sq += done * done;
        }
        tallies[static_cast<std::size_t>(ci)] = t;
    });

    Tally all;
    for (const auto& t : tallies) {
        all.n_init += t.n_init;
        all.n_think += t.n_think;
        all.n_hm += t.n_hm;
        all.work += t.work;
        all.work_sq += t.work_sq;
    }
    double n = static_cast<double>(sim.reps);
    auto prop = [&](long k) {
        double p = k / n;
        return Estimate{p, std::sqrt(p * (1.0 - p) / n)};
    };
    SimResult res;
    res.reps = sim.reps;
    res.seed = sim.seed;
    res.p_initial_doing = prop(all.n_init);
    res.p_think_route = prop(all.n_think);
    res.p_hail_mary = prop(all.n_hm);
    res.p_total = prop(all.n_init + all.n_think + all.n_hm);
    double mean = all.work / n;
    double var = sim.reps > 1 ? std::max(0.0, (all.work_sq - n * mean * mean) / (n - 1.0)) : 0.0;
    res.expected_work = {mean, std::sqrt(var / n)};
    return res;
}

std::string sweep_variable_name(SweepVariable v) { return v == SweepVariable::T ? "T" : "p_bar"; }

SweepVariable sweep_variable_from_name(const std::string& s) {
    if (s == "T") return SweepVariable::T;
    if (s == "p_bar") return SweepVariable::p_bar;
    throw std::invalid_argument("sweep variable must be T or p_bar, got '" + s + "'");
}

std::vector<SweepRow> sweep(const ModelParams& params, const ProgressModel& model,
                            SweepVariable variable, const std::vector<double>& grid, double nu,
                            const SolverOptions& opt, int threads) {
    if (grid.empty()) throw std::invalid_argument("sweep grid is empty");
    std::vector<SweepRow> rows(grid.size());
    parallel_for(static_cast<long>(grid.size()), worker_count(threads), [&](long i) {
        SweepRow& row = rows[static_cast<std::size_t>(i)];
        row.grid_value = grid[static_cast<std::size_t>(i)];
        ModelParams p = params;
        (variable == SweepVariable::T ? p.T : p.p_bar) = row.grid_value;
        try {
            row.schedule = solve(p, model, opt);
            row.outcome = route_probabilities(row.schedule, p, nu);
            row.p_total_backloaded = route_probabilities(backload(row.schedule), p, nu).p_total;
            row.ok = true;
        } catch (const std::exception& e) {
            row.ok = false;
            row.error = e.what();
        }
    });
    return rows;
}

std::vector<TrajectoryPoint> trajectory_probabilities(const PolicySchedule& s,
                                                      const ModelParams& params, double nu,
                                                      const std::vector<double>& t_grid) {
    check_schedule(s, params);
    Curves c{s, params, nu};
    std::vector<TrajectoryPoint> out;
    out.reserve(t_grid.size());
    for (double t : t_grid) {
        if (!(t >= 0.0 && t <= params.T + 1e-12))
            throw std::invalid_argument("trajectory time " + fmt(t) + " outside [0, T]");
        double pr = c.progress(t), so = c.doing_solution(t);
        out.push_back({t, pr, so, 1.0 - pr - so});
    }
    return out;
}

}  // namespace dblab
