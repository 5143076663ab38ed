// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.
#include "dblab/dp.hpp"
#include "dblab/nofeedback.hpp"
#include "dblab/outcomes.hpp"
#include "dblab/solver.hpp"

#include <boost/math/differentiation/finite_difference.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace dblab;

namespace {

ModelParams fig1(double T) { return {0.75, 0.75, 1.0, 0.5, 5.0, T}; }
ProgressModel fig1_model() { return ProgressModel::safe_arm(1.0, 5.0, 0.5); }

Grid grid_of(double dt, bool idle = false, bool mix = false) {
    Grid g;
    g.dt = dt;
    g.idle = idle;
    g.mix = mix;
    return g;
}

struct Verdict {
    bool pass = true;
    std::ostringstream detail;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            detail << " [failed: " << what << "]";
        }
    }
};

// Think-minus-do path switch times of the oracle compared with the schedule's.
double max_switch_gap(const PolicySchedule& s, const DPSolution& dp) {
    std::vector<double> expect;
    if (s.tau1 > 0 && s.tau2 > 0) expect.push_back(s.tau1);
    if (s.tau2 > 0 && s.tau3 > 0) expect.push_back(s.tau1 + s.tau2);
    auto got = dp.refined_switch_times();
    if (got.size() != expect.size()) return INFINITY;
    double gap = 0;
    for (size_t i = 0; i < got.size(); ++i) gap = std::max(gap, std::fabs(got[i] - expect[i]));
    return gap;
}

Verdict c1() {
    Verdict v;
    auto m = fig1_model();
    struct Case {
        double T, tau2, tau3;
    };
    for (Case k : {Case{1.9, 0.7, 1.2}, Case{4.0, 2.8, 1.2}}) {
        auto s = solve(fig1(k.T), m);
        bool ok = s.tau1 == 0.0 && std::fabs(s.tau2 - k.tau2) <= 1e-3 &&
                  std::fabs(s.tau3 - k.tau3) <= 1e-3;
        auto dp = dp_reduced(fig1(k.T), m, grid_of(1e-3));
        double gap = max_switch_gap(s, dp);
        v.detail << " T=" << k.T << ": (" << s.tau1 << ", " << s.tau2 << ", " << s.tau3
                 << ") oracle gap " << gap << ";";
        v.require(ok, "schedule at T=" + std::to_string(k.T));
        v.require(gap <= 5e-3, "oracle agreement at T=" + std::to_string(k.T));
    }
    return v;
}

Verdict c2() {
    Verdict v;
    auto m = fig1_model();
    auto do_only = [&](double T) { return solve(fig1(T), m).structure == Structure::DO_ONLY; };
    double lo = 0.5, hi = 1.9;
    while (hi - lo > 1e-7) {
        double mid = 0.5 * (lo + hi);
        (do_only(mid) ? lo : hi) = mid;
    }
    v.detail << " boundary T=" << lo << ";";
    v.require(std::fabs(lo - 1.2) <= 1e-3, "boundary location");
    bool consistent = true;
    for (double T = 0.05; T <= 8.0; T += 0.05)
        consistent &= do_only(T) == (T <= lo);
    v.require(consistent, "DO_ONLY exactly below the boundary");
    auto s6 = solve(fig1(6.0), m);
    v.detail << " T=6: " << structure_name(s6.structure) << " tau1=" << s6.tau1 << ";";
    v.require(s6.structure == Structure::DO_THINK_DO && s6.tau1 > 0, "DO_THINK_DO at T=6");
    return v;
}

Verdict c3() {
    Verdict v;
    auto r = solve_infinite_horizon(fig1(1.0), fig1_model());
    double mu = 1, nu = 1, lam = 0.75;
    double example_form = mu * nu / (lam * (mu + nu));
    double sw = (4.0 / 3.0) * std::log(1.5);
    v.detail << " p_hat=" << r.p_hat << " switch=" << r.switch_time << ";";
    v.require(std::fabs(r.p_hat - 2.0 / 3.0) <= 1e-15, "p_hat general formula");
    v.require(std::fabs(example_form - 2.0 / 3.0) <= 1e-15 &&
                  std::fabs(r.p_hat - example_form) <= 1e-15,
              "p_hat example form");
    v.require(std::fabs(r.switch_time - sw) <= 1e-9, "switch time");
    return v;
}

Verdict c4() {
    Verdict v;
    ModelParams p = fig1(4.0);
    auto m = ProgressModel::payoff_stream(1.0, 5.0);
    auto r = solve_no_cost(p, m);
    v.require(!r.do_throughout, "an interior root exists");
    v.detail << " root=" << r.tau3 << ";";
    v.require(std::fabs(r.tau3 - 1.103) <= 5e-3, "root value");
    ModelParams free = p;
    free.c = 0.0;
    double dt = 1e-3;
    auto dp = dp_reduced(free, m, grid_of(dt));
    auto sw = dp.refined_switch_times();
    bool ok = !sw.empty() && dp.path.back() == Action::Do;
    double last = ok ? p.T - sw.back() : INFINITY;
    v.detail << " oracle final doing=" << last << ";";
    v.require(ok && std::fabs(last - r.tau3) <= 5 * dt, "oracle agreement");
    return v;
}

Verdict c5() {
    Verdict v;
    auto m = fig1_model();
    auto th = belief_thresholds(fig1(4.0), m);
    v.require(th.p_check.has_value() && th.p_hat.has_value(), "thresholds defined");
    if (!v.pass) return v;
    double pcheck = *th.p_check;
    v.detail << " p_check=" << pcheck << ";";
    v.require(std::fabs(pcheck - 0.5008) <= 2e-3, "p_check value");
    double prev1 = 0, prev2 = 0;
    bool mono = true, floor_ok = true, below_ok = true;
    for (int i = 0; i <= 28; ++i) {
        double T = 1.0 + 0.25 * i;
        auto s = solve(fig1(T), m);
        mono &= s.tau1 >= prev1 - 1e-6 && s.tau2 >= prev2 - 1e-6;
        prev1 = s.tau1, prev2 = s.tau2;
        floor_ok &= s.terminal_belief >= pcheck - 1e-6;
        ModelParams low = fig1(T);
        low.p_bar = 0.6;  // below p_hat: no initial doing
        below_ok &= solve(low, m).tau1 == 0.0;
    }
    v.require(mono, "tau1, tau2 nondecreasing in T");
    v.require(floor_ok, "terminal belief above p_check");
    v.require(below_ok, "no initial doing below p_hat");
    return v;
}

Verdict c6() {
    Verdict v;
    std::mt19937_64 g(2718);
    std::uniform_real_distribution<double> u(0, 1);
    int worse = 0;
    for (int i = 0; i < 100; ++i) {
        ModelParams p{0.05 + 0.9 * u(g), 0.2 + 2.8 * u(g), 0.2 + 2.8 * u(g), 0.5, 5.0,
                      0.5 + 9.5 * u(g)};
        double nu = p.p_bar * p.lambda * (1.0 + 3.0 * u(g));
        double a = u(g), b = u(g), c = u(g), sum = a + b + c;
        double t1 = p.T * a / sum, t2 = p.T * b / sum;
        auto s = make_schedule(t1, t2, p.T - t1 - t2);
        double before = route_probabilities(s, p, nu).p_total;
        double after = route_probabilities(backload(s), p, nu).p_total;
        worse += after < before - 1e-12;
    }
    v.detail << " backloading lowered p_total in " << worse << "/100;";
    v.require(worse == 0, "backloading");

    ModelParams p = fig1(1.9);
    auto s = make_schedule(0.0, 0.7, 1.2);
    double closed = route_probabilities(s, p, 1.0).p_total;
    SimConfig sc;
    sc.reps = 1000000;
    sc.seed = 20240601;
    auto r = simulate(s, p, 1.0, sc);
    v.detail << " closed=" << closed << " mc=" << r.p_total.mean << "+-" << r.p_total.std_err
             << ";";
    v.require(std::fabs(closed - 0.6197) <= 5e-4, "closed form value");
    v.require(std::fabs(r.p_total.mean - closed) <= 3 * r.p_total.std_err, "Monte Carlo within 3 sigma");
    return v;
}

Verdict c7() {
    Verdict v;
    std::vector<double> grid;
    for (int i = 1; i <= 19; ++i) grid.push_back(0.05 * i);
    int pairs = 0;
    std::ostringstream where;
    for (double T : {2.0, 4.0, 6.0, 8.0}) {
        auto rows = sweep(fig1(T), fig1_model(), SweepVariable::p_bar, grid, 1.0);
        for (size_t i = 0; i < rows.size(); ++i) {
            if (!rows[i].ok) continue;
            for (size_t j = i + 1; j < rows.size(); ++j) {
                if (!rows[j].ok) continue;
                if (rows[i].outcome.p_total > rows[j].outcome.p_total) {
                    if (pairs == 0)
                        where << " first at T=" << T << ": p_total(" << grid[i]
                              << ")=" << rows[i].outcome.p_total << " > p_total(" << grid[j]
                              << ")=" << rows[j].outcome.p_total << ";";
                    ++pairs;
                }
            }
        }
    }
    v.detail << where.str() << " pairs=" << pairs << ";";
    v.require(pairs >= 1, "non-monotone pair");
    return v;
}

Verdict c8() {
    Verdict v;
    std::mt19937_64 g(1618);
    std::uniform_real_distribution<double> u(0, 1);
    int reverted = 0;
    for (int i = 0; i < 20; ++i) {
        NoFeedbackModel nf;
        nf.p_bar = 0.05 + 0.9 * u(g), nf.lambda = 0.2 + 2.8 * u(g);
        nf.mu = 0.2 + 2.8 * u(g), nf.nu = 0.2 + 2.8 * u(g);
        nf.c = 0.5 * u(g), nf.B = 1 + 9 * u(g);
        nf.check();
        double T = 1.0 + 7.0 * u(g);
        auto dp = dp_no_feedback(nf, T, grid_of(2e-3));
        bool thought = false;
        for (Action a : dp.path) {
            if (a == Action::Think) thought = true;
            else if (thought) {
                ++reverted;
                break;
            }
        }
    }
    v.detail << " reverting paths " << reverted << "/20;";
    v.require(reverted == 0, "no THINK -> DO reversion");

    double worst_d = 0, worst_h = 0;
    std::uniform_real_distribution<double> rate(0.1, 5.0), at(0.5, 8.0);
    for (int i = 0; i < 1000; ++i) {
        NoFeedbackModel nf;
        nf.mu = rate(g), nf.nu = rate(g);
        double A = at(g);
        // Differentiate in units of the fastest rate so the stencil width tracks the curvature.
        double r = std::max(nf.mu, nf.nu);
        auto G = [&](double s) { return no_solution_prob(nf, A + s / r); };
        double dF = r * boost::math::differentiation::finite_difference_derivative<decltype(G), double, 8>(G, 0.0);
        double f = solution_density(nf, A);
        worst_d = std::max(worst_d, std::fabs(dF - f));
        double hz = nf.nu * progress_given_no_solution(nf, A) * (1.0 - no_solution_prob(nf, A));
        worst_h = std::max(worst_h, std::fabs(hz - f));
    }
    v.detail << " |dF/dA - f|=" << worst_d << " |f - nu Psi (1-F)|=" << worst_h << ";";
    v.require(worst_d <= 1e-10, "derivative identity");
    v.require(worst_h <= 1e-10, "hazard identity");
    return v;
}

Verdict c9() {
    Verdict v;
    auto stage2 = ProgressModel::safe_arm(0.5, 9.0 + 0.5 / 0.4, 0.0);
    std::vector<double> hits;
    for (double T = 1.0; T <= 12.0 + 1e-9; T += 0.5) {
        ModelParams p{0.8, 1.0, 0.4, 0.5, 9.0, T};
        auto dp = dp_two_stage(p, stage2, grid_of(1e-2));
        if (thinking_intervals(dp, 0.1).size() >= 2) hits.push_back(T);
    }
    v.detail << " T with two thinking spells:";
    for (double T : hits) v.detail << " " << T;
    v.detail << ";";
    v.require(!hits.empty(), "two disjoint thinking intervals");
    return v;
}

Verdict c10() {
    Verdict v;
    auto m = fig1_model();
    double worst_mix = 0;
    bool no_idle = true;
    for (double T : {1.0, 1.9, 4.0, 6.0, 8.0}) {
        auto bang = dp_reduced(fig1(T), m, grid_of(2e-3));
        auto mixed = dp_reduced(fig1(T), m, grid_of(2e-3, false, true));
        worst_mix = std::max(worst_mix, mixed.root_value - bang.root_value);
        auto idle = dp_reduced(fig1(T), m, grid_of(2e-3, true));
        for (Action a : idle.path) no_idle &= a != Action::Idle;
    }
    v.detail << " mix gain=" << worst_mix << ";";
    v.require(worst_mix <= 1e-6 * (5.0 + 0.5), "bang-bang sufficiency");
    v.require(no_idle, "IDLE never chosen");

    // Convergence of the root value to the continuous optimum.
    auto s = solve(fig1(1.9), m);
    auto V = [](double r) { return 4.5 * (1 - std::exp(-r)); };
    double T = 1.9, tau3 = s.tau3;
    auto arrive = [&](double x) { return std::exp(-x) * (V(T - x) - 0.5 * x); };
    double J = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(arrive, 0.0, s.tau2) +
               std::exp(-s.tau2) * (-0.5 * s.tau2 + 0.75 * (5.0 - 0.5 / 0.75) *
                                                       (1 - std::exp(-0.75 * tau3)) -
                                    0.25 * 0.5 * tau3);
    double e1 = std::fabs(dp_reduced(fig1(T), m, grid_of(2e-3)).root_value - J);
    double e2 = std::fabs(dp_reduced(fig1(T), m, grid_of(1e-3)).root_value - J);
    v.detail << " convergence factor=" << e1 / e2 << ";";
    v.require(e1 / e2 >= 1.8, "convergence factor");

    double floor = 0.5 / (0.75 * 5.0);
    auto th = belief_thresholds(fig1(4.0), m);
    v.detail << " shirk floor=" << floor << ";";
    v.require(th.p_check && floor < *th.p_check, "no-shirk floor below p_check");
    return v;
}

}  // namespace

int main() {
    std::vector<std::pair<const char*, std::function<Verdict()>>> criteria{
        {"reference schedules and oracle agreement", c1},
        {"hail-mary-only boundary", c2},
        {"infinite-horizon closed forms", c3},
        {"cost-free benchmark", c4},
        {"monotone periods and belief bounds", c5},
        {"backloading and Monte Carlo", c6},
        {"success not monotone in the prior", c7},
        {"no-feedback structure and identities", c8},
        {"two thinking spells under slow conversion", c9},
        {"oracle hygiene", c10},
    };
    const double limits[] = {30, 0, 0, 0, 0, 60, 0, 0, 0, 0};
    int failed = 0;
    for (size_t i = 0; i < criteria.size(); ++i) {
        auto t0 = std::chrono::steady_clock::now();
        Verdict v;
        try {
            v = criteria[i].second();
        } catch (const std::exception& e) {
            v.pass = false;
            v.detail << " [exception: " << e.what() << "]";
        }
        double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (limits[i] > 0 && secs >= limits[i]) v.require(false, "runtime limit");
        failed += !v.pass;
        std::printf("%s %2zu %s (%.2fs)%s\n", v.pass ? "PASS" : "FAIL", i + 1, criteria[i].first,
                    secs, v.detail.str().c_str());
        std::fflush(stdout);
    }
    std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed,
                criteria.size());
    return failed == 0 ? 0 : 1;
}
