#include "dblab/solver.hpp"

#include "dblab/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace dblab {

using num::fmt;

std::string ValidationError::first_failure(const ValidationReport& r) {
    for (const auto& c : r.checks)
        if (!c.pass) {
            std::string msg = "model validation failed: " + c.name + " at tau=" +
                              fmt(c.witness.tau) + " (value " + fmt(c.witness.value) + ")";
            if (!c.detail.empty()) msg += ": " + c.detail;
            return msg;
        }
    return "model validation failed";
}

std::string infinite_structure_name(InfiniteStructure s) {
    switch (s) {
        case InfiniteStructure::DO_THEN_THINK: return "DO_THEN_THINK";
        case InfiniteStructure::THINK_THROUGHOUT: return "THINK_THROUGHOUT";
        case InfiniteStructure::DO_THROUGHOUT: return "DO_THROUGHOUT";
    }
    return "?";
}

double hail_mary_slack(const ModelParams& params, const ProgressModel& model, double p0,
                       double tau, int grid) {
    if (tau <= 0.0) return p0 - hail_mary_belief(params, model, 0.0);
    auto slack = [&](double t) {
        return posterior(p0, params.lambda, t) -
               hail_mary_belief(params, model, std::max(0.0, tau - t));
    };
    auto m = num::minimize_scan(slack, 0.0, tau, grid);
    return std::min(m.f, std::min(slack(0.0), slack(tau)));
}

namespace {

constexpr double kSlackTol = 1e-12;

void finalize(const ModelParams& params, const ProgressModel& model, PolicySchedule& s) {
    s.q_at_switch = hail_mary_belief(params, model, s.tau3);
    s.terminal_belief = posterior(params.p_bar, params.lambda, s.tau1 + s.tau3);
}

}  // namespace

PolicySchedule solve(const ModelParams& params, const ProgressModel& model,
                     const SolverOptions& opt) {
    params.check();
    if (opt.validate) {
        auto rep = validate_model(params, model, opt.validation);
        if (!rep.overall) throw ValidationError(std::move(rep));
    }
    const double T = params.T, pb = params.p_bar;
    const double tol = opt.policy.tau_tol;
    auto q = [&](double t) { return hail_mary_belief(params, model, t); };

    if (T == 0.0) {
        auto s = make_schedule(0, 0, 0);
        finalize(params, model, s);
        return s;
    }

    // Step 2: longest doing-only stretch; the feasible set is an interval [0, tau-bar].
    auto feasible = [&](double p0, double tau) {
        return hail_mary_slack(params, model, p0, tau, opt.constraint_grid) >= -kSlackTol;
    };
    if (feasible(pb, T)) {
        auto s = make_schedule(0, 0, T);
        finalize(params, model, s);
        return s;
    }
    double lo = 0.0, hi = T;
    while (hi - lo > tol) {
        double mid = 0.5 * (lo + hi);
        (feasible(pb, mid) ? lo : hi) = mid;
    }
    const double bar2 = lo;

    // Steps 3-4: entering the hail mary period with the prior belief.
    if (std::fabs(q(bar2) - pb) <= opt.belief_tol) {
        Span t2 = thinking_span(params, model, bar2, opt.policy);
        if (t2.is_infinite() || t2.value() >= T - bar2) {
            auto s = make_schedule(0, T - bar2, bar2);
            finalize(params, model, s);
            return s;
        }
    }

    // Step 5: largest tau-bar consistent with a posterior path started at q(tau-bar),
    // searched below the step-2 value.
    auto self_feasible = [&](double tau) { return feasible(q(tau), tau); };
    double bar5 = bar2;
    if (!self_feasible(bar2)) {
        const int n = 256;
        double upper = bar2;
        bool found = false;
        for (int i = n - 1; i >= 0; --i) {
            double t = bar2 * i / n;
            if (self_feasible(t)) {
                lo = t;
                hi = upper;
                found = true;
                break;
            }
            upper = t;
        }
        if (!found || lo <= 0.0)
            throw SolverError("step-5 search degenerated: no positive hail-mary length is "
                              "self-consistent below " + fmt(bar2));
        while (hi - lo > tol) {
            double mid = 0.5 * (lo + hi);
            (self_feasible(mid) ? lo : hi) = mid;
        }
        bar5 = lo;
    }

    // Step 6: fixed point of tau1(tau3) + tau2(tau3) + tau3 = T.
    const double inf = std::numeric_limits<double>::infinity();
    auto g = [&](double t3) {
        Span t2 = thinking_span(params, model, t3, opt.policy);
        if (t2.is_infinite()) return inf;
        return initial_doing_span(params, model, t3) + t2.value() + t3 - T;
    };
    double t3_hi = bar5;
    double g_hi = g(t3_hi);
    double floor_belief = posterior(pb, params.lambda, T);
    double t3_lo = hail_mary_time(params, model, floor_belief, opt.policy);
    double g_lo = g(t3_lo);
    if (!(g_hi <= 0.0) || !(g_lo > 0.0))
        throw SolverError("fixed-point bracket not found: g(" + fmt(t3_lo) + ") = " + fmt(g_lo) +
                          ", g(" + fmt(t3_hi) + ") = " + fmt(g_hi));
    while (t3_hi - t3_lo > tol) {
        double mid = 0.5 * (t3_lo + t3_hi);
        double gm = g(mid);
        if (gm > 0.0) t3_lo = mid;
        else {
            t3_hi = mid;
            g_hi = gm;
        }
        if (std::fabs(g_hi) <= tol) break;
    }
    // Only tau2 can diverge (logarithmically, as q(tau3) approaches the stationary
    // belief); tau1 and tau3 are Lipschitz in tau3. Once the bracket has collapsed
    // the fixed point is pinned, and completing tau2 = T - tau1 - tau3 is exact to
    // the bracket width even when g itself jumps too steeply to resolve.
    if (t3_hi - t3_lo > tol && std::fabs(g_hi) > 1e-6)
        throw SolverError("fixed point not reached: residual " + fmt(g_hi) + " at tau3 = " +
                          fmt(t3_hi));
    double tau3 = t3_hi;
    double tau1 = initial_doing_span(params, model, tau3);
    tau1 = std::max(tau1, 0.0);
    auto s = make_schedule(tau1, T - tau1 - tau3, tau3);
    finalize(params, model, s);
    return s;
}

InfiniteHorizonResult solve_infinite_horizon(const ModelParams& params,
                                             const ProgressModel& model) {
    params.check();
    const double inf = std::numeric_limits<double>::infinity();
    double v_inf = model.limit();
    double den = params.B - v_inf + params.c / params.mu;
    double num = params.c / params.lambda;
    InfiniteHorizonResult r{0.0, 0.0, InfiniteStructure::THINK_THROUGHOUT, {}};
    if (den <= 0.0) {
        r.p_hat = inf;
        r.note = "doing never preferred: V(inf) >= B + c/mu";
        return r;
    }
    r.p_hat = num / den;
    if (r.p_hat >= 1.0) {
        r.note = "doing never preferred: p_hat >= 1";
        return r;
    }
    if (r.p_hat <= 0.0) {
        r.structure = InfiniteStructure::DO_THROUGHOUT;
        r.switch_time = inf;
        r.note = "doing always preferred: p_hat = 0";
        return r;
    }
    double pb = params.p_bar;
    if (pb >= r.p_hat) {
        r.structure = InfiniteStructure::DO_THEN_THINK;
        r.switch_time = std::max(
            std::log(pb * (1.0 - r.p_hat) / (r.p_hat * (1.0 - pb))) / params.lambda, 0.0);
    }
    return r;
}

NoCostResult solve_no_cost(const ModelParams& params, const ProgressModel& model,
                           const PolicyOptions& opt) {
    ModelParams p0 = params;
    p0.c = 0.0;
    p0.check();
    const double T = p0.T;
    if (T <= 0.0) return {true, 0.0};
    auto g = [&](double t) { return hail_mary_belief(p0, model, t) - p0.p_bar; };
    const int n = 2048;
    double prev = 0.0, gp = g(0.0);
    for (int i = 1; i <= n; ++i) {
        double t = T * i / n;
        double gt = g(t);
        if (gt >= 0.0) {
            num::RootOptions ro{opt.tau_tol * 1e-3, opt.root_tol, 300};
            return {false, num::find_root(g, prev, t, gp, gt, ro)};
        }
        prev = t;
        gp = gt;
    }
    return {true, 0.0};
}

Thresholds belief_thresholds(const ModelParams& params, const ProgressModel& model,
                             const PolicyOptions& opt) {
    params.check();
    Thresholds th;
    auto ih = solve_infinite_horizon(params, model);
    if (ih.p_hat > 0.0 && ih.p_hat < 1.0) th.p_hat = ih.p_hat;
    else th.notes += "p_hat undefined (" + ih.note + "); ";

    try {
        th.T1 = hail_mary_time(params, model, params.p_bar, opt);
    } catch (const std::exception& e) {
        th.notes += std::string("T1 undefined: ") + e.what() + "; ";
    }
    if (th.p_hat) {
        try {
            double t = hail_mary_time(params, model, *th.p_hat, opt);
            th.p_check = posterior(*th.p_hat, params.lambda, t);
        } catch (const std::exception& e) {
            th.notes += std::string("p_check undefined: ") + e.what() + "; ";
        }
    }

    // Fixed point of p -> (V'(q^-1(p)) + c) / (lambda (B + c/mu - V(q^-1(p)))),
    // parametrized by tau = q^-1(p).
    const double lam = params.lambda, mu = params.mu, B = params.B, c = params.c;
    auto h = [&](double tau) {
        double V = model.value(tau, 0);
        double phi = (model.value(tau, 1) + c) / (lam * (B + c / mu - V));
        return phi - hail_mary_belief_raw(params, model, tau);
    };
    double ceiling = search_ceiling(params, opt);
    if (model.family() == Family::Tabulated)
        ceiling = std::min(ceiling, std::get<Tabulated>(model.params()).tau.back());
    const int n = 2048;
    double prev = 0.0, hp = h(0.0);
    bool found = false;
    for (int i = 1; i <= n && !found; ++i) {
        double t = ceiling * i / n;
        if (hail_mary_belief_raw(params, model, t) >= 1.0) break;
        double ht = h(t);
        if ((hp > 0.0) != (ht > 0.0)) {
            num::RootOptions ro{opt.tau_tol * 1e-3, opt.root_tol, 300};
            double tau = num::find_root(h, prev, t, hp, ht, ro);
            th.p_tilde = hail_mary_belief(params, model, tau);
            found = true;
        }
        prev = t;
        hp = ht;
    }
    if (!found) th.notes += "p_tilde undefined: fixed-point bracket absent below the ceiling; ";
    return th;
}

}  // namespace dblab
