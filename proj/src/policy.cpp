#include "dblab/policy.hpp"

#include "dblab/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dblab {

using num::fmt;

double Span::value() const {
    if (inf_) throw std::logic_error("span is infinite");
    return v_;
}

std::string structure_name(Structure s) {
    switch (s) {
        case Structure::DO_ONLY: return "DO_ONLY";
        case Structure::THINK_DO: return "THINK_DO";
        case Structure::DO_THINK_DO: return "DO_THINK_DO";
    }
    return "?";
}

Structure structure_from_name(const std::string& s) {
    for (Structure v : {Structure::DO_ONLY, Structure::THINK_DO, Structure::DO_THINK_DO})
        if (structure_name(v) == s) return v;
    throw std::invalid_argument("unknown structure '" + s + "'");
}

PolicySchedule make_schedule(double tau1, double tau2, double tau3) {
    PolicySchedule s;
    s.tau1 = tau1;
    s.tau2 = tau2;
    s.tau3 = tau3;
    if (tau2 <= 0.0) s.structure = Structure::DO_ONLY;
    else if (tau1 <= 0.0) s.structure = Structure::THINK_DO;
    else s.structure = Structure::DO_THINK_DO;
    return s;
}

double search_ceiling(const ModelParams& params, const PolicyOptions& opt) {
    if (opt.search_ceiling) return *opt.search_ceiling;
    return std::max({20.0 / params.mu, 20.0 / params.lambda, 4.0 * params.T});
}

double known_arm_value(const ModelParams& params, double tau) {
    return -(params.B - params.c / params.lambda) * std::expm1(-params.lambda * tau);
}

double do_throughout_value(const ModelParams& params, double p, double tau) {
    return p * known_arm_value(params, tau) - (1.0 - p) * params.c * tau;
}

double hail_mary_belief_raw(const ModelParams& params, const ProgressModel& model, double tau) {
    const double mu = params.mu, lam = params.lambda, B = params.B, c = params.c;
    double V = model.value(tau, 0);
    double num = mu * (V + c * tau);
    double den = mu * (B + c * tau) + (lam - mu) * (B - known_arm_value(params, tau));
    return num / den;
}

double hail_mary_belief(const ModelParams& params, const ProgressModel& model, double tau) {
    return std::min(1.0, hail_mary_belief_raw(params, model, tau));
}

double hail_mary_time(const ModelParams& params, const ProgressModel& model, double p,
                      const PolicyOptions& opt) {
    if (!(p > 0.0 && p <= 1.0))
        throw std::invalid_argument("hail_mary_time: belief must lie in (0,1], got " + fmt(p));
    double ceiling = search_ceiling(params, opt);
    if (model.family() == Family::Tabulated)
        ceiling = std::min(ceiling, std::get<Tabulated>(model.params()).tau.back());
    auto g = [&](double t) { return hail_mary_belief(params, model, t) - p; };
    const int n = 1024;
    double prev_t = 0.0, prev_g = g(0.0);
    for (int i = 1; i <= n; ++i) {
        double t = ceiling * i / n;
        double gt = g(t);
        if (gt >= 0.0) {
            num::RootOptions ro{opt.tau_tol * 1e-3, opt.root_tol, 300};
            return num::find_root(g, prev_t, t, prev_g, gt, ro);
        }
        prev_t = t;
        prev_g = gt;
    }
    throw std::runtime_error("hail-mary belief never reaches " + fmt(p) +
                             " below the search ceiling " + fmt(ceiling) + " (q there is " +
                             fmt(prev_g + p) + ")");
}

double preference_slope(const ModelParams& params, const ProgressModel& model, double s,
                        double p, double xi) {
    const double mu = params.mu, lam = params.lambda;
    double t = xi + s;
    return mu * model.value(t, 1) + p * mu * lam * (model.value(t, 0) - params.B) +
           (mu - lam * p) * params.c;
}

namespace {

// (e^{x tau} - 1)/x with the x -> 0 limit.
double growth(double x, double tau) {
    if (x == 0.0) return tau;
    return std::expm1(x * tau) / x;
}

// Coefficients of y-dot(s) = a e^{-nu s} + b for exponential-form models.
struct ExpCoeffs {
    double a, b, nu;
};

ExpCoeffs exp_coeffs(const ModelParams& params, double K, double nu, double p, double xi) {
    const double mu = params.mu, lam = params.lambda;
    double a = mu * K * std::exp(-nu * xi) * (nu - p * lam);
    double b = p * mu * lam * (K - params.B) + (mu - lam * p) * params.c;
    return {a, b, nu};
}

// e^{-mu tau} y-hat(tau): same zeros for tau > 0, no overflow.
double scaled_integral_exp(const ModelParams& params, const ExpCoeffs& k, double tau) {
    const double mu = params.mu;
    double first;
    if (mu == k.nu) first = tau * std::exp(-mu * tau);
    else first = (std::exp(-k.nu * tau) - std::exp(-mu * tau)) / (mu - k.nu);
    return k.a * first - k.b * std::expm1(-mu * tau) / mu;
}

}  // namespace

double preference_integral(const ModelParams& params, const ProgressModel& model, double tau,
                           double p, double xi) {
    if (!(tau >= 0.0)) throw std::invalid_argument("preference_integral: tau must be >= 0");
    double K = 0, nu = 0;
    if (model.exponential_form(&K, &nu)) {
        auto k = exp_coeffs(params, K, nu, p, xi);
        return k.a * growth(params.mu - nu, tau) + k.b * growth(params.mu, tau);
    }
    return preference_integral_quadrature(params, model, tau, p, xi);
}

double preference_integral_quadrature(const ModelParams& params, const ProgressModel& model,
                                      double tau, double p, double xi) {
    if (!(tau >= 0.0)) throw std::invalid_argument("preference_integral: tau must be >= 0");
    auto f = [&](double s) {
        return std::exp(params.mu * s) * preference_slope(params, model, s, p, xi);
    };
    return num::integrate(f, 0.0, tau, 1e-10);
}

Span thinking_span(const ModelParams& params, const ProgressModel& model, double tau3,
                   const PolicyOptions& opt) {
    if (!(tau3 >= 0.0)) throw std::invalid_argument("thinking_span: tau3 must be >= 0");
    double p = hail_mary_belief(params, model, tau3);
    if (p >= 1.0)
        throw std::invalid_argument("thinking_span: q(tau3) = 1, no thinking period is defined");
    double ceiling = search_ceiling(params, opt);
    if (model.family() == Family::Tabulated)
        ceiling = std::min(ceiling, std::get<Tabulated>(model.params()).tau.back() - tau3);
    if (ceiling <= 0.0) return Span::infinite();

    auto slope = [&](double s) { return preference_slope(params, model, s, p, tau3); };
    num::RootOptions ro{opt.tau_tol * 1e-3, opt.root_tol, 300};

    // y-dot changes sign at most once (from + to -); locate that point first.
    if (slope(0.0) <= 0.0) return Span::finite(0.0);
    const int n = 1024;
    double s_star = -1.0;
    {
        double prev = 0.0, fprev = slope(0.0);
        for (int i = 1; i <= n; ++i) {
            double s = ceiling * i / n;
            double fs = slope(s);
            if (fs <= 0.0) {
                s_star = num::find_root(slope, prev, s, fprev, fs, ro);
                break;
            }
            prev = s;
            fprev = fs;
        }
    }
    if (s_star < 0.0) return Span::infinite();

    // y-hat rises on [0, s*] and falls afterwards.
    double K = 0, nu = 0;
    if (model.exponential_form(&K, &nu)) {
        auto k = exp_coeffs(params, K, nu, p, tau3);
        auto g = [&](double t) { return scaled_integral_exp(params, k, t); };
        double g_hi = g(ceiling);
        if (g_hi > 0.0) return Span::infinite();
        return Span::finite(num::find_root(g, s_star, ceiling, g(s_star), g_hi, ro));
    }

    auto f = [&](double s) { return std::exp(params.mu * s) * slope(s); };
    double acc = num::integrate(f, 0.0, s_star, 1e-10);
    double prev = s_star;
    const int m = 256;
    for (int i = 1; i <= m; ++i) {
        double s = s_star + (ceiling - s_star) * i / m;
        double piece = num::integrate(f, prev, s, 1e-10);
        if (acc + piece <= 0.0) {
            double base = acc, lo = prev;
            auto g = [&](double t) { return base + num::integrate(f, lo, t, 1e-10); };
            return Span::finite(num::find_root(g, lo, s, base, acc + piece, ro));
        }
        acc += piece;
        prev = s;
    }
    return Span::infinite();
}

double initial_doing_span(const ModelParams& params, const ProgressModel& model, double tau3) {
    double q = hail_mary_belief(params, model, tau3);
    if (q > params.p_bar) {
        if (q - params.p_bar <= 1e-12) return 0.0;
        throw std::invalid_argument("initial_doing_span: q(tau3) = " + fmt(q) +
                                    " exceeds p_bar = " + fmt(params.p_bar));
    }
    if (q <= 0.0) throw std::invalid_argument("initial_doing_span: q(tau3) must be > 0");
    return doing_time_to_reach(params.p_bar, params.lambda, q);
}

SwitchingDiagnostics switching_profile(const ModelParams& params, const ProgressModel& model,
                                       const PolicySchedule& sch, int steps) {
    const double T = params.T;
    if (std::fabs(sch.horizon() - T) > 1e-8)
        throw std::invalid_argument("switching_profile: schedule spans " + fmt(sch.horizon()) +
                                    " but T = " + fmt(T));
    if (sch.tau1 < 0 || sch.tau2 < 0 || sch.tau3 < 0)
        throw std::invalid_argument("switching_profile: negative period length");
    SwitchingDiagnostics d;
    if (T <= 0.0) return d;

    const double pb = params.p_bar, lam = params.lambda, mu = params.mu, B = params.B,
                 c = params.c;
    // Segments in remaining time: [0, tau3] do, [tau3, tau3+tau2] think, rest do.
    struct Seg {
        double lo, hi;
        int a;
    };
    std::vector<Seg> segs;
    double b1 = sch.tau3, b2 = sch.tau3 + sch.tau2;
    if (b1 > 0) segs.push_back({0.0, b1, 1});
    if (b2 > b1) segs.push_back({b1, b2, 0});
    if (T > b2) segs.push_back({b2, T, 1});

    auto doing_so_far = [&](double tau) {
        if (tau >= b2) return T - tau;
        if (tau >= b1) return sch.tau1;
        return sch.tau1 + (b1 - tau);
    };
    auto survival = [&](double tau, double A) {
        return std::exp(-mu * (T - tau - A)) * (1.0 - pb + pb * std::exp(-lam * A));
    };
    auto deta = [&](double tau, double A, int a) {
        double X = (1 - a) * mu * model.value(tau, 0);
        return std::exp(-mu * (T - tau - A)) *
               (mu * (1.0 - pb) * (X - c) +
                (mu - lam) * pb * std::exp(-lam * A) * (X + a * lam * B - c));
    };

    double eta = 0.0;
    std::vector<int> action;
    auto record = [&](double tau, int a) {
        double A = doing_so_far(tau);
        double f = survival(tau, A);
        double p = posterior(pb, lam, A);
        double gamma = f * (mu * model.value(tau, 0) - p * lam * B) - eta;
        d.grid.push_back(tau);
        d.eta_values.push_back(eta);
        d.gamma_values.push_back(gamma);
        d.y_values.push_back(gamma / f);
        action.push_back(a);
    };

    for (size_t si = 0; si < segs.size(); ++si) {
        const auto& sg = segs[si];
        int n = std::max(1, static_cast<int>(std::lround(steps * (sg.hi - sg.lo) / T)));
        double h = (sg.hi - sg.lo) / n;
        if (si == 0) record(sg.lo, sg.a);
        for (int i = 0; i < n; ++i) {
            double t0 = sg.lo + i * h;
            // A(tau) is piecewise linear inside the segment, so evaluate it directly.
            auto rhs = [&](double t) { return deta(t, doing_so_far(std::min(t, sg.hi)), sg.a); };
            double k1 = rhs(t0);
            double k2 = rhs(t0 + 0.5 * h);
            double k3 = k2;
            double k4 = rhs(t0 + h);
            eta += h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
            record(i + 1 == n ? sg.hi : t0 + h, sg.a);
        }
    }

    // Sign pattern and interpolated zeros.
    double scale = 0.0;
    for (double y : d.y_values) scale = std::max(scale, std::fabs(y));
    double tol = 1e-9 * std::max(scale, 1e-300);
    auto sgn = [&](double y) { return y > tol ? 1 : (y < -tol ? -1 : 0); };
    int cur = 0;
    size_t last = 0;
    double start = 0.0;
    for (size_t i = 0; i < d.y_values.size(); ++i) {
        int s = sgn(d.y_values[i]);
        if (s == 0) continue;
        if (cur == 0) {
            cur = s;
            last = i;
            continue;
        }
        if (s != cur) {
            double z;
            if (i == last + 1) {
                double y0 = d.y_values[last], y1 = d.y_values[i];
                z = d.grid[last] + (d.grid[i] - d.grid[last]) * y0 / (y0 - y1);
            } else {
                z = 0.5 * (d.grid[last + 1] + d.grid[i - 1]);
            }
            d.zeros.push_back(z);
            d.sign_pattern.push_back({start, z, cur > 0 ? Favored::Think : Favored::Do});
            start = z;
            cur = s;
        }
        last = i;
    }
    d.sign_pattern.push_back({start, T, cur > 0 ? Favored::Think : Favored::Do});

    d.concavity_flags.assign(d.y_values.size(), 0);
    for (size_t i = 1; i + 1 < d.y_values.size(); ++i) {
        if (action[i] != 0 || action[i - 1] != 0 || action[i + 1] != 0) continue;
        if (d.grid[i] <= b1 || d.grid[i] >= b2) continue;
        // Curvature of y from its slope dy/dtau, which depends on the belief only.
        auto slope = [&](size_t j) {
            double tau = d.grid[j], p = posterior(pb, lam, doing_so_far(tau));
            return mu * model.value(tau, 1) + p * mu * lam * (model.value(tau, 0) - B) +
                   (mu - lam * p) * c;
        };
        double dd = slope(i + 1) - slope(i - 1);
        d.concavity_flags[i] = dd > 0 ? 1 : (dd < 0 ? -1 : 0);
    }
    return d;
}

}  // namespace dblab
