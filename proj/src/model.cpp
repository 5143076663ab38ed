#include "dblab/model.hpp"

#include "dblab/numerics.hpp"
#include "dblab/policy.hpp"

#include <cmath>
using std::isnan;  // Boost 1.74 pchip.hpp calls isnan unqualified
#include <boost/math/interpolators/pchip.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace dblab {

using num::fmt;

void ModelParams::check() const {
    auto bad = [](const std::string& what) { throw std::invalid_argument(what); };
    if (!(p_bar > 0.0 && p_bar < 1.0)) bad("p_bar must lie in (0,1), got " + fmt(p_bar));
    if (!(lambda > 0.0)) bad("lambda must be > 0, got " + fmt(lambda));
    if (!(mu > 0.0)) bad("mu must be > 0, got " + fmt(mu));
    if (!(c >= 0.0)) bad("c must be >= 0, got " + fmt(c));
    if (!(B > 0.0)) bad("B must be > 0, got " + fmt(B));
    if (!(T >= 0.0) || !std::isfinite(T)) bad("T must be finite and >= 0, got " + fmt(T));
}

std::string family_name(Family f) {
    switch (f) {
        case Family::SafeArm: return "SafeArm";
        case Family::RiskyArm: return "RiskyArm";
        case Family::TimeVarying: return "TimeVarying";
        case Family::PayoffStream: return "PayoffStream";
        case Family::Tabulated: return "Tabulated";
    }
    return "?";
}

Family family_from_name(const std::string& s) {
    for (Family f : {Family::SafeArm, Family::RiskyArm, Family::TimeVarying,
                     Family::PayoffStream, Family::Tabulated})
        if (family_name(f) == s) return f;
    throw std::invalid_argument("unknown progress model family '" + s + "'");
}

struct ProgressModel::Interp {
    boost::math::interpolators::pchip<std::vector<double>> spline;
    double lo, hi;
};

namespace {

void require(bool ok, const std::string& what) {
    if (!ok) throw std::invalid_argument(what);
}

// Cumulative hazard of the time-varying arm: int_0^t nu e^{alpha + beta s} ds.
double tv_hazard(const TimeVarying& m, double t) {
    double scale = m.nu * std::exp(m.alpha);
    if (m.beta == 0.0) return scale * t;
    return scale * std::expm1(m.beta * t) / m.beta;
}

double tv_integrand(const TimeVarying& m, double t) {
    double H = tv_hazard(m, t);
    if (!(H < 700.0)) return 0.0;  // survival underflows before the rate overflows
    double h = m.nu * std::exp(m.alpha + m.beta * t);
    return std::exp(-H) * (h * m.B - m.c);
}

}  // namespace

ProgressModel ProgressModel::safe_arm(double nu, double B_nu, double c_nu) {
    require(nu > 0, "SafeArm nu must be > 0");
    require(c_nu >= 0, "SafeArm c_nu must be >= 0");
    require(nu * B_nu > c_nu, "SafeArm needs nu*B_nu > c_nu");
    ProgressModel m;
    m.spec_ = SafeArm{nu, B_nu, c_nu};
    return m;
}

ProgressModel ProgressModel::risky_arm(double p_bar_nu, double nu, double B_nu, double c_nu) {
    require(p_bar_nu > 0 && p_bar_nu < 1, "RiskyArm p_bar_nu must lie in (0,1)");
    require(nu > 0, "RiskyArm nu must be > 0");
    require(c_nu > 0, "RiskyArm c_nu must be > 0 (otherwise the arm never stops)");
    double arg = odds(p_bar_nu) * (nu * B_nu - c_nu) / c_nu;
    if (!(arg > 1.0))
        throw std::invalid_argument(
            "RiskyArm has no valid stopping time: the posterior starts below c_nu/(nu*B_nu)");
    ProgressModel m;
    m.spec_ = RiskyArm{p_bar_nu, nu, B_nu, c_nu};
    m.t_hat_ = std::log(arg) / nu;
    return m;
}

ProgressModel ProgressModel::time_varying(double nu, double alpha, double beta, double B,
                                          double c) {
    require(nu > 0, "TimeVarying nu must be > 0");
    require(alpha >= 0, "TimeVarying alpha must be >= 0");
    require(c >= 0, "TimeVarying c must be >= 0");
    require(nu * B > c, "TimeVarying needs nu*B > c");
    ProgressModel m;
    m.spec_ = TimeVarying{nu, alpha, beta, B, c};
    return m;
}

ProgressModel ProgressModel::payoff_stream(double nu, double B_nu) {
    require(nu > 0, "PayoffStream nu must be > 0");
    require(B_nu > 0, "PayoffStream B_nu must be > 0");
    ProgressModel m;
    m.spec_ = PayoffStream{nu, B_nu};
    return m;
}

ProgressModel ProgressModel::tabulated(std::vector<double> tau, std::vector<double> value) {
    require(tau.size() == value.size(), "Tabulated grid and values differ in length");
    require(tau.size() >= 4, "Tabulated model needs at least four grid points");
    require(tau.front() == 0.0, "Tabulated grid must start at tau = 0");
    for (size_t i = 1; i < tau.size(); ++i)
        require(tau[i] > tau[i - 1], "Tabulated grid must be strictly increasing");
    ProgressModel m;
    m.spec_ = Tabulated{tau, value};
    double lo = tau.front(), hi = tau.back();
    m.interp_ = std::make_shared<const Interp>(
        Interp{boost::math::interpolators::pchip<std::vector<double>>(std::move(tau),
                                                                        std::move(value)),
               lo, hi});
    return m;
}

Family ProgressModel::family() const { return static_cast<Family>(spec_.index()); }

double ProgressModel::stopping_time() const {
    if (family() != Family::RiskyArm)
        throw std::logic_error("stopping time is defined for RiskyArm only");
    return t_hat_;
}

bool ProgressModel::exponential_form(double* K, double* nu) const {
    if (auto* s = std::get_if<SafeArm>(&spec_)) {
        if (K) *K = s->B_nu - s->c_nu / s->nu;
        if (nu) *nu = s->nu;
        return true;
    }
    if (auto* s = std::get_if<PayoffStream>(&spec_)) {
        if (K) *K = s->B_nu;
        if (nu) *nu = s->nu;
        return true;
    }
    return false;
}

double ProgressModel::value(double tau, int order) const {
    if (!(tau >= 0.0) || !std::isfinite(tau))
        throw std::invalid_argument("progress value needs finite tau >= 0, got " + fmt(tau));
    if (order < 0 || order > 2) throw std::invalid_argument("order must be 0, 1 or 2");

    double K = 0, nu = 0;
    if (exponential_form(&K, &nu)) {
        double e = std::exp(-nu * tau);
        if (order == 0) return -K * std::expm1(-nu * tau);
        if (order == 1) return K * nu * e;
        return -K * nu * nu * e;
    }
    switch (family()) {
        case Family::RiskyArm: {
            const auto& r = std::get<RiskyArm>(spec_);
            double t = std::min(tau, t_hat_);
            if (order == 0)
                return -r.p_bar_nu * std::expm1(-r.nu * t) * (r.B_nu - r.c_nu / r.nu) -
                       (1.0 - r.p_bar_nu) * r.c_nu * t;
            if (tau > t_hat_) return 0.0;
            double e = std::exp(-r.nu * tau);
            if (order == 1)
                return r.p_bar_nu * e * (r.nu * r.B_nu - r.c_nu) - (1.0 - r.p_bar_nu) * r.c_nu;
            return -r.nu * r.p_bar_nu * e * (r.nu * r.B_nu - r.c_nu);
        }
        case Family::TimeVarying: {
            const auto& m = std::get<TimeVarying>(spec_);
            if (order == 0)
                return num::integrate([&](double t) { return tv_integrand(m, t); }, 0.0, tau,
                                      1e-10);
            if (order == 1) return tv_integrand(m, tau);
            double h = m.nu * std::exp(m.alpha + m.beta * tau);
            return std::exp(-tv_hazard(m, tau)) * h * (m.beta * m.B - h * m.B + m.c);
        }
        case Family::Tabulated: {
            const auto& ip = *interp_;
            if (tau > ip.hi + 1e-12)
                throw std::out_of_range("Tabulated query tau=" + fmt(tau) +
                                        " outside grid [0, " + fmt(ip.hi) + "]");
            tau = std::min(tau, ip.hi);
            if (order == 0) return ip.spline(tau);
            double h = 1e-4 * (ip.hi - ip.lo);
            double a = std::max(ip.lo, tau - h), b = std::min(ip.hi, tau + h);
            if (order == 1) return (ip.spline(b) - ip.spline(a)) / (b - a);
            double m = 0.5 * (a + b);
            double hh = 0.5 * (b - a);
            return (ip.spline(b) - 2.0 * ip.spline(m) + ip.spline(a)) / (hh * hh);
        }
        default: break;
    }
    throw std::logic_error("unhandled progress model family");
}

double ProgressModel::limit() const {
    double K = 0;
    if (exponential_form(&K, nullptr)) return K;
    switch (family()) {
        case Family::RiskyArm: return value(t_hat_, 0);
        case Family::TimeVarying: {
            const auto& m = std::get<TimeVarying>(spec_);
            double scale = m.nu * std::exp(m.alpha);
            if (m.beta == 0.0) return m.B - m.c / scale;
            if (m.beta < 0.0) {
                if (m.c > 0.0)
                    throw std::invalid_argument(
                        "TimeVarying with beta < 0 and c > 0 has no finite limit value");
                return -m.B * std::expm1(-scale / (-m.beta));
            }
            return num::integrate_to_infinity([&](double t) { return tv_integrand(m, t); },
                                              0.0, 1e-10);
        }
        case Family::Tabulated: {
            const auto& t = std::get<Tabulated>(spec_);
            size_t n = t.value.size();
            if (std::fabs(t.value[n - 1] - t.value[n - 2]) >= 1e-8)
                throw std::invalid_argument(
                    "Tabulated grid is not flat at the tail: last two values differ by " +
                    fmt(std::fabs(t.value[n - 1] - t.value[n - 2])));
            return t.value[n - 1];
        }
        default: break;
    }
    throw std::logic_error("unhandled progress model family");
}

double progress_value(const ProgressModel& m, double tau, int order) {
    return m.value(tau, order);
}

double progress_value_limit(const ProgressModel& m) { return m.limit(); }

double posterior(double p_bar, double lambda, double A) {
    if (!(p_bar >= 0.0 && p_bar <= 1.0)) throw std::invalid_argument("posterior: p_bar out of [0,1]");
    if (!(lambda >= 0.0)) throw std::invalid_argument("posterior: lambda must be >= 0");
    if (!(A >= 0.0)) throw std::invalid_argument("posterior: doing time must be >= 0");
    double w = p_bar * std::exp(-lambda * A);
    return w / (w + 1.0 - p_bar);
}

double doing_time_to_reach(double p_bar, double lambda, double p_target) {
    if (!(p_target > 0.0 && p_target < 1.0) || !(p_bar > 0.0 && p_bar < 1.0))
        throw std::invalid_argument("doing_time_to_reach: beliefs must lie in (0,1)");
    if (!(lambda > 0.0)) throw std::invalid_argument("doing_time_to_reach: lambda must be > 0");
    if (p_target > p_bar)
        throw std::invalid_argument("doing_time_to_reach: target belief " + fmt(p_target) +
                                    " exceeds starting belief " + fmt(p_bar) +
                                    " (beliefs only fall without an arrival)");
    return (std::log(odds(p_bar)) - std::log(odds(p_target))) / lambda;
}

const Check* ValidationReport::find(const std::string& name) const {
    for (const auto& c : checks)
        if (c.name == name) return &c;
    return nullptr;
}

std::string ValidationReport::summary() const {
    std::ostringstream os;
    for (const auto& c : checks) {
        os << (c.pass ? "pass " : "FAIL ") << c.name;
        if (!c.pass) os << " at tau=" << fmt(c.witness.tau) << " value=" << fmt(c.witness.value);
        if (!c.detail.empty()) os << " (" << c.detail << ")";
        os << "\n";
    }
    return os.str();
}

ValidationReport validate_model(const ModelParams& params, const ProgressModel& model,
                                const ValidationOptions& opt) {
    ValidationReport rep;
    auto add = [&](std::string name, bool pass, Witness w, std::string detail = {}) {
        rep.checks.push_back({std::move(name), pass, w, std::move(detail)});
        if (!pass) rep.overall = false;
    };

    try {
        params.check();
        add("params", true, {0, 0});
    } catch (const std::exception& e) {
        add("params", false, {0, 0}, e.what());
        return rep;
    }

    int n = std::max(8, opt.grid_points);
    double upper = std::max({10.0 / params.lambda, 10.0 / params.mu, 2.0 * params.T});
    if (model.family() == Family::Tabulated)
        upper = std::min(upper, std::get<Tabulated>(model.params()).tau.back());
    double shape_upper = upper;
    if (model.family() == Family::RiskyArm) {
        double t_hat = model.stopping_time();
        add("risky_stopping_time", t_hat > 0, {t_hat, t_hat});
        add("risky_horizon_within_stopping_time", params.T <= t_hat, {params.T, t_hat},
            "assumptions hold for tau <= t_hat");
        shape_upper = std::min(upper, t_hat);
    }
    // geometric grid over (0, upper]
    auto grid = [&](double hi) {
        std::vector<double> g(n);
        double lo = hi * 1e-4;
        double r = std::pow(hi / lo, 1.0 / (n - 1));
        for (int i = 0; i < n; ++i) g[i] = lo * std::pow(r, i);
        g.back() = hi;
        return g;
    };
    auto g_shape = grid(shape_upper);

    double v0 = model.value(0.0, 0);
    add("V(0)=0", std::fabs(v0) <= 1e-12, {0.0, v0});

    bool inc_ok = true, conc_ok = true;
    Witness inc_w{0, 0}, conc_w{0, 0};
    double worst_ratio = std::numeric_limits<double>::infinity();
    for (double t : g_shape) {
        double d1 = model.value(t, 1), d2 = model.value(t, 2);
        if (!(d1 > 0.0) && inc_ok) {
            inc_ok = false;
            inc_w = {t, d1};
        }
        if (d1 > 0.0) {
            double ratio = -d2 / d1;
            if (ratio < worst_ratio) {
                worst_ratio = ratio;
                if (conc_ok) conc_w = {t, ratio};
            }
            if (ratio < params.p_bar * params.lambda * (1.0 - 1e-12) && conc_ok) {
                conc_ok = false;
                conc_w = {t, ratio};
            }
        }
    }
    add("V_increasing", inc_ok, inc_w);
    add("relative_concavity", conc_ok, conc_w,
        "-V''/V' >= p_bar*lambda = " + fmt(params.p_bar * params.lambda));

    double v_inf = 0.0;
    try {
        v_inf = model.limit();
    } catch (const std::exception& e) {
        add("V_limit", false, {std::numeric_limits<double>::infinity(), 0}, e.what());
        return rep;
    }
    add("V_limit_exceeds_c_over_mu", v_inf > params.c / params.mu,
        {std::numeric_limits<double>::infinity(), v_inf}, "c/mu = " + fmt(params.c / params.mu));
    add("assumption_1i", v_inf <= params.B + params.c / params.mu,
        {std::numeric_limits<double>::infinity(), v_inf},
        "B + c/mu = " + fmt(params.B + params.c / params.mu));

    if (params.mu > params.lambda) {
        auto g = grid(shape_upper);
        double U2_scale = -(params.B - params.c / params.lambda) * params.lambda * params.lambda;
        std::vector<double> h(g.size());
        for (size_t i = 0; i < g.size(); ++i) {
            double U2 = U2_scale * std::exp(-params.lambda * g[i]);
            h[i] = params.mu * model.value(g[i], 2) / ((params.mu - params.lambda) * U2) -
                   hail_mary_belief_raw(params, model, g[i]);
        }
        int sign = 0;
        bool mono = true;
        Witness w{0, 0};
        for (size_t i = 1; i < h.size() && mono; ++i) {
            double d = h[i] - h[i - 1];
            if (std::fabs(d) <= 1e-12 * (1.0 + std::fabs(h[i]))) continue;
            int s = d > 0 ? 1 : -1;
            if (sign == 0) sign = s;
            else if (s != sign) {
                mono = false;
                w = {g[i], d};
            }
        }
        add("assumption_1ii", mono, w, "monotonicity of mu V''/((mu-lambda) U'') - q_hat");
    }
    return rep;
}

double shirk_threshold(const ModelParams& params) { return params.c / (params.lambda * params.B); }

bool no_shirk_check(const ModelParams& params, double terminal_belief) {
    return terminal_belief >= shirk_threshold(params);
}

double belief_floor(const ModelParams& params) {
    return posterior(params.p_bar, params.lambda, params.T);
}

}  // namespace dblab
