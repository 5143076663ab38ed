#include "dblab/numerics.hpp"

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/toms748_solve.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

namespace dblab::num {

double integrate(const Fn& f, double a, double b, double abs_tol) {
    if (a == b) return 0.0;
    if (b < a) return -integrate(f, b, a, abs_tol);
    // Boost 1.74 reports leaf error estimates on the unit-scaled interval, so a
    // short [a, b] looks unconverged; integrate over [0, 1] and rescale instead.
    double w = b - a;
    double err = 0.0, l1 = 0.0;
    auto unit = [&](double x) { return f(a + w * x); };
    using gk = boost::math::quadrature::gauss_kronrod<double, 21>;
    // One rule gives the scale; the relative target then matches abs_tol without
    // chasing rounding noise on smooth integrands.
    gk::integrate(unit, 0.0, 1.0, 0, 0.0, &err, &l1);
    double rel = std::clamp(abs_tol / std::max(w * l1, 1e-300), 1e-13, 1e-6);
    double v = w * gk::integrate(unit, 0.0, 1.0, 20, rel, &err, &l1);
    err *= w;
    l1 *= w;
    if (!std::isfinite(v))
        throw std::runtime_error("quadrature produced a non-finite value on [" + fmt(a) +
                                 ", " + fmt(b) + "]");
    if (err > abs_tol && err > 1e-12 * l1)
        throw std::runtime_error("quadrature did not converge: error estimate " + fmt(err) +
                                 " above tolerance " + fmt(abs_tol));
    return v;
}

double integrate_to_infinity(const Fn& f, double a, double abs_tol) {
    boost::math::quadrature::exp_sinh<double> q;
    double err = 0.0, l1 = 0.0;
    double v = q.integrate([&](double x) { return f(x + a); }, 1e-13, &err, &l1);
    if (!std::isfinite(v))
        throw std::runtime_error("improper quadrature produced a non-finite value");
    if (err > abs_tol && err > 1e-12 * l1)
        throw std::runtime_error("improper quadrature did not converge: error estimate " +
                                 fmt(err));
    return v;
}

double find_root(const Fn& f, double lo, double hi, const RootOptions& opt) {
    return find_root(f, lo, hi, f(lo), f(hi), opt);
}

double find_root(const Fn& f, double lo, double hi, double f_lo, double f_hi,
                 const RootOptions& opt) {
    if (std::fabs(f_lo) <= opt.f_tol) return lo;
    if (std::fabs(f_hi) <= opt.f_tol) return hi;
    if ((f_lo > 0) == (f_hi > 0))
        throw std::runtime_error("root not bracketed on [" + fmt(lo) + ", " + fmt(hi) +
                                 "]: f = " + fmt(f_lo) + ", " + fmt(f_hi));
    // toms748 interleaves secant / inverse-cubic steps with bisection safeguards.
    std::uintmax_t iters = static_cast<std::uintmax_t>(opt.max_iter);
    auto stop = [&](double a, double b) { return std::fabs(b - a) <= opt.x_tol; };
    auto g = [&](double x) {
        double v = f(x);
        return std::fabs(v) <= opt.f_tol ? 0.0 : v;
    };
    auto r = boost::math::tools::toms748_solve(g, lo, hi, g(lo), g(hi), stop, iters);
    return 0.5 * (r.first + r.second);
}

Minimum minimize_scan(const Fn& f, double lo, double hi, int samples) {
    if (samples < 2) samples = 2;
    double h = (hi - lo) / (samples - 1);
    int best = 0;
    double fbest = std::numeric_limits<double>::infinity();
    for (int i = 0; i < samples; ++i) {
        double v = f(std::min(hi, lo + i * h));
        if (v < fbest) {
            fbest = v;
            best = i;
        }
    }
    double a = lo + std::max(0, best - 1) * h;
    double b = lo + std::min(samples - 1, best + 1) * h;
    b = std::min(b, hi);
    if (b <= a) return {std::min(hi, lo + best * h), fbest};
    auto r = boost::math::tools::brent_find_minima(f, a, b, 40);
    if (r.second < fbest) return {r.first, r.second};
    return {std::min(hi, lo + best * h), fbest};
}

bool close(double a, double b, double rel, double abs) {
    return std::fabs(a - b) <= abs + rel * std::max(std::fabs(a), std::fabs(b));
}

std::string fmt(double x, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", digits, x);
    return buf;
}

}  // namespace dblab::num
