#pragma once
// Independent reference computations for the unit tests. Nothing here calls
// into the library's numerics, so agreement is a genuine cross-check.
#include "dblab/model.hpp"

#include <cmath>
#include <functional>
#include <random>

namespace oracle {

inline dblab::ModelParams fig1(double T) { return {0.75, 0.75, 1.0, 0.5, 5.0, T}; }
inline dblab::ProgressModel fig1_model() { return dblab::ProgressModel::safe_arm(1.0, 5.0, 0.5); }

// Composite Simpson rule with n (even) panels.
inline double simpson(const std::function<double(double)>& f, double a, double b, int n = 2000) {
    double h = (b - a) / n, s = f(a) + f(b);
    for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
    return s * h / 3.0;
}

// Plain bisection; f(lo) and f(hi) must differ in sign.
inline double bisect(const std::function<double(double)>& f, double lo, double hi) {
    double flo = f(lo);
    for (int i = 0; i < 200; ++i) {
        double mid = 0.5 * (lo + hi), fm = f(mid);
        if ((fm > 0) == (flo > 0)) lo = mid, flo = fm;
        else hi = mid;
    }
    return 0.5 * (lo + hi);
}

// Classical RK4 for a scalar ODE y' = f(t, y).
inline double rk4(const std::function<double(double, double)>& f, double y, double t0, double t1,
                  int steps) {
    double h = (t1 - t0) / steps, t = t0;
    for (int i = 0; i < steps; ++i) {
        double k1 = f(t, y), k2 = f(t + h / 2, y + h * k1 / 2), k3 = f(t + h / 2, y + h * k2 / 2),
               k4 = f(t + h, y + h * k3);
        y += h * (k1 + 2 * k2 + 2 * k3 + k4) / 6;
        t += h;
    }
    return y;
}

inline double exp_draw(std::mt19937_64& g, double rate) {
    return std::exponential_distribution<double>(rate)(g);
}

}  // namespace oracle
