#pragma once
#include <functional>
#include <string>

namespace dblab::num {

using Fn = std::function<double(double)>;

// Adaptive Gauss-Kronrod on [a, b]. Throws std::runtime_error when the
// error estimate stays above abs_tol.
double integrate(const Fn& f, double a, double b, double abs_tol = 1e-10);

// Same, on [a, inf).
double integrate_to_infinity(const Fn& f, double a, double abs_tol = 1e-10);

struct RootOptions {
    double x_tol = 1e-9;
    double f_tol = 1e-12;
    int max_iter = 200;
};

// Bracketed root of f on [lo, hi]; f(lo) and f(hi) must differ in sign
// (or one of them is within f_tol of zero).
double find_root(const Fn& f, double lo, double hi, const RootOptions& opt = {});

// Same, with known endpoint values.
double find_root(const Fn& f, double lo, double hi, double f_lo, double f_hi,
                 const RootOptions& opt = {});

struct Minimum {
    double x;
    double f;
};

// Minimum of f over [lo, hi]: dense scan followed by Brent refinement around
// the best sample.
Minimum minimize_scan(const Fn& f, double lo, double hi, int samples);

// Relative-or-absolute comparison used across tests and reports.
bool close(double a, double b, double rel, double abs);

std::string fmt(double x, int digits = 12);

}  // namespace dblab::num
