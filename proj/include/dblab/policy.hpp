#pragma once
#include "dblab/model.hpp"
#include "dblab/schedule.hpp"

#include <optional>
#include <vector>

namespace dblab {

// Duration that may be unbounded (no root below the search ceiling).
class Span {
public:
    static Span finite(double v) { return Span(v, false); }
    static Span infinite() { return Span(0.0, true); }
    bool is_infinite() const { return inf_; }
    double value() const;  // throws for infinite spans
    bool operator==(const Span& o) const { return inf_ == o.inf_ && (inf_ || v_ == o.v_); }

private:
    Span(double v, bool inf) : v_(v), inf_(inf) {}
    double v_;
    bool inf_;
};

struct PolicyOptions {
    // Defaults to max(20/mu, 20/lambda, 4T) when unset.
    std::optional<double> search_ceiling;
    double tau_tol = 1e-9;
    double root_tol = 1e-12;
};

double search_ceiling(const ModelParams& params, const PolicyOptions& opt = {});

// U(tau) = (B - c/lambda)(1 - e^{-lambda tau})
double known_arm_value(const ModelParams& params, double tau);

// Z^d(p, tau) = p U(tau) - (1-p) c tau
double do_throughout_value(const ModelParams& params, double p, double tau);

// q-hat(tau), without the cap at one.
double hail_mary_belief_raw(const ModelParams& params, const ProgressModel& model, double tau);

// q(tau) = min(1, q-hat(tau))
double hail_mary_belief(const ModelParams& params, const ProgressModel& model, double tau);

// Smallest tau with q(tau) = p.
double hail_mary_time(const ModelParams& params, const ProgressModel& model, double p,
                      const PolicyOptions& opt = {});

double preference_slope(const ModelParams& params, const ProgressModel& model, double s,
                        double p, double xi);

// y-hat(tau; p, xi) = int_0^tau e^{mu s} y-dot(s; p, xi) ds
double preference_integral(const ModelParams& params, const ProgressModel& model, double tau,
                           double p, double xi);

// Quadrature route, used for all families and as a cross-check of the closed form.
double preference_integral_quadrature(const ModelParams& params, const ProgressModel& model,
                                      double tau, double p, double xi);

Span thinking_span(const ModelParams& params, const ProgressModel& model, double tau3,
                   const PolicyOptions& opt = {});

double initial_doing_span(const ModelParams& params, const ProgressModel& model, double tau3);

enum class Favored { Think, Do };

struct SignInterval {
    double lo;  // remaining time
    double hi;
    Favored favored;
};

struct SwitchingDiagnostics {
    std::vector<double> grid;      // remaining time, ascending from 0 to T
    std::vector<double> y_values;  // relative preference for thinking
    std::vector<double> gamma_values;
    std::vector<double> eta_values;
    std::vector<SignInterval> sign_pattern;
    std::vector<double> zeros;           // interpolated sign changes of y
    std::vector<int> concavity_flags;    // sign of y'' while thinking, else 0
};

SwitchingDiagnostics switching_profile(const ModelParams& params, const ProgressModel& model,
                                       const PolicySchedule& schedule, int steps = 4096);

}  // namespace dblab
