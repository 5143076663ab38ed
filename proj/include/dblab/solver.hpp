#pragma once
#include "dblab/model.hpp"
#include "dblab/policy.hpp"
#include "dblab/schedule.hpp"

#include <optional>
#include <stdexcept>
#include <string>

namespace dblab {

// Raised when the model fails validation; carries the report.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(ValidationReport r)
        : std::runtime_error(first_failure(r)), report(std::move(r)) {}
    ValidationReport report;

private:
    static std::string first_failure(const ValidationReport& r);
};

// Raised when the fixed point cannot be bracketed or a search degenerates.
class SolverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct SolverOptions {
    PolicyOptions policy;
    int constraint_grid = 2048;
    double belief_tol = 1e-7;  // step 3 equality test on q(tau3-bar) vs p_bar
    bool validate = true;
    ValidationOptions validation;
};

PolicySchedule solve(const ModelParams& params, const ProgressModel& model,
                     const SolverOptions& opt = {});

enum class InfiniteStructure { DO_THEN_THINK, THINK_THROUGHOUT, DO_THROUGHOUT };

std::string infinite_structure_name(InfiniteStructure s);

struct InfiniteHorizonResult {
    double p_hat;
    double switch_time;  // infinite when doing is always preferred
    InfiniteStructure structure;
    std::string note;
};

InfiniteHorizonResult solve_infinite_horizon(const ModelParams& params,
                                             const ProgressModel& model);

struct NoCostResult {
    bool do_throughout;
    double tau3;  // valid when !do_throughout
};

// Cost-free benchmark: c is forced to zero regardless of params.c.
NoCostResult solve_no_cost(const ModelParams& params, const ProgressModel& model,
                           const PolicyOptions& opt = {});

struct Thresholds {
    std::optional<double> p_hat;
    std::optional<double> p_tilde;
    std::optional<double> p_check;
    std::optional<double> T1;
    std::string notes;
};

Thresholds belief_thresholds(const ModelParams& params, const ProgressModel& model,
                             const PolicyOptions& opt = {});

// Smallest slack of q(tau - t) <= posterior(p0, lambda, t) over t in [0, tau].
double hail_mary_slack(const ModelParams& params, const ProgressModel& model, double p0,
                       double tau, int grid);

}  // namespace dblab
