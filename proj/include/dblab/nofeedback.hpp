#pragma once

namespace dblab {

// Unobserved-progress variant: thinking delivers progress at rate mu, which is
// converted at rate nu; only the final solution is observed.
struct NoFeedbackModel {
    double mu = 1.0;
    double nu = 0.5;
    double B = 1.0;
    double c = 0.0;
    double p_bar = 0.5;
    double lambda = 1.0;
    bool limit_mode = false;  // permits mu == nu via the Erlang limit

    void check() const;
};

// F(A): probability of a solution within thinking time A.
double no_solution_prob(const NoFeedbackModel& nf, double A);

// f-hat(A) = dF/dA, the unconditional density of the solution time.
double solution_density(const NoFeedbackModel& nf, double A);

// Psi(A): probability of latent progress given no solution yet.
double progress_given_no_solution(const NoFeedbackModel& nf, double A);

// g-hat(A) = lambda p_bar e^{-lambda A}
double doing_density(const NoFeedbackModel& nf, double A_doing);

// 1 - F(A), computed without cancellation.
double no_solution_survival(const NoFeedbackModel& nf, double A);

}  // namespace dblab
