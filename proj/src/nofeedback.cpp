#include "dblab/nofeedback.hpp"

#include "dblab/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dblab {

void NoFeedbackModel::check() const {
    using num::fmt;
    if (!(mu > 0.0) || !(nu > 0.0))
        throw std::invalid_argument("no-feedback rates must be > 0 (mu=" + fmt(mu) +
                                    ", nu=" + fmt(nu) + ")");
    if (mu == nu && !limit_mode)
        throw std::invalid_argument("mu == nu requires limit mode");
    if (!(p_bar > 0.0 && p_bar < 1.0)) throw std::invalid_argument("p_bar must lie in (0,1)");
    if (!(lambda > 0.0)) throw std::invalid_argument("lambda must be > 0");
    if (!(B > 0.0)) throw std::invalid_argument("B must be > 0");
    if (!(c >= 0.0)) throw std::invalid_argument("c must be >= 0");
}

namespace {

void check_time(double A) {
    if (!(A >= 0.0)) throw std::invalid_argument("thinking time must be >= 0");
}

// (e^{-nu A} - e^{-mu A}) / (mu - nu), with the mu = nu limit A e^{-mu A}.
double diff_ratio(const NoFeedbackModel& nf, double A) {
    if (nf.mu == nf.nu) {
        if (!nf.limit_mode) throw std::invalid_argument("mu == nu requires limit mode");
        return A * std::exp(-nf.mu * A);
    }
    // Factor out the slower exponential so the remaining term cannot overflow.
    double slow = std::min(nf.mu, nf.nu), gap = std::fabs(nf.mu - nf.nu);
    return -std::exp(-slow * A) * std::expm1(-gap * A) / gap;
}

}  // namespace

double no_solution_survival(const NoFeedbackModel& nf, double A) {
    check_time(A);
    return std::exp(-nf.nu * A) + nf.nu * diff_ratio(nf, A);
}

double no_solution_prob(const NoFeedbackModel& nf, double A) {
    return 1.0 - no_solution_survival(nf, A);
}

double solution_density(const NoFeedbackModel& nf, double A) {
    check_time(A);
    return nf.mu * nf.nu * diff_ratio(nf, A);
}

double progress_given_no_solution(const NoFeedbackModel& nf, double A) {
    check_time(A);
    return nf.mu * diff_ratio(nf, A) / no_solution_survival(nf, A);
}

double doing_density(const NoFeedbackModel& nf, double A_doing) {
    check_time(A_doing);
    return nf.lambda * nf.p_bar * std::exp(-nf.lambda * A_doing);
}

}  // namespace dblab
