#pragma once
#include <memory>
#include <string>
#include <variant>
#include <vector>

namespace dblab {

// Agent primitives: prior on the doing arm, arrival rates, cost flow,
// reward and horizon.
struct ModelParams {
    double p_bar = 0.5;
    double lambda = 1.0;
    double mu = 1.0;
    double c = 0.0;
    double B = 1.0;
    double T = 0.0;

    // Throws std::invalid_argument naming the violated invariant.
    void check() const;
};

enum class Family { SafeArm, RiskyArm, TimeVarying, PayoffStream, Tabulated };

std::string family_name(Family f);
Family family_from_name(const std::string& s);

struct SafeArm {
    double nu, B_nu, c_nu;
};
struct RiskyArm {
    double p_bar_nu, nu, B_nu, c_nu;
};
struct TimeVarying {
    double nu, alpha, beta, B, c;
};
struct PayoffStream {
    double nu, B_nu;
};
struct Tabulated {
    std::vector<double> tau;
    std::vector<double> value;
};

// Value of progress V(tau) as a function of the time remaining when progress
// arrives. Immutable after construction.
class ProgressModel {
public:
    static ProgressModel safe_arm(double nu, double B_nu, double c_nu);
    static ProgressModel risky_arm(double p_bar_nu, double nu, double B_nu, double c_nu);
    static ProgressModel time_varying(double nu, double alpha, double beta, double B, double c);
    static ProgressModel payoff_stream(double nu, double B_nu);
    static ProgressModel tabulated(std::vector<double> tau, std::vector<double> value);

    Family family() const;
    const std::variant<SafeArm, RiskyArm, TimeVarying, PayoffStream, Tabulated>& params() const {
        return spec_;
    }

    // V, V' or V'' at tau.
    double value(double tau, int order = 0) const;
    double limit() const;

    // RiskyArm stopping time; throws for other families.
    double stopping_time() const;

    // True when V = K(1 - exp(-nu tau)) for constants K, nu.
    bool exponential_form(double* K = nullptr, double* nu = nullptr) const;

private:
    struct Interp;
    std::variant<SafeArm, RiskyArm, TimeVarying, PayoffStream, Tabulated> spec_;
    std::shared_ptr<const Interp> interp_;
    double t_hat_ = 0.0;
};

double progress_value(const ProgressModel& m, double tau, int order = 0);
double progress_value_limit(const ProgressModel& m);

double posterior(double p_bar, double lambda, double A);
double doing_time_to_reach(double p_bar, double lambda, double p_target);
inline double odds(double p) { return p / (1.0 - p); }

struct Witness {
    double tau;
    double value;
};

struct Check {
    std::string name;
    bool pass;
    Witness witness;  // meaningful for failures; worst sampled point otherwise
    std::string detail;
};

struct ValidationReport {
    std::vector<Check> checks;
    bool overall = true;

    const Check* find(const std::string& name) const;
    std::string summary() const;
};

struct ValidationOptions {
    int grid_points = 512;
};

ValidationReport validate_model(const ModelParams& params, const ProgressModel& model,
                                const ValidationOptions& opt = {});

// Terminal belief at or above c/(lambda B).
bool no_shirk_check(const ModelParams& params, double terminal_belief);
double shirk_threshold(const ModelParams& params);
double belief_floor(const ModelParams& params);

}  // namespace dblab
