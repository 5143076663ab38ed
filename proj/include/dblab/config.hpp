#pragma once
#include "dblab/dp.hpp"
#include "dblab/model.hpp"
#include "dblab/outcomes.hpp"
#include "dblab/solver.hpp"

#include <json.hpp>

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace dblab {

// Malformed or invalid configuration content.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Unreadable input file.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct OracleConfig {
    std::string kind = "reduced";  // reduced | two_stage | no_feedback
    double dt = 1e-3;
    std::vector<std::string> action_set{"DO", "THINK"};  // may add MIX
    bool idle_enabled = false;
    double window = 0.1;  // thinking-share window for two-stage reports
};

struct SweepConfig {
    std::string variable = "T";
    std::vector<double> grid;
};

struct RunConfig {
    ModelParams agent;
    ProgressModel model = ProgressModel::safe_arm(1.0, 1.0, 0.0);
    double tau_tol = 1e-9;
    double root_tol = 1e-12;
    std::optional<double> search_ceiling;
    OracleConfig oracle;
    long reps = 100000;
    std::uint64_t seed = 1;
    SweepConfig sweep;
    std::optional<double> conversion_rate;  // defaults to the SafeArm rate
    int trajectory_points = 101;

    SolverOptions solver_options() const;
    Grid grid() const;
    double nu() const;
};

RunConfig parse_config(const nlohmann::json& j);
nlohmann::json emit_config(const RunConfig& cfg);
RunConfig load_config(const std::string& path);

nlohmann::json emit_model(const ProgressModel& m);
ProgressModel parse_model(const nlohmann::json& j);

// "a:b:step" inclusive of b up to rounding.
std::vector<double> parse_range(const std::string& spec);

}  // namespace dblab
