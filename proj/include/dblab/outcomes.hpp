#pragma once
#include "dblab/model.hpp"
#include "dblab/schedule.hpp"
#include "dblab/solver.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace dblab {

struct OutcomeSummary {
    double p_total = 0.0;
    double p_initial_doing = 0.0;
    double p_think_route = 0.0;
    double p_hail_mary = 0.0;
    double expected_work = 0.0;
};

// Success probabilities by route; progress is converted by an exponential
// second stage with rate nu. Fills expected_work as well.
OutcomeSummary route_probabilities(const PolicySchedule& s, const ModelParams& params,
                                   double nu);

// E[min(solution time, T)], counting time spent converting progress.
double expected_work_time(const PolicySchedule& s, const ModelParams& params, double nu);

// Move the initial doing to the end: (0, tau2, tau1 + tau3); T is preserved.
PolicySchedule backload(const PolicySchedule& s);

// Conversion rate implied by the model (SafeArm nu); throws otherwise.
double conversion_rate(const ProgressModel& model);

struct SimConfig {
    long reps = 100000;
    std::uint64_t seed = 1;
    int threads = 0;  // 0: DBLAB_THREADS or hardware concurrency
};

struct Estimate {
    double mean = 0.0;
    double std_err = 0.0;
};

struct SimResult {
    Estimate p_total, p_initial_doing, p_think_route, p_hail_mary, expected_work;
    long reps = 0;
    std::uint64_t seed = 0;
};

SimResult simulate(const PolicySchedule& s, const ModelParams& params, double nu,
                   const SimConfig& sim);

// Counter-based stream for replication `rep`: identical draws for identical
// (seed, rep) regardless of thread layout.
class Stream {
public:
    Stream(std::uint64_t seed, std::uint64_t rep);
    std::uint64_t next();
    double uniform();  // in (0, 1]
    double exponential(double rate);

private:
    std::uint64_t state_;
};

enum class SweepVariable { T, p_bar };

std::string sweep_variable_name(SweepVariable v);
SweepVariable sweep_variable_from_name(const std::string& s);

struct SweepRow {
    double grid_value = 0.0;
    bool ok = false;
    std::string error;
    PolicySchedule schedule;
    OutcomeSummary outcome;
    double p_total_backloaded = 0.0;
};

std::vector<SweepRow> sweep(const ModelParams& params, const ProgressModel& model,
                            SweepVariable variable, const std::vector<double>& grid, double nu,
                            const SolverOptions& opt = {}, int threads = 0);

struct TrajectoryPoint {
    double t;
    double p_progress;
    double p_solution;
    double p_neither;
};

std::vector<TrajectoryPoint> trajectory_probabilities(const PolicySchedule& s,
                                                      const ModelParams& params, double nu,
                                                      const std::vector<double>& t_grid);

// Threads to use: explicit request, else DBLAB_THREADS, else hardware, capped by
// DBLAB_THREADS when set.
int worker_count(int requested);

}  // namespace dblab
