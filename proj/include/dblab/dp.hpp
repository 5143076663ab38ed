#pragma once
#include "dblab/model.hpp"
#include "dblab/nofeedback.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace dblab {

enum class Action : std::uint8_t { Do = 0, Think = 1, Idle = 2, Mix = 3 };

std::string action_name(Action a);

struct Grid {
    double dt = 1e-3;
    bool idle = false;  // allow shirking (no cost, no arrival)
    bool mix = false;   // allow the interior action a = 1/2
    double max_dt = 0.01;
    long max_steps = 20000;
    bool keep_values = true;  // store the full value table when it fits
    long value_table_cap = 20'000'000;
};

// Steps for horizon T on the grid; throws std::invalid_argument for a coarse or
// oversized grid.
long grid_steps(const Grid& g, double T);

struct ActionInterval {
    Action action;
    double t_start;  // calendar time
    double t_end;
};

// Triangular table indexed by remaining steps k and doing usage m (in units of
// 1/resolution steps), 0 <= m <= resolution * (n_steps - k).
class TriTable {
public:
    TriTable() = default;
    TriTable(long n_steps, int resolution);
    long row_size(long k) const { return res_ * (n_ - k) + 1; }
    std::size_t index(long k, long m) const;
    long n_steps() const { return n_; }
    int resolution() const { return res_; }
    std::size_t size() const { return offsets_.empty() ? 0 : offsets_.back(); }

private:
    long n_ = 0;
    int res_ = 1;
    std::vector<std::size_t> offsets_;
};

struct DPSolution {
    double dt = 0.0;
    long n_steps = 0;
    int resolution = 1;  // doing usage is counted in steps / resolution
    TriTable layout;
    std::vector<double> value;        // empty when the table was too large to keep
    std::vector<std::uint8_t> policy;  // low 2 bits best action, bits 2-5 tie mask
    std::vector<double> post_value;   // post-progress value by remaining steps (two-stage)
    double root_value = 0.0;           // W(n_steps, 0)

    // No-arrival path in calendar order.
    std::vector<Action> path;
    std::vector<long> path_m;
    std::vector<double> path_advantage;  // Q(think) - Q(do) at each path state
    std::vector<ActionInterval> intervals;

    double value_at(long k, long m) const;
    Action policy_at(long k, long m) const;
    bool tie_at(long k, long m, Action a) const;

    // Calendar times of action changes on the no-arrival path.
    std::vector<double> switch_times() const;
    // Same, with the flip located by linear interpolation of the think/do advantage.
    std::vector<double> refined_switch_times() const;
};

DPSolution dp_reduced(const ModelParams& params, const ProgressModel& model, const Grid& grid);

// Explicit second stage after progress: a known-rate arm (SafeArm) or a risky arm
// with its own belief (RiskyArm).
DPSolution dp_two_stage(const ModelParams& params, const ProgressModel& stage2,
                        const Grid& grid);

DPSolution dp_no_feedback(const NoFeedbackModel& nf, double T, const Grid& grid);

// Merge the no-arrival path into intervals.
std::vector<ActionInterval> extract_schedule(const DPSolution& dp);

struct EffortWindow {
    double t_start;
    double t_end;
    double think_share;  // MIX counts as half thinking
};

// Thinking share of the no-arrival path averaged over consecutive windows of
// length `window`; a chattering stretch shows up as a fractional share.
std::vector<EffortWindow> thinking_share(const DPSolution& dp, double window);

// Maximal runs of windows whose thinking share exceeds `threshold`.
std::vector<ActionInterval> thinking_intervals(const DPSolution& dp, double window,
                                               double threshold = 0.5);

// Binary dump: "DBL1", dt, n_steps, resolution, then value and policy tables as
// row-major float64 over (k, m).
void write_dump(const DPSolution& dp, const std::string& path);
DPSolution read_dump(const std::string& path);

}  // namespace dblab
