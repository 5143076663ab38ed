#include "dblab/config.hpp"
#include "dblab/dp.hpp"
#include "dblab/nofeedback.hpp"
#include "dblab/numerics.hpp"
#include "dblab/outcomes.hpp"
#include "dblab/solver.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

using namespace dblab;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

enum Exit { kOk = 0, kIo = 1, kValidation = 2, kSolver = 3, kOutput = 4 };

class OutputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Options {
    std::string config;
    std::string out = ".";
    std::optional<double> dt;
    std::optional<long> reps;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> grid;
    std::optional<std::string> variable;
    std::string dump;
};

// Twelve significant digits, also for values stored in JSON.
double r12(double x) { return std::isfinite(x) ? std::stod(num::fmt(x, 12)) : x; }
std::string f12(double x) { return num::fmt(x, 12); }

json opt12(const std::optional<double>& v) { return v ? json(r12(*v)) : json(nullptr); }

RunConfig load(const Options& o) {
    RunConfig cfg = load_config(o.config);
    if (o.dt) cfg.oracle.dt = *o.dt;
    if (o.reps) {
        if (*o.reps < 1) throw ConfigError("--reps must be >= 1");
        cfg.reps = *o.reps;
    }
    if (o.seed) cfg.seed = *o.seed;
    if (o.grid) cfg.sweep.grid = parse_range(*o.grid);
    if (o.variable) {
        sweep_variable_from_name(*o.variable);
        cfg.sweep.variable = *o.variable;
    }
    return cfg;
}

void write_file(const Options& o, const std::string& name, const std::string& text) {
    std::error_code ec;
    fs::create_directories(o.out, ec);
    if (ec) throw OutputError("cannot create output directory '" + o.out + "': " + ec.message());
    fs::path p = fs::path(o.out) / name;
    std::ofstream f(p);
    if (!f) throw OutputError("cannot write '" + p.string() + "'");
    f << text;
    f.close();
    if (!f) throw OutputError("failed writing '" + p.string() + "'");
}

void dump_tables(const DPSolution& dp, const std::string& path) {
    if (path.empty()) return;
    try {
        write_dump(dp, path);
    } catch (const std::runtime_error& e) {
        throw OutputError(e.what());
    }
}

json schedule_json(const PolicySchedule& s) {
    return {{"tau1", r12(s.tau1)},
            {"tau2", r12(s.tau2)},
            {"tau3", r12(s.tau3)},
            {"structure", structure_name(s.structure)},
            {"q_at_switch", r12(s.q_at_switch)},
            {"terminal_belief", r12(s.terminal_belief)}};
}

json intervals_json(const std::vector<ActionInterval>& iv) {
    json a = json::array();
    for (const auto& x : iv)
        a.push_back({{"action", action_name(x.action)},
                     {"start", r12(x.t_start)},
                     {"end", r12(x.t_end)}});
    return a;
}

json numbers_json(const std::vector<double>& v) {
    json a = json::array();
    for (double x : v) a.push_back(r12(x));
    return a;
}

// Calendar switch times implied by a bang-bang schedule.
std::vector<double> schedule_switches(const PolicySchedule& s) {
    std::vector<double> out;
    if (s.tau2 <= 0.0) return out;
    if (s.tau1 > 0.0) out.push_back(s.tau1);
    if (s.tau3 > 0.0) out.push_back(s.tau1 + s.tau2);
    return out;
}

int cmd_solve(const Options& o) {
    RunConfig cfg = load(o);
    PolicySchedule s = solve(cfg.agent, cfg.model, cfg.solver_options());
    json j = schedule_json(s);
    j["T"] = r12(cfg.agent.T);
    json th = nullptr;
    try {
        Thresholds t = belief_thresholds(cfg.agent, cfg.model, cfg.solver_options().policy);
        th = {{"p_hat", opt12(t.p_hat)},
              {"p_tilde", opt12(t.p_tilde)},
              {"p_check", opt12(t.p_check)},
              {"T1", opt12(t.T1)},
              {"notes", t.notes}};
    } catch (const std::exception& e) {
        th = {{"error", e.what()}};
    }
    j["thresholds"] = th;
    write_file(o, "schedule.json", j.dump(2) + "\n");

    std::ostringstream sum;
    sum << "structure " << structure_name(s.structure) << "\n"
        << "do    [0, " << f12(s.tau1) << ")\n"
        << "think [" << f12(s.tau1) << ", " << f12(s.tau1 + s.tau2) << ")\n"
        << "do    [" << f12(s.tau1 + s.tau2) << ", " << f12(s.horizon()) << "]\n"
        << "belief at switch " << f12(s.q_at_switch) << ", terminal belief "
        << f12(s.terminal_belief) << "\n";
    write_file(o, "summary.txt", sum.str());
    std::cout << sum.str();
    return kOk;
}

// Compares solver switch times with the oracle's refined ones.
json compare(const PolicySchedule& s, const DPSolution& dp, bool* pass) {
    auto a = schedule_switches(s);
    auto b = dp.refined_switch_times();
    json deltas = json::array();
    double worst = 0.0;
    bool ok = a.size() == b.size();
    for (std::size_t i = 0; ok && i < a.size(); ++i) {
        double d = std::fabs(a[i] - b[i]);
        worst = std::max(worst, d);
        deltas.push_back(r12(d));
    }
    ok = ok && worst <= 5.0 * dp.dt;
    *pass = ok;
    return {{"solver", schedule_json(s)},
            {"solver_switch_times", numbers_json(a)},
            {"oracle_switch_times", numbers_json(b)},
            {"deltas", deltas},
            {"max_delta", ok || a.size() == b.size() ? json(r12(worst)) : json(nullptr)},
            {"tolerance", r12(5.0 * dp.dt)},
            {"pass", ok}};
}

int cmd_verify(const Options& o) {
    RunConfig cfg = load(o);
    Grid g = cfg.grid();
    grid_steps(g, cfg.agent.T);  // rejects coarse grids before any work
    json j;
    j["oracle"] = cfg.oracle.kind;
    j["dt"] = r12(g.dt);
    j["T"] = r12(cfg.agent.T);
    bool pass = true;

    if (cfg.oracle.kind == "reduced") {
        PolicySchedule s = solve(cfg.agent, cfg.model, cfg.solver_options());
        DPSolution dp = dp_reduced(cfg.agent, cfg.model, g);
        j["root_value"] = r12(dp.root_value);
        j["intervals"] = intervals_json(extract_schedule(dp));
        j["comparison"] = compare(s, dp, &pass);
        dump_tables(dp, o.dump);
    } else if (cfg.oracle.kind == "two_stage") {
        ValidationReport rep = validate_model(cfg.agent, cfg.model);
        json checks = json::array();
        for (const auto& c : rep.checks) checks.push_back({{"name", c.name}, {"pass", c.pass}});
        j["validation"] = {{"overall", rep.overall}, {"checks", checks}};
        DPSolution dp = dp_two_stage(cfg.agent, cfg.model, g);
        auto think = thinking_intervals(dp, cfg.oracle.window);
        j["root_value"] = r12(dp.root_value);
        j["intervals"] = intervals_json(extract_schedule(dp));
        j["thinking_window"] = r12(cfg.oracle.window);
        j["thinking_intervals"] = intervals_json(think);
        j["double_think"] = think.size() >= 2;
        if (rep.overall) {
            PolicySchedule s = solve(cfg.agent, cfg.model, cfg.solver_options());
            j["comparison"] = compare(s, dp, &pass);
        } else {
            std::string failed;
            for (const auto& c : rep.checks)
                if (!c.pass) failed += (failed.empty() ? "" : ", ") + c.name;
            j["comparison"] = "skipped: model fails " + failed;
        }
        dump_tables(dp, o.dump);
    } else {
        NoFeedbackModel nf{cfg.agent.mu, cfg.nu(), cfg.agent.B, cfg.agent.c,
                           cfg.agent.p_bar, cfg.agent.lambda, cfg.agent.mu == cfg.nu()};
        nf.check();
        DPSolution dp = dp_no_feedback(nf, cfg.agent.T, g);
        bool thought = false, reverted = false;
        for (Action a : dp.path) {
            if (a == Action::Think) thought = true;
            else if (thought && a == Action::Do) reverted = true;
        }
        pass = !reverted;
        j["root_value"] = r12(dp.root_value);
        j["intervals"] = intervals_json(extract_schedule(dp));
        j["reverts_to_doing"] = reverted;
        dump_tables(dp, o.dump);
    }
    j["pass"] = pass;
    write_file(o, "verify.json", j.dump(2) + "\n");
    std::cout << "verify (" << cfg.oracle.kind << "): " << (pass ? "PASS" : "FAIL") << "\n";
    if (j.contains("double_think"))
        std::cout << "thinking intervals: " << j["thinking_intervals"].size() << "\n";
    return pass ? kOk : kSolver;
}

int cmd_sweep(const Options& o) {
    RunConfig cfg = load(o);
    if (cfg.sweep.grid.empty()) throw ConfigError("sweep grid is empty (set sweep.grid or --grid)");
    auto rows = sweep(cfg.agent, cfg.model, sweep_variable_from_name(cfg.sweep.variable),
                      cfg.sweep.grid, cfg.nu(), cfg.solver_options());
    std::ostringstream csv;
    csv << "grid_value,tau1,tau2,tau3,structure,p_total,p_do_initial,p_think,p_hailmary,"
           "p_total_backloaded,expected_work\n";
    for (const auto& r : rows) {
        csv << f12(r.grid_value) << ",";
        if (!r.ok) {
            csv << "nan,nan,nan,ERROR,nan,nan,nan,nan,nan,nan\n";
            std::cerr << "sweep point " << f12(r.grid_value) << ": " << r.error << "\n";
            continue;
        }
        const auto& s = r.schedule;
        const auto& oc = r.outcome;
        csv << f12(s.tau1) << "," << f12(s.tau2) << "," << f12(s.tau3) << ","
            << structure_name(s.structure) << "," << f12(oc.p_total) << ","
            << f12(oc.p_initial_doing) << "," << f12(oc.p_think_route) << ","
            << f12(oc.p_hail_mary) << "," << f12(r.p_total_backloaded) << ","
            << f12(oc.expected_work) << "\n";
    }
    write_file(o, "sweep.csv", csv.str());
    std::cout << "sweep: " << rows.size() << " points over " << cfg.sweep.variable << "\n";
    return kOk;
}

int cmd_simulate(const Options& o) {
    RunConfig cfg = load(o);
    PolicySchedule s = solve(cfg.agent, cfg.model, cfg.solver_options());
    SimConfig sc;
    sc.reps = cfg.reps;
    sc.seed = cfg.seed;
    SimResult r = simulate(s, cfg.agent, cfg.nu(), sc);
    std::ostringstream csv;
    csv << "estimate,std_err,reps,seed\n";
    for (const Estimate* e : {&r.p_total, &r.p_initial_doing, &r.p_think_route, &r.p_hail_mary,
                              &r.expected_work})
        csv << f12(e->mean) << "," << f12(e->std_err) << "," << r.reps << "," << r.seed << "\n";
    write_file(o, "simulate.csv", csv.str());
    std::cout << "simulate: p_total " << f12(r.p_total.mean) << " +- " << f12(r.p_total.std_err)
              << "\n";
    return kOk;
}

int cmd_trajectory(const Options& o) {
    RunConfig cfg = load(o);
    PolicySchedule s = solve(cfg.agent, cfg.model, cfg.solver_options());
    std::vector<double> t;
    int n = cfg.trajectory_points;
    for (int i = 0; i < n; ++i) t.push_back(cfg.agent.T * i / (n - 1));
    t.back() = cfg.agent.T;
    std::ostringstream csv;
    csv << "t,p_progress,p_solution,p_neither\n";
    for (const auto& p : trajectory_probabilities(s, cfg.agent, cfg.nu(), t))
        csv << f12(p.t) << "," << f12(p.p_progress) << "," << f12(p.p_solution) << ","
            << f12(p.p_neither) << "\n";
    write_file(o, "trajectory.csv", csv.str());
    std::cout << "trajectory: " << n << " points\n";
    return kOk;
}

int run(int (*cmd)(const Options&), const Options& o) {
    try {
        return cmd(o);
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kIo;
    } catch (const OutputError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kOutput;
    } catch (const ValidationError& e) {
        std::cerr << "validation failed: " << e.report.summary() << "\n";
        return kValidation;
    } catch (const std::invalid_argument& e) {
        std::cerr << "invalid input: " << e.what() << "\n";
        return kValidation;
    } catch (const std::exception& e) {
        std::cerr << "solver failure: " << e.what() << "\n";
        return kSolver;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Finite-horizon thinking/doing bandit lab"};
    app.require_subcommand(1);
    Options o;

    auto add = [&](const char* name, const char* help) {
        auto* sc = app.add_subcommand(name, help);
        sc->add_option("--config", o.config, "run configuration (JSON)")->required();
        sc->add_option("--out", o.out, "output directory");
        return sc;
    };
    auto* solve_cmd = add("solve", "solve for the optimal schedule");
    auto* verify_cmd = add("verify", "compare the solver with the dynamic-programming oracle");
    verify_cmd->add_option("--dt", o.dt, "oracle time step");
    verify_cmd->add_option("--dump", o.dump, "write the oracle tables to this file");
    auto* sweep_cmd = add("sweep", "solve and score over a parameter grid");
    sweep_cmd->add_option("--grid", o.grid, "grid as a:b:step");
    sweep_cmd->add_option("--variable", o.variable, "T or p_bar");
    auto* sim_cmd = add("simulate", "Monte Carlo estimates for the optimal schedule");
    sim_cmd->add_option("--reps", o.reps, "replications");
    sim_cmd->add_option("--seed", o.seed, "random seed");
    auto* traj_cmd = add("trajectory", "progress and solution probabilities over time");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kOk : kValidation;
    }
    if (*solve_cmd) return run(cmd_solve, o);
    if (*verify_cmd) return run(cmd_verify, o);
    if (*sweep_cmd) return run(cmd_sweep, o);
    if (*sim_cmd) return run(cmd_simulate, o);
    if (*traj_cmd) return run(cmd_trajectory, o);
    return kValidation;
}
