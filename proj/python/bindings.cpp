#include "dblab/config.hpp"
#include "dblab/dp.hpp"
#include "dblab/model.hpp"
#include "dblab/nofeedback.hpp"
#include "dblab/outcomes.hpp"
#include "dblab/policy.hpp"
#include "dblab/solver.hpp"

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace dblab;

namespace {

py::dict schedule_dict(const PolicySchedule& s) {
    py::dict d;
    d["tau1"] = s.tau1;
    d["tau2"] = s.tau2;
    d["tau3"] = s.tau3;
    d["structure"] = structure_name(s.structure);
    d["q_at_switch"] = s.q_at_switch;
    d["terminal_belief"] = s.terminal_belief;
    return d;
}

PolicySchedule schedule_from(const py::dict& d) {
    return make_schedule(d["tau1"].cast<double>(), d["tau2"].cast<double>(),
                         d["tau3"].cast<double>());
}

py::list intervals_list(const std::vector<ActionInterval>& iv) {
    py::list out;
    for (const auto& x : iv) out.append(py::make_tuple(action_name(x.action), x.t_start, x.t_end));
    return out;
}

py::dict dp_dict(const DPSolution& dp, double window) {
    py::dict d;
    d["dt"] = dp.dt;
    d["n_steps"] = dp.n_steps;
    d["root_value"] = dp.root_value;
    d["intervals"] = intervals_list(extract_schedule(dp));
    d["switch_times"] = dp.switch_times();
    d["refined_switch_times"] = dp.refined_switch_times();
    d["thinking_intervals"] = intervals_list(thinking_intervals(dp, window));
    return d;
}

py::dict outcome_dict(const OutcomeSummary& o) {
    py::dict d;
    d["p_total"] = o.p_total;
    d["p_initial_doing"] = o.p_initial_doing;
    d["p_think_route"] = o.p_think_route;
    d["p_hail_mary"] = o.p_hail_mary;
    d["expected_work"] = o.expected_work;
    return d;
}

Grid make_grid(double dt, bool idle, bool mix) {
    Grid g;
    g.dt = dt;
    g.idle = idle;
    g.mix = mix;
    return g;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Finite-horizon thinking/doing bandit lab";

    py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
    py::register_exception<SolverError>(m, "SolverError", PyExc_RuntimeError);

    py::class_<ModelParams>(m, "ModelParams")
        .def(py::init([](double p_bar, double lambda, double mu, double c, double B, double T) {
                 ModelParams p{p_bar, lambda, mu, c, B, T};
                 p.check();
                 return p;
             }),
             py::arg("p_bar"), py::arg("lam"), py::arg("mu"), py::arg("c"), py::arg("B"),
             py::arg("T"))
        .def_readwrite("p_bar", &ModelParams::p_bar)
        .def_readwrite("lam", &ModelParams::lambda)
        .def_readwrite("mu", &ModelParams::mu)
        .def_readwrite("c", &ModelParams::c)
        .def_readwrite("B", &ModelParams::B)
        .def_readwrite("T", &ModelParams::T)
        .def("check", &ModelParams::check);

    py::class_<ProgressModel>(m, "ProgressModel")
        .def_static("safe_arm", &ProgressModel::safe_arm, py::arg("nu"), py::arg("B_nu"),
                    py::arg("c_nu"))
        .def_static("risky_arm", &ProgressModel::risky_arm, py::arg("p_bar_nu"), py::arg("nu"),
                    py::arg("B_nu"), py::arg("c_nu"))
        .def_static("time_varying", &ProgressModel::time_varying, py::arg("nu"),
                    py::arg("alpha"), py::arg("beta"), py::arg("B"), py::arg("c"))
        .def_static("payoff_stream", &ProgressModel::payoff_stream, py::arg("nu"),
                    py::arg("B_nu"))
        .def_static("tabulated", &ProgressModel::tabulated, py::arg("tau"), py::arg("value"))
        .def_property_readonly("family",
                               [](const ProgressModel& pm) { return family_name(pm.family()); })
        .def("value", &ProgressModel::value, py::arg("tau"), py::arg("order") = 0)
        .def("limit", &ProgressModel::limit);

    m.def("posterior", &posterior, py::arg("p_bar"), py::arg("lam"), py::arg("A"));
    m.def("doing_time_to_reach", &doing_time_to_reach, py::arg("p_bar"), py::arg("lam"),
          py::arg("p_target"));
    m.def("validate_model", [](const ModelParams& p, const ProgressModel& pm) {
        ValidationReport r = validate_model(p, pm);
        py::dict checks;
        for (const auto& c : r.checks) checks[py::str(c.name)] = c.pass;
        py::dict d;
        d["overall"] = r.overall;
        d["checks"] = checks;
        d["summary"] = r.summary();
        return d;
    });

    m.def("hail_mary_belief", [](const ModelParams& p, const ProgressModel& pm, double tau) {
        return hail_mary_belief(p, pm, tau);
    });
    m.def("hail_mary_time", [](const ModelParams& p, const ProgressModel& pm, double q) {
        return hail_mary_time(p, pm, q);
    });
    m.def("solve", [](const ModelParams& p, const ProgressModel& pm) {
        return schedule_dict(solve(p, pm));
    });
    m.def("solve_infinite_horizon", [](const ModelParams& p, const ProgressModel& pm) {
        auto r = solve_infinite_horizon(p, pm);
        py::dict d;
        d["p_hat"] = r.p_hat;
        d["switch_time"] = r.switch_time;
        d["structure"] = infinite_structure_name(r.structure);
        return d;
    });
    m.def("belief_thresholds", [](const ModelParams& p, const ProgressModel& pm) {
        auto t = belief_thresholds(p, pm);
        py::dict d;
        d["p_hat"] = t.p_hat;
        d["p_tilde"] = t.p_tilde;
        d["p_check"] = t.p_check;
        d["T1"] = t.T1;
        return d;
    });

    m.def(
        "dp_reduced",
        [](const ModelParams& p, const ProgressModel& pm, double dt, bool idle, bool mix) {
            return dp_dict(dp_reduced(p, pm, make_grid(dt, idle, mix)), 0.1);
        },
        py::arg("params"), py::arg("model"), py::arg("dt") = 1e-3, py::arg("idle") = false,
        py::arg("mix") = false);
    m.def(
        "dp_two_stage",
        [](const ModelParams& p, const ProgressModel& stage2, double dt, double window) {
            return dp_dict(dp_two_stage(p, stage2, make_grid(dt, false, false)), window);
        },
        py::arg("params"), py::arg("stage2"), py::arg("dt") = 1e-2, py::arg("window") = 0.1);

    m.def("no_solution_prob", [](double mu, double nu, double A) {
        NoFeedbackModel nf;
        nf.mu = mu, nf.nu = nu, nf.limit_mode = true;
        return no_solution_prob(nf, A);
    });
    m.def("solution_density", [](double mu, double nu, double A) {
        NoFeedbackModel nf;
        nf.mu = mu, nf.nu = nu, nf.limit_mode = true;
        return solution_density(nf, A);
    });

    m.def("route_probabilities", [](const py::dict& s, const ModelParams& p, double nu) {
        return outcome_dict(route_probabilities(schedule_from(s), p, nu));
    });
    m.def("backload", [](const py::dict& s) { return schedule_dict(backload(schedule_from(s))); });
    m.def(
        "simulate",
        [](const py::dict& s, const ModelParams& p, double nu, long reps, std::uint64_t seed) {
            SimConfig sc;
            sc.reps = reps;
            sc.seed = seed;
            SimResult r = simulate(schedule_from(s), p, nu, sc);
            py::dict d;
            d["p_total"] = py::make_tuple(r.p_total.mean, r.p_total.std_err);
            d["p_initial_doing"] = py::make_tuple(r.p_initial_doing.mean, r.p_initial_doing.std_err);
            d["p_think_route"] = py::make_tuple(r.p_think_route.mean, r.p_think_route.std_err);
            d["p_hail_mary"] = py::make_tuple(r.p_hail_mary.mean, r.p_hail_mary.std_err);
            d["expected_work"] = py::make_tuple(r.expected_work.mean, r.expected_work.std_err);
            return d;
        },
        py::arg("schedule"), py::arg("params"), py::arg("nu"), py::arg("reps"),
        py::arg("seed") = 1);
    m.def("trajectory_probabilities", [](const py::dict& s, const ModelParams& p, double nu,
                                         const std::vector<double>& t) {
        py::list out;
        for (const auto& x : trajectory_probabilities(schedule_from(s), p, nu, t))
            out.append(py::make_tuple(x.t, x.p_progress, x.p_solution, x.p_neither));
        return out;
    });

    m.def("load_config", [](const std::string& path) { return emit_config(load_config(path)).dump(); },
          "Parse a run configuration and return its canonical JSON text.");
}
