#include "dblab/config.hpp"

#include "dblab/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace dblab {

using nlohmann::json;

namespace {

// Object block with a fixed key set; unknown keys are rejected so typos surface.
class Block {
public:
    Block(const json& j, std::string name, std::set<std::string> allowed)
        : j_(j), name_(std::move(name)) {
        if (!j.is_object()) throw ConfigError("'" + name_ + "' must be an object");
        for (auto it = j.begin(); it != j.end(); ++it)
            if (!allowed.count(it.key()))
                throw ConfigError("unknown key '" + name_ + "." + it.key() + "'");
    }

    bool has(const std::string& k) const { return j_.contains(k) && !j_.at(k).is_null(); }

    double number(const std::string& k) const {
        if (!has(k)) throw ConfigError("missing '" + name_ + "." + k + "'");
        return number_at(k);
    }
    double number(const std::string& k, double fallback) const {
        return has(k) ? number_at(k) : fallback;
    }
    std::optional<double> optional_number(const std::string& k) const {
        if (!has(k)) return std::nullopt;
        return number_at(k);
    }
    long integer(const std::string& k, long fallback) const {
        if (!has(k)) return fallback;
        const json& v = j_.at(k);
        if (!v.is_number_integer()) throw ConfigError("'" + name_ + "." + k + "' must be an integer");
        return v.get<long>();
    }
    std::uint64_t unsigned_integer(const std::string& k, std::uint64_t fallback) const {
        if (!has(k)) return fallback;
        const json& v = j_.at(k);
        if (!v.is_number_integer() || (!v.is_number_unsigned() && v.get<long long>() < 0))
            throw ConfigError("'" + name_ + "." + k + "' must be a non-negative integer");
        return v.get<std::uint64_t>();
    }
    bool boolean(const std::string& k, bool fallback) const {
        if (!has(k)) return fallback;
        const json& v = j_.at(k);
        if (!v.is_boolean()) throw ConfigError("'" + name_ + "." + k + "' must be a boolean");
        return v.get<bool>();
    }
    std::string string(const std::string& k, const std::string& fallback) const {
        if (!has(k)) return fallback;
        const json& v = j_.at(k);
        if (!v.is_string()) throw ConfigError("'" + name_ + "." + k + "' must be a string");
        return v.get<std::string>();
    }
    std::vector<double> numbers(const std::string& k) const {
        std::vector<double> out;
        if (!has(k)) return out;
        const json& v = j_.at(k);
        if (v.is_string()) return parse_range(v.get<std::string>());
        if (!v.is_array()) throw ConfigError("'" + name_ + "." + k + "' must be an array");
        for (const auto& x : v) {
            if (!x.is_number()) throw ConfigError("'" + name_ + "." + k + "' must hold numbers");
            out.push_back(x.get<double>());
        }
        return out;
    }
    std::vector<std::string> strings(const std::string& k, std::vector<std::string> fallback) const {
        if (!has(k)) return fallback;
        const json& v = j_.at(k);
        if (!v.is_array()) throw ConfigError("'" + name_ + "." + k + "' must be an array");
        std::vector<std::string> out;
        for (const auto& x : v) {
            if (!x.is_string()) throw ConfigError("'" + name_ + "." + k + "' must hold strings");
            out.push_back(x.get<std::string>());
        }
        return out;
    }

private:
    double number_at(const std::string& k) const {
        const json& v = j_.at(k);
        if (!v.is_number()) throw ConfigError("'" + name_ + "." + k + "' must be a number");
        return v.get<double>();
    }

    const json& j_;
    std::string name_;
};

const json& sub(const json& j, const char* key) {
    static const json empty = json::object();
    return j.contains(key) ? j.at(key) : empty;
}

json opt_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

std::vector<double> parse_range(const std::string& spec) {
    double a, b, step;
    char c1, c2;
    std::istringstream in(spec);
    if (!(in >> a >> c1 >> b >> c2 >> step) || c1 != ':' || c2 != ':' || !in.eof())
        throw ConfigError("grid must look like a:b:step, got '" + spec + "'");
    if (!(step > 0.0) || b < a) throw ConfigError("grid '" + spec + "' needs step > 0 and a <= b");
    long n = static_cast<long>(std::floor((b - a) / step + 1e-9));
    if (n > 1000000) throw ConfigError("grid '" + spec + "' has too many points");
    std::vector<double> out;
    for (long i = 0; i <= n; ++i) out.push_back(a + static_cast<double>(i) * step);
    return out;
}

json emit_model(const ProgressModel& m) {
    json j;
    j["family"] = family_name(m.family());
    std::visit(
        [&](const auto& p) {
            using P = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<P, SafeArm>) {
                j["nu"] = p.nu, j["B_nu"] = p.B_nu, j["c_nu"] = p.c_nu;
            } else if constexpr (std::is_same_v<P, RiskyArm>) {
                j["p_bar_nu"] = p.p_bar_nu, j["nu"] = p.nu, j["B_nu"] = p.B_nu, j["c_nu"] = p.c_nu;
            } else if constexpr (std::is_same_v<P, TimeVarying>) {
                j["nu"] = p.nu, j["alpha"] = p.alpha, j["beta"] = p.beta, j["B"] = p.B;
                j["c"] = p.c;
            } else if constexpr (std::is_same_v<P, PayoffStream>) {
                j["nu"] = p.nu, j["B_nu"] = p.B_nu;
            } else {
                j["tau"] = p.tau, j["value"] = p.value;
            }
        },
        m.params());
    return j;
}

ProgressModel parse_model(const json& j) {
    if (!j.is_object() || !j.contains("family") || !j.at("family").is_string())
        throw ConfigError("'model.family' is required");
    Family f;
    try {
        f = family_from_name(j.at("family").get<std::string>());
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    switch (f) {
        case Family::SafeArm: {
            Block b(j, "model", {"family", "nu", "B_nu", "c_nu"});
            return ProgressModel::safe_arm(b.number("nu"), b.number("B_nu"), b.number("c_nu", 0.0));
        }
        case Family::RiskyArm: {
            Block b(j, "model", {"family", "p_bar_nu", "nu", "B_nu", "c_nu"});
            return ProgressModel::risky_arm(b.number("p_bar_nu"), b.number("nu"), b.number("B_nu"),
                                            b.number("c_nu", 0.0));
        }
        case Family::TimeVarying: {
            Block b(j, "model", {"family", "nu", "alpha", "beta", "B", "c"});
            return ProgressModel::time_varying(b.number("nu"), b.number("alpha"), b.number("beta"),
                                               b.number("B"), b.number("c", 0.0));
        }
        case Family::PayoffStream: {
            Block b(j, "model", {"family", "nu", "B_nu"});
            return ProgressModel::payoff_stream(b.number("nu"), b.number("B_nu"));
        }
        case Family::Tabulated: {
            Block b(j, "model", {"family", "tau", "value"});
            return ProgressModel::tabulated(b.numbers("tau"), b.numbers("value"));
        }
    }
    throw ConfigError("unsupported model family");
}

RunConfig parse_config(const json& j) {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    Block top(j, "config",
              {"agent", "model", "solver", "oracle", "sim", "sweep", "outcomes", "trajectory"});
    if (!top.has("agent")) throw ConfigError("missing 'agent' block");
    if (!top.has("model")) throw ConfigError("missing 'model' block");

    RunConfig cfg;
    Block a(j.at("agent"), "agent", {"p_bar", "lambda", "mu", "c", "B", "T"});
    cfg.agent = {a.number("p_bar"), a.number("lambda"), a.number("mu"), a.number("c"),
                 a.number("B"), a.number("T")};
    cfg.agent.check();
    cfg.model = parse_model(j.at("model"));

    Block s(sub(j, "solver"), "solver", {"tau_tol", "root_tol", "search_ceiling"});
    cfg.tau_tol = s.number("tau_tol", cfg.tau_tol);
    cfg.root_tol = s.number("root_tol", cfg.root_tol);
    cfg.search_ceiling = s.optional_number("search_ceiling");
    if (!(cfg.tau_tol > 0.0) || !(cfg.root_tol > 0.0))
        throw ConfigError("solver tolerances must be > 0");
    if (cfg.search_ceiling && !(*cfg.search_ceiling > 0.0))
        throw ConfigError("solver.search_ceiling must be > 0");

    Block o(sub(j, "oracle"), "oracle", {"kind", "dt", "action_set", "idle_enabled", "window"});
    cfg.oracle.kind = o.string("kind", cfg.oracle.kind);
    if (cfg.oracle.kind != "reduced" && cfg.oracle.kind != "two_stage" &&
        cfg.oracle.kind != "no_feedback")
        throw ConfigError("oracle.kind must be reduced, two_stage or no_feedback");
    cfg.oracle.dt = o.number("dt", cfg.oracle.dt);
    cfg.oracle.action_set = o.strings("action_set", cfg.oracle.action_set);
    for (const auto& act : cfg.oracle.action_set)
        if (act != "DO" && act != "THINK" && act != "IDLE" && act != "MIX")
            throw ConfigError("unknown action '" + act + "' in oracle.action_set");
    auto has_act = [&](const char* n) {
        return std::find(cfg.oracle.action_set.begin(), cfg.oracle.action_set.end(), n) !=
               cfg.oracle.action_set.end();
    };
    if (!has_act("DO") || !has_act("THINK"))
        throw ConfigError("oracle.action_set must contain DO and THINK");
    cfg.oracle.idle_enabled = o.boolean("idle_enabled", has_act("IDLE"));
    cfg.oracle.window = o.number("window", cfg.oracle.window);
    if (!(cfg.oracle.window > 0.0)) throw ConfigError("oracle.window must be > 0");
    // Canonical action set: sorted, IDLE carried by idle_enabled alone.
    std::vector<std::string> canon{"DO", "THINK"};
    if (has_act("MIX")) canon.push_back("MIX");
    cfg.oracle.action_set = canon;

    Block sim(sub(j, "sim"), "sim", {"reps", "seed"});
    cfg.reps = sim.integer("reps", cfg.reps);
    cfg.seed = sim.unsigned_integer("seed", cfg.seed);
    if (cfg.reps < 1) throw ConfigError("sim.reps must be >= 1");

    Block sw(sub(j, "sweep"), "sweep", {"variable", "grid"});
    cfg.sweep.variable = sw.string("variable", cfg.sweep.variable);
    sweep_variable_from_name(cfg.sweep.variable);
    cfg.sweep.grid = sw.numbers("grid");

    Block oc(sub(j, "outcomes"), "outcomes", {"conversion_rate"});
    cfg.conversion_rate = oc.optional_number("conversion_rate");
    if (cfg.conversion_rate && !(*cfg.conversion_rate > 0.0))
        throw ConfigError("outcomes.conversion_rate must be > 0");

    Block tr(sub(j, "trajectory"), "trajectory", {"points"});
    cfg.trajectory_points = static_cast<int>(tr.integer("points", cfg.trajectory_points));
    if (cfg.trajectory_points < 2) throw ConfigError("trajectory.points must be >= 2");
    return cfg;
}

json emit_config(const RunConfig& cfg) {
    json j;
    j["agent"] = {{"p_bar", cfg.agent.p_bar}, {"lambda", cfg.agent.lambda},
                  {"mu", cfg.agent.mu},       {"c", cfg.agent.c},
                  {"B", cfg.agent.B},         {"T", cfg.agent.T}};
    j["model"] = emit_model(cfg.model);
    j["solver"] = {{"tau_tol", cfg.tau_tol},
                   {"root_tol", cfg.root_tol},
                   {"search_ceiling", opt_json(cfg.search_ceiling)}};
    j["oracle"] = {{"kind", cfg.oracle.kind},
                   {"dt", cfg.oracle.dt},
                   {"action_set", cfg.oracle.action_set},
                   {"idle_enabled", cfg.oracle.idle_enabled},
                   {"window", cfg.oracle.window}};
    j["sim"] = {{"reps", cfg.reps}, {"seed", cfg.seed}};
    j["sweep"] = {{"variable", cfg.sweep.variable}, {"grid", cfg.sweep.grid}};
    j["outcomes"] = {{"conversion_rate", opt_json(cfg.conversion_rate)}};
    j["trajectory"] = {{"points", cfg.trajectory_points}};
    return j;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read config file '" + path + "'");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("config '" + path + "' is not valid JSON: " + e.what());
    }
    return parse_config(j);
}

SolverOptions RunConfig::solver_options() const {
    SolverOptions opt;
    opt.policy.tau_tol = tau_tol;
    opt.policy.root_tol = root_tol;
    opt.policy.search_ceiling = search_ceiling;
    return opt;
}

Grid RunConfig::grid() const {
    Grid g;
    g.dt = oracle.dt;
    g.idle = oracle.idle_enabled;
    g.mix = std::find(oracle.action_set.begin(), oracle.action_set.end(), "MIX") !=
            oracle.action_set.end();
    return g;
}

double RunConfig::nu() const { return conversion_rate ? *conversion_rate : dblab::conversion_rate(model); }

}  // namespace dblab
