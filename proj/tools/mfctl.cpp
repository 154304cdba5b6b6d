// mfctl: command line front end for the mean-field occupancy toolkit.
//
// Subcommands: validate, flow, simulate, dp, hjb, synthesize, converge.
// Errors print "error(<category>): <detail>" on stderr; parse errors exit
// with code 2, everything else with 1.

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "mfc/bounds.hpp"
#include "mfc/builtin.hpp"
#include "mfc/dp.hpp"
#include "mfc/error.hpp"
#include "mfc/hjb.hpp"
#include "mfc/io.hpp"
#include "mfc/meanfield.hpp"
#include "mfc/model.hpp"
#include "mfc/sim.hpp"

using json = nlohmann::json;
using namespace mfc;

namespace {

struct Opts {
    std::string model;
    std::vector<std::string> set;
    double T = 0.0;
    std::uint64_t seed = 1;
    std::string out;
    std::string format;
    std::string alpha_path;
    std::string const_list;
    std::string m0_list;
    std::int64_t N = 0;
    double h = 1e-3;
    int samples = 2000;
    std::int64_t dp_atom_cap = 2'000'000;
    std::int64_t conv_atom_cap = 2000;
    int grid = 40;
    int steps = 400;
    std::string n_list;
    int reps = 400;
    int nu_grid = 21;
    int threads = 1;
};

std::vector<std::pair<std::string, double>> parse_overrides(const std::vector<std::string>& entries) {
    std::vector<std::pair<std::string, double>> out;
    for (const std::string& e : entries) {
        auto eq = e.find('=');
        if (eq == std::string::npos || eq == 0)
            throw Error::config("bad --set entry '" + e + "'; expected name=value");
        std::string tail = e.substr(eq + 1);
        double v = 0.0;
        try {
            std::size_t pos = 0;
            v = std::stod(tail, &pos);
            if (pos != tail.size()) throw std::invalid_argument("trailing text");
        } catch (const std::exception&) {
            throw Error::config("bad --set value in '" + e + "'");
        }
        out.emplace_back(e.substr(0, eq), v);
    }
    return out;
}

std::vector<double> parse_list(const std::string& text, const char* what) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        try {
            std::size_t pos = 0;
            out.push_back(std::stod(cell, &pos));
            if (pos != cell.size()) throw std::invalid_argument("trailing text");
        } catch (const std::exception&) {
            throw Error::config(std::string("bad ") + what + " entry '" + cell + "'");
        }
    }
    if (out.empty()) throw Error::config(std::string(what) + " must not be empty");
    return out;
}

double effective_T(const ModelSpec& model, const CLI::App* cmd, double flag_T) {
    if (cmd->count("--T") > 0) return flag_T;
    if (model.has_param("T")) return model.param("T");
    throw Error::config("no --T given and the model declares no parameter 'T'");
}

// Series artifacts are csv, solver artifacts json; converge does both.
std::string pick_format(const Opts& o, const char* cmd, const char* def, bool both) {
    std::string fmt = o.format.empty() ? def : o.format;
    if (both) {
        if (fmt != "csv" && fmt != "json")
            throw Error::config(std::string(cmd) + " supports --format csv or json");
    } else if (fmt != def) {
        throw Error::config(std::string(cmd) + " writes " + def + " only");
    }
    return fmt;
}

void with_output(const std::string& out, const std::function<void(std::ostream&)>& fn) {
    if (out.empty()) {
        fn(std::cout);
        return;
    }
    std::ofstream f(out);
    if (!f) throw Error::io("cannot open output file '" + out + "'");
    fn(f);
}

json base_config(const Opts& o, const std::vector<std::pair<std::string, double>>& overrides) {
    json set = json::object();
    for (const auto& [k, v] : overrides) set[k] = v;
    json cfg;
    cfg["model"] = o.model;
    cfg["seed"] = o.seed;
    cfg["set"] = std::move(set);
    return cfg;
}

ActionFunction resolve_alpha(const CLI::App* cmd, const Opts& o, double T) {
    bool has_alpha = cmd->count("--alpha") > 0;
    bool has_const = cmd->count("--const") > 0;
    if (has_alpha == has_const) throw Error::config("pass exactly one of --alpha and --const");
    if (has_alpha) {
        std::ifstream f(o.alpha_path);
        if (!f) throw Error::io("cannot open action file '" + o.alpha_path + "'");
        std::stringstream ss;
        ss << f.rdbuf();
        return read_action_function_csv(ss.str());
    }
    std::vector<double> vals = parse_list(o.const_list, "--const");
    Eigen::VectorXd a = Eigen::Map<Eigen::VectorXd>(vals.data(), static_cast<long>(vals.size()));
    return ActionFunction::constant(ActionValue(a), T);
}

Eigen::VectorXd resolve_m0(const CLI::App* cmd, const Opts& o, const ModelSpec& model) {
    if (cmd->count("--m0") == 0) return builtin_initial(model);
    std::vector<double> vals = parse_list(o.m0_list, "--m0");
    if (vals.size() != model.states().size())
        throw Error::config("--m0 needs one entry per state");
    return Eigen::Map<Eigen::VectorXd>(vals.data(), static_cast<long>(vals.size()));
}

void record_control(json& cfg, const CLI::App* cmd, const Opts& o) {
    if (cmd->count("--alpha") > 0)
        cfg["alpha"] = o.alpha_path;
    else
        cfg["const"] = o.const_list;
}

int run_validate(const Opts& o) {
    ModelSpec model = resolve_model(o.model, parse_overrides(o.set));
    ValidationReport rep = validate_model(model, o.samples, o.seed);
    std::cout << "model: " << o.model << "\n";
    std::cout << "samples: " << rep.samples << "\n";
    std::cout << "max_row_sum: " << format_double(rep.max_row_sum) << " (rate_cap "
              << format_double(model.rate_cap()) << ")\n";
    std::cout << "worst_rate: " << format_double(rep.worst_rate) << "\n";
    std::cout << "max_abs_reward: " << format_double(rep.max_abs_reward) << "\n";
    std::cout << "lipschitz estimates: f_m " << format_double(rep.lip_f_m) << ", f_a "
              << format_double(rep.lip_f_a) << ", r_m " << format_double(rep.lip_r_m)
              << ", r_a " << format_double(rep.lip_r_a) << "\n";
    for (const std::string& v : rep.violations) std::cout << "violation: " << v << "\n";
    if (rep.passed()) {
        std::cout << "result: passed\n";
        return 0;
    }
    std::cout << "result: failed (" << rep.violations.size() << " violations)\n";
    return 1;
}

int run_flow(const Opts& o, const CLI::App* cmd) {
    pick_format(o, "flow", "csv", false);
    auto overrides = parse_overrides(o.set);
    ModelSpec model = resolve_model(o.model, overrides);
    double T = effective_T(model, cmd, o.T);
    ActionFunction alpha = resolve_alpha(cmd, o, T);
    Eigen::VectorXd m0 = resolve_m0(cmd, o, model);
    SampledPath path = integrate_flow(model, m0, alpha, T, o.h);
    json cfg = base_config(o, overrides);
    cfg["T"] = T;
    cfg["h"] = o.h;
    record_control(cfg, cmd, o);
    with_output(o.out, [&](std::ostream& os) { write_flow_csv(os, model, path, alpha, cfg.dump()); });
    return 0;
}

int run_simulate(const Opts& o, const CLI::App* cmd) {
    pick_format(o, "simulate", "csv", false);
    auto overrides = parse_overrides(o.set);
    ModelSpec model = resolve_model(o.model, overrides);
    double T = effective_T(model, cmd, o.T);
    ActionFunction alpha = resolve_alpha(cmd, o, T);
    Eigen::VectorXd m0 = resolve_m0(cmd, o, model);
    OccupancyMeasure m0N = grain_measure(m0, o.N);
    Trajectory traj = simulate(model, o.N, Policy::open_loop(alpha), m0N, T, o.seed);
    json cfg = base_config(o, overrides);
    cfg["T"] = T;
    cfg["N"] = o.N;
    record_control(cfg, cmd, o);
    with_output(o.out,
                [&](std::ostream& os) { write_trajectory_csv(os, model, traj, cfg.dump()); });
    return 0;
}

int run_dp(const Opts& o, const CLI::App* cmd) {
    pick_format(o, "dp", "json", false);
    auto overrides = parse_overrides(o.set);
    ModelSpec model = resolve_model(o.model, overrides);
    double T = effective_T(model, cmd, o.T);
    OccupancyIndex index(o.N, static_cast<int>(model.states().size()), o.dp_atom_cap);
    DPSolution sol = backward_induction(model, index, T, o.threads);
    json cfg = base_config(o, overrides);
    cfg["T"] = T;
    cfg["N"] = o.N;
    cfg["atom_cap"] = o.dp_atom_cap;
    with_output(o.out, [&](std::ostream& os) { os << dp_solution_json(model, index, sol, cfg.dump()); });
    return 0;
}

int run_hjb(const Opts& o, const CLI::App* cmd) {
    pick_format(o, "hjb", "json", false);
    auto overrides = parse_overrides(o.set);
    ModelSpec model = resolve_model(o.model, overrides);
    double T = effective_T(model, cmd, o.T);
    SimplexGrid grid(static_cast<int>(model.states().size()), o.grid);
    ValueField field = solve_hjb(model, grid, T, o.steps, o.threads);
    json cfg = base_config(o, overrides);
    cfg["T"] = T;
    cfg["grid"] = o.grid;
    cfg["steps"] = o.steps;
    with_output(o.out,
                [&](std::ostream& os) { os << value_field_json(model, grid, field, cfg.dump()); });
    return 0;
}

int run_synthesize(const Opts& o, const CLI::App* cmd) {
    pick_format(o, "synthesize", "csv", false);
    auto overrides = parse_overrides(o.set);
    ModelSpec model = resolve_model(o.model, overrides);
    double T = effective_T(model, cmd, o.T);
    SimplexGrid grid(static_cast<int>(model.states().size()), o.grid);
    ValueField field = solve_hjb(model, grid, T, o.steps, o.threads);
    Eigen::VectorXd m0 = resolve_m0(cmd, o, model);
    SynthesisResult syn = synthesize_action_function(model, grid, field, m0);
    json cfg = base_config(o, overrides);
    cfg["T"] = T;
    cfg["grid"] = o.grid;
    cfg["steps"] = o.steps;
    with_output(o.out,
                [&](std::ostream& os) { write_action_function_csv(os, syn.alpha, cfg.dump()); });
    return 0;
}

int run_converge(const Opts& o, const CLI::App* cmd) {
    std::string fmt = pick_format(o, "converge", "csv", true);
    auto overrides = parse_overrides(o.set);
    ModelSpec model = resolve_model(o.model, overrides);
    double T = effective_T(model, cmd, o.T);
    std::vector<std::int64_t> Ns;
    for (double v : parse_list(o.n_list, "--n-list")) {
        if (v < 1.0 || v != std::floor(v))
            throw Error::config("--n-list entries must be integers >= 1");
        Ns.push_back(static_cast<std::int64_t>(v));
    }
    Eigen::VectorXd m0 = resolve_m0(cmd, o, model);
    SimplexGrid grid(static_cast<int>(model.states().size()), o.grid);
    ValueField field = solve_hjb(model, grid, T, o.steps, o.threads);
    SynthesisResult syn = synthesize_action_function(model, grid, field, m0);
    ConvergenceReport rep = convergence_report(model, m0, syn.alpha, T, Ns, o.reps, o.seed,
                                               o.nu_grid, o.conv_atom_cap, o.threads);
    json cfg = base_config(o, overrides);
    cfg["T"] = T;
    cfg["n_list"] = Ns;
    cfg["reps"] = o.reps;
    cfg["grid"] = o.grid;
    cfg["steps"] = o.steps;
    cfg["nu_grid"] = o.nu_grid;
    cfg["atom_cap"] = o.conv_atom_cap;
    with_output(o.out, [&](std::ostream& os) {
        if (fmt == "csv")
            write_convergence_csv(os, rep, cfg.dump());
        else
            os << convergence_json(rep, cfg.dump());
    });
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"mean-field occupancy chain toolkit"};
    app.require_subcommand(1);
    Opts o;

    auto add_model = [&](CLI::App* cmd) {
        cmd->add_option("--model", o.model, "builtin:<name> or a model spec file")->required();
        cmd->add_option("--set", o.set, "override a model parameter (name=value, repeatable)");
        return cmd;
    };
    auto add_run = [&](CLI::App* cmd) {
        cmd->add_option("--T", o.T, "horizon (falls back to the model's T parameter)");
        cmd->add_option("--seed", o.seed, "rng seed");
        cmd->add_option("--out", o.out, "output file (default stdout)");
        cmd->add_option("--format", o.format, "output format");
        cmd->add_option("--threads", o.threads, "worker thread count");
        return cmd;
    };
    auto add_control = [&](CLI::App* cmd) {
        cmd->add_option("--alpha", o.alpha_path, "piecewise-constant action csv");
        cmd->add_option("--const", o.const_list, "constant action, comma separated");
        return cmd;
    };
    auto add_m0 = [&](CLI::App* cmd) {
        cmd->add_option("--m0", o.m0_list, "initial measure, comma separated (default builtin)");
        return cmd;
    };

    CLI::App* validate = add_model(app.add_subcommand("validate", "check a model on sampled (m, a) pairs"));
    validate->add_option("--samples", o.samples, "validation sample count");
    validate->add_option("--seed", o.seed, "rng seed");

    CLI::App* flow = add_m0(add_control(add_run(add_model(
        app.add_subcommand("flow", "integrate the deterministic mean-field flow")))));
    flow->set_help_flag("--help", "print this help message and exit");
    flow->add_option("--h", o.h, "integration step");

    CLI::App* simulate_cmd = add_m0(add_control(add_run(add_model(
        app.add_subcommand("simulate", "sample one N-object trajectory")))));
    simulate_cmd->add_option("--N", o.N, "population size")->required();

    CLI::App* dp = add_run(add_model(
        app.add_subcommand("dp", "exact optimal values by backward induction")));
    dp->add_option("--N", o.N, "population size")->required();
    dp->add_option("--atom-cap", o.dp_atom_cap, "occupancy atom budget");

    CLI::App* hjb = add_run(add_model(
        app.add_subcommand("hjb", "limit value field on a simplex grid")));
    hjb->add_option("--grid", o.grid, "simplex grid resolution");
    hjb->add_option("--steps", o.steps, "time slots");

    CLI::App* synthesize = add_m0(add_run(add_model(
        app.add_subcommand("synthesize", "greedy open-loop control from the value field"))));
    synthesize->add_option("--grid", o.grid, "simplex grid resolution");
    synthesize->add_option("--steps", o.steps, "time slots");

    CLI::App* converge = add_m0(add_run(add_model(
        app.add_subcommand("converge", "convergence table with certified bounds"))));
    converge->add_option("--n-list", o.n_list, "population sizes, comma separated")->required();
    converge->add_option("--reps", o.reps, "Monte Carlo replications per row");
    converge->add_option("--grid", o.grid, "simplex grid resolution");
    converge->add_option("--steps", o.steps, "time slots");
    converge->add_option("--nu-grid", o.nu_grid, "constant-action candidate count");
    converge->add_option("--atom-cap", o.conv_atom_cap, "exact-solve atom budget");

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error(parse): " << e.what() << "\n";
        return 2;
    }

    try {
        if (app.got_subcommand(validate)) return run_validate(o);
        if (app.got_subcommand(flow)) return run_flow(o, flow);
        if (app.got_subcommand(simulate_cmd)) return run_simulate(o, simulate_cmd);
        if (app.got_subcommand(dp)) return run_dp(o, dp);
        if (app.got_subcommand(hjb)) return run_hjb(o, hjb);
        if (app.got_subcommand(synthesize)) return run_synthesize(o, synthesize);
        if (app.got_subcommand(converge)) return run_converge(o, converge);
    } catch (const Error& e) {
        std::cerr << "error(" << error_category(e.kind()) << "): " << e.what() << "\n";
        return e.kind() == ErrorKind::parse ? 2 : 1;
    } catch (const std::exception& e) {
        std::cerr << "error(internal): " << e.what() << "\n";
        return 1;
    }
    return 0;
}
