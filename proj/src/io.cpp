#include "mfc/io.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <ctime>
#include <fstream>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "mfc/builtin.hpp"

namespace mfc {

using json = nlohmann::json;

std::string format_double(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[40];
    for (int prec = 1; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof buf, "%.*g", prec, x);
        if (std::strtod(buf, nullptr) == x) break;
    }
    return buf;
}

namespace {

double require_number(const json& j, const std::string& where) {
    if (!j.is_number()) throw Error::config(where + " must be a number");
    return j.get<double>();
}

Expr parse_expr_field(const json& j, const std::string& where) {
    if (!j.is_string()) throw Error::config(where + " must be an expression string");
    try {
        return parse_expr(j.get<std::string>());
    } catch (const Error& e) {
        throw Error(e.kind(), where + ": " + e.what());
    }
}

ActionSpace parse_action_space(const json& j) {
    if (!j.is_object() || !j.contains("type"))
        throw Error::config("actions must be an object with a type");
    std::string type = j.at("type").get<std::string>();
    if (type == "finite") {
        if (!j.contains("values") || !j.at("values").is_array() || j.at("values").empty())
            throw Error::config("finite actions need a nonempty values array");
        std::vector<ActionValue> values;
        for (const json& row : j.at("values")) {
            if (!row.is_array() || row.empty())
                throw Error::config("each finite action must be an array of numbers");
            Eigen::VectorXd v(static_cast<int>(row.size()));
            int i = 0;
            for (const json& x : row) v[i++] = require_number(x, "actions.values");
            values.push_back(ActionValue(v));
        }
        return ActionSpace::finite(std::move(values));
    }
    if (type == "box") {
        if (!j.contains("bounds") || !j.at("bounds").is_array() || j.at("bounds").empty())
            throw Error::config("box actions need a bounds array of [lo, hi] pairs");
        const json& bounds = j.at("bounds");
        Eigen::VectorXd lo(static_cast<int>(bounds.size()));
        Eigen::VectorXd hi(static_cast<int>(bounds.size()));
        int i = 0;
        for (const json& pair : bounds) {
            if (!pair.is_array() || pair.size() != 2)
                throw Error::config("each box bound must be a [lo, hi] pair");
            lo[i] = require_number(pair[0], "actions.bounds");
            hi[i] = require_number(pair[1], "actions.bounds");
            ++i;
        }
        std::vector<int> steps;
        if (!j.contains("steps") || !j.at("steps").is_array() ||
            j.at("steps").size() != bounds.size())
            throw Error::config("box actions need one steps entry per axis");
        for (const json& s : j.at("steps"))
            steps.push_back(static_cast<int>(require_number(s, "actions.steps")));
        return ActionSpace::box(std::move(lo), std::move(hi), std::move(steps));
    }
    if (type == "simplex") {
        if (!j.contains("dim") || !j.contains("steps"))
            throw Error::config("simplex actions need dim and steps");
        return ActionSpace::simplex(static_cast<int>(require_number(j.at("dim"), "actions.dim")),
                                    static_cast<int>(require_number(j.at("steps"),
                                                                    "actions.steps")));
    }
    throw Error::config("unknown action space type '" + type + "'");
}

json action_space_to_json(const ActionSpace& a) {
    json j;
    switch (a.type()) {
        case ActionSpace::Type::finite: {
            j["type"] = "finite";
            json values = json::array();
            for (const ActionValue& v : a.finite_values()) {
                json row = json::array();
                for (int i = 0; i < v.dim(); ++i) row.push_back(v.v[i]);
                values.push_back(std::move(row));
            }
            j["values"] = std::move(values);
            break;
        }
        case ActionSpace::Type::box: {
            j["type"] = "box";
            json bounds = json::array();
            for (int i = 0; i < a.lo().size(); ++i)
                bounds.push_back(json::array({a.lo()[i], a.hi()[i]}));
            j["bounds"] = std::move(bounds);
            j["steps"] = a.steps();
            break;
        }
        case ActionSpace::Type::simplex:
            j["type"] = "simplex";
            j["dim"] = a.simplex_dim();
            j["steps"] = a.simplex_steps();
            break;
    }
    return j;
}

std::string iso_timestamp() {
    std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void write_preamble(std::ostream& os, const std::string& config_json) {
    os << "# config: " << config_json << "\n";
    os << "# generated: " << iso_timestamp() << "\n";
}

json parse_config(const std::string& config_json) {
    json j = json::parse(config_json, nullptr, false);
    if (j.is_discarded()) return config_json; // keep opaque text rather than fail
    return j;
}

} // namespace

ModelSpec parse_model_spec(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw Error::parse(e.what());
    }
    if (!doc.is_object()) throw Error::config("model document must be a JSON object");
    for (const char* field : {"states", "actions", "rates", "reward", "rate_cap"})
        if (!doc.contains(field))
            throw Error::config(std::string("model document is missing '") + field + "'");

    std::vector<std::string> states;
    if (!doc.at("states").is_array()) throw Error::config("states must be an array");
    for (const json& s : doc.at("states")) {
        if (!s.is_string()) throw Error::config("states must be an array of names");
        states.push_back(s.get<std::string>());
    }

    ActionSpace actions = parse_action_space(doc.at("actions"));

    std::vector<std::pair<std::string, double>> params;
    if (doc.contains("params")) {
        if (!doc.at("params").is_object()) throw Error::config("params must be an object");
        for (const auto& [name, value] : doc.at("params").items())
            params.emplace_back(name, require_number(value, "params." + name));
    }

    std::vector<RateRule> rates;
    if (!doc.at("rates").is_array()) throw Error::config("rates must be an array");
    int rule_idx = 0;
    for (const json& r : doc.at("rates")) {
        if (!r.is_object() || !r.contains("from") || !r.contains("to") || !r.contains("expr"))
            throw Error::config("each rate rule needs from, to and expr");
        std::string where = "rates[" + std::to_string(rule_idx++) + "].expr";
        rates.push_back({r.at("from").get<std::string>(), r.at("to").get<std::string>(),
                         parse_expr_field(r.at("expr"), where)});
    }

    Expr reward = parse_expr_field(doc.at("reward"), "reward");
    std::optional<Expr> terminal;
    if (doc.contains("terminal_reward"))
        terminal = parse_expr_field(doc.at("terminal_reward"), "terminal_reward");

    double rate_cap = require_number(doc.at("rate_cap"), "rate_cap");
    return ModelSpec(std::move(states), std::move(actions), std::move(params), std::move(rates),
                     std::move(reward), std::move(terminal), rate_cap);
}

ModelSpec load_model_spec(const std::string& path) {
    std::ifstream f(path);
    if (!f.good()) throw Error::io("cannot open model file '" + path + "'");
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_model_spec(ss.str());
}

std::string serialize_model_spec(const ModelSpec& model) {
    json doc;
    doc["states"] = model.states();
    doc["actions"] = action_space_to_json(model.actions());
    json params = json::object();
    for (size_t i = 0; i < model.param_names().size(); ++i)
        params[model.param_names()[i]] = model.param_values()[static_cast<Eigen::Index>(i)];
    doc["params"] = std::move(params);
    json rates = json::array();
    for (const RateRule& r : model.rate_rules())
        rates.push_back({{"from", r.from}, {"to", r.to}, {"expr", expr_to_string(r.expr)}});
    doc["rates"] = std::move(rates);
    doc["reward"] = expr_to_string(model.reward_ast());
    if (model.terminal_ast()) doc["terminal_reward"] = expr_to_string(*model.terminal_ast());
    doc["rate_cap"] = model.rate_cap();
    return doc.dump(2) + "\n";
}

ModelSpec resolve_model(const std::string& ref,
                        const std::vector<std::pair<std::string, double>>& overrides) {
    const std::string prefix = "builtin:";
    if (ref.rfind(prefix, 0) == 0) return builtin_model(ref.substr(prefix.size()), overrides);
    ModelSpec model = load_model_spec(ref);
    for (const auto& [name, value] : overrides) {
        if (!model.has_param(name))
            throw Error::config("model declares no parameter '" + name + "'");
        model = model.with_param(name, value);
    }
    return model;
}

// ---- CSV artifacts ----------------------------------------------------------

void write_trajectory_csv(std::ostream& os, const ModelSpec& model, const Trajectory& traj,
                          const std::string& config_json) {
    write_preamble(os, config_json);
    const int adim = traj.actions.empty() ? static_cast<int>(traj.terminal_action.size())
                                          : static_cast<int>(traj.actions.front().size());
    os << "slot,t";
    for (int i = 0; i < adim; ++i) os << ",action_" << i;
    os << ",delta";
    for (const std::string& s : model.states()) os << ",m_" << s;
    os << "\n";
    const std::int64_t H = traj.slots();
    for (std::int64_t k = 0; k <= H; ++k) {
        const Eigen::VectorXd& a = k < H ? traj.actions[static_cast<size_t>(k)]
                                         : traj.terminal_action;
        os << k << "," << format_double(traj.time_of_slot(k));
        for (int i = 0; i < adim; ++i) os << "," << format_double(a[i]);
        os << "," << (k < H ? traj.transition_counts[static_cast<size_t>(k)] : 0);
        const Eigen::VectorXd& m = traj.measures[static_cast<size_t>(k)];
        for (int i = 0; i < m.size(); ++i) os << "," << format_double(m[i]);
        os << "\n";
    }
}

void write_flow_csv(std::ostream& os, const ModelSpec& model, const SampledPath& path,
                    const ActionFunction& alpha, const std::string& config_json) {
    write_preamble(os, config_json);
    os << "t";
    for (int i = 0; i < alpha.dim(); ++i) os << ",action_" << i;
    for (const std::string& s : model.states()) os << ",m_" << s;
    os << "\n";
    for (size_t k = 0; k < path.times.size(); ++k) {
        os << format_double(path.times[k]);
        ActionValue a = alpha.eval(path.times[k]);
        for (int i = 0; i < a.dim(); ++i) os << "," << format_double(a.v[i]);
        const Eigen::VectorXd& m = path.points[k];
        for (int i = 0; i < m.size(); ++i) os << "," << format_double(m[i]);
        os << "\n";
    }
}

void write_action_function_csv(std::ostream& os, const ActionFunction& alpha,
                               const std::string& config_json) {
    write_preamble(os, config_json);
    os << "t_start,t_end";
    for (int i = 0; i < alpha.dim(); ++i) os << ",action_" << i;
    os << "\n";
    for (const ActionFunction::Piece& p : alpha.pieces()) {
        os << format_double(p.t0) << "," << format_double(p.t1);
        for (int i = 0; i < p.a0.size(); ++i) os << "," << format_double(p.a0[i]);
        os << "\n";
    }
}

void write_mc_csv(std::ostream& os, const MonteCarloValue& mc, const std::string& config_json) {
    write_preamble(os, config_json);
    os << "rep,value\n";
    for (size_t i = 0; i < mc.values.size(); ++i)
        os << i << "," << format_double(mc.values[i]) << "\n";
    os << "# mean: " << format_double(mc.mean) << "\n";
    os << "# stderr: " << format_double(mc.std_error) << "\n";
}

void write_convergence_csv(std::ostream& os, const ConvergenceReport& report,
                           const std::string& config_json) {
    write_preamble(os, config_json);
    os << "N,V_N_star,V_N_alpha_star,stderr_alpha,heuristic_value,stderr_heur,best_nu,"
          "v_star,bound_B,bound_Bprime\n";
    for (const ConvergenceRow& r : report.rows) {
        os << format_double(r.N) << ",";
        if (r.V_N_star) os << format_double(*r.V_N_star);
        os << "," << format_double(r.V_N_alpha_star) << "," << format_double(r.stderr_alpha)
           << "," << format_double(r.heuristic_value) << "," << format_double(r.stderr_heur)
           << "," << format_double(r.best_nu) << "," << format_double(r.v_star) << ","
           << format_double(r.bound_B) << "," << format_double(r.bound_Bprime) << "\n";
    }
}

ActionFunction read_action_function_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    std::vector<ActionFunction::Piece> pieces;
    bool first_content = true;
    while (std::getline(in, line)) {
        while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (first_content) {
            first_content = false;
            char* end = nullptr;
            std::strtod(cells[0].c_str(), &end);
            if (end == cells[0].c_str()) continue; // header row
        }
        if (cells.size() < 3)
            throw Error::parse("action row needs t_start, t_end and at least one component");
        std::vector<double> nums;
        for (const std::string& c : cells) {
            char* end = nullptr;
            double v = std::strtod(c.c_str(), &end);
            if (end == c.c_str() || *end != '\0')
                throw Error::parse("bad number '" + c + "' in action row");
            nums.push_back(v);
        }
        Eigen::VectorXd a(static_cast<int>(nums.size()) - 2);
        for (int i = 0; i < a.size(); ++i) a[i] = nums[static_cast<size_t>(i) + 2];
        pieces.push_back({nums[0], nums[1], a, a});
    }
    if (pieces.empty()) throw Error::parse("no action rows found");
    return ActionFunction::from_pieces(std::move(pieces));
}

// ---- JSON artifacts ---------------------------------------------------------

std::string value_field_json(const ModelSpec& model, const SimplexGrid& grid,
                             const ValueField& field, const std::string& config_json) {
    json j;
    j["grid"] = grid.G();
    j["steps"] = field.K;
    j["T"] = field.horizon_T;
    j["cfl_warning"] = field.cfl_warning;
    j["states"] = model.states();
    json actions = json::array();
    for (const ActionValue& a : field.action_set) {
        json row = json::array();
        for (int i = 0; i < a.dim(); ++i) row.push_back(a.v[i]);
        actions.push_back(std::move(row));
    }
    j["actions"] = std::move(actions);
    json nodes = json::array(), values = json::array(), greedy = json::array();
    for (std::int64_t n = 0; n < grid.size(); ++n) {
        json counts = json::array();
        for (int i = 0; i < grid.S(); ++i) counts.push_back(grid.nodes()[n][i]);
        nodes.push_back(std::move(counts));
        values.push_back(field.values(n, 0));
        greedy.push_back(field.greedy(n, 0));
    }
    j["nodes"] = std::move(nodes);
    j["values"] = std::move(values);
    j["greedy"] = std::move(greedy);
    j["config"] = parse_config(config_json);
    j["generated"] = iso_timestamp();
    return j.dump(2) + "\n";
}

std::string dp_solution_json(const ModelSpec& model, const OccupancyIndex& index,
                             const DPSolution& sol, const std::string& config_json) {
    json j;
    j["N"] = sol.N;
    j["T"] = sol.horizon_T;
    j["H"] = sol.H;
    j["states"] = model.states();
    json actions = json::array();
    for (const ActionValue& a : sol.action_set) {
        json row = json::array();
        for (int i = 0; i < a.dim(); ++i) row.push_back(a.v[i]);
        actions.push_back(std::move(row));
    }
    j["actions"] = std::move(actions);
    json atoms = json::array(), values = json::array(), greedy = json::array();
    for (std::int64_t n = 0; n < index.size(); ++n) {
        json counts = json::array();
        for (int i = 0; i < index.S(); ++i) counts.push_back(index.counts(n)[i]);
        atoms.push_back(std::move(counts));
        values.push_back(sol.values(n, 0));
        greedy.push_back(sol.greedy(n, 0));
    }
    j["atoms"] = std::move(atoms);
    j["values"] = std::move(values);
    j["greedy"] = std::move(greedy);
    j["config"] = parse_config(config_json);
    j["generated"] = iso_timestamp();
    return j.dump(2) + "\n";
}

std::string convergence_json(const ConvergenceReport& report, const std::string& config_json) {
    json rows = json::array();
    for (const ConvergenceRow& r : report.rows) {
        json row;
        row["N"] = r.N;
        if (r.V_N_star)
            row["V_N_star"] = *r.V_N_star;
        else
            row["V_N_star"] = nullptr;
        row["V_N_alpha_star"] = r.V_N_alpha_star;
        row["stderr_alpha"] = r.stderr_alpha;
        row["heuristic_value"] = r.heuristic_value;
        row["stderr_heur"] = r.stderr_heur;
        row["best_nu"] = r.best_nu;
        row["v_star"] = r.v_star;
        row["bound_B"] = r.bound_B;
        row["bound_Bprime"] = r.bound_Bprime;
        rows.push_back(std::move(row));
    }
    json j;
    j["rows"] = std::move(rows);
    j["config"] = parse_config(config_json);
    j["generated"] = iso_timestamp();
    return j.dump(2) + "\n";
}

} // namespace mfc
