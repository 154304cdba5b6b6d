#include "mfc/builtin.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mfc/error.hpp"
#include "mfc/expr.hpp"

namespace mfc {

ModelSpec pricing_model() {
    std::vector<RateRule> rates;
    rates.push_back({"U", "S", parse_expr("1 - a")});
    rates.push_back({"S", "U", parse_expr("a")});
    return ModelSpec({"U", "S"}, ActionSpace::finite_scalar({0.0, 1.0}), {{"T", 1.0}},
                     std::move(rates), parse_expr("m[S] * a"), std::nullopt, 1.0);
}

double pricing_analytic_action(double x, double t, double T) {
    double threshold = std::min(0.5, 1.0 - std::exp(-(T - t)));
    return x > threshold ? 1.0 : 0.0;
}

ModelSpec virus_model(const VirusParams& p) {
    std::vector<RateRule> rates;
    rates.push_back({"S", "I", parse_expr("beta * m[I]")});
    rates.push_back({"S", "R", parse_expr("q")});
    rates.push_back({"I", "R", parse_expr("b")});
    rates.push_back({"I", "D", parse_expr("a")});
    Eigen::VectorXd lo(1), hi(1);
    lo << 0.0;
    hi << p.vmax;
    double cap = std::max(p.beta + p.q, p.b + p.vmax);
    return ModelSpec({"S", "I", "R", "D"}, ActionSpace::box(lo, hi, {2}),
                     {{"beta", p.beta},
                      {"q", p.q},
                      {"b", p.b},
                      {"vmax", p.vmax},
                      {"w", p.w},
                      {"T", p.T}},
                     std::move(rates), parse_expr("w * m[I] * m[I]"), parse_expr("m[D]"), cap);
}

Eigen::VectorXd virus_experiment_initial() {
    Eigen::VectorXd m0(4);
    m0 << 0.70, 0.22, 0.08, 0.0;
    return m0;
}

ModelSpec broker_model(const BrokerParams& p) {
    const int C = p.C;
    if (C < 1) throw Error::validation("broker needs at least one cluster");
    if (static_cast<int>(p.J.size()) != C || static_cast<int>(p.q.size()) != C ||
        static_cast<int>(p.mu.size()) != C)
        throw Error::validation("broker J, q and mu must have one entry per cluster");
    double qsum = 0.0;
    for (int c = 0; c < C; ++c) {
        if (p.J[c] < 1) throw Error::validation("broker buffer capacity must be >= 1");
        if (!(p.q[c] > 0.0)) throw Error::validation("broker resource fractions must be positive");
        qsum += p.q[c];
    }
    if (std::fabs(p.m + qsum - 1.0) > 1e-9)
        throw Error::validation("broker user and resource fractions must sum to 1");

    std::vector<std::string> states{"off", "on"};
    for (int c = 1; c <= C; ++c) {
        for (int j = 0; j <= p.J[c - 1]; ++j)
            states.push_back("q" + std::to_string(c) + "_" + std::to_string(j));
        states.push_back("b" + std::to_string(c));
    }

    std::vector<std::pair<std::string, double>> params{
        {"p_i", p.p_i}, {"p_o", p.p_o}, {"p_s", p.p_s},  {"p_b", p.p_b},
        {"p_v", p.p_v}, {"gamma", p.gamma}, {"m", p.m}};
    for (int c = 1; c <= C; ++c) {
        params.emplace_back("q" + std::to_string(c), p.q[c - 1]);
        params.emplace_back("mu" + std::to_string(c), p.mu[c - 1]);
    }

    std::vector<RateRule> rates;
    rates.push_back({"off", "on", parse_expr("p_i")});
    rates.push_back({"on", "off", parse_expr("p_o")});
    for (int c = 1; c <= C; ++c) {
        const std::string qc = "q" + std::to_string(c);
        const std::string bc = "b" + std::to_string(c);
        const std::string arrive =
            "a[" + std::to_string(c - 1) + "] * p_s * m[on] / " + qc;
        const int J = p.J[c - 1];
        for (int j = 0; j <= J; ++j) {
            const std::string qj = qc + "_" + std::to_string(j);
            if (j < J)
                rates.push_back({qj, qc + "_" + std::to_string(j + 1), parse_expr(arrive)});
            if (j > 0)
                rates.push_back({qj, qc + "_" + std::to_string(j - 1),
                                 parse_expr("mu" + std::to_string(c))});
            rates.push_back({qj, bc, parse_expr("p_b")});
        }
        rates.push_back({bc, qc + "_0", parse_expr("p_v")});
    }

    // cost integrand: backlog plus gamma times the loss rate (submissions that
    // hit a full or broken resource, and queued jobs wiped by a breakage)
    std::string backlog;
    for (int c = 1; c <= C; ++c)
        for (int j = 1; j <= p.J[c - 1]; ++j) {
            if (!backlog.empty()) backlog += " + ";
            if (j > 1) backlog += std::to_string(j) + " * ";
            backlog += "m[q" + std::to_string(c) + "_" + std::to_string(j) + "]";
        }
    std::string loss;
    for (int c = 1; c <= C; ++c) {
        const std::string qc = "q" + std::to_string(c);
        if (!loss.empty()) loss += " + ";
        loss += "a[" + std::to_string(c - 1) + "] * p_s * m[on] / " + qc + " * (m[" + qc +
                "_" + std::to_string(p.J[c - 1]) + "] + m[b" + std::to_string(c) + "])";
    }
    loss += " + p_b * (" + backlog + ")";
    std::string cost = backlog + " + gamma * (" + loss + ")";

    double cap = std::max({p.p_i, p.p_o, p.p_v});
    for (int c = 0; c < C; ++c) cap = std::max(cap, p.p_s / p.q[c] + p.mu[c] + p.p_b);

    return ModelSpec(std::move(states), ActionSpace::simplex(C, 10), std::move(params),
                     std::move(rates), parse_expr(cost), std::nullopt, cap);
}

BrokerFlowResult broker_flow(const BrokerParams& params, const ActionFunction& alpha, double T,
                             double h) {
    ModelSpec model = broker_model(params);
    Eigen::VectorXd m0 = builtin_initial(model);
    BrokerFlowResult out;
    out.path = integrate_flow(model, m0, alpha, T, h);
    out.cost = value_deterministic(model, m0, alpha, T, h);
    return out;
}

ModelSpec builtin_model(const std::string& name,
                        const std::vector<std::pair<std::string, double>>& overrides) {
    if (name == "pricing") {
        ModelSpec m = pricing_model();
        for (const auto& [key, value] : overrides) {
            if (key != "T")
                throw Error::config("pricing has no parameter '" + key + "' (only T)");
            m = m.with_param("T", value);
        }
        return m;
    }
    if (name == "virus") {
        VirusParams p;
        for (const auto& [key, value] : overrides) {
            if (key == "beta")
                p.beta = value;
            else if (key == "q")
                p.q = value;
            else if (key == "b")
                p.b = value;
            else if (key == "vmax")
                p.vmax = value;
            else if (key == "w")
                p.w = value;
            else if (key == "T")
                p.T = value;
            else
                throw Error::config("virus has no parameter '" + key + "'");
        }
        return virus_model(p);
    }
    if (name == "broker") {
        BrokerParams p;
        for (const auto& [key, value] : overrides) {
            if (key == "m")
                p.m = value;
            else if (key == "q1")
                p.q[0] = value;
            else if (key == "q2")
                p.q[1] = value;
            else if (key == "mu1")
                p.mu[0] = value;
            else if (key == "mu2")
                p.mu[1] = value;
            else if (key == "J1")
                p.J[0] = static_cast<int>(value);
            else if (key == "J2")
                p.J[1] = static_cast<int>(value);
            else if (key == "p_i")
                p.p_i = value;
            else if (key == "p_o")
                p.p_o = value;
            else if (key == "p_s")
                p.p_s = value;
            else if (key == "p_b")
                p.p_b = value;
            else if (key == "p_v")
                p.p_v = value;
            else if (key == "gamma")
                p.gamma = value;
            else
                throw Error::config("broker has no parameter '" + key + "'");
        }
        return broker_model(p);
    }
    throw Error::config("unknown builtin model '" + name +
                        "'; valid names: pricing, virus, broker");
}

std::vector<std::string> builtin_model_names() { return {"pricing", "virus", "broker"}; }

Eigen::VectorXd builtin_initial(const ModelSpec& model) {
    const auto& st = model.states();
    Eigen::VectorXd m0 = Eigen::VectorXd::Zero(model.S());
    if (st == std::vector<std::string>{"U", "S"}) {
        m0[0] = 1.0;
        return m0;
    }
    if (st == std::vector<std::string>{"S", "I", "R", "D"}) return virus_experiment_initial();
    if (st.size() >= 2 && st[0] == "off" && st[1] == "on" && model.has_param("m")) {
        m0[0] = model.param("m");
        for (int c = 1;; ++c) {
            std::string qc = "q" + std::to_string(c);
            int idx = model.state_index(qc + "_0");
            if (idx < 0 || !model.has_param(qc)) break;
            m0[idx] = model.param(qc);
        }
        return m0;
    }
    m0[0] = 1.0;
    return m0;
}

} // namespace mfc
