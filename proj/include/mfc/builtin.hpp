#pragma once

#include <cstdint>
#include <vector>

#include "mfc/meanfield.hpp"
#include "mfc/model.hpp"

namespace mfc {

// Two-state price-signaling market. States {U, S}, scalar action in {0, 1},
// running reward m[S] * a, horizon parameter T = 1. rate_cap is exactly 1.
ModelSpec pricing_model();

// The closed-form optimal action for the pricing model started anywhere:
// charge (a = 1) iff x > 1/2 or x > 1 - e^-(T-t), where x is the mass in S.
double pricing_analytic_action(double x, double t, double T);

struct VirusParams {
    double beta = 0.6;  // infection contact rate, S -> I scales with m[I]
    double q = 0.1;     // spontaneous immunization S -> R
    double b = 0.1;     // recovery I -> R
    double vmax = 1.0;  // patching rate ceiling, action interval [0, vmax]
    double w = 0.1;     // weight on the I^2 running damage term
    double T = 10.0;    // default horizon
};

// Four-state epidemic with a kill switch. States {S, I, R, D}; patching moves
// infected machines to D at the chosen rate; damage accrues as w * I^2 plus a
// terminal m[D]. Action space is the interval [0, vmax] with the endpoints as
// the default discretization.
ModelSpec virus_model(const VirusParams& params = {});

// The initial measure used by the epidemic experiments: 70% susceptible, 22%
// infected, 8% recovered. It grains exactly at N in {50, 100} and rounds
// without ties at the smaller N used in the convergence tables.
Eigen::VectorXd virus_experiment_initial();

struct BrokerParams {
    int C = 2;                            // resource clusters
    std::vector<int> J = {5, 5};          // per-cluster buffer capacity
    double m = 0.5;                       // fraction of objects that are users
    std::vector<double> q = {0.25, 0.25}; // per-cluster resource fractions
    double p_i = 0.3;                     // user off -> on
    double p_o = 0.3;                     // user on -> off
    double p_s = 2.0;                     // job submission rate per on-user
    std::vector<double> mu = {1.0, 0.8};  // per-cluster service rates
    double p_b = 0.05;                    // resource breakage rate
    double p_v = 0.5;                     // repair rate
    double gamma = 10.0;                  // weight on lost jobs in the cost
};

// Volunteer-computing broker. States: user on/off plus, per cluster c, queue
// levels q<c>_0..q<c>_J and a broken state b<c>. The action is a point of the
// C-simplex routing submitted jobs across clusters. The running "reward" is
// the cost integrand (backlog plus gamma times the loss rate); callers treat
// it as a cost to minimize. Requires m + q_1 + ... + q_C = 1.
ModelSpec broker_model(const BrokerParams& params = {});

struct BrokerFlowResult {
    SampledPath path;
    double cost = 0.0; // integral of the cost integrand over [0, T]
};

// Deterministic limit flow of the broker under a fixed routing function,
// plus the accumulated cost.
BrokerFlowResult broker_flow(const BrokerParams& params, const ActionFunction& alpha,
                             double T, double h);

// Registry for `builtin:<name>` lookups; knows "pricing", "virus", "broker".
// Overrides are (param name, value) pairs applied before construction; virus
// and broker recognize their struct fields (vector-valued fields use the
// suffixed names q1, q2, mu1, ...), pricing accepts only T.
ModelSpec builtin_model(const std::string& name,
                        const std::vector<std::pair<std::string, double>>& overrides = {});

// Names builtin_model accepts, for error messages and docs.
std::vector<std::string> builtin_model_names();

// The experiment's default initial measure for a built-in model: the virus
// one above, x = 0 (all of U) for pricing, everyone off and queues empty for
// the broker. Falls back to the first vertex for unknown models.
Eigen::VectorXd builtin_initial(const ModelSpec& model);

} // namespace mfc
