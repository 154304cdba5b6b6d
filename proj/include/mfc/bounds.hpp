#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mfc/model.hpp"

namespace mfc {

// Kernel scaling functions: intensity I(N) plus the drift-bias, mean and
// second-moment bounds on per-slot transitions. The c0/c1/c2 family has
// I = 1/N, I0 = c0/N, I1 = c1/N, I2 = (c1^2 + c2^2)/N.
struct ScalingConstants {
    double c0 = 0.0, c1 = 0.0, c2 = 0.0;
    std::function<double(double)> I, I0, I1, I2;

    static ScalingConstants family(double c0, double c1, double c2);
    // The per-object Bernoulli kernel: c0 = 0 (exact drift), c1 = rate_cap,
    // c2 = sqrt(rate_cap) (variance of the transition count is at most c1).
    static ScalingConstants for_model(const ModelSpec& model);
};

// Sampled lower estimates of the regularity constants: L1 Lipschitz(f in m),
// L2 componentwise sup of |f|, K joint Lipschitz(f in (m,a)), K_r
// Lipschitz(r in m), r_sup = sup |r|.
struct LipschitzConstants {
    double L1 = 0.0;
    double L2 = 0.0;
    double K = 0.0;
    double K_r = 0.0;
    double r_sup = 0.0;
};

LipschitzConstants estimate_constants(const ModelSpec& model, int samples = 4000,
                                      std::uint64_t seed = 1);

// Mean-square deviation certificate between the rescaled chain and its limit
// flow over [0, T]; S is the number of states.
double bound_J(double N, double T, const ScalingConstants& sc, const LipschitzConstants& lc,
               int S);

// Drift-bias term adjusted for a time-varying control: K_alpha is the
// within-piece Lipschitz constant of alpha, p its discontinuity count,
// alpha_sup its sup norm.
double bound_I0prime(double N, double T, const ScalingConstants& sc,
                     const LipschitzConstants& lc, double K_alpha, double p, double alpha_sup);

// Value-gap certificate |V^N_alpha - v_alpha| <= B(N, delta) for a start
// within delta of the limit initial condition.
double bound_B(double N, double delta, double T, const ScalingConstants& sc,
               const LipschitzConstants& lc, int S);

// Same certificate with the control-adjusted drift bias I0'.
double bound_Bprime(double N, double delta, double T, const ScalingConstants& sc,
                    const LipschitzConstants& lc, int S, double K_alpha, double p,
                    double alpha_sup);

struct ConvergenceRow {
    double N = 0.0;
    std::optional<double> V_N_star;  // exact DP optimum, when feasible
    double V_N_alpha_star = 0.0;     // Monte-Carlo value of the synthesized control
    double stderr_alpha = 0.0;
    double heuristic_value = 0.0;  // best constant action found on the scan grid
    double stderr_heur = 0.0;
    double best_nu = 0.0;
    double v_star = 0.0;  // deterministic value of the synthesized control
    double bound_B = 0.0;
    double bound_Bprime = 0.0;
};

struct ConvergenceReport {
    std::vector<ConvergenceRow> rows;
};

// The full comparison experiment for one model: per grain N, the exact DP
// optimum when the atom space fits dp_atom_cap (it costs atoms x slots, so
// the default cap is deliberately small), a Monte-Carlo evaluation of
// alpha_star, the best constant action from a scan grid (heuristic_grid points
// per axis for box spaces, the whole set for finite ones), the deterministic
// limit value, and the B / B' certificates at delta = ||grain(m0, N) - m0||.
ConvergenceReport convergence_report(const ModelSpec& model, const Eigen::VectorXd& m0,
                                     const ActionFunction& alpha_star, double T,
                                     const std::vector<std::int64_t>& Ns, int replications,
                                     std::uint64_t seed, int heuristic_grid = 21,
                                     std::int64_t dp_atom_cap = 2000, int threads = 1);

} // namespace mfc
