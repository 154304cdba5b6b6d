#include "mfc/bounds.hpp"

#include <algorithm>
#include <cmath>

#include "mfc/dp.hpp"
#include "mfc/meanfield.hpp"
#include "mfc/sim.hpp"

namespace mfc {

ScalingConstants ScalingConstants::family(double c0, double c1, double c2) {
    ScalingConstants sc;
    sc.c0 = c0;
    sc.c1 = c1;
    sc.c2 = c2;
    sc.I = [](double N) { return 1.0 / N; };
    sc.I0 = [c0](double N) { return c0 / N; };
    sc.I1 = [c1](double N) { return c1 / N; };
    sc.I2 = [c1, c2](double N) { return (c1 * c1 + c2 * c2) / N; };
    return sc;
}

ScalingConstants ScalingConstants::for_model(const ModelSpec& model) {
    return family(0.0, model.rate_cap(), std::sqrt(model.rate_cap()));
}

LipschitzConstants estimate_constants(const ModelSpec& model, int samples, std::uint64_t seed) {
    LipschitzConstants lc;
    const int S = model.S();
    auto grid = sample_model_domain(model, samples, seed);

    Eigen::MatrixXd R(S, S);
    auto drift_at = [&](const Eigen::VectorXd& m, const Eigen::VectorXd& a, Eigen::VectorXd& f) {
        model.rate_matrix_into(m.data(), a.data(), R);
        f.noalias() = R.transpose() * m;
    };

    std::vector<Eigen::VectorXd> drifts(grid.size());
    std::vector<double> rewards(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        drifts[i].resize(S);
        drift_at(grid[i].first, grid[i].second.v, drifts[i]);
        rewards[i] = model.reward(grid[i].first.data(), grid[i].second.v.data());
        lc.L2 = std::max(lc.L2, drifts[i].lpNorm<Eigen::Infinity>());
        lc.r_sup = std::max(lc.r_sup, std::fabs(rewards[i]));
    }

    // controlled difference quotients between consecutive grid entries: vary
    // one argument, hold the other; the pair guard keeps roundoff out of the
    // ratios
    double lip_f_a = 0.0;
    Eigen::VectorXd f_other(S);
    for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
        const auto& [m1, a1] = grid[i];
        const auto& [m2, a2] = grid[i + 1];
        double dm = (m1 - m2).norm();
        if (dm > 1e-6) {
            drift_at(m2, a1.v, f_other);
            lc.L1 = std::max(lc.L1, (drifts[i] - f_other).norm() / dm);
            double r2 = model.reward(m2.data(), a1.v.data());
            lc.K_r = std::max(lc.K_r, std::fabs(rewards[i] - r2) / dm);
        }
        double da = (a1.v - a2.v).norm();
        if (da > 1e-6) {
            drift_at(m1, a2.v, f_other);
            lip_f_a = std::max(lip_f_a, (drifts[i] - f_other).norm() / da);
        }
    }
    lc.K = std::max(lc.L1, lip_f_a);
    return lc;
}

double bound_J(double N, double T, const ScalingConstants& sc, const LipschitzConstants& lc,
               int S) {
    const double I = sc.I(N), I0 = sc.I0(N), I1 = sc.I1(N), I2 = sc.I2(N);
    const double S2 = static_cast<double>(S) * static_cast<double>(S);
    return 8.0 * T *
           (lc.L1 * lc.L1 * (I2 * I * I + I1 * I1 * (T + I)) +
            S2 * (2.0 * I2 + I * (I0 + lc.L2) * (I0 + lc.L2)));
}

double bound_I0prime(double N, double T, const ScalingConstants& sc,
                     const LipschitzConstants& lc, double K_alpha, double p, double alpha_sup) {
    const double I = sc.I(N);
    return sc.I0(N) + I * lc.K * std::exp((lc.K - lc.L1) * T) *
                          (K_alpha / 2.0 + 2.0 * (1.0 + std::min(1.0 / I, p)) * alpha_sup);
}

namespace {

double bound_B_core(double N, double delta, double T, const ScalingConstants& sc,
                    const LipschitzConstants& lc, int S, double I0_term) {
    const double I = sc.I(N);
    const double growth = lc.L1 > 0.0 ? (std::exp(lc.L1 * T) - 1.0) / lc.L1 : T;
    const double base = lc.L1 > 0.0
                            ? lc.K_r / lc.L1 * (std::exp(lc.L1 * T) - 1.0 + I / 2.0)
                            : lc.K_r * (T + I / 2.0);
    const double J = bound_J(N, T, sc, lc, S);
    return I * lc.r_sup + lc.K_r * (delta + I0_term * T) * growth +
           3.0 / std::cbrt(2.0) * std::pow(base, 2.0 / 3.0) * std::cbrt(lc.r_sup) *
               std::cbrt(J);
}

} // namespace

double bound_B(double N, double delta, double T, const ScalingConstants& sc,
               const LipschitzConstants& lc, int S) {
    return bound_B_core(N, delta, T, sc, lc, S, sc.I0(N));
}

double bound_Bprime(double N, double delta, double T, const ScalingConstants& sc,
                    const LipschitzConstants& lc, int S, double K_alpha, double p,
                    double alpha_sup) {
    return bound_B_core(N, delta, T, sc, lc, S,
                        bound_I0prime(N, T, sc, lc, K_alpha, p, alpha_sup));
}

namespace {

// candidate constant actions for the heuristic scan
std::vector<ActionValue> heuristic_candidates(const ActionSpace& space, int grid) {
    if (space.type() == ActionSpace::Type::box) {
        std::vector<int> steps(static_cast<std::size_t>(space.dim()), std::max(grid, 2));
        return ActionSpace::box(space.lo(), space.hi(), steps).enumerate();
    }
    return space.enumerate();
}

bool dp_fits(std::int64_t N, int S, std::int64_t cap) {
    __int128 acc = 1;
    for (int i = 1; i < S; ++i) {
        acc = acc * (N + i) / i;
        if (acc > cap) return false;
    }
    return true;
}

} // namespace

ConvergenceReport convergence_report(const ModelSpec& model, const Eigen::VectorXd& m0,
                                     const ActionFunction& alpha_star, double T,
                                     const std::vector<std::int64_t>& Ns, int replications,
                                     std::uint64_t seed, int heuristic_grid,
                                     std::int64_t dp_atom_cap, int threads) {
    if (static_cast<int>(m0.size()) != model.S())
        throw Error::validation("initial measure dimension mismatch");
    if (replications < 1) throw Error::validation("replications must be >= 1");

    ScalingConstants sc = ScalingConstants::for_model(model);
    LipschitzConstants lc = estimate_constants(model);
    const double flow_h = 1e-3;
    const double v_star = value_deterministic(model, m0, alpha_star, T, flow_h);
    const double K_alpha = alpha_star.lipschitz_constant();
    const double p = static_cast<double>(alpha_star.discontinuity_count());
    const double alpha_sup = alpha_star.sup_norm();

    std::vector<ActionValue> candidates = heuristic_candidates(model.actions(), heuristic_grid);
    Policy open = Policy::open_loop(alpha_star);

    ConvergenceReport rep;
    for (std::int64_t N : Ns) {
        ConvergenceRow row;
        row.N = static_cast<double>(N);
        OccupancyMeasure m0N = grain_measure(m0, N);
        double delta = (m0N.w() - m0).norm();

        if (dp_fits(N, model.S(), dp_atom_cap) &&
            model.rate_cap() <= static_cast<double>(N)) {
            OccupancyIndex index(N, model.S(), dp_atom_cap);
            DPSolution sol = backward_induction(model, index, T, threads);
            row.V_N_star = dp_value(sol, index, m0N);
        }

        MonteCarloValue mv = evaluate_value_mc(model, N, open, m0N, T, replications, seed,
                                               threads);
        row.V_N_alpha_star = mv.mean;
        row.stderr_alpha = mv.std_error;

        bool first = true;
        for (const ActionValue& nu : candidates) {
            MonteCarloValue hv = evaluate_value_mc(model, N, Policy::constant(nu), m0N, T,
                                                   replications, seed, threads);
            if (first || hv.mean > row.heuristic_value) {
                row.heuristic_value = hv.mean;
                row.stderr_heur = hv.std_error;
                row.best_nu = nu.v[0];
                first = false;
            }
        }

        row.v_star = v_star;
        row.bound_B = bound_B(static_cast<double>(N), delta, T, sc, lc, model.S());
        row.bound_Bprime = bound_Bprime(static_cast<double>(N), delta, T, sc, lc, model.S(),
                                        K_alpha, p, alpha_sup);
        rep.rows.push_back(std::move(row));
    }
    return rep;
}

} // namespace mfc
