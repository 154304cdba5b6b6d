#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "mfc/model.hpp"

namespace mfc {

// Decision rule queried once per slot: slot index k, rescaled time t = k/N,
// and the current occupancy measure.
struct Policy {
    std::function<ActionValue(std::int64_t slot, double t, const Eigen::VectorXd& m)> act;

    static Policy constant(const ActionValue& a);
    static Policy open_loop(const ActionFunction& alpha);
};

// Sampled path of the N-object chain. Slot k covers rescaled time
// [k/N, (k+1)/N); measures has one more entry than actions. The action queried
// at the final slot is kept separately for the value convention, which charges
// a running reward at slots 0..H inclusive.
struct Trajectory {
    std::int64_t N = 0;
    double horizon_T = 0.0;
    double intensity = 0.0;  // 1/N
    std::vector<Eigen::VectorXd> measures;
    std::vector<Eigen::VectorXd> actions;
    std::vector<std::int64_t> transition_counts;
    Eigen::VectorXd terminal_action;

    std::int64_t slots() const { return static_cast<std::int64_t>(actions.size()); }
    double time_of_slot(std::int64_t k) const { return static_cast<double>(k) * intensity; }
};

struct StepResult {
    OccupancyMeasure next;
    std::int64_t transition_count = 0;
};

// One slot of the occupancy chain: every object in state i moves to j != i
// with probability R_ij(m, a)/N, independently. Sampled at occupancy level
// (one multinomial per origin state), which has the same law as per-object
// sampling. Requires rate_cap <= N.
StepResult step(const ModelSpec& model, const OccupancyMeasure& m, const ActionValue& a,
                std::mt19937_64& rng);

// Runs floor(T * N) slots from m0 (snapped to the N-grain), querying the policy at every
// slot including the terminal one. Deterministic in (model, N, policy, T, seed).
Trajectory simulate(const ModelSpec& model, std::int64_t N, const Policy& policy,
                    const OccupancyMeasure& m0, double T, std::uint64_t seed);

// Affine interpolation of the measure path at rescaled time t in [0, T].
Eigen::VectorXd interpolate_path(const Trajectory& traj, double t);

// sum_{k=0..H} (1/N) r(M(k), A(k)) + g(M(H)), with A(H) = terminal_action.
double path_value(const ModelSpec& model, const Trajectory& traj);

struct MonteCarloValue {
    double mean = 0.0;
    double std_error = 0.0;
    std::vector<double> values;  // one per replication, in replication order
};

// Mean path value over independent replications; replication r uses the
// counter-derived stream (seed, r), so results do not depend on thread count.
MonteCarloValue evaluate_value_mc(const ModelSpec& model, std::int64_t N, const Policy& policy,
                                  const OccupancyMeasure& m0, double T, int replications,
                                  std::uint64_t seed, int threads = 1);

// Piecewise-affine path over explicit sample times (used for flows and for
// comparing simulated paths against them).
struct SampledPath {
    std::vector<double> times;
    std::vector<Eigen::VectorXd> points;

    Eigen::VectorXd at(double t) const;
};

SampledPath path_of_trajectory(const Trajectory& traj);

// sup_t || x(t) - y(t) ||_2 over the union of both sample grids; exact for
// piecewise-affine paths.
double sup_distance(const SampledPath& x, const SampledPath& y);

// Object-level kernel hook for exchangeability testing: advances the vector of
// per-object states one slot in place.
using ObjectKernel = std::function<void(std::vector<int>& states, const ModelSpec& model,
                                        const ActionValue& a, std::mt19937_64& rng)>;

// The model's own per-object kernel (label-symmetric by construction).
ObjectKernel model_object_kernel();

struct ExchangeabilityResult {
    double statistic = 0.0;
    int dof = 0;
    double p_value = 1.0;
};

// Two-sample chi-square test comparing the occupancy distribution after
// `slots` steps from `initial` against the same start relabeled by a random
// permutation. Label-symmetric kernels pass; label-dependent ones fail.
ExchangeabilityResult exchangeability_check(const ModelSpec& model,
                                            const std::vector<int>& initial, const ActionValue& a,
                                            int slots, int trials, std::uint64_t seed,
                                            const ObjectKernel& kernel = model_object_kernel());

} // namespace mfc
