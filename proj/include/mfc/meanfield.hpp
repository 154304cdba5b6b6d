#pragma once

#include <cstdint>

#include <Eigen/Dense>

#include "mfc/model.hpp"
#include "mfc/sim.hpp"

namespace mfc {

// Mean-field drift f(m, a) = R(m, a)^T m: component j receives
// sum_i m_i R_ij - m_j sum_k R_jk. Components sum to zero.
Eigen::VectorXd drift_limit(const ModelSpec& model, const OccupancyMeasure& m,
                            const ActionValue& a);

// Exact one-slot expected change E[M(k+1) - M(k)] of the N-object chain,
// computed from integer counts and per-object probabilities. Equals
// drift_limit / N for this kernel family (zero drift bias). Requires a
// grained measure; the identity is evaluated as written for any N >= 1.
Eigen::VectorXd drift_finite(const ModelSpec& model, const OccupancyMeasure& m,
                             const ActionValue& a, std::int64_t N);

// Classic fourth-order Runge-Kutta on m' = f(m, alpha(t)), t in [0, T]. Steps
// are aligned to the action function's breakpoints; within each piece an even
// number of uniform sub-steps of length <= h is used. The returned path holds
// every integration knot.
SampledPath integrate_flow(const ModelSpec& model, const Eigen::VectorXd& m0,
                           const ActionFunction& alpha, double T, double h);

// integral_0^T r(phi_t, alpha(t)) dt + g(phi_T) via composite Simpson on the
// flow grid (sub-step counts are even by construction).
double value_deterministic(const ModelSpec& model, const Eigen::VectorXd& m0,
                           const ActionFunction& alpha, double T, double h);

// Piecewise-constant control path replaying the trajectory's actions on the
// rescaled time axis, one piece per slot (the companion flow's control).
ActionFunction action_path_of_trajectory(const Trajectory& traj);

// Flow started at the trajectory's own initial measure, driven by its actions.
SampledPath coupled_flow(const ModelSpec& model, const Trajectory& traj, double h);

} // namespace mfc
