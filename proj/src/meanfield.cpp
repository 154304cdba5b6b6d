#include "mfc/meanfield.hpp"

#include <algorithm>
#include <cmath>

#include "mfc/error.hpp"

namespace mfc {

Eigen::VectorXd drift_limit(const ModelSpec& model, const OccupancyMeasure& m,
                            const ActionValue& a) {
    const int S = model.S();
    Eigen::MatrixXd R(S, S);
    model.rate_matrix_into(m.w().data(), a.v.data(), R);
    return R.transpose() * m.w();
}

Eigen::VectorXd drift_finite(const ModelSpec& model, const OccupancyMeasure& m,
                             const ActionValue& a, std::int64_t N) {
    if (N < 1) throw Error::validation("drift_finite requires N >= 1");
    const int S = model.S();
    Eigen::MatrixXd R(S, S);
    model.rate_matrix_into(m.w().data(), a.v.data(), R);
    Eigen::VectorXd n = (m.grain() && *m.grain() == N)
                            ? m.counts().cast<double>().eval()
                            : (m.w() * static_cast<double>(N)).eval();
    // E[M(k+1) - M(k)] = R^T n / N^2 exactly: one binomial per directed pair
    return (R.transpose() * n) / (static_cast<double>(N) * static_cast<double>(N));
}

namespace {

// Control inside one piece; constant pieces return the stored endpoint so no
// arithmetic noise enters piecewise-constant replays.
Eigen::VectorXd piece_control(const ActionFunction::Piece& p, double t) {
    if (p.a0 == p.a1) return p.a0;
    double denom = p.t1 - p.t0;
    double s = denom > 0.0 ? (t - p.t0) / denom : 0.0;
    s = std::min(1.0, std::max(0.0, s));
    return p.a0 + s * (p.a1 - p.a0);
}

// RK4 walk of m' = R(m, alpha(t))^T m over [0, T], piece-aligned, an even
// number of uniform sub-steps of length <= h per piece. When integral_out is
// set, also accumulates composite-Simpson sums of the running reward.
SampledPath walk_flow(const ModelSpec& model, const Eigen::VectorXd& m0,
                      const ActionFunction& alpha, double T, double h, double* integral_out) {
    const int S = model.S();
    if (m0.size() != S) throw Error::validation("initial measure has the wrong dimension");
    if (std::fabs(m0.sum() - 1.0) > 1e-9 || m0.minCoeff() < -1e-9)
        throw Error::validation("initial measure is not a probability vector");
    if (!(h > 0.0) || !std::isfinite(h)) throw Error::validation("step bound h must be positive");
    if (!(T >= 0.0) || !std::isfinite(T)) throw Error::validation("flow horizon must be finite and nonnegative");
    if (alpha.dim() != model.actions().dim())
        throw Error::validation("control dimension does not match the action space");
    if (alpha.horizon() < T - 1e-9)
        throw Error::validation("control horizon " + std::to_string(alpha.horizon()) +
                                " does not cover the flow horizon " + std::to_string(T));

    SampledPath path;
    path.times.push_back(0.0);
    path.points.push_back(m0);

    Eigen::MatrixXd R(S, S);
    Eigen::VectorXd k1(S), k2(S), k3(S), k4(S), stage(S);
    auto drift = [&](const Eigen::VectorXd& x, const Eigen::VectorXd& av, Eigen::VectorXd& out) {
        model.rate_matrix_into(x.data(), av.data(), R);
        out.noalias() = R.transpose() * x;
    };

    Eigen::VectorXd m = m0;
    double integral = 0.0;
    for (const auto& p : alpha.pieces()) {
        double a = std::max(p.t0, 0.0);
        double b = std::min(p.t1, T);
        if (b <= a) continue;
        std::int64_t n = static_cast<std::int64_t>(std::ceil((b - a) / h));
        if (n < 2) n = 2;
        if (n % 2 != 0) ++n;
        const double dt = (b - a) / static_cast<double>(n);

        double simpson = 0.0;
        if (integral_out)
            simpson += model.reward(m.data(), piece_control(p, a).data());
        for (std::int64_t i = 0; i < n; ++i) {
            double t = a + dt * static_cast<double>(i);
            double t_end = (i == n - 1) ? b : a + dt * static_cast<double>(i + 1);
            Eigen::VectorXd a_start = piece_control(p, t);
            Eigen::VectorXd a_mid = piece_control(p, t + 0.5 * dt);
            Eigen::VectorXd a_end = piece_control(p, t_end);
            drift(m, a_start, k1);
            stage = m + (0.5 * dt) * k1;
            drift(stage, a_mid, k2);
            stage = m + (0.5 * dt) * k2;
            drift(stage, a_mid, k3);
            stage = m + dt * k3;
            drift(stage, a_end, k4);
            m += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            path.times.push_back(t_end);
            path.points.push_back(m);
            if (integral_out) {
                double w = (i == n - 1) ? 1.0 : (i % 2 == 0 ? 4.0 : 2.0);
                simpson += w * model.reward(m.data(), a_end.data());
            }
        }
        if (integral_out) integral += simpson * dt / 3.0;
    }
    if (integral_out) *integral_out = integral;
    return path;
}

} // namespace

SampledPath integrate_flow(const ModelSpec& model, const Eigen::VectorXd& m0,
                           const ActionFunction& alpha, double T, double h) {
    return walk_flow(model, m0, alpha, T, h, nullptr);
}

double value_deterministic(const ModelSpec& model, const Eigen::VectorXd& m0,
                           const ActionFunction& alpha, double T, double h) {
    double integral = 0.0;
    SampledPath path = walk_flow(model, m0, alpha, T, h, &integral);
    return integral + model.terminal(path.points.back().data());
}

ActionFunction action_path_of_trajectory(const Trajectory& traj) {
    const std::int64_t H = traj.slots();
    if (H == 0) {
        double end = traj.intensity > 0.0 ? traj.intensity : 1.0;
        return ActionFunction::constant(ActionValue(traj.terminal_action), end);
    }
    std::vector<ActionFunction::Piece> pieces;
    pieces.reserve(static_cast<std::size_t>(H));
    for (std::int64_t k = 0; k < H; ++k)
        pieces.push_back(
            {traj.time_of_slot(k), traj.time_of_slot(k + 1), traj.actions[k], traj.actions[k]});
    return ActionFunction::from_pieces(std::move(pieces));
}

SampledPath coupled_flow(const ModelSpec& model, const Trajectory& traj, double h) {
    if (traj.measures.empty()) throw Error::validation("trajectory holds no measures");
    if (traj.slots() == 0) {
        SampledPath p;
        p.times.push_back(0.0);
        p.points.push_back(traj.measures.front());
        return p;
    }
    const double span = traj.time_of_slot(traj.slots());
    return integrate_flow(model, traj.measures.front(), action_path_of_trajectory(traj), span, h);
}

} // namespace mfc
