#include "mfc/hjb.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

#include "mfc/error.hpp"
#include "mfc/parallel.hpp"
#include "mfc/simplex.hpp"

namespace mfc {

SimplexGrid::SimplexGrid(int S, int G, std::int64_t cap) : S_(S), G_(G) {
    if (S <= 0 || G <= 0) throw Error::validation("simplex grid requires S >= 1 and G >= 1");
    nodes_ = enumerate_compositions(G, S, cap);
}

Eigen::VectorXd SimplexGrid::node_measure(std::int64_t idx) const {
    if (idx < 0 || idx >= size()) throw Error::validation("node index out of range");
    return nodes_[static_cast<std::size_t>(idx)].cast<double>() / static_cast<double>(G_);
}

std::int64_t SimplexGrid::index_of_counts(const Eigen::VectorXi& counts) const {
    if (static_cast<int>(counts.size()) != S_)
        throw Error::validation("counts dimension does not match the grid");
    std::int64_t total = 0;
    for (int i = 0; i < S_; ++i) {
        if (counts[i] < 0) throw Error::validation("negative grid count");
        total += counts[i];
    }
    if (total != G_) throw Error::validation("counts do not sum to G");
    return composition_rank(counts);
}

SimplexGrid build_simplex_grid(int S, int G, std::int64_t cap) {
    return SimplexGrid(S, G, cap);
}

SimplexStencil simplex_stencil(const SimplexGrid& grid, const Eigen::VectorXd& m) {
    const int S = grid.S();
    const int G = grid.G();
    if (static_cast<int>(m.size()) != S) throw Error::validation("point dimension mismatch");
    if (S > 16) throw Error::capacity("interpolation stencil supports at most 16 states");
    if (std::fabs(m.sum() - 1.0) > 1e-9 || m.minCoeff() < -1e-9)
        throw Error::validation("point is off the probability simplex");

    SimplexStencil st;
    if (S == 1) {
        st.count = 1;
        st.index[0] = 0;
        st.weight[0] = 1.0;
        return st;
    }

    // Cumulative coordinates u_k = G * sum_{j>=k} m_j for k = 1..S-1 turn the
    // simplex into the staircase G >= u_1 >= ... >= u_{S-1} >= 0, where the
    // subdivision is the standard unit-cube one: floor plus sorted fractional
    // parts. Ties sort to the lower coordinate so every prefix of increments
    // keeps the staircase ordering, which makes every vertex a grid node.
    const int n = S - 1;
    double u[16];
    double suffix = 0.0;
    for (int k = n; k >= 1; --k) {
        suffix += std::max(m[k], 0.0);
        u[k] = std::min(static_cast<double>(G), static_cast<double>(G) * suffix);
    }
    int b[16];
    double f[16];
    for (int k = 1; k <= n; ++k) {
        int bi = static_cast<int>(std::floor(u[k]));
        if (bi >= G) bi = G - 1;
        if (bi < 0) bi = 0;
        double fr = u[k] - static_cast<double>(bi);
        b[k] = bi;
        f[k] = std::min(1.0, std::max(0.0, fr));
    }
    int order[16];
    for (int k = 1; k <= n; ++k) order[k - 1] = k;
    std::sort(order, order + n, [&](int x, int y) {
        if (f[x] != f[y]) return f[x] > f[y];
        return x < y;
    });

    double lambda[17];
    lambda[0] = 1.0 - f[order[0]];
    for (int t = 1; t < n; ++t) lambda[t] = f[order[t - 1]] - f[order[t]];
    lambda[n] = f[order[n - 1]];

    int w[16];
    for (int k = 1; k <= n; ++k) w[k] = b[k];
    Eigen::VectorXi cvec(S);
    double total = 0.0;
    st.count = 0;
    for (int t = 0; t <= n; ++t) {
        if (t > 0) w[order[t - 1]] += 1;
        if (lambda[t] <= 0.0) continue;
        bool ok = true;
        int prev = G;
        for (int k = 1; k <= n; ++k) {
            int cj = prev - w[k];
            if (cj < 0) {
                ok = false;
                break;
            }
            cvec[k - 1] = cj;
            prev = w[k];
        }
        if (ok && prev >= 0) {
            cvec[S - 1] = prev;
        } else {
            continue;  // roundoff corner with negligible weight
        }
        st.index[st.count] = grid.index_of_counts(cvec);
        st.weight[st.count] = lambda[t];
        total += lambda[t];
        ++st.count;
    }
    if (st.count == 0 || total <= 0.0) throw Error::internal("empty interpolation stencil");
    for (int t = 0; t < st.count; ++t) st.weight[t] /= total;
    return st;
}

double interpolate_simplex(const SimplexGrid& grid, const Eigen::VectorXd& node_values,
                           const Eigen::VectorXd& m) {
    if (node_values.size() != grid.size())
        throw Error::validation("node value vector does not match the grid");
    SimplexStencil st = simplex_stencil(grid, m);
    double v = 0.0;
    for (int t = 0; t < st.count; ++t) v += st.weight[t] * node_values[st.index[t]];
    return v;
}

namespace {

double stencil_value(const SimplexStencil& st, const Eigen::VectorXd& v) {
    double s = 0.0;
    for (int t = 0; t < st.count; ++t) s += st.weight[t] * v[st.index[t]];
    return s;
}

// One cumulative axis of the curvature correction: stencils on the four
// staircase levels bracketing the foot along that axis, other coordinates held
// at the foot's values.
struct AxisCorrection {
    SimplexStencil below, lower, upper, above;  // levels b-1, b, b+1, b+2
    double f = 0.0;
    bool has_below = false, has_above = false;
};

// Mixed second difference for one axis pair over the cell corner, weighted by
// the Kuhn-cell residual coefficient f_small * (1 - f_large).
struct CrossCorrection {
    SimplexStencil p00, p10, p01, p11;
    double coeff = 0.0;
};

// Continuation lookup at a fixed foot: barycentric base stencil plus axis and
// axis-pair second differences matching the cell's quadratic residual. The
// corrected value is clipped to the base cell's node range, so it never leaves
// the envelope of the linear scheme.
struct FootLookup {
    SimplexStencil base;
    std::vector<AxisCorrection> axes;
    std::vector<CrossCorrection> cross;
};

FootLookup build_foot_lookup(const SimplexGrid& grid, const Eigen::VectorXd& foot) {
    FootLookup fl;
    fl.base = simplex_stencil(grid, foot);
    const int S = grid.S();
    const int G = grid.G();
    const int n = S - 1;
    const double gd = static_cast<double>(G);
    Eigen::VectorXd shifted(S);
    double u[16];
    int b[16];
    double f[16];
    double suffix = 0.0;
    for (int k = n; k >= 1; --k) {
        suffix += std::max(foot[k], 0.0);
        u[k] = std::min(gd, gd * suffix);
        int bi = static_cast<int>(std::floor(u[k]));
        if (bi >= G) bi = G - 1;
        if (bi < 0) bi = 0;
        b[k] = bi;
        f[k] = std::min(1.0, std::max(0.0, u[k] - static_cast<double>(bi)));
    }
    // level l along axis k shifts mass (l - u_k)/G from state k-1 to state k
    auto shift_axis = [&](int k, int l) {
        double s = (static_cast<double>(l) - u[k]) / gd;
        shifted[k] += s;
        shifted[k - 1] -= s;
    };
    auto valid = [&]() { return shifted.minCoeff() >= -1e-10; };
    for (int k = 1; k <= n; ++k) {
        if (f[k] <= 1e-9 || f[k] >= 1.0 - 1e-9) continue;
        AxisCorrection ax;
        ax.f = f[k];
        auto level = [&](int l, SimplexStencil& out) {
            shifted = foot;
            shift_axis(k, l);
            if (!valid()) return false;
            out = simplex_stencil(grid, shifted);
            return true;
        };
        if (!level(b[k], ax.lower) || !level(b[k] + 1, ax.upper)) continue;
        ax.has_below = level(b[k] - 1, ax.below);
        ax.has_above = level(b[k] + 2, ax.above);
        if (ax.has_below || ax.has_above) fl.axes.push_back(std::move(ax));
    }
    for (int j = 1; j <= n; ++j) {
        for (int k = j + 1; k <= n; ++k) {
            double fl_big = std::max(f[j], f[k]);
            double fl_small = std::min(f[j], f[k]);
            double coeff = fl_small * (1.0 - fl_big);
            if (coeff <= 1e-12) continue;
            CrossCorrection cx;
            cx.coeff = coeff;
            auto corner = [&](int dj, int dk, SimplexStencil& out) {
                shifted = foot;
                shift_axis(j, b[j] + dj);
                shift_axis(k, b[k] + dk);
                if (!valid()) return false;
                out = simplex_stencil(grid, shifted);
                return true;
            };
            if (corner(0, 0, cx.p00) && corner(1, 0, cx.p10) && corner(0, 1, cx.p01) &&
                corner(1, 1, cx.p11))
                fl.cross.push_back(std::move(cx));
        }
    }
    return fl;
}

// Base value plus the less oscillatory one-sided second difference per axis,
// clipped to the base cell range. Exact on the grid nodes and second order
// away from staircase boundaries; reduces to the barycentric value where no
// valid curvature stencil exists.
double corrected_value(const FootLookup& fl, const Eigen::VectorXd& v) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    double base = 0.0;
    for (int t = 0; t < fl.base.count; ++t) {
        double nv = v[fl.base.index[t]];
        base += fl.base.weight[t] * nv;
        lo = std::min(lo, nv);
        hi = std::max(hi, nv);
    }
    double val = base;
    for (const AxisCorrection& ax : fl.axes) {
        double a = stencil_value(ax.lower, v);
        double b = stencil_value(ax.upper, v);
        double d2;
        if (ax.has_below && ax.has_above) {
            double dl = stencil_value(ax.below, v) - 2.0 * a + b;
            double dr = a - 2.0 * b + stencil_value(ax.above, v);
            d2 = std::fabs(dl) < std::fabs(dr) ? dl : dr;
        } else if (ax.has_below) {
            d2 = stencil_value(ax.below, v) - 2.0 * a + b;
        } else {
            d2 = a - 2.0 * b + stencil_value(ax.above, v);
        }
        val -= 0.5 * ax.f * (1.0 - ax.f) * d2;
    }
    for (const CrossCorrection& cx : fl.cross) {
        double d11 = stencil_value(cx.p11, v) - stencil_value(cx.p10, v) -
                     stencil_value(cx.p01, v) + stencil_value(cx.p00, v);
        val -= cx.coeff * d11;
    }
    return std::min(std::max(val, lo), hi);
}

} // namespace

ValueField solve_hjb(const ModelSpec& model, const SimplexGrid& grid, double T, int K,
                     int threads) {
    if (model.S() != grid.S()) throw Error::validation("state count mismatch");
    if (!(T > 0.0) || !std::isfinite(T)) throw Error::validation("horizon must be positive");
    if (K < 1) throw Error::validation("time slot count must be >= 1");

    const std::int64_t n = grid.size();
    const double dt = T / static_cast<double>(K);
    std::vector<ActionValue> acts = model.actions().enumerate();
    const int A = static_cast<int>(acts.size());

    ValueField field;
    field.horizon_T = T;
    field.K = K;
    field.cfl_warning = dt * model.rate_cap() * static_cast<double>(grid.G()) > 1.0;
    field.action_set = acts;
    field.values.resize(n, K + 1);
    field.greedy.resize(n, K);

    parallel_for(static_cast<std::size_t>(n), threads, [&](std::size_t i) {
        Eigen::VectorXd m = grid.node_measure(static_cast<std::int64_t>(i));
        field.values(i, K) = model.terminal(m.data());
    });

    // feet and rewards are slot-invariant; compute once per (node, action)
    std::vector<FootLookup> feet(static_cast<std::size_t>(n) * static_cast<std::size_t>(A));
    Eigen::MatrixXd rew(n, A);
    parallel_for(static_cast<std::size_t>(n), threads, [&](std::size_t i) {
        const int S = model.S();
        Eigen::MatrixXd R(S, S);
        Eigen::VectorXd foot(S);
        Eigen::VectorXd m = grid.node_measure(static_cast<std::int64_t>(i));
        for (int a = 0; a < A; ++a) {
            rew(i, a) = model.reward(m.data(), acts[static_cast<std::size_t>(a)].v.data());
            model.rate_matrix_into(m.data(), acts[static_cast<std::size_t>(a)].v.data(), R);
            foot.noalias() = m + dt * (R.transpose() * m);
            feet[i * static_cast<std::size_t>(A) + static_cast<std::size_t>(a)] =
                build_foot_lookup(grid, foot);
        }
    });

    Eigen::VectorXd prev(n);
    for (int k = K - 1; k >= 0; --k) {
        prev = field.values.col(k + 1);
        parallel_for(static_cast<std::size_t>(n), threads, [&](std::size_t i) {
            int best = 0;
            double bestv = -std::numeric_limits<double>::infinity();
            for (int a = 0; a < A; ++a) {
                double q = rew(i, a) * dt +
                           corrected_value(
                               feet[i * static_cast<std::size_t>(A) + static_cast<std::size_t>(a)],
                               prev);
                if (q > bestv) {
                    bestv = q;
                    best = a;
                }
            }
            field.values(i, k) = bestv;
            field.greedy(i, k) = best;
        });
    }
    return field;
}

ActionValue greedy_field_action(const ModelSpec& model, const SimplexGrid& grid,
                                const ValueField& field, const Eigen::VectorXd& m, double t) {
    const double T = field.horizon_T;
    if (t < -1e-12 || t > T + 1e-12)
        throw Error::validation("time is outside the field horizon");
    const int K = field.K;
    int k = static_cast<int>(std::floor((t / T) * static_cast<double>(K)));
    k = std::min(std::max(k, 0), K - 1);
    const double dt = T / static_cast<double>(K);
    const int S = model.S();
    Eigen::MatrixXd R(S, S);
    Eigen::VectorXd foot(S);
    Eigen::VectorXd prev = field.values.col(k + 1);
    int best = 0;
    double bestv = -std::numeric_limits<double>::infinity();
    for (int a = 0; a < static_cast<int>(field.action_set.size()); ++a) {
        const ActionValue& av = field.action_set[static_cast<std::size_t>(a)];
        model.rate_matrix_into(m.data(), av.v.data(), R);
        foot.noalias() = m + dt * (R.transpose() * m);
        double q = model.reward(m.data(), av.v.data()) * dt +
                   corrected_value(build_foot_lookup(grid, foot), prev);
        if (q > bestv) {
            bestv = q;
            best = a;
        }
    }
    return field.action_set[static_cast<std::size_t>(best)];
}

SynthesisResult synthesize_action_function(const ModelSpec& model, const SimplexGrid& grid,
                                           const ValueField& field, const Eigen::VectorXd& m0) {
    if (model.S() != grid.S()) throw Error::validation("state count mismatch");
    if (static_cast<int>(m0.size()) != model.S())
        throw Error::validation("initial measure dimension mismatch");
    const int K = field.K;
    const double T = field.horizon_T;
    const int S = model.S();
    const int A = static_cast<int>(field.action_set.size());
    const double dt = T / static_cast<double>(K);

    Eigen::MatrixXd R(S, S);
    Eigen::VectorXd k1(S), k2(S), k3(S), k4(S), stage(S), foot(S);
    auto drift = [&](const Eigen::VectorXd& x, const Eigen::VectorXd& av, Eigen::VectorXd& out) {
        model.rate_matrix_into(x.data(), av.data(), R);
        out.noalias() = R.transpose() * x;
    };

    Eigen::VectorXd m = m0;
    SampledPath flow;
    flow.times.reserve(static_cast<std::size_t>(K) + 1);
    flow.points.reserve(static_cast<std::size_t>(K) + 1);
    flow.times.push_back(0.0);
    flow.points.push_back(m);

    std::vector<int> picks(static_cast<std::size_t>(K), 0);
    Eigen::VectorXd prev(grid.size());
    for (int k = 0; k < K; ++k) {
        prev = field.values.col(k + 1);
        int best = 0;
        double bestv = -std::numeric_limits<double>::infinity();
        for (int a = 0; a < A; ++a) {
            const Eigen::VectorXd& av = field.action_set[static_cast<std::size_t>(a)].v;
            drift(m, av, k1);
            foot = m + dt * k1;
            double q = model.reward(m.data(), av.data()) * dt +
                       corrected_value(build_foot_lookup(grid, foot), prev);
            if (q > bestv) {
                bestv = q;
                best = a;
            }
        }
        picks[static_cast<std::size_t>(k)] = best;

        // advance one slot under the chosen constant action (one RK4 step)
        double t0 = T * (static_cast<double>(k) / static_cast<double>(K));
        double t1 = T * (static_cast<double>(k + 1) / static_cast<double>(K));
        double h = t1 - t0;
        const Eigen::VectorXd& av = field.action_set[static_cast<std::size_t>(best)].v;
        drift(m, av, k1);
        stage = m + (0.5 * h) * k1;
        drift(stage, av, k2);
        stage = m + (0.5 * h) * k2;
        drift(stage, av, k3);
        stage = m + h * k3;
        drift(stage, av, k4);
        m += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        flow.times.push_back(t1);
        flow.points.push_back(m);
    }

    std::vector<ActionFunction::Piece> pieces;
    int start = 0;
    for (int k = 1; k <= K; ++k) {
        if (k == K || picks[static_cast<std::size_t>(k)] != picks[static_cast<std::size_t>(start)]) {
            double t0 = T * (static_cast<double>(start) / static_cast<double>(K));
            double t1 = T * (static_cast<double>(k) / static_cast<double>(K));
            const Eigen::VectorXd& av =
                field.action_set[static_cast<std::size_t>(picks[static_cast<std::size_t>(start)])].v;
            pieces.push_back({t0, t1, av, av});
            start = k;
        }
    }
    return SynthesisResult{ActionFunction::from_pieces(std::move(pieces)), std::move(flow)};
}

Policy feedback_policy(const ModelSpec& model, const SimplexGrid& grid, const ValueField& field) {
    return Policy{[model, grid, field](std::int64_t, double t, const Eigen::VectorXd& m) {
        return greedy_field_action(model, grid, field, m, t);
    }};
}

} // namespace mfc
