#include "mfc/sim.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <utility>

#include "mfc/error.hpp"
#include "mfc/parallel.hpp"
#include "mfc/rng.hpp"
#include "mfc/stats.hpp"

namespace mfc {

Policy Policy::constant(const ActionValue& a) {
    return Policy{[a](std::int64_t, double, const Eigen::VectorXd&) { return a; }};
}

Policy Policy::open_loop(const ActionFunction& alpha) {
    return Policy{
        [alpha](std::int64_t, double t, const Eigen::VectorXd&) { return alpha.eval(t); }};
}

StepResult step(const ModelSpec& model, const OccupancyMeasure& m, const ActionValue& a,
                std::mt19937_64& rng) {
    if (!m.grain()) throw Error::validation("step requires a measure grained at N");
    const std::int64_t N = *m.grain();
    if (model.rate_cap() > static_cast<double>(N))
        throw Error::validation("rate_cap " + std::to_string(model.rate_cap()) +
                                " exceeds N = " + std::to_string(N) +
                                "; per-object jump probabilities would leave [0, 1]");
    const int S = model.S();
    Eigen::MatrixXd R(S, S);
    model.rate_matrix_into(m.w().data(), a.v.data(), R);

    Eigen::VectorXi next = m.counts();
    std::int64_t moved = 0;
    for (int i = 0; i < S; ++i) {
        std::int64_t avail = next[i];
        if (avail == 0) continue;
        // multinomial split over destinations by conditional binomials
        double rest = 1.0;
        for (int j = 0; j < S && avail > 0; ++j) {
            if (j == i) continue;
            double p = R(i, j) / static_cast<double>(N);
            if (p <= 0.0) continue;
            double q = rest > 0.0 ? std::min(1.0, p / rest) : 1.0;
            std::binomial_distribution<std::int64_t> bin(avail, q);
            std::int64_t k = bin(rng);
            next[i] -= k;
            next[j] += k;
            moved += k;
            avail -= k;
            rest -= p;
        }
    }
    return {OccupancyMeasure::from_counts(next), moved};
}

namespace {

Trajectory simulate_with_rng(const ModelSpec& model, std::int64_t N, const Policy& policy,
                             const OccupancyMeasure& m0, double T, std::mt19937_64& rng) {
    if (N <= 0) throw Error::validation("simulate requires N >= 1");
    if (!(T >= 0.0) || !std::isfinite(T)) throw Error::validation("simulate requires finite T >= 0");
    if (!policy.act) throw Error::validation("policy has no decision rule");

    Trajectory traj;
    traj.N = N;
    traj.horizon_T = T;
    traj.intensity = 1.0 / static_cast<double>(N);
    const std::int64_t H = static_cast<std::int64_t>(std::floor(T * static_cast<double>(N)));
    traj.measures.reserve(static_cast<std::size_t>(H) + 1);
    traj.actions.reserve(static_cast<std::size_t>(H));
    traj.transition_counts.reserve(static_cast<std::size_t>(H));

    // Ungrained starts are snapped to the nearest occupancy atom.
    OccupancyMeasure cur = (m0.grain() && *m0.grain() == N) ? m0 : grain_measure(m0.w(), N);
    traj.measures.push_back(cur.w());
    auto query = [&](std::int64_t k) {
        ActionValue a = policy.act(k, traj.time_of_slot(k), cur.w());
        if (!model.actions().contains(a))
            throw Error::validation("policy produced an action outside the action space at slot " +
                                    std::to_string(k));
        return a;
    };
    for (std::int64_t k = 0; k < H; ++k) {
        ActionValue a = query(k);
        StepResult r = step(model, cur, a, rng);
        traj.actions.push_back(a.v);
        traj.transition_counts.push_back(r.transition_count);
        cur = std::move(r.next);
        traj.measures.push_back(cur.w());
    }
    traj.terminal_action = query(H).v;
    return traj;
}

} // namespace

Trajectory simulate(const ModelSpec& model, std::int64_t N, const Policy& policy,
                    const OccupancyMeasure& m0, double T, std::uint64_t seed) {
    auto rng = make_rng(seed);
    return simulate_with_rng(model, N, policy, m0, T, rng);
}

Eigen::VectorXd interpolate_path(const Trajectory& traj, double t) {
    if (traj.measures.empty()) throw Error::validation("trajectory holds no measures");
    const double span = traj.time_of_slot(traj.slots());
    if (t < -1e-12 || t > span + 1e-12)
        throw Error::validation("time " + std::to_string(t) + " outside the path span");
    return path_of_trajectory(traj).at(t);
}

double path_value(const ModelSpec& model, const Trajectory& traj) {
    if (traj.measures.empty() || traj.terminal_action.size() == 0)
        throw Error::validation("trajectory is incomplete");
    const double I = traj.intensity;
    const std::int64_t H = traj.slots();
    double total = 0.0;
    for (std::int64_t k = 0; k < H; ++k)
        total += I * model.reward(traj.measures[k].data(), traj.actions[k].data());
    total += I * model.reward(traj.measures[H].data(), traj.terminal_action.data());
    total += model.terminal(traj.measures[H].data());
    return total;
}

MonteCarloValue evaluate_value_mc(const ModelSpec& model, std::int64_t N, const Policy& policy,
                                  const OccupancyMeasure& m0, double T, int replications,
                                  std::uint64_t seed, int threads) {
    if (replications <= 0) throw Error::validation("replications must be positive");
    MonteCarloValue out;
    out.values.assign(static_cast<std::size_t>(replications), 0.0);
    parallel_for(static_cast<std::size_t>(replications), threads, [&](std::size_t r) {
        auto rng = make_rng(seed, static_cast<std::uint64_t>(r));
        Trajectory traj = simulate_with_rng(model, N, policy, m0, T, rng);
        out.values[r] = path_value(model, traj);
    });
    MeanStderr ms = mean_stderr(out.values);
    out.mean = ms.mean;
    out.std_error = ms.std_error;
    return out;
}

Eigen::VectorXd SampledPath::at(double t) const {
    if (times.empty() || times.size() != points.size())
        throw Error::validation("malformed sampled path");
    if (t <= times.front()) return points.front();
    if (t >= times.back()) return points.back();
    auto it = std::upper_bound(times.begin(), times.end(), t);
    std::size_t i = static_cast<std::size_t>(it - times.begin()) - 1;
    double dt = times[i + 1] - times[i];
    if (dt <= 0.0) return points[i + 1];
    double s = (t - times[i]) / dt;
    return points[i] * (1.0 - s) + points[i + 1] * s;
}

SampledPath path_of_trajectory(const Trajectory& traj) {
    if (traj.measures.empty()) throw Error::validation("trajectory holds no measures");
    SampledPath p;
    p.points = traj.measures;
    p.times.reserve(traj.measures.size());
    for (std::size_t k = 0; k < traj.measures.size(); ++k)
        p.times.push_back(traj.time_of_slot(static_cast<std::int64_t>(k)));
    return p;
}

double sup_distance(const SampledPath& x, const SampledPath& y) {
    if (x.times.empty() || y.times.empty()) throw Error::validation("empty sampled path");
    if (std::fabs(x.times.front() - y.times.front()) > 1e-9 ||
        std::fabs(x.times.back() - y.times.back()) > 1e-9)
        throw Error::validation("sampled paths cover different time spans");
    // both paths are affine between knots, so the sup sits on the union grid
    double worst = 0.0;
    auto scan = [&](const std::vector<double>& ts) {
        for (double t : ts) worst = std::max(worst, (x.at(t) - y.at(t)).norm());
    };
    scan(x.times);
    scan(y.times);
    return worst;
}

ObjectKernel model_object_kernel() {
    return [](std::vector<int>& states, const ModelSpec& model, const ActionValue& a,
              std::mt19937_64& rng) {
        const int S = model.S();
        const double n = static_cast<double>(states.size());
        Eigen::VectorXd m = Eigen::VectorXd::Zero(S);
        for (int s : states) m[s] += 1.0 / n;
        Eigen::MatrixXd R(S, S);
        model.rate_matrix_into(m.data(), a.v.data(), R);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        // synchronous: every object draws against the slot-start rate matrix
        for (std::size_t i = 0; i < states.size(); ++i) {
            int from = states[i];
            double x = u(rng) * n;
            double acc = 0.0;
            for (int to = 0; to < S; ++to) {
                if (to == from) continue;
                acc += R(from, to);
                if (x < acc) {
                    states[i] = to;
                    break;
                }
            }
        }
    };
}

ExchangeabilityResult exchangeability_check(const ModelSpec& model, const std::vector<int>& initial,
                                            const ActionValue& a, int slots, int trials,
                                            std::uint64_t seed, const ObjectKernel& kernel) {
    if (initial.empty()) throw Error::validation("exchangeability check needs objects");
    if (trials <= 0 || slots < 0) throw Error::validation("bad trial or slot count");
    const int S = model.S();
    for (int s : initial)
        if (s < 0 || s >= S) throw Error::validation("initial object state out of range");

    // occupancy histogram cells: (count under identity labels, count under a
    // random relabeling); a label-blind kernel makes the two columns match
    std::map<std::vector<int>, std::pair<std::int64_t, std::int64_t>> cells;
    std::vector<int> work;
    auto run_arm = [&](std::mt19937_64& rng, bool permute) {
        work = initial;
        if (permute) std::shuffle(work.begin(), work.end(), rng);
        for (int k = 0; k < slots; ++k) kernel(work, model, a, rng);
        std::vector<int> counts(static_cast<std::size_t>(S), 0);
        for (int s : work) ++counts[static_cast<std::size_t>(s)];
        return counts;
    };
    for (int t = 0; t < trials; ++t) {
        auto ra = make_rng(seed, 2 * static_cast<std::uint64_t>(t));
        auto rb = make_rng(seed, 2 * static_cast<std::uint64_t>(t) + 1);
        ++cells[run_arm(ra, false)].first;
        ++cells[run_arm(rb, true)].second;
    }

    ExchangeabilityResult res;
    int nonempty = 0;
    for (const auto& [key, oc] : cells) {
        double oa = static_cast<double>(oc.first);
        double ob = static_cast<double>(oc.second);
        double tot = oa + ob;
        if (tot <= 0.0) continue;
        ++nonempty;
        res.statistic += (oa - ob) * (oa - ob) / tot;
    }
    res.dof = nonempty - 1;
    res.p_value = res.dof > 0 ? chi_square_pvalue(res.statistic, res.dof) : 1.0;
    return res;
}

} // namespace mfc
