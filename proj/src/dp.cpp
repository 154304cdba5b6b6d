#include "mfc/dp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <utility>

#include "mfc/error.hpp"
#include "mfc/parallel.hpp"
#include "mfc/simplex.hpp"

namespace mfc {

OccupancyIndex::OccupancyIndex(std::int64_t N, int S, std::int64_t cap) : N_(N), S_(S) {
    if (N < 0 || S <= 0) throw Error::validation("occupancy index requires N >= 0 and S >= 1");
    atoms_ = enumerate_compositions(N, S, cap);
}

Eigen::VectorXd OccupancyIndex::measure(std::int64_t idx) const {
    if (idx < 0 || idx >= size()) throw Error::validation("atom index out of range");
    return atoms_[static_cast<std::size_t>(idx)].cast<double>() / static_cast<double>(N_);
}

std::int64_t OccupancyIndex::index_of_counts(const Eigen::VectorXi& counts) const {
    if (static_cast<int>(counts.size()) != S_)
        throw Error::validation("counts dimension does not match the index");
    std::int64_t total = 0;
    for (int i = 0; i < S_; ++i) {
        if (counts[i] < 0) throw Error::validation("negative object count");
        total += counts[i];
    }
    if (total != N_) throw Error::validation("counts do not sum to N");
    return composition_rank(counts);
}

std::int64_t OccupancyIndex::index_of(const OccupancyMeasure& m) const {
    if (!m.grain() || *m.grain() != N_)
        throw Error::validation("measure grain does not match the occupancy index");
    return index_of_counts(m.counts());
}

OccupancyIndex enumerate_occupancy(std::int64_t N, int S, std::int64_t cap) {
    return OccupancyIndex(N, S, cap);
}

std::vector<std::pair<std::int64_t, double>> occupancy_kernel(const ModelSpec& model,
                                                              const OccupancyIndex& index,
                                                              std::int64_t atom,
                                                              const ActionValue& a) {
    if (model.S() != index.S()) throw Error::validation("state count mismatch");
    if (atom < 0 || atom >= index.size()) throw Error::validation("atom index out of range");
    const std::int64_t N = index.N();
    if (model.rate_cap() > static_cast<double>(N))
        throw Error::validation("rate_cap exceeds N; the one-slot kernel is not defined");
    const int S = index.S();
    Eigen::VectorXd m = index.measure(atom);
    Eigen::MatrixXd R(S, S);
    model.rate_matrix_into(m.data(), a.v.data(), R);
    const Eigen::VectorXi& c = index.counts(atom);

    // One multinomial per origin state, folded together origin by origin.
    // Keys are full successor count vectors so arrivals and departures that
    // touch the same state compose correctly.
    std::map<std::vector<int>, double> acc;
    {
        std::vector<int> base(static_cast<std::size_t>(S));
        for (int i = 0; i < S; ++i) base[static_cast<std::size_t>(i)] = c[i];
        acc.emplace(std::move(base), 1.0);
    }

    std::vector<int> dest;
    std::vector<double> pd;
    std::vector<std::pair<std::vector<int>, double>> allocs;
    std::vector<int> kvec;
    for (int i = 0; i < S; ++i) {
        if (c[i] == 0) continue;
        dest.clear();
        pd.clear();
        for (int j = 0; j < S; ++j) {
            if (j == i) continue;
            double p = R(i, j) / static_cast<double>(N);
            if (p > 0.0) {
                dest.push_back(j);
                pd.push_back(p);
            }
        }
        if (dest.empty()) continue;

        allocs.clear();
        kvec.assign(dest.size(), 0);
        auto rec = [&](auto&& self, std::size_t d, int avail, double rest, double prob) -> void {
            if (prob == 0.0) return;
            if (d == dest.size()) {
                allocs.emplace_back(kvec, prob);
                return;
            }
            double q = rest > 0.0 ? std::min(1.0, pd[d] / rest) : 1.0;
            for (int k = 0; k <= avail; ++k) {
                double coeff = 1.0;
                for (int t = 0; t < k; ++t)
                    coeff = coeff * static_cast<double>(avail - t) / static_cast<double>(t + 1);
                double factor =
                    coeff * std::pow(q, k) * std::pow(1.0 - q, static_cast<double>(avail - k));
                kvec[d] = k;
                self(self, d + 1, avail - k, rest - pd[d], prob * factor);
                kvec[d] = 0;
            }
        };
        rec(rec, 0, static_cast<int>(c[i]), 1.0, 1.0);

        std::map<std::vector<int>, double> next;
        for (const auto& [counts, pr] : acc) {
            for (const auto& [kv, pf] : allocs) {
                double p2 = pr * pf;
                if (p2 == 0.0) continue;
                std::vector<int> nc = counts;
                int moved = 0;
                for (std::size_t d = 0; d < dest.size(); ++d) {
                    nc[static_cast<std::size_t>(dest[d])] += kv[d];
                    moved += kv[d];
                }
                nc[static_cast<std::size_t>(i)] -= moved;
                next[std::move(nc)] += p2;
            }
        }
        acc.swap(next);
    }

    // prune tiny mass, renormalize the rest; lexicographic keys are already in
    // ascending rank order
    double kept = 0.0;
    std::vector<std::pair<std::int64_t, double>> out;
    out.reserve(acc.size());
    Eigen::VectorXi cv(S);
    for (const auto& [counts, p] : acc) {
        if (p < 1e-15) continue;
        for (int i = 0; i < S; ++i) cv[i] = counts[static_cast<std::size_t>(i)];
        out.emplace_back(index.index_of_counts(cv), p);
        kept += p;
    }
    if (out.empty() || kept <= 0.0) throw Error::internal("successor distribution vanished");
    for (auto& [idx, p] : out) p /= kept;
    return out;
}

DPSolution backward_induction(const ModelSpec& model, const OccupancyIndex& index, double T,
                              int threads) {
    if (model.S() != index.S()) throw Error::validation("state count mismatch");
    if (index.N() <= 0) throw Error::validation("backward induction requires N >= 1");
    if (!(T >= 0.0) || !std::isfinite(T)) throw Error::validation("T must be finite and >= 0");
    if (model.rate_cap() > static_cast<double>(index.N()))
        throw Error::validation("rate_cap exceeds N; the one-slot kernel is not defined");

    const std::int64_t n = index.size();
    const std::int64_t H =
        static_cast<std::int64_t>(std::floor(T * static_cast<double>(index.N())));
    std::vector<ActionValue> acts = model.actions().enumerate();
    const int A = static_cast<int>(acts.size());
    const double I = 1.0 / static_cast<double>(index.N());

    DPSolution sol;
    sol.N = index.N();
    sol.horizon_T = T;
    sol.H = H;
    sol.action_set = acts;
    sol.values.resize(n, H + 1);
    sol.greedy.resize(n, H + 1);

    // the kernel does not depend on the slot, so cache per (atom, action)
    std::vector<std::vector<std::vector<std::pair<std::int64_t, double>>>> kern;
    if (H > 0) kern.resize(static_cast<std::size_t>(n));
    Eigen::MatrixXd rew(n, A);
    parallel_for(static_cast<std::size_t>(n), threads, [&](std::size_t atom) {
        Eigen::VectorXd m = index.measure(static_cast<std::int64_t>(atom));
        for (int a = 0; a < A; ++a) rew(atom, a) = model.reward(m.data(), acts[a].v.data());
        if (H > 0) {
            kern[atom].resize(static_cast<std::size_t>(A));
            for (int a = 0; a < A; ++a)
                kern[atom][static_cast<std::size_t>(a)] =
                    occupancy_kernel(model, index, static_cast<std::int64_t>(atom), acts[a]);
        }
    });

    // slot H: one last running reward plus the terminal value, no transition
    parallel_for(static_cast<std::size_t>(n), threads, [&](std::size_t atom) {
        Eigen::VectorXd m = index.measure(static_cast<std::int64_t>(atom));
        double g = model.terminal(m.data());
        int best = 0;
        double bestv = -std::numeric_limits<double>::infinity();
        for (int a = 0; a < A; ++a) {
            double v = I * rew(atom, a);
            if (v > bestv) {
                bestv = v;
                best = a;
            }
        }
        sol.values(atom, H) = bestv + g;
        sol.greedy(atom, H) = best;
    });

    for (std::int64_t k = H - 1; k >= 0; --k) {
        parallel_for(static_cast<std::size_t>(n), threads, [&](std::size_t atom) {
            int best = 0;
            double bestv = -std::numeric_limits<double>::infinity();
            for (int a = 0; a < A; ++a) {
                double q = I * rew(atom, a);
                for (const auto& [succ, p] : kern[atom][static_cast<std::size_t>(a)])
                    q += p * sol.values(succ, k + 1);
                if (q > bestv) {
                    bestv = q;
                    best = a;
                }
            }
            sol.values(atom, k) = bestv;
            sol.greedy(atom, k) = best;
        });
    }
    return sol;
}

double dp_value(const DPSolution& sol, const OccupancyIndex& index, const OccupancyMeasure& m0) {
    if (sol.values.rows() != index.size())
        throw Error::validation("solution does not match the occupancy index");
    std::int64_t atom = index.index_of(m0);
    return sol.values(atom, 0);
}

} // namespace mfc
