#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "mfc/model.hpp"

namespace mfc {

// All occupancy atoms (count vectors summing to N) for S states, ascending
// lexicographic, with O(S) rank lookup.
class OccupancyIndex {
public:
    OccupancyIndex(std::int64_t N, int S, std::int64_t cap = 2'000'000);

    std::int64_t N() const { return N_; }
    int S() const { return S_; }
    std::int64_t size() const { return static_cast<std::int64_t>(atoms_.size()); }
    const std::vector<Eigen::VectorXi>& atoms() const { return atoms_; }
    const Eigen::VectorXi& counts(std::int64_t idx) const { return atoms_[idx]; }
    Eigen::VectorXd measure(std::int64_t idx) const;
    std::int64_t index_of_counts(const Eigen::VectorXi& counts) const;
    std::int64_t index_of(const OccupancyMeasure& m) const;

private:
    std::int64_t N_;
    int S_;
    std::vector<Eigen::VectorXi> atoms_;
};

OccupancyIndex enumerate_occupancy(std::int64_t N, int S, std::int64_t cap = 2'000'000);

// Exact successor distribution of the occupancy chain: the convolution of one
// multinomial per origin state. Entries below 1e-15 are pruned and the rest
// renormalized. Returns (atom index, probability) pairs sorted by index.
std::vector<std::pair<std::int64_t, double>> occupancy_kernel(const ModelSpec& model,
                                                              const OccupancyIndex& index,
                                                              std::int64_t atom,
                                                              const ActionValue& a);

// Finite-horizon optimal values of the N-object chain. Slot H charges the
// terminal reward plus one final running reward; values(atom, k) is the
// optimal tail value from slot k. greedy(atom, k) indexes the enumerated
// action set; ties resolve to the lowest index.
struct DPSolution {
    std::int64_t N = 0;
    double horizon_T = 0.0;
    std::int64_t H = 0;  // floor(T * N)
    std::vector<ActionValue> action_set;
    Eigen::MatrixXd values;               // atoms x (H+1)
    Eigen::Matrix<int, -1, -1> greedy;    // atoms x (H+1); column H is the terminal argmax
};

DPSolution backward_induction(const ModelSpec& model, const OccupancyIndex& index, double T,
                              int threads = 1);

// Optimal value started from a grained measure (must be an atom of the index).
double dp_value(const DPSolution& sol, const OccupancyIndex& index, const OccupancyMeasure& m0);

} // namespace mfc
