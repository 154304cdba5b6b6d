#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "mfc/meanfield.hpp"
#include "mfc/model.hpp"
#include "mfc/sim.hpp"

namespace mfc {

// Regular grid on the probability simplex: all count vectors with denominator
// G, ascending lexicographic (same enumeration as occupancy atoms).
class SimplexGrid {
public:
    SimplexGrid(int S, int G, std::int64_t cap = 2'000'000);

    int S() const { return S_; }
    int G() const { return G_; }
    std::int64_t size() const { return static_cast<std::int64_t>(nodes_.size()); }
    const std::vector<Eigen::VectorXi>& nodes() const { return nodes_; }
    Eigen::VectorXd node_measure(std::int64_t idx) const;
    std::int64_t index_of_counts(const Eigen::VectorXi& counts) const;

private:
    int S_, G_;
    std::vector<Eigen::VectorXi> nodes_;
};

SimplexGrid build_simplex_grid(int S, int G, std::int64_t cap = 2'000'000);

// Barycentric interpolation stencil: at most S vertex indices with convex
// weights reproducing the query point, from the standard simplicial
// subdivision (cumulative coordinates + sorted fractional parts). Exact for
// affine functions. Points off the simplex beyond 1e-9 raise Error::validation.
struct SimplexStencil {
    int count = 0;
    std::int64_t index[16];
    double weight[16];
};

SimplexStencil simplex_stencil(const SimplexGrid& grid, const Eigen::VectorXd& m);

double interpolate_simplex(const SimplexGrid& grid, const Eigen::VectorXd& node_values,
                           const Eigen::VectorXd& m);

// Time-discretized optimal value field of the limiting control problem:
// values(node, k) approximates the optimal tail value from time k*dt,
// values(., K) is the terminal reward. greedy(node, k) for k < K indexes the
// enumerated action set (ties to the lowest index).
struct ValueField {
    double horizon_T = 0.0;
    int K = 0;
    bool cfl_warning = false;  // set when dt * rate_cap * G > 1 (foot may cross cells)
    std::vector<ActionValue> action_set;
    Eigen::MatrixXd values;             // nodes x (K+1)
    Eigen::Matrix<int, -1, -1> greedy;  // nodes x K
};

// Semi-Lagrangian backward sweep: u(m, k) = max_a [ r(m,a) dt + u(m + f(m,a) dt, k+1) ],
// feet interpolated on the grid. The lookup adds a one-sided second-difference
// term per cumulative axis (smaller-magnitude side) to the barycentric value
// and clips the result to the base cell's node range, so it is second order in
// smooth regions yet never leaves the linear scheme's envelope. Sets
// cfl_warning when dt * rate_cap * G > 1, the one-cell crossing guard.
ValueField solve_hjb(const ModelSpec& model, const SimplexGrid& grid, double T, int K,
                     int threads = 1);

// Greedy action of the field at an arbitrary point: argmax over the action set
// of r(m,a) dt + u(m + f dt, slot+1), with slot = nearest time slot to t.
ActionValue greedy_field_action(const ModelSpec& model, const SimplexGrid& grid,
                                const ValueField& field, const Eigen::VectorXd& m, double t);

struct SynthesisResult {
    ActionFunction alpha;  // piecewise constant on the field's time grid, merged
    SampledPath flow;
};

// Forward rollout of the limit flow taking the field's greedy action on every
// time slot (static open-loop synthesis).
SynthesisResult synthesize_action_function(const ModelSpec& model, const SimplexGrid& grid,
                                           const ValueField& field, const Eigen::VectorXd& m0);

// Policy for the N-object simulator that replays the field greedily at the
// interpolated current measure (adaptive feedback control).
Policy feedback_policy(const ModelSpec& model, const SimplexGrid& grid, const ValueField& field);

} // namespace mfc
