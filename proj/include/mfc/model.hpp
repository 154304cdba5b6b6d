#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "mfc/error.hpp"
#include "mfc/expr.hpp"

namespace mfc {

// Empirical distribution of N objects over the model's states. Weights are
// nonnegative and sum to one within 1e-12; when a grain N is attached, every
// weight times N is an integer within 1e-9.
class OccupancyMeasure {
public:
    OccupancyMeasure(Eigen::VectorXd weights, std::optional<std::int64_t> grain = std::nullopt);
    static OccupancyMeasure from_counts(const Eigen::VectorXi& counts);

    const Eigen::VectorXd& w() const { return w_; }
    std::optional<std::int64_t> grain() const { return grain_; }
    int size() const { return static_cast<int>(w_.size()); }

    // Integer object counts; requires a grain.
    Eigen::VectorXi counts() const;

private:
    Eigen::VectorXd w_;
    std::optional<std::int64_t> grain_;
};

// Occupancy measure of an explicit assignment of objects to states; the grain
// is the number of objects. Permutation-invariant by construction.
OccupancyMeasure occupancy_from_states(const std::vector<int>& object_states, int num_states);

// Nearest grained measure by largest-remainder rounding (ties to the lower index).
OccupancyMeasure grain_measure(const Eigen::VectorXd& m, std::int64_t N);

struct ActionValue {
    Eigen::VectorXd v;

    ActionValue() = default;
    explicit ActionValue(Eigen::VectorXd values) : v(std::move(values)) {}
    static ActionValue scalar(double x) {
        Eigen::VectorXd v(1);
        v[0] = x;
        return ActionValue(v);
    }
    int dim() const { return static_cast<int>(v.size()); }
    bool operator==(const ActionValue& o) const { return v.size() == o.v.size() && v == o.v; }
};

// Euclidean metric on actions.
inline double action_distance(const ActionValue& a, const ActionValue& b) {
    return (a.v - b.v).norm();
}

class ActionSpace {
public:
    enum class Type { finite, box, simplex };

    static ActionSpace finite(std::vector<ActionValue> values);
    static ActionSpace finite_scalar(std::initializer_list<double> values);
    // Axis-aligned box with per-axis discretization counts (steps[i] >= 1 grid
    // points on axis i, endpoints included).
    static ActionSpace box(Eigen::VectorXd lo, Eigen::VectorXd hi, std::vector<int> steps);
    // Probability simplex over `dim` coordinates; enumerate() returns the
    // grained grid with denominator `steps`.
    static ActionSpace simplex(int dim, int steps);

    Type type() const { return type_; }
    int dim() const;
    bool contains(const ActionValue& a, double tol = 1e-9) const;
    // The finite action set optimizers and heuristics scan.
    std::vector<ActionValue> enumerate() const;

    const std::vector<ActionValue>& finite_values() const { return values_; }
    const Eigen::VectorXd& lo() const { return lo_; }
    const Eigen::VectorXd& hi() const { return hi_; }
    const std::vector<int>& steps() const { return steps_; }
    int simplex_dim() const { return simplex_dim_; }
    int simplex_steps() const { return simplex_steps_; }

private:
    ActionSpace() = default;
    Type type_ = Type::finite;
    std::vector<ActionValue> values_;
    Eigen::VectorXd lo_, hi_;
    std::vector<int> steps_;
    int simplex_dim_ = 0;
    int simplex_steps_ = 0;
};

// Control path on [0, T]: affine inside each piece, pieces cover [0, T]
// contiguously. Piecewise-constant paths have a0 == a1 in every piece.
class ActionFunction {
public:
    struct Piece {
        double t0, t1;
        Eigen::VectorXd a0, a1;
    };

    static ActionFunction constant(const ActionValue& a, double T);
    // breaks.size() == values.size() + 1, strictly increasing, breaks.front() == 0.
    static ActionFunction piecewise_constant(const std::vector<double>& breaks,
                                             const std::vector<ActionValue>& values);
    static ActionFunction from_pieces(std::vector<Piece> pieces);

    ActionValue eval(double t) const;  // clamps t into [0, horizon]
    double horizon() const { return pieces_.back().t1; }
    int dim() const { return static_cast<int>(pieces_.front().a0.size()); }
    const std::vector<Piece>& pieces() const { return pieces_; }
    std::vector<double> breakpoints() const;

    int discontinuity_count() const;   // interior breakpoints with a jump
    double lipschitz_constant() const; // max within-piece slope norm
    double sup_norm() const;           // sup_t ||a(t)||_2, attained at piece endpoints

private:
    explicit ActionFunction(std::vector<Piece> pieces) : pieces_(std::move(pieces)) {}
    std::vector<Piece> pieces_;
};

struct RateRule {
    std::string from, to;
    Expr expr;
};

// Population model: named states, an action space, per-object transition rate
// expressions (absent pairs are structural zeros), a running reward, an
// optional terminal reward, and a declared bound rate_cap on the worst-case
// row sum of the rate matrix. The induced N-object kernel moves each object
// in state i to j != i with probability R_ij(m, a)/N per slot, independently.
class ModelSpec {
public:
    ModelSpec(std::vector<std::string> states, ActionSpace actions,
              std::vector<std::pair<std::string, double>> params, std::vector<RateRule> rates,
              Expr reward, std::optional<Expr> terminal_reward, double rate_cap);

    const std::vector<std::string>& states() const { return states_; }
    int S() const { return static_cast<int>(states_.size()); }
    int state_index(const std::string& name) const;  // -1 when absent
    const ActionSpace& actions() const { return actions_; }
    const std::vector<std::string>& param_names() const { return param_names_; }
    const Eigen::VectorXd& param_values() const { return param_values_; }
    bool has_param(const std::string& name) const;
    double param(const std::string& name) const;
    // Same model with one parameter overridden (expressions stay compiled).
    ModelSpec with_param(const std::string& name, double value) const;

    const std::vector<RateRule>& rate_rules() const { return rates_; }
    const Expr& reward_ast() const { return reward_; }
    const std::optional<Expr>& terminal_ast() const { return terminal_; }
    double rate_cap() const { return rate_cap_; }

    // R(m, a): off-diagonals are the evaluated rate expressions (error if an
    // entry is negative beyond roundoff), diagonal set so each row sums to 0.
    void rate_matrix_into(const double* m, const double* a, Eigen::MatrixXd& R) const;
    Eigen::MatrixXd rate_matrix(const OccupancyMeasure& m, const ActionValue& a) const;

    double reward(const double* m, const double* a) const;
    double reward(const OccupancyMeasure& m, const ActionValue& a) const;
    // Terminal reward g(m); 0 when the model declares none.
    double terminal(const double* m) const;
    double terminal(const OccupancyMeasure& m) const;

private:
    std::vector<std::string> states_;
    ActionSpace actions_;
    std::vector<std::string> param_names_;
    Eigen::VectorXd param_values_;
    std::vector<RateRule> rates_;
    Expr reward_;
    std::optional<Expr> terminal_;
    double rate_cap_;

    struct CompiledRate {
        int from, to;
        CompiledExpr prog;
    };
    std::vector<CompiledRate> compiled_rates_;
    CompiledExpr compiled_reward_;
    CompiledExpr compiled_terminal_;
};

struct ValidationReport {
    int samples = 0;
    double max_row_sum = 0.0;
    double worst_rate = 0.0;      // most negative rate expression value seen
    double max_abs_reward = 0.0;
    double lip_f_m = 0.0;  // difference-quotient estimates (lower bounds)
    double lip_f_a = 0.0;
    double lip_r_m = 0.0;
    double lip_r_a = 0.0;
    std::vector<std::string> violations;
    bool passed() const { return violations.empty(); }
};

// Evaluates the model on a validation grid: simplex vertices, edge midpoints
// and `samples` seeded uniform draws, paired with extreme and uniform actions.
// Flags negative rates, row sums above rate_cap, and non-finite rewards.
ValidationReport validate_model(const ModelSpec& model, int samples = 2000,
                                std::uint64_t seed = 1);

// The validation grid itself (shared with constant estimation).
std::vector<std::pair<Eigen::VectorXd, ActionValue>> sample_model_domain(const ModelSpec& model,
                                                                         int samples,
                                                                         std::uint64_t seed);

} // namespace mfc
