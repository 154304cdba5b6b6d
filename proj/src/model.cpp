#include "mfc/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "mfc/rng.hpp"
#include "mfc/simplex.hpp"

namespace mfc {

OccupancyMeasure::OccupancyMeasure(Eigen::VectorXd weights, std::optional<std::int64_t> grain)
    : w_(std::move(weights)), grain_(grain) {
    if (w_.size() == 0) throw Error::validation("occupancy measure needs at least one state");
    double sum = 0.0;
    for (int i = 0; i < w_.size(); ++i) {
        if (!std::isfinite(w_[i]) || w_[i] < -1e-12)
            throw Error::validation("occupancy weight " + std::to_string(i) +
                                    " is negative or non-finite");
        sum += w_[i];
    }
    if (std::fabs(sum - 1.0) > 1e-12)
        throw Error::validation("occupancy weights sum to " + std::to_string(sum) +
                                ", expected 1");
    if (grain_) {
        if (*grain_ < 1) throw Error::validation("grain must be a positive object count");
        for (int i = 0; i < w_.size(); ++i) {
            double scaled = w_[i] * static_cast<double>(*grain_);
            if (std::fabs(scaled - std::round(scaled)) > 1e-9)
                throw Error::validation("weight " + std::to_string(i) +
                                        " is not a multiple of 1/" + std::to_string(*grain_));
        }
    }
}

OccupancyMeasure OccupancyMeasure::from_counts(const Eigen::VectorXi& counts) {
    std::int64_t total = 0;
    for (int i = 0; i < counts.size(); ++i) {
        if (counts[i] < 0) throw Error::validation("negative object count");
        total += counts[i];
    }
    if (total == 0) throw Error::validation("empty population");
    Eigen::VectorXd w(counts.size());
    for (int i = 0; i < counts.size(); ++i)
        w[i] = static_cast<double>(counts[i]) / static_cast<double>(total);
    return OccupancyMeasure(std::move(w), total);
}

Eigen::VectorXi OccupancyMeasure::counts() const {
    if (!grain_) throw Error::validation("occupancy measure carries no grain");
    Eigen::VectorXi c(w_.size());
    for (int i = 0; i < w_.size(); ++i)
        c[i] = static_cast<int>(std::llround(w_[i] * static_cast<double>(*grain_)));
    return c;
}

OccupancyMeasure occupancy_from_states(const std::vector<int>& object_states, int num_states) {
    if (object_states.empty()) throw Error::validation("empty population");
    Eigen::VectorXi counts = Eigen::VectorXi::Zero(num_states);
    for (int s : object_states) {
        if (s < 0 || s >= num_states)
            throw Error::validation("object state " + std::to_string(s) + " out of range");
        ++counts[s];
    }
    return OccupancyMeasure::from_counts(counts);
}

OccupancyMeasure grain_measure(const Eigen::VectorXd& m, std::int64_t N) {
    if (N < 1) throw Error::validation("grain must be a positive object count");
    const int S = static_cast<int>(m.size());
    Eigen::VectorXi base(S);
    std::vector<std::pair<double, int>> remainder(S);
    std::int64_t assigned = 0;
    for (int i = 0; i < S; ++i) {
        double target = m[i] * static_cast<double>(N);
        if (!std::isfinite(target) || target < -1e-9)
            throw Error::validation("cannot grain a negative weight");
        double fl = std::floor(target);
        base[i] = static_cast<int>(fl);
        remainder[i] = {target - fl, i};
        assigned += base[i];
    }
    std::int64_t deficit = N - assigned;
    if (deficit < 0 || deficit > S)
        throw Error::validation("weights do not sum to 1, cannot grain");
    // hand the leftover objects to the largest remainders, ties to the lower index
    std::stable_sort(remainder.begin(), remainder.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::int64_t k = 0; k < deficit; ++k) ++base[remainder[k].second];
    return OccupancyMeasure::from_counts(base);
}

// ---- ActionSpace ------------------------------------------------------------

ActionSpace ActionSpace::finite(std::vector<ActionValue> values) {
    if (values.empty()) throw Error::validation("finite action space needs at least one action");
    const int dim = values.front().dim();
    if (dim < 1) throw Error::validation("actions need at least one component");
    for (const ActionValue& v : values)
        if (v.dim() != dim) throw Error::validation("mixed action dimensions");
    ActionSpace a;
    a.type_ = Type::finite;
    a.values_ = std::move(values);
    return a;
}

ActionSpace ActionSpace::finite_scalar(std::initializer_list<double> values) {
    std::vector<ActionValue> v;
    for (double x : values) v.push_back(ActionValue::scalar(x));
    return finite(std::move(v));
}

ActionSpace ActionSpace::box(Eigen::VectorXd lo, Eigen::VectorXd hi, std::vector<int> steps) {
    if (lo.size() == 0 || lo.size() != hi.size() ||
        steps.size() != static_cast<size_t>(lo.size()))
        throw Error::validation("box action space needs matching lo/hi/steps sizes");
    for (int i = 0; i < lo.size(); ++i) {
        if (!(lo[i] <= hi[i])) throw Error::validation("box bounds are inverted");
        if (steps[static_cast<size_t>(i)] < 1)
            throw Error::validation("box needs at least one grid point per axis");
    }
    ActionSpace a;
    a.type_ = Type::box;
    a.lo_ = std::move(lo);
    a.hi_ = std::move(hi);
    a.steps_ = std::move(steps);
    return a;
}

ActionSpace ActionSpace::simplex(int dim, int steps) {
    if (dim < 1) throw Error::validation("simplex action space needs a positive dimension");
    if (steps < 1) throw Error::validation("simplex action space needs a positive denominator");
    ActionSpace a;
    a.type_ = Type::simplex;
    a.simplex_dim_ = dim;
    a.simplex_steps_ = steps;
    return a;
}

int ActionSpace::dim() const {
    switch (type_) {
        case Type::finite: return values_.front().dim();
        case Type::box: return static_cast<int>(lo_.size());
        case Type::simplex: return simplex_dim_;
    }
    return 0;
}

bool ActionSpace::contains(const ActionValue& a, double tol) const {
    if (a.dim() != dim()) return false;
    switch (type_) {
        case Type::finite: {
            for (const ActionValue& v : values_)
                if (action_distance(a, v) <= tol) return true;
            return false;
        }
        case Type::box: {
            for (int i = 0; i < lo_.size(); ++i)
                if (a.v[i] < lo_[i] - tol || a.v[i] > hi_[i] + tol) return false;
            return true;
        }
        case Type::simplex: {
            double sum = 0.0;
            for (int i = 0; i < a.v.size(); ++i) {
                if (a.v[i] < -tol) return false;
                sum += a.v[i];
            }
            return std::fabs(sum - 1.0) <= tol;
        }
    }
    return false;
}

std::vector<ActionValue> ActionSpace::enumerate() const {
    switch (type_) {
        case Type::finite: return values_;
        case Type::box: {
            std::int64_t total = 1;
            for (int s : steps_) {
                total *= s;
                if (total > 1'000'000)
                    throw Error::capacity("box action grid exceeds 1e6 points");
            }
            std::vector<ActionValue> out;
            out.reserve(static_cast<size_t>(total));
            const int d = dim();
            std::vector<int> idx(static_cast<size_t>(d), 0);
            for (std::int64_t n = 0; n < total; ++n) {
                Eigen::VectorXd v(d);
                for (int i = 0; i < d; ++i) {
                    int st = steps_[static_cast<size_t>(i)];
                    v[i] = st == 1 ? lo_[i]
                                   : lo_[i] + (hi_[i] - lo_[i]) * idx[static_cast<size_t>(i)] /
                                                  (st - 1);
                }
                out.push_back(ActionValue(v));
                for (int i = d - 1; i >= 0; --i) {
                    if (++idx[static_cast<size_t>(i)] < steps_[static_cast<size_t>(i)]) break;
                    idx[static_cast<size_t>(i)] = 0;
                }
            }
            return out;
        }
        case Type::simplex: {
            auto counts = enumerate_compositions(simplex_steps_, simplex_dim_, 1'000'000);
            std::vector<ActionValue> out;
            out.reserve(counts.size());
            for (const auto& c : counts) {
                Eigen::VectorXd v(simplex_dim_);
                for (int i = 0; i < simplex_dim_; ++i)
                    v[i] = static_cast<double>(c[i]) / simplex_steps_;
                out.push_back(ActionValue(v));
            }
            return out;
        }
    }
    return {};
}

// ---- ActionFunction ---------------------------------------------------------

ActionFunction ActionFunction::constant(const ActionValue& a, double T) {
    if (!(T > 0.0)) throw Error::validation("action function needs a positive horizon");
    return from_pieces({Piece{0.0, T, a.v, a.v}});
}

ActionFunction ActionFunction::piecewise_constant(const std::vector<double>& breaks,
                                                  const std::vector<ActionValue>& values) {
    if (values.empty() || breaks.size() != values.size() + 1)
        throw Error::validation("piecewise function needs breaks.size() == values.size() + 1");
    std::vector<Piece> pieces;
    for (size_t i = 0; i < values.size(); ++i)
        pieces.push_back(Piece{breaks[i], breaks[i + 1], values[i].v, values[i].v});
    return from_pieces(std::move(pieces));
}

ActionFunction ActionFunction::from_pieces(std::vector<Piece> pieces) {
    if (pieces.empty()) throw Error::validation("action function needs at least one piece");
    if (pieces.front().t0 != 0.0)
        throw Error::validation("action function must start at t = 0");
    const auto dim = pieces.front().a0.size();
    for (size_t i = 0; i < pieces.size(); ++i) {
        const Piece& p = pieces[i];
        if (!(p.t1 > p.t0)) throw Error::validation("action piece must have t1 > t0");
        if (p.a0.size() != dim || p.a1.size() != dim)
            throw Error::validation("action pieces have mixed dimensions");
        if (i > 0 && pieces[i - 1].t1 != p.t0)
            throw Error::validation("action pieces must tile [0, T] contiguously");
    }
    return ActionFunction(std::move(pieces));
}

ActionValue ActionFunction::eval(double t) const {
    if (t <= 0.0) return ActionValue(pieces_.front().a0);
    if (t >= horizon()) return ActionValue(pieces_.back().a1);
    // rightmost piece with t0 <= t; right-continuous at interior breakpoints
    size_t lo = 0, hi = pieces_.size() - 1;
    while (lo < hi) {
        size_t mid = (lo + hi + 1) / 2;
        if (pieces_[mid].t0 <= t)
            lo = mid;
        else
            hi = mid - 1;
    }
    const Piece& p = pieces_[lo];
    if (p.a0 == p.a1) return ActionValue(p.a0);
    double s = (t - p.t0) / (p.t1 - p.t0);
    return ActionValue(p.a0 + s * (p.a1 - p.a0));
}

std::vector<double> ActionFunction::breakpoints() const {
    std::vector<double> out;
    out.reserve(pieces_.size() + 1);
    for (const Piece& p : pieces_) out.push_back(p.t0);
    out.push_back(pieces_.back().t1);
    return out;
}

int ActionFunction::discontinuity_count() const {
    int jumps = 0;
    for (size_t i = 1; i < pieces_.size(); ++i)
        if (!(pieces_[i - 1].a1 == pieces_[i].a0)) ++jumps;
    return jumps;
}

double ActionFunction::lipschitz_constant() const {
    double worst = 0.0;
    for (const Piece& p : pieces_)
        worst = std::max(worst, (p.a1 - p.a0).norm() / (p.t1 - p.t0));
    return worst;
}

double ActionFunction::sup_norm() const {
    double worst = 0.0;
    for (const Piece& p : pieces_)
        worst = std::max({worst, p.a0.norm(), p.a1.norm()});
    return worst;
}

// ---- ModelSpec --------------------------------------------------------------

ModelSpec::ModelSpec(std::vector<std::string> states, ActionSpace actions,
                     std::vector<std::pair<std::string, double>> params,
                     std::vector<RateRule> rates, Expr reward,
                     std::optional<Expr> terminal_reward, double rate_cap)
    : states_(std::move(states)),
      actions_(std::move(actions)),
      rates_(std::move(rates)),
      reward_(std::move(reward)),
      terminal_(std::move(terminal_reward)),
      rate_cap_(rate_cap) {
    if (states_.empty()) throw Error::validation("model needs at least one state");
    std::set<std::string> seen;
    for (const auto& s : states_)
        if (!seen.insert(s).second) throw Error::validation("duplicate state '" + s + "'");
    if (!std::isfinite(rate_cap_) || rate_cap_ < 0.0)
        throw Error::validation("rate_cap must be finite and nonnegative");

    param_names_.reserve(params.size());
    param_values_.resize(static_cast<Eigen::Index>(params.size()));
    std::set<std::string> pseen;
    for (size_t i = 0; i < params.size(); ++i) {
        if (!pseen.insert(params[i].first).second)
            throw Error::validation("duplicate parameter '" + params[i].first + "'");
        param_names_.push_back(params[i].first);
        param_values_[static_cast<Eigen::Index>(i)] = params[i].second;
    }

    const int adim = actions_.dim();
    for (const RateRule& r : rates_) {
        int from = state_index(r.from);
        int to = state_index(r.to);
        if (from < 0) throw Error::validation("rate rule from unknown state '" + r.from + "'");
        if (to < 0) throw Error::validation("rate rule to unknown state '" + r.to + "'");
        if (from == to) throw Error::validation("self-loop rate on state '" + r.from + "'");
        compiled_rates_.push_back({from, to, compile_expr(r.expr, states_, adim, param_names_)});
    }
    compiled_reward_ = compile_expr(reward_, states_, adim, param_names_);
    // terminal rewards are functions of m alone; action refs fail to resolve
    if (terminal_) compiled_terminal_ = compile_expr(*terminal_, states_, 0, param_names_);
}

int ModelSpec::state_index(const std::string& name) const {
    for (size_t i = 0; i < states_.size(); ++i)
        if (states_[i] == name) return static_cast<int>(i);
    return -1;
}

bool ModelSpec::has_param(const std::string& name) const {
    return std::find(param_names_.begin(), param_names_.end(), name) != param_names_.end();
}

double ModelSpec::param(const std::string& name) const {
    for (size_t i = 0; i < param_names_.size(); ++i)
        if (param_names_[i] == name) return param_values_[static_cast<Eigen::Index>(i)];
    throw Error::validation("unknown parameter '" + name + "'");
}

ModelSpec ModelSpec::with_param(const std::string& name, double value) const {
    for (size_t i = 0; i < param_names_.size(); ++i)
        if (param_names_[i] == name) {
            ModelSpec copy = *this;
            copy.param_values_[static_cast<Eigen::Index>(i)] = value;
            return copy;
        }
    throw Error::validation("unknown parameter '" + name + "'");
}

void ModelSpec::rate_matrix_into(const double* m, const double* a, Eigen::MatrixXd& R) const {
    const int S = this->S();
    R.resize(S, S);
    R.setZero();
    const double* p = param_values_.data();
    for (const CompiledRate& cr : compiled_rates_) {
        double v = cr.prog.eval(m, a, p);
        if (!(v >= -1e-12) || !std::isfinite(v))
            throw Error::eval("negative rate from '" + states_[static_cast<size_t>(cr.from)] +
                              "' to '" + states_[static_cast<size_t>(cr.to)] + "' (" +
                              std::to_string(v) + ")");
        R(cr.from, cr.to) += std::max(v, 0.0);
    }
    for (int i = 0; i < S; ++i) {
        double out = 0.0;
        for (int j = 0; j < S; ++j)
            if (j != i) out += R(i, j);
        R(i, i) = -out;
    }
}

Eigen::MatrixXd ModelSpec::rate_matrix(const OccupancyMeasure& m, const ActionValue& a) const {
    Eigen::MatrixXd R;
    rate_matrix_into(m.w().data(), a.v.data(), R);
    return R;
}

double ModelSpec::reward(const double* m, const double* a) const {
    return compiled_reward_.eval(m, a, param_values_.data());
}

double ModelSpec::reward(const OccupancyMeasure& m, const ActionValue& a) const {
    return reward(m.w().data(), a.v.data());
}

double ModelSpec::terminal(const double* m) const {
    if (!terminal_) return 0.0;
    return compiled_terminal_.eval(m, nullptr, param_values_.data());
}

double ModelSpec::terminal(const OccupancyMeasure& m) const { return terminal(m.w().data()); }

// ---- validation -------------------------------------------------------------

std::vector<std::pair<Eigen::VectorXd, ActionValue>> sample_model_domain(
    const ModelSpec& model, int samples, std::uint64_t seed) {
    const int S = model.S();
    std::vector<ActionValue> acts = model.actions().enumerate();
    if (acts.size() > 64) acts.resize(64);
    std::vector<std::pair<Eigen::VectorXd, ActionValue>> out;

    // vertices with every enumerated action: the extremes where the pinned
    // constants are attained exactly
    for (int s = 0; s < S; ++s) {
        Eigen::VectorXd m = Eigen::VectorXd::Zero(S);
        m[s] = 1.0;
        for (const ActionValue& a : acts) out.emplace_back(m, a);
    }
    // edge midpoints, cycling through the action set
    size_t cycle = 0;
    for (int s = 0; s < S; ++s)
        for (int t = s + 1; t < S; ++t) {
            Eigen::VectorXd m = Eigen::VectorXd::Zero(S);
            m[s] = 0.5;
            m[t] = 0.5;
            out.emplace_back(m, acts[cycle++ % acts.size()]);
        }

    auto rng = make_rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const ActionSpace& space = model.actions();
    for (int k = 0; k < samples; ++k) {
        Eigen::VectorXd m = sample_simplex(rng, S);
        ActionValue a;
        if (k % 2 == 0 || space.type() == ActionSpace::Type::finite) {
            a = acts[static_cast<size_t>(rng() % acts.size())];
        } else if (space.type() == ActionSpace::Type::box) {
            Eigen::VectorXd v(space.dim());
            for (int i = 0; i < space.dim(); ++i)
                v[i] = space.lo()[i] + (space.hi()[i] - space.lo()[i]) * unit(rng);
            a = ActionValue(v);
        } else {
            a = ActionValue(sample_simplex(rng, space.dim()));
        }
        out.emplace_back(std::move(m), std::move(a));
    }
    return out;
}

ValidationReport validate_model(const ModelSpec& model, int samples, std::uint64_t seed) {
    ValidationReport rep;
    const int S = model.S();
    const int adim = model.actions().dim();

    // compile the rules locally so negative values are observed, not thrown
    struct Rule {
        int from, to;
        CompiledExpr prog;
    };
    std::vector<Rule> rules;
    for (const RateRule& r : model.rate_rules())
        rules.push_back({model.state_index(r.from), model.state_index(r.to),
                         compile_expr(r.expr, model.states(), adim, model.param_names())});
    const double* p = model.param_values().data();

    auto note = [&](const std::string& v) {
        if (rep.violations.size() < 20)
            rep.violations.push_back(v);
        else if (rep.violations.size() == 20)
            rep.violations.push_back("... further violations suppressed");
    };

    auto drift_at = [&](const Eigen::VectorXd& m, const ActionValue& a, Eigen::VectorXd& f,
                        bool record) -> bool {
        Eigen::VectorXd outflow = Eigen::VectorXd::Zero(S);
        f.setZero(S);
        bool ok = true;
        for (const Rule& r : rules) {
            double v;
            try {
                v = r.prog.eval(m.data(), a.v.data(), p);
            } catch (const Error& e) {
                if (record) note(std::string("rate evaluation failed: ") + e.what());
                ok = false;
                continue;
            }
            if (record) {
                rep.worst_rate = std::min(rep.worst_rate, v);
                if (v < -1e-9) {
                    note("negative rate " + std::to_string(v) + " from '" +
                         model.states()[static_cast<size_t>(r.from)] + "' to '" +
                         model.states()[static_cast<size_t>(r.to)] + "'");
                    ok = false;
                }
                if (!std::isfinite(v)) {
                    note("non-finite rate");
                    ok = false;
                }
            }
            if (std::isfinite(v)) {
                outflow[r.from] += v;
                f[r.to] += m[r.from] * v;
            }
        }
        for (int i = 0; i < S; ++i) f[i] -= m[i] * outflow[i];
        if (record) {
            double worst_row = outflow.maxCoeff();
            rep.max_row_sum = std::max(rep.max_row_sum, worst_row);
            if (worst_row > model.rate_cap() + 1e-9) {
                note("rate row sum " + std::to_string(worst_row) + " exceeds rate_cap " +
                     std::to_string(model.rate_cap()));
                ok = false;
            }
        }
        return ok;
    };

    auto grid = sample_model_domain(model, samples, seed);
    rep.samples = static_cast<int>(grid.size());

    std::vector<Eigen::VectorXd> drifts(grid.size());
    std::vector<double> rewards(grid.size());
    std::vector<bool> usable(grid.size(), true);
    for (size_t i = 0; i < grid.size(); ++i) {
        usable[i] = drift_at(grid[i].first, grid[i].second, drifts[i], true);
        try {
            rewards[i] = model.reward(grid[i].first.data(), grid[i].second.v.data());
            if (!std::isfinite(rewards[i])) {
                note("non-finite reward");
                usable[i] = false;
            } else {
                rep.max_abs_reward = std::max(rep.max_abs_reward, std::fabs(rewards[i]));
            }
        } catch (const Error& e) {
            note(std::string("reward evaluation failed: ") + e.what());
            rewards[i] = 0.0;
            usable[i] = false;
        }
        try {
            double g = model.terminal(grid[i].first.data());
            if (!std::isfinite(g)) {
                note("non-finite terminal reward");
                usable[i] = false;
            }
        } catch (const Error& e) {
            note(std::string("terminal reward evaluation failed: ") + e.what());
            usable[i] = false;
        }
    }

    // lower-bound difference quotients from consecutive sample pairs; the
    // report uses the sup norm (per-coordinate slopes, a diagnostic), unlike
    // the l2-based certificate constants
    Eigen::VectorXd f_other;
    for (size_t i = 0; i + 1 < grid.size(); ++i) {
        if (!usable[i] || !usable[i + 1]) continue;
        const auto& [m1, a1] = grid[i];
        const auto& [m2, a2] = grid[i + 1];
        double dm = (m1 - m2).lpNorm<Eigen::Infinity>();
        if (dm > 1e-12 && drift_at(m2, a1, f_other, false)) {
            rep.lip_f_m = std::max(
                rep.lip_f_m, (drifts[i] - f_other).lpNorm<Eigen::Infinity>() / dm);
            try {
                double r2 = model.reward(m2.data(), a1.v.data());
                rep.lip_r_m = std::max(rep.lip_r_m, std::fabs(rewards[i] - r2) / dm);
            } catch (const Error&) {
            }
        }
        double da = (a1.v - a2.v).lpNorm<Eigen::Infinity>();
        if (da > 1e-12 && drift_at(m1, a2, f_other, false)) {
            rep.lip_f_a = std::max(
                rep.lip_f_a, (drifts[i] - f_other).lpNorm<Eigen::Infinity>() / da);
            try {
                double r3 = model.reward(m1.data(), a2.v.data());
                rep.lip_r_a = std::max(rep.lip_r_a, std::fabs(rewards[i] - r3) / da);
            } catch (const Error&) {
            }
        }
    }
    return rep;
}

} // namespace mfc
