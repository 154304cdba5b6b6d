#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "mfc/builtin.hpp"
#include "mfc/hjb.hpp"
#include "mfc/meanfield.hpp"
#include "mfc/rng.hpp"

using namespace mfc;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> xs) {
    Eigen::VectorXd v(static_cast<int>(xs.size()));
    int i = 0;
    for (double x : xs) v[i++] = x;
    return v;
}

ModelSpec make_pricing() {
    std::vector<RateRule> rates;
    rates.push_back({"U", "S", parse_expr("1 - a")});
    rates.push_back({"S", "U", parse_expr("a")});
    return ModelSpec({"U", "S"}, ActionSpace::finite_scalar({0.0, 1.0}), {{"T", 1.0}},
                     std::move(rates), parse_expr("m[S] * a"), std::nullopt, 1.0);
}

ModelSpec make_zero() {
    std::vector<RateRule> rates;
    rates.push_back({"A", "B", parse_expr("a")});
    return ModelSpec({"A", "B"}, ActionSpace::finite_scalar({0.0, 1.0}), {}, std::move(rates),
                     parse_expr("0"), std::nullopt, 1.0);
}

} // namespace

TEST_CASE("simplex grids enumerate the right node sets") {
    SimplexGrid g24 = build_simplex_grid(2, 4);
    REQUIRE(g24.size() == 5);
    CHECK(g24.node_measure(0) == vec({0.0, 1.0}));
    CHECK(g24.node_measure(1) == vec({0.25, 0.75}));
    CHECK(g24.node_measure(4) == vec({1.0, 0.0}));

    CHECK(build_simplex_grid(3, 2).size() == 6);
    CHECK(build_simplex_grid(4, 30).size() == 5456);

    SimplexGrid g = build_simplex_grid(4, 7);
    for (std::int64_t i = 0; i < g.size(); ++i) {
        CHECK(g.index_of_counts(g.nodes()[i]) == i);
        CHECK(g.nodes()[i].sum() == 7);
    }

    CHECK_THROWS_AS(build_simplex_grid(4, 1000, 1000), Error);
}

TEST_CASE("interpolation hits nodes and edge midpoints exactly") {
    SimplexGrid grid = build_simplex_grid(3, 4);
    Eigen::VectorXd vals(grid.size());
    for (std::int64_t i = 0; i < grid.size(); ++i) vals[i] = static_cast<double>(i * i % 7);

    for (std::int64_t i = 0; i < grid.size(); ++i)
        CHECK(interpolate_simplex(grid, vals, grid.node_measure(i)) == doctest::Approx(vals[i]).epsilon(1e-14));

    // midpoint of the edge between two adjacent nodes
    Eigen::VectorXi ca(3), cb(3);
    ca << 2, 1, 1;
    cb << 1, 2, 1;
    Eigen::VectorXd mid = 0.5 * (ca.cast<double>() + cb.cast<double>()) / 4.0;
    double want = 0.5 * (vals[grid.index_of_counts(ca)] + vals[grid.index_of_counts(cb)]);
    CHECK(interpolate_simplex(grid, vals, mid) == doctest::Approx(want).epsilon(1e-13));
}

TEST_CASE("interpolation is exact on affine fields") {
    auto rng = make_rng(2024);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int S = 2; S <= 5; ++S) {
        SimplexGrid grid = build_simplex_grid(S, 7);
        Eigen::VectorXd c(S);
        for (int i = 0; i < S; ++i) c[i] = u(rng);
        Eigen::VectorXd vals(grid.size());
        for (std::int64_t i = 0; i < grid.size(); ++i) vals[i] = c.dot(grid.node_measure(i));
        for (int trial = 0; trial < 1000; ++trial) {
            Eigen::VectorXd m = sample_simplex(rng, S);
            CHECK(std::fabs(interpolate_simplex(grid, vals, m) - c.dot(m)) <= 1e-12);
        }
    }
}

TEST_CASE("interpolation rejects points far from the simplex") {
    SimplexGrid grid = build_simplex_grid(3, 4);
    Eigen::VectorXd vals = Eigen::VectorXd::Zero(grid.size());
    CHECK_THROWS_AS(interpolate_simplex(grid, vals, vec({0.6, 0.6, 0.2})), Error);
    CHECK_THROWS_AS(interpolate_simplex(grid, vals, vec({-0.2, 0.6, 0.6})), Error);
    // a 1e-10 violation is clamped, not fatal
    CHECK_NOTHROW(interpolate_simplex(grid, vals, vec({0.5 + 1e-10, 0.5, -1e-10})));
}

TEST_CASE("zero rewards solve to the zero field") {
    ModelSpec zero = make_zero();
    SimplexGrid grid = build_simplex_grid(2, 10);
    ValueField field = solve_hjb(zero, grid, 1.0, 20);
    CHECK(field.values.cwiseAbs().maxCoeff() == 0.0);
    CHECK((field.greedy.array() == 0).all()); // ties resolve to the lowest index
    CHECK(!field.cfl_warning);

    // synthesis on an indifferent field sticks to the first action
    SynthesisResult syn = synthesize_action_function(zero, grid, field, vec({1.0, 0.0}));
    CHECK(syn.alpha.pieces().size() == 1);
    CHECK(syn.alpha.eval(0.5).v[0] == 0.0);
}

TEST_CASE("terminal slice carries the terminal reward exactly") {
    ModelSpec virus = virus_model();
    SimplexGrid grid = build_simplex_grid(4, 8);
    ValueField field = solve_hjb(virus, grid, 10.0, 25);
    for (std::int64_t i = 0; i < grid.size(); ++i) {
        Eigen::VectorXd m = grid.node_measure(i);
        CHECK(field.values(i, 25) == m[3]); // g = m[D]
    }

    // |u| <= (T - t) ||r||_inf + ||g||_inf with r = w I^2 <= 0.1, g <= 1
    for (int k = 0; k <= 25; ++k) {
        double slack = (10.0 - 0.4 * k) * 0.1 + 1.0 + 1e-12;
        for (std::int64_t i = 0; i < grid.size(); ++i)
            CHECK(std::fabs(field.values(i, k)) <= slack);
    }
}

TEST_CASE("horizon shrinkage never helps when rewards are nonnegative") {
    ModelSpec pricing = make_pricing();
    SimplexGrid grid = build_simplex_grid(2, 20);
    ValueField field = solve_hjb(pricing, grid, 1.0, 40);
    for (std::int64_t i = 0; i < grid.size(); ++i)
        for (int k = 0; k + 1 <= 40; ++k)
            CHECK(field.values(i, k) >= field.values(i, k + 1) - 1e-12);
}

TEST_CASE("cfl guard flags oversized time steps") {
    ModelSpec pricing = make_pricing();
    SimplexGrid grid = build_simplex_grid(2, 50);
    // dt = 0.25, rate_cap = 1, G = 50: feet can cross 12 cells
    ValueField coarse = solve_hjb(pricing, grid, 1.0, 4);
    CHECK(coarse.cfl_warning);
    ValueField fine = solve_hjb(pricing, grid, 1.0, 100);
    CHECK(!fine.cfl_warning);
}

TEST_CASE("market greedy actions follow the analytic switching curve") {
    ModelSpec pricing = make_pricing();
    const int G = 100, K = 250;
    SimplexGrid grid = build_simplex_grid(2, G);
    ValueField field = solve_hjb(pricing, grid, 1.0, K);
    std::int64_t checked = 0, agree = 0;
    for (int k = 0; k < K; ++k) {
        double t = static_cast<double>(k) / K;
        double threshold = std::min(0.5, 1.0 - std::exp(-(1.0 - t)));
        for (std::int64_t i = 0; i < grid.size(); ++i) {
            double x = grid.node_measure(i)[1];
            if (std::fabs(x - threshold) <= 2.0 / G) continue; // boundary band
            ++checked;
            double analytic = pricing_analytic_action(x, t, 1.0);
            double mine = field.action_set[field.greedy(i, k)].v[0];
            if (mine == analytic) ++agree;
        }
    }
    CHECK(static_cast<double>(agree) >= 0.98 * static_cast<double>(checked));
}

TEST_CASE("analytic market rule oracle") {
    CHECK(pricing_analytic_action(0.6, 0.0, 1.0) == 1.0);
    CHECK(pricing_analytic_action(0.3, 0.0, 1.0) == 0.0);
    CHECK(pricing_analytic_action(0.2, 0.9, 1.0) == 1.0); // 0.2 > 1 - e^-0.1
    CHECK(pricing_analytic_action(0.001, 1.0, 1.0) == 1.0);
    CHECK(pricing_analytic_action(0.5, 0.0, 1.0) == 0.0); // strict inequalities
}

TEST_CASE("feedback policy reads the field at the observed state") {
    ModelSpec pricing = make_pricing();
    SimplexGrid grid = build_simplex_grid(2, 100);
    ValueField field = solve_hjb(pricing, grid, 1.0, 250);
    CHECK(greedy_field_action(pricing, grid, field, vec({0.4, 0.6}), 0.0).v[0] == 1.0);
    CHECK(greedy_field_action(pricing, grid, field, vec({0.7, 0.3}), 0.0).v[0] == 0.0);
    CHECK(greedy_field_action(pricing, grid, field, vec({0.8, 0.2}), 0.9).v[0] == 1.0);

    Policy fb = feedback_policy(pricing, grid, field);
    CHECK(fb.act(0, 0.0, vec({0.4, 0.6})).v[0] == 1.0);
    CHECK(fb.act(225, 0.9, vec({0.8, 0.2})).v[0] == 1.0);
    CHECK_THROWS_AS(greedy_field_action(pricing, grid, field, vec({0.4, 0.6}), 1.5), Error);
}

TEST_CASE("synthesized market control switches near the half horizon") {
    ModelSpec pricing = make_pricing();
    SimplexGrid grid = build_simplex_grid(2, 200);
    ValueField field = solve_hjb(pricing, grid, 1.0, 400);
    SynthesisResult syn = synthesize_action_function(pricing, grid, field, vec({1.0, 0.0}));

    CHECK(syn.alpha.eval(0.1).v[0] == 0.0);
    CHECK(syn.alpha.eval(0.9).v[0] == 1.0);
    double switch_t = -1.0;
    for (const auto& piece : syn.alpha.pieces()) {
        if (piece.a0[0] == 1.0) {
            switch_t = piece.t0;
            break;
        }
    }
    REQUIRE(switch_t >= 0.0);
    CHECK(std::fabs(switch_t - 0.5) <= 0.02);

    // the open-loop value of the synthesized control matches the closed form
    // (1 - e^-T/2)^2 for this start
    double v = value_deterministic(pricing, vec({1.0, 0.0}), syn.alpha, 1.0, 1e-3);
    double closed = (1.0 - std::exp(-0.5)) * (1.0 - std::exp(-0.5));
    CHECK(std::fabs(v - closed) <= 3e-3);

    // and beats simple competitors up to grid error
    for (double flat : {0.0, 1.0}) {
        ActionFunction comp = ActionFunction::constant(ActionValue::scalar(flat), 1.0);
        double vc = value_deterministic(pricing, vec({1.0, 0.0}), comp, 1.0, 1e-3);
        CHECK(v >= vc - 0.02);
    }

    // the flow it returns is the flow it controls
    SampledPath replay = integrate_flow(pricing, vec({1.0, 0.0}), syn.alpha, 1.0, 1e-3);
    CHECK(sup_distance(syn.flow, replay) <= 1e-3);
}

TEST_CASE("hjb solves are thread-count invariant") {
    ModelSpec virus = virus_model();
    SimplexGrid grid = build_simplex_grid(4, 8);
    ValueField a = solve_hjb(virus, grid, 10.0, 25, 1);
    ValueField b = solve_hjb(virus, grid, 10.0, 25, 4);
    CHECK(a.values == b.values);
    CHECK(a.greedy == b.greedy);
}
