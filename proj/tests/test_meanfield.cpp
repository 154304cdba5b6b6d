#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "mfc/builtin.hpp"
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

ModelSpec make_frozen() {
    return ModelSpec({"A", "B"}, ActionSpace::finite_scalar({0.0}), {}, {}, parse_expr("0"),
                     std::nullopt, 0.0);
}

} // namespace

TEST_CASE("limit drift of the market") {
    ModelSpec pricing = make_pricing();
    Eigen::VectorXd f = drift_limit(pricing, OccupancyMeasure(vec({0.5, 0.5})),
                                    ActionValue::scalar(0.0));
    CHECK(f[1] == 0.5); // dx/dt = 1 - x - a
    CHECK(f[0] == -0.5);

    Eigen::VectorXd g = drift_limit(pricing, OccupancyMeasure(vec({0.0, 1.0})),
                                    ActionValue::scalar(1.0));
    CHECK(g[1] == -1.0);

    // two-state drifts cancel exactly
    auto rng = make_rng(3);
    std::uniform_int_distribution<int> coin(0, 1);
    for (int i = 0; i < 100; ++i) {
        OccupancyMeasure m(sample_simplex(rng, 2));
        ActionValue a = ActionValue::scalar(static_cast<double>(coin(rng)));
        CHECK(drift_limit(pricing, m, a).sum() == 0.0);
    }

    ModelSpec frozen = make_frozen();
    Eigen::VectorXd z = drift_limit(frozen, OccupancyMeasure(vec({0.3, 0.7})),
                                    ActionValue::scalar(0.0));
    CHECK(z.norm() == 0.0);
}

TEST_CASE("drift components cancel up to roundoff for larger models") {
    ModelSpec virus = virus_model();
    auto rng = make_rng(9);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 100; ++i) {
        OccupancyMeasure m(sample_simplex(rng, 4));
        ActionValue a = ActionValue::scalar(u(rng));
        CHECK(std::fabs(drift_limit(virus, m, a).sum()) <= 1e-15);
    }
}

TEST_CASE("finite-N drift is the limit drift scaled by the intensity") {
    ModelSpec pricing = make_pricing();
    OccupancyMeasure m(vec({0.5, 0.5}), 100);
    Eigen::VectorXd F = drift_finite(pricing, m, ActionValue::scalar(0.0), 100);
    CHECK(F[1] == doctest::Approx(0.005).epsilon(1e-14));

    ModelSpec frozen = make_frozen();
    OccupancyMeasure mf(vec({0.5, 0.5}), 10);
    CHECK(drift_finite(frozen, mf, ActionValue::scalar(0.0), 10).norm() == 0.0);

    // the identity F^N = f/N holds to machine precision across the domain
    ModelSpec virus = virus_model();
    auto rng = make_rng(11);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 100; ++i) {
        OccupancyMeasure m50 = grain_measure(sample_simplex(rng, 4), 50);
        ActionValue a = ActionValue::scalar(u(rng));
        Eigen::VectorXd Fd = drift_finite(virus, m50, a, 50);
        Eigen::VectorXd f = drift_limit(virus, m50, a);
        CHECK((Fd * 50.0 - f).lpNorm<Eigen::Infinity>() <= 1e-12);
    }
}

TEST_CASE("market flow reaches the closed-form endpoint") {
    ModelSpec pricing = make_pricing();
    ActionFunction zero = ActionFunction::constant(ActionValue::scalar(0.0), 1.0);
    SampledPath flow = integrate_flow(pricing, vec({1.0, 0.0}), zero, 1.0, 1e-3);
    CHECK(flow.times.front() == 0.0);
    CHECK(flow.times.back() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(flow.points.back()[1] == doctest::Approx(1.0 - std::exp(-1.0)).epsilon(1e-8));
    for (const auto& p : flow.points) {
        CHECK(std::fabs(p.sum() - 1.0) <= 1e-9);
        CHECK(p.minCoeff() >= -1e-9);
    }
}

TEST_CASE("flows of frozen models do not move") {
    ModelSpec frozen = make_frozen();
    ActionFunction zero = ActionFunction::constant(ActionValue::scalar(0.0), 2.0);
    SampledPath flow = integrate_flow(frozen, vec({0.3, 0.7}), zero, 2.0, 0.1);
    for (const auto& p : flow.points) CHECK(p == vec({0.3, 0.7}));
}

TEST_CASE("unpatched epidemics never fill the graveyard") {
    ModelSpec virus = virus_model();
    ActionFunction off = ActionFunction::constant(ActionValue::scalar(0.0), 10.0);
    SampledPath flow = integrate_flow(virus, vec({0.6, 0.2, 0.1, 0.1}), off, 10.0, 0.01);
    for (const auto& p : flow.points) CHECK(p[3] == 0.1);
    // but the infection does move
    CHECK(flow.points.back()[1] != flow.points.front()[1]);
}

TEST_CASE("flow integration requires the control to cover the horizon") {
    ModelSpec pricing = make_pricing();
    ActionFunction half = ActionFunction::constant(ActionValue::scalar(0.0), 0.5);
    CHECK_THROWS_AS(integrate_flow(pricing, vec({1.0, 0.0}), half, 1.0, 0.01), Error);
}

TEST_CASE("deterministic value of the market") {
    ModelSpec pricing = make_pricing();
    ActionFunction zero = ActionFunction::constant(ActionValue::scalar(0.0), 1.0);
    CHECK(value_deterministic(pricing, vec({1.0, 0.0}), zero, 1.0, 1e-3) == 0.0);

    // start fully subscribed and always charge: integral of e^-t on [0,1]
    ActionFunction one = ActionFunction::constant(ActionValue::scalar(1.0), 1.0);
    double v = value_deterministic(pricing, vec({0.0, 1.0}), one, 1.0, 1e-3);
    CHECK(v == doctest::Approx(1.0 - std::exp(-1.0)).epsilon(1e-6));

    ModelSpec frozen = make_frozen();
    ActionFunction z2 = ActionFunction::constant(ActionValue::scalar(0.0), 1.0);
    CHECK(value_deterministic(frozen, vec({1.0, 0.0}), z2, 1.0, 0.01) == 0.0);
}

TEST_CASE("integrator converges at fourth order") {
    ModelSpec virus = virus_model();
    ActionFunction off = ActionFunction::constant(ActionValue::scalar(0.0), 2.0);
    Eigen::VectorXd m0 = vec({0.7, 0.22, 0.08, 0.0});
    Eigen::VectorXd ref = integrate_flow(virus, m0, off, 2.0, 0.003125).points.back();
    double e1 = (integrate_flow(virus, m0, off, 2.0, 0.1).points.back() - ref).norm();
    double e2 = (integrate_flow(virus, m0, off, 2.0, 0.05).points.back() - ref).norm();
    CHECK(e1 / e2 >= 12.0);
}

TEST_CASE("flows compose like a semi-flow") {
    ModelSpec pricing = make_pricing();
    ActionFunction alpha = ActionFunction::piecewise_constant(
        {0.0, 0.5, 1.0}, {ActionValue::scalar(0.0), ActionValue::scalar(1.0)});
    Eigen::VectorXd m0 = vec({1.0, 0.0});
    Eigen::VectorXd full = integrate_flow(pricing, m0, alpha, 1.0, 0.01).points.back();

    Eigen::VectorXd mid = integrate_flow(pricing, m0, alpha, 0.4, 0.01).points.back();
    // alpha shifted by 0.4: off until 0.1, then on
    ActionFunction tail = ActionFunction::piecewise_constant(
        {0.0, 0.1, 0.6}, {ActionValue::scalar(0.0), ActionValue::scalar(1.0)});
    Eigen::VectorXd composed = integrate_flow(pricing, mid, tail, 0.6, 0.01).points.back();
    CHECK((full - composed).norm() <= 1e-8);
}

TEST_CASE("coupled flow replays trajectory actions") {
    ModelSpec pricing = make_pricing();
    const std::int64_t N = 8; // dyadic intensity keeps slot times exact
    OccupancyMeasure m0(vec({1.0, 0.0}), N);
    Trajectory traj = simulate(pricing, N, Policy::constant(ActionValue::scalar(1.0)), m0,
                               1.0, 5);

    ActionFunction replay = action_path_of_trajectory(traj);
    CHECK(replay.pieces().size() == 8);
    CHECK(replay.eval(0.3).v[0] == 1.0);
    CHECK(replay.horizon() == 1.0);

    SampledPath coupled = coupled_flow(pricing, traj, 0.01);
    SampledPath direct = integrate_flow(pricing, m0.w(),
                                        ActionFunction::constant(ActionValue::scalar(1.0), 1.0),
                                        1.0, 0.01);
    // grids differ (the coupled run aligns to slot breakpoints), so the paths
    // agree only up to affine-interpolation error between knots
    CHECK(sup_distance(coupled, direct) <= 1e-4);

    // a frozen model's coupled flow never moves
    ModelSpec frozen = make_frozen();
    OccupancyMeasure f0(vec({0.5, 0.5}), 8);
    Trajectory ftraj = simulate(frozen, 8, Policy::constant(ActionValue::scalar(0.0)), f0,
                                1.0, 5);
    SampledPath fflow = coupled_flow(frozen, ftraj, 0.01);
    for (const auto& p : fflow.points) CHECK(p == f0.w());
}

TEST_CASE("sample paths hug their coupled flows at large N") {
    ModelSpec pricing = make_pricing();
    const std::int64_t N = 1000;
    OccupancyMeasure m0(vec({1.0, 0.0}), N);
    int good = 0;
    for (int s = 0; s < 20; ++s) {
        Trajectory traj = simulate(pricing, N, Policy::constant(ActionValue::scalar(0.0)), m0,
                                   1.0, 900 + s);
        double dev = sup_distance(path_of_trajectory(traj), coupled_flow(pricing, traj, 0.01));
        if (dev < 0.1) ++good;
    }
    CHECK(good >= 18);
}
