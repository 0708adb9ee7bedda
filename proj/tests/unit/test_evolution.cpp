#include <doctest.h>

#include <cmath>

#include "bistable/evolution.hpp"

using namespace bistable;

namespace {

const double kRoot2 = std::sqrt(2.0);

double logistic(double y)
{
    return 1.0 / (1.0 + std::exp(y / kRoot2));
}

Potential no_reaction()
{
    Potential P;
    P.name = "zero";
    P.F = [](double) { return 0.0; };
    P.dF = [](double) { return 0.0; };
    P.d2F = [](double) { return 0.0; };
    return P;
}

// Heat kernel applied to a step: 0.5 erfc(x / sqrt(4 s)).
double heat_step(double x, double s)
{
    return 0.5 * std::erfc(x / std::sqrt(4.0 * s));
}

// Classical RK4 for u' = -u (u - 1)(u - a), used as the reference for the reaction part.
double reaction_reference(double u, double a, double T)
{
    auto f = [a](double v) { return -v * (v - 1.0) * (v - a); };
    const int n = 20000;
    const double h = T / n;
    for (int k = 0; k < n; ++k) {
        const double k1 = f(u);
        const double k2 = f(u + 0.5 * h * k1);
        const double k3 = f(u + 0.5 * h * k2);
        const double k4 = f(u + h * k3);
        u += h * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0;
    }
    return u;
}

}  // namespace

TEST_CASE("constant equilibria are fixed exactly")
{
    const double a = 0.25;
    const auto P = cubic_potential(a);
    const auto g = Grid1D::with_spacing(-10.0, 10.0, 0.1);
    for (double level : {0.0, a, 1.0}) {
        const Field u0{g, std::vector<double>(g.n, level)};
        for (double c : {0.0, 0.35}) {
            const auto traj = simulate(u0, 1.0, 0.01, c, P);
            REQUIRE(traj.snapshots.size() == 2);
            for (double v : traj.snapshots.back().field.values) {
                REQUIRE(v == level);
            }
        }
    }
}

TEST_CASE("zero final time yields only the initial snapshot")
{
    const auto P = cubic_potential(0.25);
    const auto g = Grid1D::with_spacing(-20.0, 20.0, 0.1);
    const auto u0 = make_initial_data({}, g);
    const auto traj = simulate(u0, 0.0, 0.01, 0.0, P);
    REQUIRE(traj.snapshots.size() == 1);
    CHECK(traj.snapshots[0].time == 0.0);
    CHECK(traj.snapshots[0].field.values == u0.values);
    CHECK(traj.steps == 0);
}

TEST_CASE("heat equation against the erfc solution")
{
    const auto g = Grid1D::with_spacing(-40.0, 40.0, 0.05);
    for (double c : {0.0, 0.5}) {
        std::vector<double> v(g.n);
        for (std::size_t i = 0; i < g.n; ++i) {
            v[i] = heat_step(g.x(i), 1.0);
        }
        const double T = 4.0;
        const auto traj = simulate(Field{g, v}, T, 0.005, c, no_reaction());
        const auto& out = traj.snapshots.back().field;
        double err = 0.0;
        for (std::size_t i = 0; i < g.n; ++i) {
            // In the frame y = x - c t the lab solution is read at x = y + c T.
            err = std::max(err, std::abs(out.values[i] - heat_step(g.x(i) + c * T, 1.0 + T)));
        }
        CHECK(err < 1e-4);
    }
}

TEST_CASE("reaction stepping is second order in time")
{
    const double a = 0.25;
    const auto P = cubic_potential(a);
    const auto g = Grid1D::with_spacing(-50.0, 50.0, 0.5);
    const double T = 2.0;
    const double exact = reaction_reference(0.6, a, T);
    std::vector<double> errors;
    for (double dt : {0.1, 0.05, 0.025}) {
        const Field u0{g, std::vector<double>(g.n, 0.6)};
        const auto traj = simulate(u0, T, dt, 0.0, P);
        errors.push_back(std::abs(traj.snapshots.back().field.values[g.n / 2] - exact));
    }
    CHECK(errors[0] / errors[1] == doctest::Approx(4.0).epsilon(0.15));
    CHECK(errors[1] / errors[2] == doctest::Approx(4.0).epsilon(0.15));
}

TEST_CASE("the exact wave is stationary in the frame of its speed")
{
    const double a = 0.25;
    const auto P = cubic_potential(a);
    const double c = (1.0 - 2.0 * a) / kRoot2;
    const auto g = Grid1D::with_spacing(-60.0, 60.0, 0.05);
    std::vector<double> v(g.n);
    for (std::size_t i = 0; i < g.n; ++i) {
        v[i] = logistic(g.x(i));
    }
    const auto traj = simulate(Field{g, v}, 10.0, 0.01, c, P);
    double err = 0.0;
    for (std::size_t i = 0; i < g.n; ++i) {
        err = std::max(err, std::abs(traj.snapshots.back().field.values[i] - v[i]));
    }
    CHECK(err < 1e-4);
}

TEST_CASE("lab and moving frames agree")
{
    const double a = 0.25;
    const auto P = cubic_potential(a);
    const double c = (1.0 - 2.0 * a) / kRoot2;
    const double T = 5.0;
    InitialDataSpec spec;
    spec.kind = InitialKind::tanh_step;
    spec.width = 2.0;
    const auto lab_grid = Grid1D::with_spacing(-60.0, 80.0, 0.05);
    const auto moving_grid = Grid1D::with_spacing(-60.0, 60.0, 0.05);
    const auto lab = simulate(make_initial_data(spec, lab_grid), T, 0.01, 0.0, P);
    const auto moving = simulate(make_initial_data(spec, moving_grid), T, 0.01, c, P);
    const auto mapped = to_moving_frame(lab.snapshots.back().field, c, T, moving_grid);
    double err = 0.0;
    for (std::size_t i = 0; i < moving_grid.n; ++i) {
        if (std::abs(moving_grid.x(i)) < 30.0) {
            err = std::max(err, std::abs(mapped.values[i] - moving.snapshots.back().field.values[i]));
        }
    }
    CHECK(err < 1e-3);
}

TEST_CASE("snapshots carry the discrete right-hand side")
{
    const auto P = cubic_potential(0.25);
    const auto g = Grid1D::with_spacing(-20.0, 20.0, 0.1);
    InitialDataSpec spec;
    spec.kind = InitialKind::tanh_step;
    const auto traj = simulate(make_initial_data(spec, g), 1.0, 0.01, 0.2, P, {.snapshot_interval = 0.25});
    REQUIRE(traj.snapshots.size() == 5);
    CHECK(traj.snapshots[2].time == doctest::Approx(0.5));
    const auto& s = traj.snapshots.back();
    const auto r = discrete_rhs(g, s.field.values, 0.2, P);
    CHECK(s.time_derivative.values == r);
    CHECK(s.time_derivative.values.front() == 0.0);
    CHECK(s.time_derivative.values.back() == 0.0);
    CHECK(s.frame_speed == 0.2);
}

TEST_CASE("invalid run parameters are rejected")
{
    const auto P = cubic_potential(0.25);
    const auto g = Grid1D::with_spacing(-20.0, 20.0, 0.1);
    const auto u0 = make_initial_data({}, g);
    CHECK_THROWS_AS(simulate(u0, 1.0, 0.3, 0.0, P), std::invalid_argument);
    CHECK_THROWS_AS(simulate(u0, -1.0, 0.1, 0.0, P), std::invalid_argument);
    CHECK_THROWS_AS(simulate(u0, 1.0, 0.1, 0.0, P, {.snapshot_interval = 0.3}), std::invalid_argument);
    auto bad = u0;
    bad.values[5] = std::nan("");
    CHECK_THROWS_AS(simulate(bad, 1.0, 0.1, 0.0, P), std::invalid_argument);
    CHECK_THROWS_AS(ImexStepper(g, 0.0, 0.0, P), std::invalid_argument);
}

TEST_CASE("blow-up aborts the run")
{
    Potential P = no_reaction();
    P.dF = [](double u) { return -u * u * u; };
    const auto g = Grid1D::with_spacing(-10.0, 10.0, 0.1);
    const Field u0{g, std::vector<double>(g.n, 2.0)};
    CHECK_THROWS_AS(simulate(u0, 1.0, 1e-3, 0.0, P), NumericalAbort);
}

TEST_CASE("a front approaching the boundary aborts the run")
{
    const auto P = cubic_potential(0.25);
    const auto g = Grid1D::with_spacing(-20.0, 20.0, 0.1);
    InitialDataSpec spec;
    spec.location = 10.0;
    SimulationOptions opt;
    opt.front_level = 0.1;
    opt.front_margin = 15.0;
    CHECK_THROWS_AS(simulate(make_initial_data(spec, g), 1.0, 0.01, 0.0, P, opt), NumericalAbort);
}

TEST_CASE("initial data kinds")
{
    const auto g = Grid1D::with_spacing(-200.0, 200.0, 0.5);
    InitialDataSpec spec;
    spec.location = 3.0;
    auto u = make_initial_data(spec, g);
    CHECK(u.values[g.n / 2] == 1.0);  // x = 0
    CHECK(u.values[g.n / 2 + 6] == 0.0);  // x = 3

    spec.kind = InitialKind::tanh_step;
    spec.width = 2.0;
    u = make_initial_data(spec, g);
    CHECK(u.values[g.n / 2 + 6] == doctest::Approx(0.5));
    CHECK(u.values[g.n / 2] == doctest::Approx(0.5 * (1.0 + std::tanh(1.5))));

    spec = {};
    spec.kind = InitialKind::overshoot_step;
    spec.width = 20.0;
    u = make_initial_data(spec, g);
    CHECK(u.values[g.n / 2 - 20] == spec.over);  // x = -10
    CHECK(u.values[g.n / 2 + 20] == spec.under);  // x = 10
    CHECK(u.values[g.n / 2 + 80] == 0.0);  // x = 40

    spec = {};
    spec.kind = InitialKind::exact_wave;
    CHECK_THROWS_AS(make_initial_data(spec, g), std::invalid_argument);

    spec = {};
    spec.kind = InitialKind::dip_plateau;
    u = make_initial_data(spec, g);
    CHECK(u.values[g.n / 2 - 200] == doctest::Approx(spec.dip_value));  // x = -100
    CHECK(u.values.front() == doctest::Approx(1.0));
    spec.dip_ramp = 0.0;
    CHECK_THROWS_AS(make_initial_data(spec, g), std::invalid_argument);
}

TEST_CASE("wave-based initial data")
{
    const auto P = cubic_potential(0.25);
    const auto w = find_wave_speed(P, 0.0, 2.0, 1e-10);
    const auto g = Grid1D::with_spacing(-60.0, 60.0, 0.1);
    InitialDataSpec spec;
    spec.kind = InitialKind::exact_wave;
    spec.location = 4.0;
    const auto u = make_initial_data(spec, g, &w);
    for (std::size_t i = 0; i < g.n; i += 37) {
        CHECK(u.values[i] == doctest::Approx(w.profile.value(g.x(i) - 4.0)).epsilon(1e-14));
    }
    spec.kind = InitialKind::perturbed_wave;
    spec.amplitude = 0.05;
    spec.seed = 7;
    const auto p = make_initial_data(spec, g, &w);
    double dev = 0.0;
    for (std::size_t i = 0; i < g.n; ++i) {
        dev = std::max(dev, std::abs(p.values[i] - u.values[i]));
    }
    CHECK(dev > 0.0);
    CHECK(dev <= 0.05 + 1e-15);
    CHECK(make_initial_data(spec, g, &w).values == p.values);
}

TEST_CASE("initial data without the required tails is rejected")
{
    const auto g = Grid1D::with_spacing(-20.0, 20.0, 0.1);
    InitialDataSpec spec;
    spec.location = 25.0;
    CHECK_THROWS_AS(make_initial_data(spec, g), std::invalid_argument);
    spec.kind = InitialKind::tanh_step;
    spec.location = 0.0;
    spec.width = 30.0;
    CHECK_THROWS_AS(make_initial_data(spec, g), std::invalid_argument);
}

TEST_CASE("initial kind names round trip")
{
    for (auto k : {InitialKind::sharp_step, InitialKind::tanh_step, InitialKind::exact_wave,
                   InitialKind::perturbed_wave, InitialKind::overshoot_step, InitialKind::dip_plateau}) {
        CHECK(parse_initial_kind(to_string(k)) == k);
    }
    CHECK_THROWS(parse_initial_kind("ramp"));
}

TEST_CASE("sup bound of a known profile")
{
    const auto g = Grid1D::with_spacing(-1.0, 1.0, 0.01);
    std::vector<double> v(g.n);
    for (std::size_t i = 0; i < g.n; ++i) {
        v[i] = g.x(i) * g.x(i);
    }
    // |x^2| + |2x| + 2 is maximal at the ends.
    CHECK(sup_bound(g, v) == doctest::Approx(5.0).epsilon(1e-9));
}
