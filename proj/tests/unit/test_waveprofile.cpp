#include <doctest.h>

#include <cmath>

#include "bistable/energetics.hpp"
#include "bistable/waveprofile.hpp"

using namespace bistable;

namespace {

const double kRoot2 = std::sqrt(2.0);

double nagumo_speed(double a)
{
    return (1.0 - 2.0 * a) / kRoot2;
}

double logistic(double y)
{
    return 1.0 / (1.0 + std::exp(y / kRoot2));
}

}  // namespace

TEST_CASE("wave speed matches the Nagumo closed form")
{
    for (double a : {0.1, 0.25, 0.4}) {
        const auto w = find_wave_speed(cubic_potential(a), 0.0, 2.0, 1e-10);
        CHECK(std::abs(w.c_star - nagumo_speed(a)) / nagumo_speed(a) < 1e-9);
        CHECK(w.bracket.first <= w.bracket.second);
        double err = 0.0;
        for (double y = -20.0; y <= 20.0; y += 0.007) {
            err = std::max(err, std::abs(w.profile.value(y) - logistic(y)));
        }
        CHECK(err < 1e-8);
        CHECK(w.residual < 1e-8);
    }
}

TEST_CASE("profile is strictly decreasing between its limits")
{
    const auto w = find_wave_speed(cubic_potential(0.25), 0.0, 2.0, 1e-10);
    const auto& h = w.profile.h;
    for (std::size_t i = 1; i < h.size(); ++i) {
        REQUIRE(h[i] < h[i - 1]);
    }
    CHECK(h.front() > 1.0 - 1e-9);
    CHECK(h.back() < 1e-9);
    CHECK(w.profile.value(0.0) == doctest::Approx(0.5).epsilon(1e-12));
    // Tails beyond the grid follow the linearizations.
    const double y = w.profile.y_max() + 3.0;
    CHECK(w.profile.value(y) == doctest::Approx(logistic(y)).epsilon(1e-6));
}

TEST_CASE("shooting classification brackets the speed")
{
    const auto P = cubic_potential(0.25);
    CHECK(shoot(P, 0.30).classification == ShootOutcome::crossed_zero_with_negative_slope);
    CHECK(shoot(P, 0.40).classification == ShootOutcome::slope_vanished_above_zero);
    CHECK_THROWS_AS(find_wave_speed(P, 0.4, 0.5, 1e-8), NoBracket);
}

TEST_CASE("decay rates follow the linearizations at 0 and 1")
{
    const double a = 0.25;
    const double c = nagumo_speed(a);
    const auto [mu_minus, mu_plus] = decay_rates(cubic_potential(a), c);
    CHECK(mu_minus == doctest::Approx((-c - std::sqrt(c * c + 4.0 * a)) / 2.0).epsilon(1e-14));
    CHECK(mu_plus == doctest::Approx((-c + std::sqrt(c * c + 4.0 * (1.0 - a))) / 2.0).epsilon(1e-14));
    CHECK(mu_minus == doctest::Approx(-1.0 / kRoot2).epsilon(1e-12));
    CHECK(mu_plus == doctest::Approx(1.0 / kRoot2).epsilon(1e-12));
}

TEST_CASE("tail slope of the forward shot matches the decay exponent")
{
    const auto P = cubic_potential(0.25);
    const auto w = find_wave_speed(P, 0.0, 2.0, 1e-10);
    ShootOptions opt;
    opt.tol = 1e-12;
    const auto traj = shoot(P, w.c_star, opt);
    const double slope = tail_slope_by_level(traj.h, traj.dy, 1e-6, 1e-3);
    CHECK(std::abs(slope + 1.0 / kRoot2) < 0.01 / kRoot2);
    CHECK(tail_slope(w.profile, 10.0, 20.0) == doctest::Approx(-1.0 / kRoot2).epsilon(1e-3));
}

TEST_CASE("normalization to the epsilon level")
{
    const auto P = cubic_potential(0.25);
    const auto w = find_wave_speed(P, 0.0, 2.0, 1e-10);
    const auto band = select_epsilon(P);
    const auto we = normalize_profile(w, band);
    const double eps = band.epsilon;
    CHECK(we.profile.value(0.0) == doctest::Approx(eps).epsilon(1e-12));
    // logistic(y) = eps at y = sqrt(2) ln((1 - eps)/eps).
    CHECK(we.shift - w.shift == doctest::Approx(kRoot2 * std::log((1.0 - eps) / eps)).epsilon(1e-9));
    const auto twice = normalize_profile(we, band);
    CHECK(twice.shift == doctest::Approx(we.shift).epsilon(1e-12));
    CHECK(level_crossing(twice.profile, eps) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK_THROWS(level_crossing(w.profile, 1.5));
}

TEST_CASE("the weighted energy of the wave vanishes at c*")
{
    const auto P = cubic_potential(0.25);
    const auto w = find_wave_speed(P, 0.0, 2.0, 1e-10);
    const auto& p = w.profile;
    const auto E = energy_weighted(p.grid(), p.h, p.dh, w.c_star, P, 0.0);
    CHECK(std::abs(E.value) < 1e-9);
}

TEST_CASE("energy identity c E_c[h] = (c - c*) int e^{cy} h'^2")
{
    const auto P = cubic_potential(0.25);
    const auto w = find_wave_speed(P, 0.0, 2.0, 1e-10);
    for (double c : {0.2, 0.3, 0.45}) {
        const auto [lhs, rhs] = muratov_check(P, w, c);
        CHECK(std::abs(lhs - rhs) / std::abs(rhs) < 1e-4);
        CHECK((lhs < 0.0) == (c < w.c_star));
    }
    // Closed form for the logistic profile: int e^{cy} h'^2 dy with h' = -h(1 - h)/sqrt 2.
    const double c = 0.3;
    double integral = 0.0;
    const double dy = 1e-3;
    for (double y = -80.0; y <= 80.0; y += dy) {
        const double h = logistic(y);
        const double hp = -h * (1.0 - h) / kRoot2;
        integral += std::exp(c * y) * hp * hp * dy;
    }
    const auto [lhs, rhs] = muratov_check(P, w, c);
    CHECK(rhs == doctest::Approx((c - w.c_star) * integral).epsilon(1e-5));
    CHECK_THROWS_AS(muratov_check(P, w, muratov_window(P, w.c_star) + 0.1), std::invalid_argument);
    CHECK_THROWS_AS(muratov_check(P, w, -0.1), std::invalid_argument);
}

TEST_CASE("sampling the wave onto a grid")
{
    const auto w = find_wave_speed(cubic_potential(0.25), 0.0, 2.0, 1e-10);
    const auto f = w.sample(Grid1D::with_spacing(-10.0, 10.0, 0.5), 2.0);
    CHECK(f.values.front() == doctest::Approx(logistic(-12.0)).epsilon(1e-9));
    CHECK(f.values[24] == doctest::Approx(logistic(0.0)).epsilon(1e-9));
    CHECK(w.as_field().size() == w.profile.size());
}
