#include <doctest.h>

#include <cmath>

#include "bistable/field.hpp"

using namespace bistable;

TEST_CASE("grid construction")
{
    const auto g = Grid1D::with_spacing(-100.0, 300.0, 0.05);
    CHECK(g.n == 8001);
    CHECK(g.dx() == doctest::Approx(0.05).epsilon(1e-14));
    CHECK(g.x(g.n - 1) == doctest::Approx(300.0));
    CHECK_THROWS(Grid1D::with_spacing(0.0, 1.0, 0.3));
    CHECK_THROWS(Grid1D::uniform(0.0, 1.0, 4));
    CHECK_THROWS(Grid1D::uniform(1.0, 0.0, 16));
    const auto s = g.shifted(2.5);
    CHECK(s.x_min == doctest::Approx(-97.5));
    CHECK(s.n == g.n);
}

TEST_CASE("finite differences are exact on quadratics")
{
    const auto g = Grid1D::uniform(-2.0, 3.0, 51);
    std::vector<double> v(g.n);
    for (std::size_t i = 0; i < g.n; ++i) {
        const double x = g.x(i);
        v[i] = 2.0 * x * x - x + 1.0;
    }
    const auto d = centered_derivative(g, v);
    const auto d2 = second_derivative(g, v);
    for (std::size_t i = 0; i < g.n; ++i) {
        CHECK(d[i] == doctest::Approx(4.0 * g.x(i) - 1.0).epsilon(1e-10));
    }
    for (std::size_t i = 1; i + 1 < g.n; ++i) {
        CHECK(d2[i] == doctest::Approx(4.0).epsilon(1e-9));
    }
}

TEST_CASE("cubic interpolation reproduces cubics")
{
    const auto g = Grid1D::uniform(0.0, 10.0, 41);
    std::vector<double> v(g.n);
    auto f = [](double x) { return x * x * x - 3.0 * x + 0.5; };
    for (std::size_t i = 0; i < g.n; ++i) {
        v[i] = f(g.x(i));
    }
    for (double x : {0.1, 1.37, 5.0, 9.93}) {
        CHECK(interpolate_cubic(g, v, x) == doctest::Approx(f(x)).epsilon(1e-11));
    }
    CHECK(interpolate_linear(g, v, 2.5) == doctest::Approx(f(2.5)));
    // Clamped outside the grid.
    CHECK(interpolate_linear(g, v, -1.0) == doctest::Approx(f(0.0)));
    CHECK(interpolate_cubic(g, v, 12.0) == doctest::Approx(f(10.0)));
}

TEST_CASE("field finiteness")
{
    const auto g = Grid1D::uniform(0.0, 1.0, 8);
    Field f{g, std::vector<double>(8, 0.5)};
    CHECK(f.all_finite());
    f.values[3] = std::nan("");
    CHECK_FALSE(f.all_finite());
    CHECK_THROWS(Field(g, std::vector<double>(7, 0.0)));
}
