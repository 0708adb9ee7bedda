#include "bistable/field.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace bistable {

Grid1D Grid1D::uniform(double x_min, double x_max, std::size_t n)
{
    if (n < 8) {
        throw std::invalid_argument("grid needs at least 8 nodes");
    }
    if (!(x_max > x_min)) {
        throw std::invalid_argument("grid requires x_max > x_min");
    }
    return Grid1D{x_min, x_max, n};
}

Grid1D Grid1D::with_spacing(double x_min, double x_max, double dx)
{
    if (!(dx > 0.0)) {
        throw std::invalid_argument("grid spacing must be positive");
    }
    const double cells = (x_max - x_min) / dx;
    const double rounded = std::round(cells);
    if (std::abs(cells - rounded) > 1e-6 * std::max(1.0, rounded)) {
        throw std::invalid_argument("domain length is not an integer multiple of dx");
    }
    return uniform(x_min, x_max, static_cast<std::size_t>(rounded) + 1);
}

Field::Field(Grid1D g, std::vector<double> v) : grid(g), values(std::move(v))
{
    if (values.size() != grid.n) {
        throw std::invalid_argument("field size does not match its grid");
    }
}

bool Field::all_finite() const
{
    return std::all_of(values.begin(), values.end(), [](double x) { return std::isfinite(x); });
}

std::vector<double> centered_derivative(const Grid1D& grid, std::span<const double> v)
{
    const std::size_t n = v.size();
    const double inv2h = 0.5 / grid.dx();
    std::vector<double> d(n);
    for (std::size_t i = 1; i + 1 < n; ++i) {
        d[i] = (v[i + 1] - v[i - 1]) * inv2h;
    }
    d[0] = (-3.0 * v[0] + 4.0 * v[1] - v[2]) * inv2h;
    d[n - 1] = (3.0 * v[n - 1] - 4.0 * v[n - 2] + v[n - 3]) * inv2h;
    return d;
}

std::vector<double> second_derivative(const Grid1D& grid, std::span<const double> v)
{
    const std::size_t n = v.size();
    const double h = grid.dx();
    const double inv_h2 = 1.0 / (h * h);
    std::vector<double> d(n);
    for (std::size_t i = 1; i + 1 < n; ++i) {
        d[i] = (v[i + 1] - 2.0 * v[i] + v[i - 1]) * inv_h2;
    }
    d[0] = d[1];
    d[n - 1] = d[n - 2];
    return d;
}

double interpolate_cubic(const Grid1D& grid, std::span<const double> v, double x)
{
    const std::size_t n = v.size();
    const double h = grid.dx();
    const double s = std::clamp((x - grid.x_min) / h, 0.0, static_cast<double>(n - 1));
    auto i = static_cast<std::ptrdiff_t>(std::floor(s));
    // Stencil i-1 .. i+2, shifted inward near the ends.
    std::ptrdiff_t base = std::clamp<std::ptrdiff_t>(i - 1, 0, static_cast<std::ptrdiff_t>(n) - 4);
    const double t = s - static_cast<double>(base);
    double result = 0.0;
    for (int k = 0; k < 4; ++k) {
        double w = 1.0;
        for (int m = 0; m < 4; ++m) {
            if (m != k) {
                w *= (t - m) / static_cast<double>(k - m);
            }
        }
        result += w * v[static_cast<std::size_t>(base + k)];
    }
    return result;
}

double interpolate_linear(const Grid1D& grid, std::span<const double> v, double x)
{
    const std::size_t n = v.size();
    const double s = std::clamp((x - grid.x_min) / grid.dx(), 0.0, static_cast<double>(n - 1));
    const auto i = std::min(static_cast<std::size_t>(std::floor(s)), n - 2);
    const double t = s - static_cast<double>(i);
    return (1.0 - t) * v[i] + t * v[i + 1];
}

}  // namespace bistable
