#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace bistable {

/// Uniform one-dimensional grid with n nodes spanning [x_min, x_max].
struct Grid1D
{
    double x_min = 0.0;
    double x_max = 1.0;
    std::size_t n = 8;

    /// Validates n >= 8 and x_max > x_min.
    static Grid1D uniform(double x_min, double x_max, std::size_t n);
    /// Grid whose spacing equals `dx`; the span must be an integer multiple of dx.
    static Grid1D with_spacing(double x_min, double x_max, double dx);

    [[nodiscard]] double dx() const { return (x_max - x_min) / static_cast<double>(n - 1); }
    [[nodiscard]] double x(std::size_t i) const { return x_min + static_cast<double>(i) * dx(); }
    [[nodiscard]] Grid1D shifted(double a) const { return Grid1D{x_min + a, x_max + a, n}; }
};

/// Nodal values of a scalar field on a grid.
struct Field
{
    Grid1D grid;
    std::vector<double> values;

    Field() = default;
    Field(Grid1D g, std::vector<double> v);

    [[nodiscard]] std::size_t size() const { return values.size(); }
    [[nodiscard]] double operator[](std::size_t i) const { return values[i]; }
    [[nodiscard]] bool all_finite() const;
};

/// Second-order centered first derivative; one-sided second-order stencils at the ends.
std::vector<double> centered_derivative(const Grid1D& grid, std::span<const double> v);

/// Second-order centered second derivative; the end values copy their neighbours.
std::vector<double> second_derivative(const Grid1D& grid, std::span<const double> v);

/// Four-point Lagrange interpolation of nodal data at x (clamped to the grid).
double interpolate_cubic(const Grid1D& grid, std::span<const double> v, double x);

/// Linear interpolation of nodal data at x (clamped to the grid).
double interpolate_linear(const Grid1D& grid, std::span<const double> v, double x);

}  // namespace bistable
