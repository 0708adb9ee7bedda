#pragma once

#include <optional>
#include <vector>

#include "bistable/evolution.hpp"
#include "bistable/field.hpp"
#include "bistable/potential.hpp"

namespace bistable {

/// Rightmost point where |u| reaches `level`, by linear interpolation between the last
/// node with |u| >= level and its right neighbour. Empty when no node reaches the level.
/// Throws std::invalid_argument if |u| >= level at the right boundary.
std::optional<double> invasion_point(const Field& f, double level);

/// Invasion point at twice the level.
std::optional<double> second_invasion_point(const Field& f, double eps);

struct FrontSeries
{
    std::vector<double> times;
    std::vector<double> xbar;
    std::vector<double> Xbar;
    std::vector<double> xbar_prime;  ///< NaN where the slope at the front is too small
    double frame_speed = 0.0;  ///< positions are in the frame moving at this speed
    double c_minus = 0.0;
    double c_plus = 0.0;

    void push(double t, double x, double X, double speed);
    [[nodiscard]] std::size_t size() const { return times.size(); }
};

/// Front series of a trajectory: invasion points at level eps and 2 eps plus the
/// instantaneous lab-frame speed. Snapshots without a front are skipped.
FrontSeries front_series(const Trajectory& traj, double eps);

struct XxControlResult
{
    double worst_margin = 0.0;
    double t0_worst = 0.0;
    double t_worst = 0.0;
    std::size_t pairs = 0;
    std::size_t min_samples_per_window = 0;
};

/// For every sample time t0 and every sample t in [t0, t0 + T0], the margin
/// xbar(t0) + C0 - Xbar(t). Positions must be lab-frame (frame_speed is added back).
XxControlResult xxcontrol_check(const FrontSeries& series, double C0, double T0);
XxControlResult xxcontrol_check(const Trajectory& traj, const EpsilonBand& band, const DerivedConstants& consts);

struct SpeedEstimates
{
    double c_minus = 0.0;
    double c_plus = 0.0;
    double fit_slope = 0.0;
    std::size_t windows = 0;
};

/// Windowed least-squares slopes of xbar against t (windows advance by window/4, the
/// first window is skipped as transient). Slopes are in the series' own frame.
SpeedEstimates speed_estimates(const FrontSeries& series, double window);

/// Least-squares slope of xbar over the samples in [t - window, t], for every sample t.
/// NaN until the window holds three samples.
std::vector<double> trailing_slopes(const FrontSeries& series, double window);

/// Lab-frame speed -u_t / u_x at the invasion point, computed from a snapshot taken in the
/// frame of speed s.frame_speed. Empty when |u_x| is below `threshold`.
std::optional<double> instantaneous_speed(const Snapshot& s, double xbar, double threshold = 1e-8);

struct FrontFrameProfile
{
    std::vector<double> offsets;
    std::vector<double> values;
    std::vector<double> d_values;
    std::vector<double> t_values;  ///< lab-frame time derivative
};

/// Cubic resampling of u, u_x and u_t at offsets z = -L, -L + dz, ... up to the right end
/// of the grid, relative to xbar.
FrontFrameProfile front_profile(const Snapshot& s, double xbar, double L, double dz = 0.05);

/// Windowed integral of e^{c z} (u_t + c u_x)^2 over z in [-L, L] around xbar, with
/// lab-frame u_t.
double comoving_residual(const Snapshot& s, double xbar, double c, double L);

}  // namespace bistable
