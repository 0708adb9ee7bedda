#include "bistable/front.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace bistable {

namespace {

double fit_slope(const std::vector<double>& t, const std::vector<double>& x, std::size_t from, std::size_t to)
{
    double st = 0, sx = 0, stt = 0, stx = 0;
    const double n = static_cast<double>(to - from);
    for (std::size_t i = from; i < to; ++i) {
        st += t[i];
        sx += x[i];
        stt += t[i] * t[i];
        stx += t[i] * x[i];
    }
    return (n * stx - st * sx) / (n * stt - st * st);
}

}  // namespace

std::optional<double> invasion_point(const Field& f, double level)
{
    const auto& u = f.values;
    const std::size_t n = u.size();
    if (std::abs(u[n - 1]) >= level) {
        std::ostringstream msg;
        msg << "|u| = " << std::abs(u[n - 1]) << " at the right boundary is not below the level " << level;
        throw std::invalid_argument(msg.str());
    }
    for (std::size_t i = n - 1; i-- > 0;) {
        const double a = std::abs(u[i]);
        if (a >= level) {
            const double b = std::abs(u[i + 1]);
            const double theta = (a - level) / (a - b);
            return f.grid.x(i) + theta * f.grid.dx();
        }
    }
    return std::nullopt;
}

std::optional<double> second_invasion_point(const Field& f, double eps)
{
    return invasion_point(f, 2.0 * eps);
}

void FrontSeries::push(double t, double x, double X, double speed)
{
    times.push_back(t);
    xbar.push_back(x);
    Xbar.push_back(X);
    xbar_prime.push_back(speed);
}

FrontSeries front_series(const Trajectory& traj, double eps)
{
    FrontSeries series;
    series.frame_speed = traj.frame_speed;
    for (const auto& s : traj.snapshots) {
        const auto x = invasion_point(s.field, eps);
        const auto X = second_invasion_point(s.field, eps);
        if (!x || !X) {
            continue;
        }
        const auto v = instantaneous_speed(s, *x);
        series.push(s.time, *x, *X, v.value_or(std::numeric_limits<double>::quiet_NaN()));
    }
    return series;
}

XxControlResult xxcontrol_check(const FrontSeries& series, double C0, double T0)
{
    XxControlResult r;
    r.worst_margin = std::numeric_limits<double>::infinity();
    r.min_samples_per_window = std::numeric_limits<std::size_t>::max();
    const std::size_t n = series.size();
    const double c = series.frame_speed;
    const double slack = 1e-12 * std::max(1.0, T0);
    for (std::size_t i = 0; i < n; ++i) {
        const double t0 = series.times[i];
        if (t0 + T0 > series.times.back() + slack) {
            break;
        }
        const double x0 = series.xbar[i] + c * t0;
        std::size_t count = 0;
        for (std::size_t j = i; j < n && series.times[j] <= t0 + T0 + slack; ++j) {
            const double X = series.Xbar[j] + c * series.times[j];
            const double m = x0 + C0 - X;
            ++count;
            ++r.pairs;
            if (m < r.worst_margin) {
                r.worst_margin = m;
                r.t0_worst = t0;
                r.t_worst = series.times[j];
            }
        }
        r.min_samples_per_window = std::min(r.min_samples_per_window, count);
    }
    if (r.pairs == 0) {
        r.min_samples_per_window = 0;
    }
    return r;
}

XxControlResult xxcontrol_check(const Trajectory& traj, const EpsilonBand& band, const DerivedConstants& consts)
{
    return xxcontrol_check(front_series(traj, band.epsilon), consts.C0, consts.T0);
}

SpeedEstimates speed_estimates(const FrontSeries& series, double window)
{
    const std::size_t n = series.size();
    if (n < 6 || !(window > 0.0)) {
        throw std::invalid_argument("speed estimates need at least 6 samples and a positive window");
    }
    const double t_begin = series.times.front();
    const double t_end = series.times.back();
    if (t_end - t_begin < 3.0 * window - 1e-9) {
        throw std::invalid_argument("front series is shorter than three windows");
    }
    SpeedEstimates est;
    est.c_minus = std::numeric_limits<double>::infinity();
    est.c_plus = -std::numeric_limits<double>::infinity();
    const double stride = window / 4.0;
    for (double start = t_begin + window; start + window <= t_end + 1e-9; start += stride) {
        const auto lo = std::lower_bound(series.times.begin(), series.times.end(), start - 1e-9);
        const auto hi = std::upper_bound(series.times.begin(), series.times.end(), start + window + 1e-9);
        const auto from = static_cast<std::size_t>(lo - series.times.begin());
        const auto to = static_cast<std::size_t>(hi - series.times.begin());
        if (to - from < 2) {
            continue;
        }
        const double s = fit_slope(series.times, series.xbar, from, to);
        est.c_minus = std::min(est.c_minus, s);
        est.c_plus = std::max(est.c_plus, s);
        ++est.windows;
    }
    if (est.windows == 0) {
        throw std::invalid_argument("no complete window in the front series");
    }
    const auto lo = std::lower_bound(series.times.begin(), series.times.end(), t_end - window - 1e-9);
    est.fit_slope = fit_slope(series.times, series.xbar, static_cast<std::size_t>(lo - series.times.begin()), n);
    return est;
}

std::vector<double> trailing_slopes(const FrontSeries& series, double window)
{
    std::vector<double> out(series.size(), std::numeric_limits<double>::quiet_NaN());
    std::size_t from = 0;
    for (std::size_t i = 0; i < series.size(); ++i) {
        while (series.times[from] < series.times[i] - window - 1e-9) {
            ++from;
        }
        if (i + 1 - from >= 3) {
            out[i] = fit_slope(series.times, series.xbar, from, i + 1);
        }
    }
    return out;
}

std::optional<double> instantaneous_speed(const Snapshot& s, double xbar, double threshold)
{
    const Grid1D& g = s.field.grid;
    const auto d = centered_derivative(g, s.field.values);
    const double vy = interpolate_cubic(g, d, xbar);
    if (!(std::abs(vy) >= threshold)) {
        return std::nullopt;
    }
    const double vt = interpolate_cubic(g, s.time_derivative.values, xbar);
    return -vt / vy + s.frame_speed;
}

FrontFrameProfile front_profile(const Snapshot& s, double xbar, double L, double dz)
{
    const Grid1D& g = s.field.grid;
    if (xbar - L < g.x_min || xbar > g.x_max) {
        throw std::invalid_argument("front profile window exceeds the grid");
    }
    const auto d = centered_derivative(g, s.field.values);
    FrontFrameProfile p;
    const std::size_t count = static_cast<std::size_t>(std::floor((g.x_max - xbar + L) / dz + 1e-9)) + 1;
    for (std::size_t k = 0; k < count; ++k) {
        const double z = -L + static_cast<double>(k) * dz;
        const double x = xbar + z;
        const double ux = interpolate_cubic(g, d, x);
        p.offsets.push_back(z);
        p.values.push_back(interpolate_cubic(g, s.field.values, x));
        p.d_values.push_back(ux);
        p.t_values.push_back(interpolate_cubic(g, s.time_derivative.values, x) - s.frame_speed * ux);
    }
    return p;
}

double comoving_residual(const Snapshot& s, double xbar, double c, double L)
{
    const Grid1D& g = s.field.grid;
    const auto d = centered_derivative(g, s.field.values);
    const double dx = g.dx();
    double sum = 0.0;
    for (std::size_t i = 0; i < g.n; ++i) {
        const double z = g.x(i) - xbar;
        if (z < -L - 1e-12 || z > L + 1e-12) {
            continue;
        }
        const double ut = s.time_derivative.values[i] - s.frame_speed * d[i];
        const double r = ut + c * d[i];
        sum += std::exp(c * z) * r * r * dx;
    }
    return sum;
}

}  // namespace bistable
