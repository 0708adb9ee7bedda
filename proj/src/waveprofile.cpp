#include "bistable/waveprofile.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include <boost/math/tools/roots.hpp>

#include "bistable/energetics.hpp"
#include "bistable/ode.hpp"

namespace bistable {

namespace {

ode::AdaptiveOptions adaptive_options(double tol)
{
    ode::AdaptiveOptions opt;
    opt.rtol = tol;
    opt.atol = tol * 1e-6;
    opt.h_max = 0.05;
    return opt;
}

// Step length in (0, h_full] at which the first component reaches `level`.
template <class Stepper>
double locate_level(const Stepper& stepper, double t, const ode::State& y, double h_full, double level)
{
    auto f = [&](double s) {
        if (s <= 0.0) {
            return y[0] - level;
        }
        double err = 0.0;
        return stepper.step(t, y, s, err)[0] - level;
    };
    std::uintmax_t iters = 200;
    auto [a, b] = boost::math::tools::toms748_solve(f, 0.0, h_full, f(0.0), f(h_full),
                                                    boost::math::tools::eps_tolerance<double>(52), iters);
    return 0.5 * (a + b);
}

struct Branch
{
    std::vector<double> h;  ///< nodes at t = t_first + k dy, ending at t = 0
    std::vector<double> dh;  ///< derivative with respect to the integration variable
    double t_first = 0.0;
    double length = 0.0;  ///< distance from the start point to the level crossing
    double crossing_slope = 0.0;  ///< second component at the crossing
};

// Integrates from the saddle start point until the first component reaches 1/2, then
// repeats the integration so that the crossing sits exactly on t = 0 and all nodes lie
// on multiples of dy.
template <class Rhs>
Branch integrate_branch(const Rhs& rhs, const ode::State& start, double tol, double dy, double window,
                        bool record = true)
{
    const ode::DormandPrince<Rhs> stepper(rhs, tol, tol * 1e-6);
    const auto opt = adaptive_options(tol);
    const double level = 0.5;
    const bool from_above = start[0] > level;

    double length = -1.0;
    double crossing_slope = 0.0;
    {
        ode::State y = start;
        double t_prev = 0.0;
        ode::State y_prev = start;
        ode::integrate_adaptive(stepper, 0.0, y, window, opt, 0.0, [&](double t, const ode::State& s, bool) {
            const bool crossed = from_above ? s[0] <= level : s[0] >= level;
            if (crossed) {
                const double s_cross = locate_level(stepper, t_prev, y_prev, t - t_prev, level);
                length = t_prev + s_cross;
                double err = 0.0;
                crossing_slope = s_cross > 0.0 ? stepper.step(t_prev, y_prev, s_cross, err)[1] : y_prev[1];
                return false;
            }
            t_prev = t;
            y_prev = s;
            return true;
        });
    }
    if (length <= 0.0) {
        throw NumericalFailure("profile branch did not reach the midpoint level within the window");
    }

    Branch b;
    b.length = length;
    b.crossing_slope = crossing_slope;
    if (!record) {
        return b;
    }
    ode::State y = start;
    bool first = true;
    ode::integrate_adaptive(stepper, -length, y, 0.0, opt, dy, [&](double t, const ode::State& s, bool on_node) {
        if (on_node) {
            if (first) {
                b.t_first = t;
                first = false;
            }
            b.h.push_back(s[0]);
            b.dh.push_back(s[1]);
        }
        (void)t;
        return true;
    });
    if (b.h.empty()) {
        throw NumericalFailure("profile branch produced no grid nodes");
    }
    // The re-integration lands a hair off the level; translate the branch by the
    // first-order shift that puts the crossing exactly at t = 0.
    const double shift = -(b.h.back() - level) / rhs(0.0, {b.h.back(), b.dh.back()})[0];
    for (std::size_t k = 0; k < b.h.size(); ++k) {
        const ode::State d = rhs(0.0, {b.h[k], b.dh[k]});
        b.h[k] += shift * d[0];
        b.dh[k] += shift * d[1];
    }
    b.h.back() = level;
    return b;
}

// Branch leaving the saddle at h = 1, integrated for g = 1 - h so that the tolerance
// resolves the small deviation from 1. Returned in terms of h.
Branch left_branch(const Potential& P, double c, double d0, double tol, double dy, double window, bool record)
{
    const double mu_plus = decay_rates(P, c).second;
    auto rhs = [&P, c](double, const ode::State& s) { return ode::State{s[1], -P.dF(1.0 - s[0]) - c * s[1]}; };
    Branch b = integrate_branch(rhs, {d0, d0 * mu_plus}, tol, dy, window, record);
    for (auto& x : b.h) {
        x = 1.0 - x;
    }
    for (auto& x : b.dh) {
        x = -x;
    }
    b.crossing_slope = -b.crossing_slope;
    return b;
}

// Branch entering the saddle at h = 0, integrated backward in y (t = -y).
Branch right_branch(const Potential& P, double c, double d0, double tol, double dy, double window, bool record)
{
    const double mu_minus = decay_rates(P, c).first;
    auto rhs = [&P, c](double, const ode::State& s) { return ode::State{-s[1], -(P.dF(s[0]) - c * s[1])}; };
    return integrate_branch(rhs, {d0, mu_minus * d0}, tol, dy, window, record);
}

double hermite_value(double y0, double y1, double d0, double d1, double dy, double s)
{
    const double s2 = s * s;
    const double s3 = s2 * s;
    return (2 * s3 - 3 * s2 + 1) * y0 + (s3 - 2 * s2 + s) * dy * d0 + (-2 * s3 + 3 * s2) * y1 +
           (s3 - s2) * dy * d1;
}

double hermite_slope(double y0, double y1, double d0, double d1, double dy, double s)
{
    const double s2 = s * s;
    return ((6 * s2 - 6 * s) * y0 + (6 * s2 - 6 * s) * -y1) / dy + (3 * s2 - 4 * s + 1) * d0 +
           (3 * s2 - 2 * s) * d1;
}

double profile_residual(const Profile& p, const Potential& P, double c)
{
    const std::size_t n = p.size();
    const double inv = 1.0 / (12.0 * p.dy * p.dy);
    double worst = 0.0;
    for (std::size_t i = 2; i + 2 < n; ++i) {
        const double d2 = (-p.h[i + 2] + 16.0 * p.h[i + 1] - 30.0 * p.h[i] + 16.0 * p.h[i - 1] - p.h[i - 2]) * inv;
        worst = std::max(worst, std::abs(d2 + c * p.dh[i] - P.dF(p.h[i])));
    }
    return worst;
}

}  // namespace

double Profile::value(double yy) const
{
    const std::size_t n = h.size();
    if (yy <= y_min) {
        return 1.0 - (1.0 - h.front()) * std::exp(rate_left * (yy - y_min));
    }
    if (yy >= y_max()) {
        return h.back() * std::exp(rate_right * (yy - y_max()));
    }
    const double s = (yy - y_min) / dy;
    const auto i = std::min(static_cast<std::size_t>(s), n - 2);
    return hermite_value(h[i], h[i + 1], dh[i], dh[i + 1], dy, s - static_cast<double>(i));
}

double Profile::slope(double yy) const
{
    const std::size_t n = h.size();
    if (yy <= y_min) {
        return -(1.0 - h.front()) * rate_left * std::exp(rate_left * (yy - y_min));
    }
    if (yy >= y_max()) {
        return h.back() * rate_right * std::exp(rate_right * (yy - y_max()));
    }
    const double s = (yy - y_min) / dy;
    const auto i = std::min(static_cast<std::size_t>(s), n - 2);
    return hermite_slope(h[i], h[i + 1], dh[i], dh[i + 1], dy, s - static_cast<double>(i));
}

Field WaveResult::sample(const Grid1D& grid, double offset) const
{
    std::vector<double> v(grid.n);
    for (std::size_t i = 0; i < grid.n; ++i) {
        v[i] = profile.value(grid.x(i) - offset);
    }
    return Field{grid, std::move(v)};
}

Field WaveResult::as_field() const
{
    return Field{profile.grid(), profile.h};
}

nlohmann::json to_json(const WaveResult& w)
{
    return {
        {"c_star", w.c_star},
        {"shift", w.shift},
        {"decay_plus", w.decay_plus},
        {"decay_minus", w.decay_minus},
        {"residual", w.residual},
        {"bracket", {w.bracket.first, w.bracket.second}},
        {"polished", w.polished},
        {"y_min", w.profile.y_min},
        {"y_max", w.profile.y_max()},
        {"dy", w.profile.dy},
        {"nodes", w.profile.size()},
    };
}

const char* to_string(ShootOutcome outcome)
{
    switch (outcome) {
        case ShootOutcome::crossed_zero_with_negative_slope:
            return "crossed_zero_with_negative_slope";
        case ShootOutcome::slope_vanished_above_zero:
            return "slope_vanished_above_zero";
        case ShootOutcome::exited_window:
            return "exited_window";
    }
    return "unknown";
}

std::pair<double, double> decay_rates(const Potential& P, double c)
{
    const double b0 = P.d2F(0.0);
    const double b1 = P.d2F(1.0);
    return {0.5 * (-c - std::sqrt(c * c + 4.0 * b0)), 0.5 * (-c + std::sqrt(c * c + 4.0 * b1))};
}

ShootResult shoot(const Potential& P, double c, const ShootOptions& options)
{
    const double mu_plus = decay_rates(P, c).second;
    auto rhs = [&P, c](double, const ode::State& s) { return ode::State{s[1], P.dF(s[0]) - c * s[1]}; };
    const ode::DormandPrince stepper(rhs, options.tol, options.tol * 1e-6);

    ShootResult result;
    result.dy = options.dy;
    ode::State y{1.0 - options.start_offset, -options.start_offset * mu_plus};
    if (options.record) {
        result.h.push_back(y[0]);
        result.dh.push_back(y[1]);
    }
    result.classification = ShootOutcome::exited_window;
    result.event_y = options.window;
    ode::integrate_adaptive(stepper, 0.0, y, options.window, adaptive_options(options.tol), options.dy,
                            [&](double t, const ode::State& s, bool on_node) {
                                if (on_node && options.record) {
                                    result.h.push_back(s[0]);
                                    result.dh.push_back(s[1]);
                                }
                                result.final_h = s[0];
                                if (s[0] <= 0.0 && s[1] < 0.0) {
                                    result.classification = ShootOutcome::crossed_zero_with_negative_slope;
                                    result.event_y = t;
                                    return false;
                                }
                                if (s[1] >= 0.0 && s[0] > 0.0 && s[0] < 1.0) {
                                    result.classification = ShootOutcome::slope_vanished_above_zero;
                                    result.event_y = t;
                                    return false;
                                }
                                return true;
                            });
    return result;
}

WaveResult build_profile(const Potential& P, double c, const WaveOptions& options)
{
    const auto [mu_minus, mu_plus] = decay_rates(P, c);
    const double d0 = options.shoot.start_offset;
    const double dy = options.shoot.dy;
    // The branches are joined at the midpoint; their global errors must agree far below the
    // shooting tolerance for the joined profile to be smooth there.
    const double tol = std::min(options.shoot.tol, 1e-13);
    const double window = options.shoot.window;

    const Branch left = left_branch(P, c, d0, tol, dy, window, true);
    const Branch right = right_branch(P, c, d0, tol, dy, window, true);

    const double tail = options.tail_tolerance;
    const auto extra = [&](double rate) {
        if (d0 <= tail) {
            return std::size_t{0};
        }
        return static_cast<std::size_t>(std::ceil(std::log(d0 / tail) / std::abs(rate) / dy)) + 1;
    };

    Profile p;
    p.dy = dy;
    p.rate_left = mu_plus;
    p.rate_right = mu_minus;

    // Left tail from the linearization about 1, then the left branch up to y = 0.
    const std::size_t n_left_ext = extra(mu_plus);
    const double y_left_start = -left.length;
    const double y_left_first = left.t_first;
    for (std::size_t k = n_left_ext; k > 0; --k) {
        const double yy = y_left_first - static_cast<double>(k) * dy;
        const double e = d0 * std::exp(mu_plus * (yy - y_left_start));
        p.h.push_back(1.0 - e);
        p.dh.push_back(-mu_plus * e);
    }
    p.y_min = y_left_first - static_cast<double>(n_left_ext) * dy;
    p.h.insert(p.h.end(), left.h.begin(), left.h.end());
    p.dh.insert(p.dh.end(), left.dh.begin(), left.dh.end());

    // Junction at y = 0: both branches end there at level 1/2.
    p.h.back() = 0.5;
    p.dh.back() = 0.5 * (left.dh.back() + right.dh.back());

    // Right branch nodes in increasing y (the last right node is the junction itself).
    for (std::size_t k = right.h.size() - 1; k-- > 0;) {
        p.h.push_back(right.h[k]);
        p.dh.push_back(right.dh[k]);
    }
    const double y_right_start = right.length;
    const double y_right_last = -right.t_first;
    const std::size_t n_right_ext = extra(mu_minus);
    for (std::size_t k = 1; k <= n_right_ext; ++k) {
        const double yy = y_right_last + static_cast<double>(k) * dy;
        const double e = d0 * std::exp(mu_minus * (yy - y_right_start));
        p.h.push_back(e);
        p.dh.push_back(mu_minus * e);
    }

    for (std::size_t i = 1; i + 1 < p.size(); ++i) {
        if (!(p.dh[i] < 0.0) || !(p.h[i] > 0.0 && p.h[i] < 1.0)) {
            std::ostringstream msg;
            msg << "profile is not monotone with range (0, 1) at y = " << p.y(i);
            throw NumericalFailure(msg.str());
        }
    }

    WaveResult w;
    w.c_star = c;
    w.profile = std::move(p);
    w.decay_plus = mu_minus;
    w.decay_minus = mu_plus;
    w.residual = profile_residual(w.profile, P, c);
    w.bracket = {c, c};
    return w;
}

WaveResult find_wave_speed(const Potential& P, double c_lo, double c_hi, double tol, const WaveOptions& options)
{
    ShootOptions quiet = options.shoot;
    quiet.record = false;
    // A fast trajectory may also settle onto an intermediate zero of F' without its slope
    // changing sign; it then leaves the window well above 0 and counts as overshooting.
    const auto classify = [&](double c) {
        const ShootResult r = shoot(P, c, quiet);
        if (r.classification == ShootOutcome::exited_window && r.final_h > 1e-3) {
            return ShootOutcome::slope_vanished_above_zero;
        }
        return r.classification;
    };

    const ShootOutcome lo_class = classify(c_lo);
    const ShootOutcome hi_class = classify(c_hi);
    if (lo_class != ShootOutcome::crossed_zero_with_negative_slope ||
        hi_class != ShootOutcome::slope_vanished_above_zero) {
        std::ostringstream msg;
        msg << "speeds [" << c_lo << ", " << c_hi << "] do not bracket a wave speed (classified "
            << to_string(lo_class) << " / " << to_string(hi_class) << ")";
        throw NoBracket(msg.str());
    }

    double lo = c_lo;
    double hi = c_hi;
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        const ShootOutcome m = classify(mid);
        if (m == ShootOutcome::crossed_zero_with_negative_slope) {
            lo = mid;
        } else if (m == ShootOutcome::slope_vanished_above_zero) {
            hi = mid;
        } else {
            // Trajectory shadows the heteroclinic for the whole window.
            lo = hi = mid;
        }
    }
    double c = 0.5 * (lo + hi);
    bool polished = false;

    if (options.polish) {
        // Mismatch of the slopes of the two saddle branches at the midpoint level.
        const auto mismatch = [&](double cc) {
            const double d0 = options.shoot.start_offset;
            const double tol_ = std::min(options.shoot.tol, 1e-13);
            const Branch l = left_branch(P, cc, d0, tol_, 1.0, options.shoot.window, false);
            const Branch r = right_branch(P, cc, d0, tol_, 1.0, options.shoot.window, false);
            return l.crossing_slope - r.crossing_slope;
        };
        double width = std::max(hi - lo, 1e-12);
        try {
            for (int attempt = 0; attempt < 6 && !polished; ++attempt) {
                const double a = c - 4.0 * width;
                const double b = c + 4.0 * width;
                const double fa = mismatch(a);
                const double fb = mismatch(b);
                if (fa * fb <= 0.0) {
                    std::uintmax_t iters = 100;
                    auto [ra, rb] = boost::math::tools::toms748_solve(
                        mismatch, a, b, fa, fb, boost::math::tools::eps_tolerance<double>(48), iters);
                    c = 0.5 * (ra + rb);
                    polished = true;
                }
                width *= 8.0;
            }
        } catch (const NumericalFailure&) {
            polished = false;
        }
    }

    WaveResult w = build_profile(P, c, options);
    w.bracket = {lo, hi};
    w.polished = polished;
    return w;
}

double level_crossing(const Profile& p, double level)
{
    if (!(level < p.h.front() && level > p.h.back())) {
        std::ostringstream msg;
        msg << "level " << level << " is outside the profile range (" << p.h.back() << ", " << p.h.front() << ")";
        throw std::invalid_argument(msg.str());
    }
    const auto it = std::find_if(p.h.begin(), p.h.end(), [level](double v) { return v <= level; });
    const auto i = static_cast<std::size_t>(it - p.h.begin());
    if (p.h[i] == level) {
        return p.y(i);
    }
    const double a = p.y(i - 1);
    const double b = p.y(i);
    auto f = [&](double yy) { return p.value(yy) - level; };
    std::uintmax_t iters = 100;
    auto [ra, rb] = boost::math::tools::toms748_solve(f, a, b, p.h[i - 1] - level, p.h[i] - level,
                                                      boost::math::tools::eps_tolerance<double>(52), iters);
    return 0.5 * (ra + rb);
}

WaveResult normalize_profile(const WaveResult& w, double level)
{
    const double s = level_crossing(w.profile, level);
    WaveResult out = w;
    out.profile.y_min -= s;
    out.shift += s;
    return out;
}

WaveResult normalize_profile(const WaveResult& w, const EpsilonBand& band)
{
    return normalize_profile(w, band.epsilon);
}

double tail_slope(const Profile& p, double y_from, double y_to)
{
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double yy = p.y(i);
        if (yy < y_from || yy > y_to || p.h[i] <= 0.0) {
            continue;
        }
        const double l = std::log(p.h[i]);
        sx += yy;
        sy += l;
        sxx += yy * yy;
        sxy += yy * l;
        ++n;
    }
    if (n < 2) {
        throw std::invalid_argument("tail slope needs at least two nodes in the window");
    }
    const double nn = static_cast<double>(n);
    return (nn * sxy - sx * sy) / (nn * sxx - sx * sx);
}

double tail_slope_by_level(const std::vector<double>& h, double dy, double h_lo, double h_hi)
{
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < h.size(); ++i) {
        if (h[i] < h_lo || h[i] > h_hi) {
            continue;
        }
        const double yy = static_cast<double>(i) * dy;
        const double l = std::log(h[i]);
        sx += yy;
        sy += l;
        sxx += yy * yy;
        sxy += yy * l;
        ++n;
    }
    if (n < 2) {
        throw std::invalid_argument("tail slope needs at least two nodes in the level window");
    }
    const double nn = static_cast<double>(n);
    return (nn * sxy - sx * sy) / (nn * sxx - sx * sx);
}

double muratov_window(const Potential& P, double c_star)
{
    return c_star + std::sqrt(c_star * c_star + 4.0 * P.d2F(0.0));
}

std::pair<double, double> muratov_check(const Potential& P, const WaveResult& w, double c)
{
    const double upper = muratov_window(P, w.c_star);
    if (!(c > 0.0 && c < upper)) {
        std::ostringstream msg;
        msg << "speed " << c << " is outside the window (0, " << upper << ") where the weighted integrals converge";
        throw std::invalid_argument(msg.str());
    }
    const Grid1D grid = w.profile.grid();
    const AnchoredEnergy E = energy_weighted(grid, w.profile.h, w.profile.dh, c, P, 0.0);
    const AnchoredEnergy S = weighted_integral(grid, square(w.profile.dh), c, 0.0);
    return {c * E.value, (c - w.c_star) * S.value};
}

}  // namespace bistable
