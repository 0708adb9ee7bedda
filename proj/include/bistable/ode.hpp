#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <initializer_list>
#include <string>
#include <utility>

#include "bistable/errors.hpp"

namespace bistable::ode {

using State = std::array<double, 2>;

/// Embedded Runge-Kutta 5(4) pair of Dormand and Prince.
template <class Rhs>
class DormandPrince
{
  public:
    DormandPrince(Rhs rhs, double rtol, double atol) : rhs_(std::move(rhs)), rtol_(rtol), atol_(atol) {}

    /// One step of size h from (t, y). Returns the fifth-order solution and writes the
    /// scaled error norm (<= 1 means acceptable).
    State step(double t, const State& y, double h, double& err_norm) const
    {
        constexpr double a21 = 1.0 / 5.0;
        constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
        constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
        constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0, a53 = 64448.0 / 6561.0,
                         a54 = -212.0 / 729.0;
        constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0, a63 = 46732.0 / 5247.0,
                         a64 = 49.0 / 176.0, a65 = -5103.0 / 18656.0;
        constexpr double b1 = 35.0 / 384.0, b3 = 500.0 / 1113.0, b4 = 125.0 / 192.0,
                         b5 = -2187.0 / 6784.0, b6 = 11.0 / 84.0;
        constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0, e4 = 71.0 / 1920.0,
                         e5 = -17253.0 / 339200.0, e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;

        auto comb = [&](std::initializer_list<std::pair<double, const State*>> terms) {
            State out = y;
            for (const auto& [w, k] : terms) {
                out[0] += h * w * (*k)[0];
                out[1] += h * w * (*k)[1];
            }
            return out;
        };

        const State k1 = rhs_(t, y);
        const State k2 = rhs_(t + h / 5.0, comb({{a21, &k1}}));
        const State k3 = rhs_(t + 3.0 * h / 10.0, comb({{a31, &k1}, {a32, &k2}}));
        const State k4 = rhs_(t + 4.0 * h / 5.0, comb({{a41, &k1}, {a42, &k2}, {a43, &k3}}));
        const State k5 = rhs_(t + 8.0 * h / 9.0, comb({{a51, &k1}, {a52, &k2}, {a53, &k3}, {a54, &k4}}));
        const State k6 =
            rhs_(t + h, comb({{a61, &k1}, {a62, &k2}, {a63, &k3}, {a64, &k4}, {a65, &k5}}));
        const State y5 = comb({{b1, &k1}, {b3, &k3}, {b4, &k4}, {b5, &k5}, {b6, &k6}});
        const State k7 = rhs_(t + h, y5);

        err_norm = 0.0;
        for (int i = 0; i < 2; ++i) {
            const double err =
                h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
            const double scale = atol_ + rtol_ * std::max(std::abs(y[i]), std::abs(y5[i]));
            err_norm = std::max(err_norm, std::abs(err) / scale);
        }
        return y5;
    }

    State derivative(double t, const State& y) const { return rhs_(t, y); }

  private:
    Rhs rhs_;
    double rtol_;
    double atol_;
};

struct AdaptiveOptions
{
    double rtol = 1e-10;
    double atol = 1e-16;
    double h_init = 1e-3;
    double h_max = 0.05;
    double h_min = 1e-13;
};

/// Adaptive integration from t0 forward. When `node_spacing > 0` steps are clipped so
/// that every multiple of node_spacing is hit exactly. After each accepted step the
/// observer receives (t, y, on_node) and returns false to stop. Returns the final time.
template <class Rhs, class Observer>
double integrate_adaptive(const DormandPrince<Rhs>& stepper, double t0, State& y, double t_max,
                          const AdaptiveOptions& opt, double node_spacing, Observer&& observe)
{
    double t = t0;
    double h = opt.h_init;
    while (t < t_max) {
        double h_try = std::min({h, opt.h_max, t_max - t});
        bool lands_on_node = false;
        long node_index = 0;
        if (node_spacing > 0.0) {
            node_index = static_cast<long>(std::floor(t / node_spacing + 1e-9)) + 1;
            const double next_node = static_cast<double>(node_index) * node_spacing;
            if (t + h_try >= next_node - 1e-12 * node_spacing) {
                h_try = next_node - t;
                lands_on_node = true;
            }
        }
        double err = 0.0;
        const State y_new = stepper.step(t, y, h_try, err);
        if (!(err <= 1.0) || !std::isfinite(y_new[0]) || !std::isfinite(y_new[1])) {
            const double factor = std::isfinite(err) ? std::clamp(0.9 * std::pow(err, -0.2), 0.1, 0.5) : 0.1;
            h = h_try * factor;
            if (h < opt.h_min) {
                throw NumericalFailure("adaptive ODE step size underflow at t = " + std::to_string(t));
            }
            continue;
        }
        t = lands_on_node ? static_cast<double>(node_index) * node_spacing : t + h_try;
        y = y_new;
        const double grow = err > 0.0 ? std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0) : 5.0;
        // A step clipped onto a node says little about the natural step size.
        h = lands_on_node ? std::max(h, h_try * grow) : h_try * grow;
        if (!observe(t, y, lands_on_node)) {
            break;
        }
    }
    return t;
}

}  // namespace bistable::ode
