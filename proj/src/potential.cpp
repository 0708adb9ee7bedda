#include "bistable/potential.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <boost/math/special_functions/erf.hpp>
#include <boost/math/tools/minima.hpp>

namespace bistable {

namespace {

constexpr double kCriticalTol = 1e-12;

// Minimum of f on [lo, hi]: dense sampling followed by Brent refinement of the best cell.
double sampled_minimum(const std::function<double(double)>& f, double lo, double hi,
                       std::size_t n = 20001)
{
    const double h = (hi - lo) / static_cast<double>(n - 1);
    std::size_t best = 0;
    double best_val = f(lo);
    for (std::size_t i = 1; i < n; ++i) {
        const double v = f(lo + h * static_cast<double>(i));
        if (v < best_val) {
            best_val = v;
            best = i;
        }
    }
    const double a = std::max(lo, lo + h * (static_cast<double>(best) - 1.0));
    const double b = std::min(hi, lo + h * (static_cast<double>(best) + 1.0));
    auto [x, fx] = boost::math::tools::brent_find_minima(f, a, b, 52);
    (void)x;
    return std::min(best_val, fx);
}

}  // namespace

Potential cubic_potential(double a)
{
    if (!(a > 0.0 && a < 0.5)) {
        std::ostringstream msg;
        msg << "cubic potential requires 0 < a < 1/2 (got a = " << a
            << "); otherwise F(1) = (2a - 1)/12 is not negative";
        throw InvalidPotential(msg.str());
    }
    Potential P;
    P.name = "cubic";
    P.params = {{"a", a}};
    P.F = [a](double u) {
        const double u2 = u * u;
        return u2 * u2 / 4.0 - (1.0 + a) * u2 * u / 3.0 + a * u2 / 2.0;
    };
    P.dF = [a](double u) { return u * (u - 1.0) * (u - a); };
    P.d2F = [a](double u) { return 3.0 * u * u - 2.0 * (1.0 + a) * u + a; };
    return P;
}

Potential symmetric_double_well(double b)
{
    if (!(b > 0.0 && b * b < 1.0 / 3.0)) {
        throw InvalidPotential("symmetric double well requires 0 < b < 1/sqrt(3)");
    }
    const double b2 = b * b;
    Potential P;
    P.name = "double_well";
    P.params = {{"b", b}};
    P.F = [b2](double u) {
        const double u2 = u * u;
        return u2 * u2 * u2 / 6.0 - (1.0 + b2) * u2 * u2 / 4.0 + b2 * u2 / 2.0;
    };
    P.dF = [b2](double u) { return u * (u * u - 1.0) * (u * u - b2); };
    P.d2F = [b2](double u) {
        const double u2 = u * u;
        return 5.0 * u2 * u2 - 3.0 * (1.0 + b2) * u2 + b2;
    };
    return P;
}

Potential make_potential(const std::string& family, const std::map<std::string, double>& params)
{
    auto param = [&](const std::string& key) {
        auto it = params.find(key);
        if (it == params.end()) {
            throw InvalidPotential("potential family '" + family + "' requires parameter '" + key + "'");
        }
        return it->second;
    };
    if (family == "cubic") {
        return cubic_potential(param("a"));
    }
    if (family == "double_well") {
        return symmetric_double_well(param("b"));
    }
    throw InvalidPotential("unknown potential family '" + family + "'");
}

nlohmann::json to_json(const AssumptionReport& r)
{
    nlohmann::json j;
    j["all_pass"] = r.all_pass();
    j["coercive_ok"] = r.coercive_ok;
    j["min0_ok"] = r.min0_ok;
    j["min1_ok"] = r.min1_ok;
    j["other_ok"] = r.other_ok;
    j["A"] = r.A;
    j["beta"] = r.beta;
    j["d2F_at_1"] = r.d2F_at_1;
    j["search_interval"] = {r.search_interval.first, r.search_interval.second};
    auto& cps = j["critical_points"] = nlohmann::json::array();
    for (const auto& cp : r.critical_points) {
        cps.push_back({{"u", cp.u}, {"F", cp.value}, {"d2F", cp.curvature}});
    }
    auto& neg = j["negative_critical_values"] = nlohmann::json::array();
    for (const auto& [u, f] : r.negative_critical_values) {
        neg.push_back({{"u", u}, {"F", f}});
    }
    j["diagnostics"] = r.diagnostics;
    return j;
}

AssumptionReport validate_assumptions(const Potential& P, std::pair<double, double> interval,
                                      std::size_t n_samples)
{
    const auto [lo, hi] = interval;
    if (!(lo <= -1.0 && hi >= 2.0)) {
        throw std::invalid_argument("search interval must contain [-1, 2]");
    }
    if (n_samples < 1000) {
        throw std::invalid_argument("validate_assumptions needs at least 1000 samples");
    }

    AssumptionReport report;
    report.search_interval = interval;

    const double F0 = P.F(0.0), dF0 = P.dF(0.0), d2F0 = P.d2F(0.0);
    const double F1 = P.F(1.0), dF1 = P.dF(1.0), d2F1 = P.d2F(1.0);
    report.A = -F1;
    report.beta = d2F0;
    report.d2F_at_1 = d2F1;

    report.min0_ok = std::abs(F0) <= kCriticalTol && std::abs(dF0) <= kCriticalTol && d2F0 > 0.0;
    if (!report.min0_ok) {
        std::ostringstream msg;
        msg << "u = 0 is not a nondegenerate critical point at level 0: F(0) = " << F0
            << ", F'(0) = " << dF0 << ", F''(0) = " << d2F0;
        report.diagnostics.push_back(msg.str());
    }
    report.min1_ok = F1 < 0.0 && std::abs(dF1) <= kCriticalTol && d2F1 > 0.0;
    if (!report.min1_ok) {
        std::ostringstream msg;
        msg << "u = 1 is not a nondegenerate negative minimum: F(1) = " << F1 << ", F'(1) = " << dF1
            << ", F''(1) = " << d2F1;
        report.diagnostics.push_back(msg.str());
    }

    // Coercivity: u F'(u) > 0 at the endpoints and on a geometric sequence beyond them.
    report.coercive_ok = true;
    const double width = hi - lo;
    for (int k = 0; k <= 20; ++k) {
        const double reach = (k == 0) ? 0.0 : width * std::ldexp(1.0, k - 1);
        for (double u : {lo - reach, hi + reach}) {
            if (!(u * P.dF(u) > 0.0)) {
                report.coercive_ok = false;
                std::ostringstream msg;
                msg << "u F'(u) <= 0 at u = " << u;
                report.diagnostics.push_back(msg.str());
            }
        }
        if (!report.coercive_ok) {
            break;
        }
    }

    // Critical points: every sign change of F' on the sampled grid, refined by bisection.
    const double h = width / static_cast<double>(n_samples - 1);
    std::vector<double> roots;
    double u_prev = lo;
    double g_prev = P.dF(u_prev);
    if (g_prev == 0.0) {
        roots.push_back(u_prev);
    }
    for (std::size_t i = 1; i < n_samples; ++i) {
        const double u = (i + 1 == n_samples) ? hi : lo + h * static_cast<double>(i);
        const double g = P.dF(u);
        if (!std::isfinite(g)) {
            report.other_ok = false;
            report.diagnostics.push_back("F' is not finite on the search interval");
            return report;
        }
        if (g == 0.0) {
            roots.push_back(u);
        } else if (g_prev != 0.0 && std::signbit(g) != std::signbit(g_prev)) {
            double a = u_prev, b = u, ga = g_prev;
            bool converged = false;
            for (int it = 0; it < 200; ++it) {
                const double m = 0.5 * (a + b);
                if (b - a <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(m))) {
                    converged = true;
                    break;
                }
                const double gm = P.dF(m);
                if (!std::isfinite(gm)) {
                    break;
                }
                if (gm == 0.0) {
                    a = b = m;
                    converged = true;
                    break;
                }
                if (std::signbit(gm) == std::signbit(ga)) {
                    a = m;
                    ga = gm;
                } else {
                    b = m;
                }
            }
            if (!converged) {
                std::ostringstream msg;
                msg << "root bracketing of F' failed to converge in [" << u_prev << ", " << u << "]";
                report.diagnostics.push_back(msg.str());
                report.other_ok = false;
                return report;
            }
            roots.push_back(0.5 * (a + b));
        }
        u_prev = u;
        g_prev = g;
    }
    std::sort(roots.begin(), roots.end());
    roots.erase(std::unique(roots.begin(), roots.end(),
                            [](double x, double y) { return std::abs(x - y) < 1e-9; }),
                roots.end());

    report.other_ok = true;
    for (double r : roots) {
        // Snap to the designated minima when the bisection landed within round-off.
        if (std::abs(r) < 1e-9) {
            r = 0.0;
        } else if (std::abs(r - 1.0) < 1e-9) {
            r = 1.0;
        }
        const CriticalPoint cp{r, P.F(r), P.d2F(r)};
        report.critical_points.push_back(cp);
        if (r != 0.0 && r != 1.0 && cp.value <= 0.0) {
            report.other_ok = false;
            report.negative_critical_values.emplace_back(cp.u, cp.value);
            std::ostringstream msg;
            msg << "critical point u = " << cp.u << " has nonpositive value F = " << cp.value;
            report.diagnostics.push_back(msg.str());
        }
    }
    return report;
}

bool band_holds(const Potential& P, const EpsilonBand& band, std::size_t n)
{
    const double lo = -2.0 * band.epsilon;
    const double step = 4.0 * band.epsilon / static_cast<double>(n - 1);
    for (std::size_t i = 0; i < n; ++i) {
        const double u = (i + 1 == n) ? -lo : lo + step * static_cast<double>(i);
        const double c = P.d2F(u);
        if (c < band.beta1 || c > band.beta2) {
            return false;
        }
    }
    return true;
}

EpsilonBand select_epsilon(const Potential& P, double beta1_frac, double beta2_frac)
{
    if (!(beta1_frac > 0.0 && beta1_frac < 1.0 && beta2_frac > 1.0)) {
        throw std::invalid_argument("band fractions must satisfy 0 < beta1_frac < 1 < beta2_frac");
    }
    const double beta = P.d2F(0.0);
    if (!(beta > 0.0)) {
        throw NumericalFailure("F''(0) <= 0: no curvature band around u = 0 exists");
    }
    EpsilonBand band{0.0, beta1_frac * beta, beta2_frac * beta};
    constexpr std::size_t kSamples = 10001;
    auto ok = [&](double eps) {
        band.epsilon = eps;
        return band_holds(P, band, kSamples);
    };

    double lo = 1e-12;
    if (!ok(lo)) {
        throw NumericalFailure("F'' leaves the curvature band arbitrarily close to 0");
    }
    double hi = 1e-3;
    while (ok(hi)) {
        lo = hi;
        hi *= 2.0;
        if (hi > 1e3) {
            band.epsilon = lo;
            return band;
        }
    }
    while ((hi - lo) > 1e-6 * lo) {
        const double mid = 0.5 * (lo + hi);
        if (ok(mid)) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    band.epsilon = lo;
    return band;
}

nlohmann::json to_json(const DerivedConstants& k)
{
    return {{"B", k.B},   {"C1", k.C1}, {"kappa", k.kappa}, {"gamma", k.gamma}, {"K", k.K},
            {"C2", k.C2}, {"KF", k.KF}, {"T0", k.T0},       {"C0", k.C0}};
}

DerivedConstants derive_constants(const Potential& P, const EpsilonBand& band, double B)
{
    if (!(B > 0.0)) {
        throw std::invalid_argument("absorbing-set bound B must be positive");
    }
    DerivedConstants k{};
    k.B = B;
    k.kappa = std::sqrt(band.beta1) / 2.0;
    k.gamma = 2.0 * band.beta1 * band.beta1 / band.beta2;

    const double min_d2F = sampled_minimum(P.d2F, -B, B);
    k.C1 = std::max(0.0, -2.0 * min_d2F);

    const double sup_F = -sampled_minimum([&](double u) { return -P.F(u); }, -B, B);
    k.K = B * B / 2.0 + sup_F;
    k.C2 = k.C1 * B * B + k.gamma * k.K;

    k.KF = -sampled_minimum([&](double u) { return -std::abs(P.dF(u)); }, -B, B);
    k.T0 = band.epsilon / (2.0 * k.KF);
    const double ratio = band.epsilon / B;
    k.C0 = ratio < 1.0 ? std::sqrt(4.0 * k.T0) * boost::math::erfc_inv(ratio) : 0.0;
    return k;
}

}  // namespace bistable
