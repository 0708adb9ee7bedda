#include "bistable/energetics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace bistable {

namespace {

constexpr double kTailTolerance = 1e-6;

void require_right_decay(const Field& v)
{
    if (!(std::abs(v.values.back()) < kTailTolerance)) {
        std::ostringstream msg;
        msg << "field does not decay at the right boundary (|v| = " << std::abs(v.values.back()) << ")";
        throw TailNotDecayed(msg.str());
    }
}

// e^{x} f without forming e^{x} when it would overflow.
double scaled(double x, double f)
{
    if (f == 0.0) {
        return 0.0;
    }
    return std::copysign(std::exp(x + std::log(std::abs(f))), f);
}

}  // namespace

std::vector<double> square(std::span<const double> v)
{
    std::vector<double> out(v.size());
    std::transform(v.begin(), v.end(), out.begin(), [](double x) { return x * x; });
    return out;
}

AnchoredEnergy weighted_integral(const Grid1D& grid, std::span<const double> f, double c, double anchor,
                                 bool extend_left)
{
    const std::size_t n = f.size();
    const double dx = grid.dx();
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double w = (i == 0 || i + 1 == n) ? 0.5 : 1.0;
        sum += w * scaled(c * (grid.x(i) - anchor), f[i]);
    }
    sum *= dx;
    if (extend_left) {
        if (!(c > 0.0)) {
            throw std::invalid_argument("left extension of a weighted integral needs c > 0");
        }
        sum += scaled(c * (grid.x_min - anchor), f[0]) / c;
    }
    return {anchor, sum, c};
}

AnchoredEnergy energy_weighted(const Grid1D& grid, std::span<const double> v, std::span<const double> dv, double c,
                               const Potential& P, double anchor)
{
    if (!(std::abs(v.back()) < kTailTolerance)) {
        throw TailNotDecayed("profile does not decay at the right end of its grid");
    }
    std::vector<double> density(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        density[i] = 0.5 * dv[i] * dv[i] + P.F(v[i]);
    }
    return weighted_integral(grid, density, c, anchor, true);
}

AnchoredEnergy energy_weighted(const Field& v, double c, const Potential& P, double anchor)
{
    require_right_decay(v);
    const auto dv = centered_derivative(v.grid, v.values);
    return energy_weighted(v.grid, v.values, dv, c, P, anchor);
}

AnchoredEnergy dissipation_weighted(const Field& v, double c, const Potential& P, double anchor)
{
    require_right_decay(v);
    const auto r = discrete_rhs(v.grid, v.values, c, P);
    return weighted_integral(v.grid, square(r), c, anchor);
}

AnchoredEnergy dissipation_from_rate(const Field& vt, double c, double anchor)
{
    return weighted_integral(vt.grid, square(vt.values), c, anchor);
}

AnchoredEnergy h1c_norm_squared(const Field& v, double c, double anchor)
{
    require_right_decay(v);
    const auto dv = centered_derivative(v.grid, v.values);
    std::vector<double> density(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        density[i] = v.values[i] * v.values[i] + dv[i] * dv[i];
    }
    return weighted_integral(v.grid, density, c, anchor, c > 0.0);
}

double poincare_margin(const Grid1D& grid, std::span<const double> v, std::span<const double> dv, double c,
                       double y0, double anchor)
{
    const double dx = grid.dx();
    // First node at or after y0; the partial cell [y0, x_first] uses linear reconstruction.
    const double s = std::max(0.0, (y0 - grid.x_min) / dx);
    std::size_t first = static_cast<std::size_t>(std::ceil(s - 1e-12));
    if (first >= v.size()) {
        return 0.0;
    }
    std::vector<double> g(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        g[i] = scaled(c * (grid.x(i) - anchor), dv[i] * dv[i] - 0.25 * c * c * v[i] * v[i]);
    }
    double sum = 0.0;
    for (std::size_t i = first; i + 1 < v.size(); ++i) {
        sum += 0.5 * (g[i] + g[i + 1]) * dx;
    }
    if (first > 0) {
        const double theta = static_cast<double>(first) - s;  // fraction of the cell left of node `first`
        const double g0 = g[first] + theta * (g[first - 1] - g[first]);
        sum += 0.5 * (g0 + g[first]) * theta * dx;
    }
    return sum;
}

IdentityResidual dissipation_identity_residual(const std::vector<EnergySample>& series, double t_min,
                                               double relative_floor)
{
    if (series.size() < 3) {
        throw std::invalid_argument("identity residual needs at least three samples");
    }
    const double anchor = series.front().E.anchor;
    std::vector<double> E(series.size());
    std::vector<double> D(series.size());
    double d_max = 0.0;
    for (std::size_t i = 0; i < series.size(); ++i) {
        E[i] = series[i].E.reanchored(anchor).value;
        D[i] = series[i].D.reanchored(anchor).value;
        if (series[i].t >= t_min) {
            d_max = std::max(d_max, std::abs(D[i]));
        }
    }
    const double floor = std::max(relative_floor * d_max, std::numeric_limits<double>::min());
    IdentityResidual r;
    for (std::size_t i = 1; i + 1 < series.size(); ++i) {
        if (series[i - 1].t < t_min) {
            continue;
        }
        const double dt = series[i + 1].t - series[i - 1].t;
        const double rate = (E[i + 1] - E[i - 1]) / dt;
        const double res = std::abs(rate + D[i]) / std::max(std::abs(D[i]), floor);
        ++r.checked;
        if (res > r.max_residual) {
            r.max_residual = res;
            r.t_worst = series[i].t;
        }
    }
    return r;
}

IdentityResidual dissipation_identity_residual(const Trajectory& traj, double c, double anchor, double t_min,
                                               double relative_floor)
{
    std::vector<EnergySample> series;
    series.reserve(traj.snapshots.size());
    for (const auto& s : traj.snapshots) {
        series.push_back({s.time, energy_weighted(s.field, c, traj.potential, anchor),
                          dissipation_from_rate(s.time_derivative, c, anchor)});
    }
    return dissipation_identity_residual(series, t_min, relative_floor);
}

double cutoff_weight(double x, double x_hat)
{
    return x <= x_hat ? 1.0 : std::exp(x_hat - x);
}

double truncated_energy(const Field& u, double x_hat, const Potential& P)
{
    const auto& v = u.values;
    if (!(std::abs(v.front() - 1.0) < kTailTolerance) || !(std::abs(v.back()) < kTailTolerance)) {
        throw TailNotDecayed("truncated energy needs u = 1 at the left end and u = 0 at the right end");
    }
    const Grid1D& g = u.grid;
    if (!(x_hat < g.x_max)) {
        throw std::invalid_argument("cutoff point must lie inside the grid");
    }
    const double F1 = P.F(1.0);
    const auto ux = centered_derivative(g, v);
    const double dx = g.dx();
    double sum = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double w = (i == 0 || i + 1 == v.size()) ? 0.5 : 1.0;
        const double x = g.x(i);
        sum += w * cutoff_weight(x, x_hat) * (0.5 * ux[i] * ux[i] + P.F(v[i]) - F1);
    }
    sum *= dx;
    // Beyond the grid u = 0, where the density is F(0) - F(1) = -F(1).
    sum += -F1 * std::exp(x_hat - g.x_max);
    return sum;
}

double truncated_energy_source(const Field& u, const Field& ut, double x_hat, double x_hat_rate,
                               const Potential& P)
{
    const Grid1D& g = u.grid;
    const auto& v = u.values;
    const double F1 = P.F(1.0);
    const auto ux = centered_derivative(g, v);
    auto density = [&](std::size_t i) {
        return x_hat_rate * (0.5 * ux[i] * ux[i] + P.F(v[i]) - F1) + ux[i] * ut.values[i];
    };
    const double dx = g.dx();
    const double s = std::clamp((x_hat - g.x_min) / dx, 0.0, static_cast<double>(v.size() - 1));
    const auto first = static_cast<std::size_t>(std::ceil(s - 1e-12));
    double sum = 0.0;
    double prev = 0.0;
    for (std::size_t i = first; i < v.size(); ++i) {
        const double cur = cutoff_weight(g.x(i), x_hat) * density(i);
        if (i > first) {
            sum += 0.5 * (prev + cur) * dx;
        }
        prev = cur;
    }
    if (first > 0 && first < v.size()) {
        const double theta = static_cast<double>(first) - s;
        const double at_cut = density(first) + theta * (density(first - 1) - density(first));
        sum += 0.5 * (at_cut + cutoff_weight(g.x(first), x_hat) * density(first)) * theta * dx;
    }
    sum += x_hat_rate * -F1 * std::exp(x_hat - g.x_max);
    return sum;
}

nlohmann::json to_json(const EnergyAudit& a)
{
    return {{"time", a.time},
            {"anchor", a.E.anchor},
            {"E", a.E.value},
            {"D", a.D.value},
            {"has_front", a.has_front},
            {"lower_bound_margin", a.lower_bound_margin},
            {"dcec_margin", a.dcec_margin},
            {"poincare_margin", a.poincare_margin},
            {"h1c_norm", a.h1c_norm}};
}

EnergyAudit audit_inequalities(const Snapshot& snap, double c, const DerivedConstants& consts,
                               std::optional<std::pair<double, double>> fronts, const EpsilonBand& band,
                               const Potential& P)
{
    EnergyAudit a;
    a.time = snap.time;
    const double anchor = fronts ? fronts->first : 0.0;
    a.E = energy_weighted(snap.field, c, P, anchor);
    a.D = dissipation_from_rate(snap.time_derivative, c, anchor);
    if (!fronts) {
        return a;
    }
    a.has_front = true;
    const auto [ybar, Ybar] = *fronts;
    const double A = -P.F(1.0);
    const double eps = band.epsilon;
    a.lower_bound_margin = a.E.value - (-A / c + consts.kappa * eps * eps);
    a.dcec_margin = a.D.value - consts.gamma * a.E.value + consts.C2 / c * std::exp(c * (Ybar - ybar));
    const auto dv = centered_derivative(snap.field.grid, snap.field.values);
    a.poincare_margin = poincare_margin(snap.field.grid, snap.field.values, dv, c, ybar, ybar);
    a.h1c_norm = std::sqrt(h1c_norm_squared(snap.field, c, ybar).value);
    return a;
}

double dissipation_growth_margin(const std::vector<EnergySample>& series, double C1)
{
    double worst = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i + 1 < series.size(); ++i) {
        const double anchor = series[i].D.anchor;
        const double d0 = series[i].D.value;
        const double d1 = series[i + 1].D.reanchored(anchor).value;
        const double dt = series[i + 1].t - series[i].t;
        const double scale = std::max(std::abs(d0), std::numeric_limits<double>::min());
        worst = std::min(worst, (std::exp(C1 * dt) * d0 - d1) / scale);
    }
    return worst;
}

double integrated_decay_margin(const std::vector<DecaySample>& series, const DerivedConstants& consts, double c)
{
    double worst = std::numeric_limits<double>::infinity();
    const double slack = 1e-12 * std::max(1.0, consts.T0);
    for (std::size_t i = 0; i < series.size(); ++i) {
        const double t0 = series[i].t;
        const double anchor = series[i].ybar;
        const double e0 = series[i].E.reanchored(anchor).value;
        const double source = consts.C2 * consts.T0 / c * std::exp(c * consts.C0);
        for (std::size_t j = i; j < series.size() && series[j].t <= t0 + consts.T0 + slack; ++j) {
            const double bound = std::exp(-consts.gamma * (series[j].t - t0)) * e0 + source;
            worst = std::min(worst, bound - series[j].E.reanchored(anchor).value);
        }
    }
    return worst;
}

}  // namespace bistable
