#include "bistable/verify.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <iomanip>
#include <limits>
#include <mutex>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <boost/math/tools/minima.hpp>

#include "bistable/energetics.hpp"
#include "bistable/front.hpp"
#include "bistable/waveprofile.hpp"

namespace bistable::verify {

using nlohmann::json;

namespace {

constexpr double kSpeedLo = 0.0;
constexpr double kSpeedHi = 2.0;
constexpr double kSpeedTol = 1e-10;

double seconds_since(std::chrono::steady_clock::time_point start)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

struct Setup
{
    Potential P;
    EpsilonBand band{};
    WaveResult wave;  ///< centered at h = 1/2
    WaveResult normalized;  ///< h(0) = eps
};

Setup prepare(const ExperimentSpec& spec)
{
    Setup s;
    s.P = make_potential(spec.family, spec.params);
    const auto report = validate_assumptions(s.P, {-2.0, 2.0});
    if (!report.all_pass()) {
        std::string why = "potential " + s.P.name + " violates the structural assumptions";
        for (const auto& d : report.diagnostics) {
            why += "; " + d;
        }
        throw InvalidPotential(why);
    }
    s.band = select_epsilon(s.P, spec.beta1_frac, spec.beta2_frac);
    s.wave = find_wave_speed(s.P, kSpeedLo, kSpeedHi, kSpeedTol);
    s.normalized = normalize_profile(s.wave, s.band);
    return s;
}

double override_or(const ExperimentSpec& spec, const std::string& key, double fallback)
{
    const auto it = spec.overrides.find(key);
    return it == spec.overrides.end() ? fallback : it->second;
}

ClaimReport make_claim(const std::string& id, const ExperimentSpec& spec, double measured, double target,
                       double tolerance, double margin, json details = json::object())
{
    ClaimReport r;
    r.id = id;
    r.experiment = spec.name;
    r.measured = measured;
    r.target = target;
    r.tolerance = tolerance;
    r.margin = margin;
    r.pass = margin >= 0.0;  // NaN fails
    r.details = std::move(details);
    return r;
}

// Speed below c* used for the negative-energy witness and the scaling check.
double witness_speed(double c_star)
{
    return 0.3 < c_star ? 0.3 : 0.85 * c_star;
}

// Speed above c* used for the second nonnegativity run.
double fast_speed(double c_star, double window)
{
    const double c = 0.45 > c_star ? 0.45 : 1.27 * c_star;
    return std::min(c, 0.5 * (c_star + window));
}

bool is_cubic(const ExperimentSpec& spec)
{
    return spec.family == "cubic";
}

double sup_error_vs(const Profile& p, double from, double to, double step, const std::function<double(double)>& exact)
{
    double worst = 0.0;
    const auto n = static_cast<std::size_t>(std::round((to - from) / step));
    for (std::size_t i = 0; i <= n; ++i) {
        const double y = from + static_cast<double>(i) * step;
        worst = std::max(worst, std::abs(p.value(y) - exact(y)));
    }
    return worst;
}

std::size_t steps_per(double interval, double dt)
{
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(interval / dt)));
}

Field initial_field(const ExperimentSpec& spec, const Setup& s, const Grid1D& grid)
{
    return make_initial_data(spec.initial, grid, &s.normalized);
}

}  // namespace

json to_json(const ClaimReport& r)
{
    return {{"id", r.id},
            {"experiment", r.experiment},
            {"measured", r.measured},
            {"target", r.target},
            {"tolerance", r.tolerance},
            {"margin", r.margin},
            {"pass", r.pass},
            {"runtime_s", r.runtime},
            {"details", r.details}};
}

const char* to_string(ExperimentKind kind)
{
    switch (kind) {
        case ExperimentKind::wave:
            return "wave";
        case ExperimentKind::identity:
            return "identity";
        case ExperimentKind::convergence:
            return "convergence";
        case ExperimentKind::dichotomy:
            return "dichotomy";
        case ExperimentKind::inequalities:
            return "inequalities";
        case ExperimentKind::repair:
            return "repair";
        case ExperimentKind::invariants:
            return "invariants";
    }
    return "unknown";
}

ExperimentKind parse_experiment_kind(const std::string& name)
{
    for (auto k : {ExperimentKind::wave, ExperimentKind::identity, ExperimentKind::convergence,
                   ExperimentKind::dichotomy, ExperimentKind::inequalities, ExperimentKind::repair,
                   ExperimentKind::invariants}) {
        if (name == to_string(k)) {
            return k;
        }
    }
    throw std::invalid_argument("unknown experiment kind '" + name + "'");
}

json to_json(const ExperimentSpec& spec)
{
    return {{"name", spec.name},
            {"kind", to_string(spec.kind)},
            {"family", spec.family},
            {"params", spec.params},
            {"beta1_frac", spec.beta1_frac},
            {"beta2_frac", spec.beta2_frac},
            {"initial", to_json(spec.initial)},
            {"x_min", spec.x_min},
            {"x_max", spec.x_max},
            {"dx", spec.dx},
            {"dt", spec.dt},
            {"T", spec.T},
            {"frame", spec.frame},
            {"frame_speed", spec.frame_speed},
            {"observe_every", spec.observe_every},
            {"seed", spec.seed},
            {"claims", spec.claims},
            {"overrides", spec.overrides}};
}

const std::map<std::string, ExperimentKind>& claim_registry()
{
    static const std::map<std::string, ExperimentKind> registry = [] {
        std::map<std::string, ExperimentKind> m;
        for (auto k : {ExperimentKind::wave, ExperimentKind::identity, ExperimentKind::convergence,
                       ExperimentKind::dichotomy, ExperimentKind::inequalities, ExperimentKind::repair,
                       ExperimentKind::invariants}) {
            for (const auto& id : claims_of(k)) {
                m.emplace(id, k);
            }
        }
        return m;
    }();
    return registry;
}

std::vector<std::string> claims_of(ExperimentKind kind)
{
    switch (kind) {
        case ExperimentKind::wave:
            return {"wave_speed", "wave_profile", "decay_exponent", "wave_energy_zero", "muratov",
                    "translation_scaling"};
        case ExperimentKind::identity:
            return {"lyapunov_identity", "lyapunov_refinement"};
        case ExperimentKind::convergence:
            return {"convergence_speed", "convergence_profile", "convergence_rate", "front_shift"};
        case ExperimentKind::dichotomy:
            return {"energy_witness", "energy_nonnegative"};
        case ExperimentKind::inequalities:
            return {"lower_bound",     "dissipation_growth", "dissipation_energy",      "integrated_decay",
                    "front_control",   "poincare",           "negative_control_growth", "negative_control_front"};
        case ExperimentKind::repair:
            return {"repair", "truncated_energy"};
        case ExperimentKind::invariants:
            return {"translation_equivariance", "threshold_ordering", "equilibria", "reanchoring"};
    }
    return {};
}

double resolve_frame_speed(const ExperimentSpec& spec, double c_star)
{
    if (spec.frame == "lab") {
        return 0.0;
    }
    if (spec.frame == "cstar") {
        return c_star;
    }
    if (spec.frame == "value") {
        return spec.frame_speed;
    }
    throw std::invalid_argument("frame must be lab, cstar or value, got '" + spec.frame + "'");
}

// ---------------------------------------------------------------------------------------------
// Travelling wave

std::vector<ClaimReport> run_wave_experiment(const ExperimentSpec& spec)
{
    const auto start = std::chrono::steady_clock::now();
    const Setup s = prepare(spec);
    const double c = s.wave.c_star;
    std::vector<ClaimReport> out;

    if (is_cubic(spec)) {
        const double a = spec.params.at("a");
        const double exact = (1.0 - 2.0 * a) / std::sqrt(2.0);
        const double rel = std::abs(c - exact) / exact;
        out.push_back(make_claim("wave_speed", spec, c, exact, 1e-6, 1e-6 - rel,
                                 {{"relative_error", rel}, {"bracket", {s.wave.bracket.first, s.wave.bracket.second}},
                                  {"polished", s.wave.polished}}));
        const double err = sup_error_vs(s.wave.profile, -20.0, 20.0, 0.005,
                                        [](double y) { return 1.0 / (1.0 + std::exp(y / std::sqrt(2.0))); });
        out.push_back(make_claim("wave_profile", spec, err, 0.0, 1e-6, 1e-6 - err,
                                 {{"window", {-20.0, 20.0}}, {"residual", s.wave.residual}}));
    } else {
        out.push_back(make_claim("wave_speed", spec, c, c, 1e-6, 1e-6 - s.wave.residual,
                                 {{"residual", s.wave.residual}, {"note", "no closed form; profile ODE residual"}}));
        out.push_back(make_claim("wave_profile", spec, s.wave.residual, 0.0, 1e-6, 1e-6 - s.wave.residual,
                                 {{"residual", s.wave.residual}}));
    }

    {
        const auto [mu_minus, mu_plus] = decay_rates(s.P, c);
        ShootOptions opt;
        opt.tol = 1e-12;
        const auto traj = shoot(s.P, c, opt);
        const double slope = tail_slope_by_level(traj.h, traj.dy, 1e-6, 1e-3);
        const double rel = std::abs(slope - mu_minus) / std::abs(mu_minus);
        out.push_back(make_claim("decay_exponent", spec, slope, mu_minus, 1e-2, 1e-2 - rel,
                                 {{"relative_error", rel}, {"mu_plus", mu_plus}, {"level_window", {1e-6, 1e-3}}}));
    }

    {
        const auto& p = s.normalized.profile;
        const auto E = energy_weighted(p.grid(), p.h, p.dh, c, s.P, 0.0);
        out.push_back(make_claim("wave_energy_zero", spec, E.value, 0.0, 1e-6, 1e-6 - std::abs(E.value)));
    }

    {
        const double window = muratov_window(s.P, c);
        std::vector<double> speeds;
        for (double v : {0.2, 0.3, 0.45}) {
            if (v < window && std::abs(v - c) > 1e-3) {
                speeds.push_back(v);
            }
        }
        if (speeds.size() < 2) {
            speeds.clear();
            for (double f : {0.6, 0.85, 1.25}) {
                if (f * c < window) {
                    speeds.push_back(f * c);
                }
            }
        }
        json rows = json::array();
        double worst = 0.0;
        bool signs = true;
        for (double v : speeds) {
            const auto [lhs, rhs] = muratov_check(s.P, s.wave, v);
            const double rel = std::abs(lhs - rhs) / std::max(std::abs(lhs), std::abs(rhs));
            worst = std::max(worst, rel);
            // c E_c and (c - c*) int e^{cy} h'^2 share the sign of c - c*.
            signs = signs && ((v < c) ? lhs < 0.0 : lhs > 0.0);
            rows.push_back({{"c", v}, {"c_times_energy", lhs}, {"speed_gap_term", rhs}, {"relative_mismatch", rel}});
        }
        const double margin = signs ? 1e-4 - worst : -1.0;
        out.push_back(make_claim("muratov", spec, worst, 0.0, 1e-4, margin,
                                 {{"rows", rows}, {"window", window}, {"sign_dichotomy", signs}}));
    }

    {
        const double cw = witness_speed(c);
        const auto& p = s.normalized.profile;
        const auto grid = Grid1D::with_spacing(-60.0, 80.0, 0.01);
        auto energy_of_translate = [&](double shift) {
            std::vector<double> v(grid.n);
            std::vector<double> dv(grid.n);
            for (std::size_t i = 0; i < grid.n; ++i) {
                v[i] = p.value(grid.x(i) - shift);
                dv[i] = p.slope(grid.x(i) - shift);
            }
            return energy_weighted(grid, v, dv, cw, s.P, 0.0);
        };
        const auto E0 = energy_of_translate(0.0);
        double worst = 0.0;
        json rows = json::array();
        for (double l : {1.0, 5.0}) {
            const auto El = energy_of_translate(l);
            const double rel = std::abs(El.value / E0.value / std::exp(cw * l) - 1.0);
            worst = std::max(worst, rel);
            rows.push_back({{"shift", l}, {"energy", El.value}, {"relative_error", rel}});
        }
        out.push_back(make_claim("translation_scaling", spec, worst, 0.0, 1e-8, 1e-8 - worst,
                                 {{"c", cw}, {"energy", E0.value}, {"rows", rows}}));
    }

    const double runtime = seconds_since(start);
    for (auto& r : out) {
        r.runtime = runtime;
        r.details["c_star"] = c;
    }
    return out;
}

// ---------------------------------------------------------------------------------------------
// Lyapunov identity

std::vector<ClaimReport> run_identity_experiment(const ExperimentSpec& spec)
{
    const auto start = std::chrono::steady_clock::now();
    const Setup s = prepare(spec);
    const double c = resolve_frame_speed(spec, s.wave.c_star);
    const double t_min = spec.T / 10.0;

    auto run = [&](double dx, double dt) {
        const auto grid = Grid1D::with_spacing(spec.x_min, spec.x_max, dx);
        const Field u0 = initial_field(spec, s, grid);
        std::vector<EnergySample> series;
        SimulationOptions opt;
        opt.probe_every = steps_per(spec.observe_every, dt);
        opt.probe = [&](double t, std::span<const double> v) {
            const auto dv = centered_derivative(grid, v);
            const auto rhs = discrete_rhs(grid, v, c, s.P);
            series.push_back({t, energy_weighted(grid, v, dv, c, s.P, 0.0), weighted_integral(grid, square(rhs), c, 0.0)});
        };
        simulate(u0, spec.T, dt, c, s.P, opt);
        return dissipation_identity_residual(series, t_min);
    };

    const auto coarse = run(spec.dx, spec.dt);
    const auto fine = run(0.5 * spec.dx, 0.5 * spec.dt);
    const double ratio = coarse.max_residual / fine.max_residual;
    const json details = {{"frame_speed", c},
                          {"t_min", t_min},
                          {"coarse", {{"dx", spec.dx}, {"dt", spec.dt}, {"residual", coarse.max_residual},
                                      {"t_worst", coarse.t_worst}, {"checked", coarse.checked}}},
                          {"fine", {{"dx", 0.5 * spec.dx}, {"dt", 0.5 * spec.dt}, {"residual", fine.max_residual},
                                    {"t_worst", fine.t_worst}, {"checked", fine.checked}}}};
    std::vector<ClaimReport> out;
    out.push_back(make_claim("lyapunov_identity", spec, coarse.max_residual, 0.0, 1e-2, 1e-2 - coarse.max_residual,
                             details));
    out.push_back(make_claim("lyapunov_refinement", spec, ratio, 3.0, 0.0, ratio - 3.0, details));
    const double runtime = seconds_since(start);
    for (auto& r : out) {
        r.runtime = runtime;
    }
    return out;
}

// ---------------------------------------------------------------------------------------------
// Convergence to the travelling wave

std::vector<ClaimReport> run_convergence_experiment(const ExperimentSpec& spec)
{
    const auto start = std::chrono::steady_clock::now();
    const Setup s = prepare(spec);
    const double c_star = s.wave.c_star;
    const double c = resolve_frame_speed(spec, c_star);
    const double eps = s.band.epsilon;
    const double L = 20.0;
    const auto grid = Grid1D::with_spacing(spec.x_min, spec.x_max, spec.dx);
    const Field u0 = initial_field(spec, s, grid);
    const auto& h = s.normalized.profile;

    FrontSeries series;
    series.frame_speed = c;
    std::vector<double> err_t;
    std::vector<double> err;
    SimulationOptions opt;
    opt.front_level = eps;
    opt.probe_every = steps_per(spec.observe_every, spec.dt);
    opt.probe = [&](double t, std::span<const double> v) {
        Snapshot snap{t, Field{grid, {v.begin(), v.end()}}, Field{grid, discrete_rhs(grid, v, c, s.P)}, c};
        const auto x = invasion_point(snap.field, eps);
        const auto X = second_invasion_point(snap.field, eps);
        if (!x || !X) {
            return;
        }
        const auto speed = instantaneous_speed(snap, *x);
        series.push(t, *x, *X, speed.value_or(std::numeric_limits<double>::quiet_NaN()));
        if (*x - L > grid.x_min) {
            const auto prof = front_profile(snap, *x, L, spec.dx);
            double e = 0.0;
            for (std::size_t k = 0; k < prof.offsets.size(); ++k) {
                e = std::max(e, std::abs(prof.values[k] - h.value(prof.offsets[k])));
            }
            err_t.push_back(t);
            err.push_back(e);
        }
    };
    const auto traj = simulate(u0, spec.T, spec.dt, c, s.P, opt);
    if (series.size() == 0 || err.empty()) {
        throw NumericalFailure("no front was observed during the convergence run");
    }

    std::vector<ClaimReport> out;
    const double final_speed = series.xbar_prime.back();
    const double speed_rel = std::abs(final_speed - c_star) / c_star;
    const auto est = speed_estimates(series, std::min(50.0, spec.T / 4.0));
    out.push_back(make_claim("convergence_speed", spec, final_speed, c_star, 5e-3, 5e-3 - speed_rel,
                             {{"relative_error", speed_rel},
                              {"fit_slope", est.fit_slope + c},
                              {"c_minus", est.c_minus + c},
                              {"c_plus", est.c_plus + c}}));

    const double final_err = err.back();
    out.push_back(make_claim("convergence_profile", spec, final_err, 0.0, 1e-2, 1e-2 - final_err,
                             {{"window", {-L, spec.x_max - series.xbar.back()}}, {"time", err_t.back()}}));

    // Rate fit: from the first sample below 0.1 until the error reaches ten times its
    // late-time floor (median over the last quarter of the run).
    {
        std::vector<double> tail(err.end() - static_cast<std::ptrdiff_t>(std::max<std::size_t>(1, err.size() / 4)),
                                 err.end());
        std::nth_element(tail.begin(), tail.begin() + static_cast<std::ptrdiff_t>(tail.size() / 2), tail.end());
        const double floor = tail[tail.size() / 2];
        std::size_t first = 0;
        while (first < err.size() && !(err[first] < 0.1)) {
            ++first;
        }
        std::size_t last = first;
        while (last < err.size() && err[last] > 10.0 * floor) {
            ++last;
        }
        const std::size_t n = last - first;
        bool monotone = n >= 5;
        double st = 0, sl = 0, stt = 0, stl = 0;
        for (std::size_t k = first; k < last; ++k) {
            if (k > first && !(err[k] < err[k - 1])) {
                monotone = false;
            }
            const double lg = std::log(err[k]);
            st += err_t[k];
            sl += lg;
            stt += err_t[k] * err_t[k];
            stl += err_t[k] * lg;
        }
        const double nn = static_cast<double>(n);
        const double nu = n >= 2 ? -(nn * stl - st * sl) / (nn * stt - st * st) : 0.0;
        json pts = json::array();
        for (std::size_t k = first; k < last; ++k) {
            pts.push_back({err_t[k], err[k]});
        }
        const double fit_start = first < err.size() ? err_t[first] : spec.T;
        const double fit_end = last > first ? err_t[last - 1] : fit_start;
        out.push_back(make_claim("convergence_rate", spec, nu, 0.0, 0.0, monotone ? nu : -1.0,
                                 {{"monotone", monotone},
                                  {"samples", n},
                                  {"fit_window", {fit_start, fit_end}},
                                  {"error_floor", floor},
                                  {"fit_points", pts}}));
    }

    // Front shift: least-squares match of the final profile against h(x - c* T - x0).
    {
        const auto& last_snap = traj.snapshots.back();
        const double T = last_snap.time;
        const double guess = series.xbar.back() + c * T - c_star * T;
        const auto nz = static_cast<std::size_t>(std::llround(2.0 * L / spec.dx));
        auto misfit = [&](double x0) {
            double sum = 0.0;
            for (std::size_t k = 0; k <= nz; ++k) {
                const double z = -L + static_cast<double>(k) * spec.dx;
                const double y = c_star * T + x0 + z - c * T;
                const double d = interpolate_cubic(grid, last_snap.field.values, y) - h.value(z);
                sum += d * d;
            }
            return sum / static_cast<double>(nz + 1);
        };
        const auto [x0, ms] = boost::math::tools::brent_find_minima(misfit, guess - 5.0, guess + 5.0, 40);
        const double rms = std::sqrt(ms);
        out.push_back(make_claim("front_shift", spec, x0, guess, 1e-2, 1e-2 - rms,
                                 {{"rms_misfit", rms}, {"invasion_point_estimate", guess}, {"window", {-L, L}}}));
    }

    json series_json = {{"t", series.times}, {"xbar", series.xbar}, {"Xbar", series.Xbar},
                        {"xbar_prime", series.xbar_prime}};
    json error_json = {{"t", err_t}, {"error", err}};
    const double runtime = seconds_since(start);
    for (auto& r : out) {
        r.runtime = runtime;
        r.details["c_star"] = c_star;
        r.details["epsilon"] = eps;
    }
    out.front().details["series"] = {{"front", series_json}, {"profile_error", error_json}};
    return out;
}

// ---------------------------------------------------------------------------------------------
// Sign dichotomy of the weighted energy

std::vector<ClaimReport> run_energy_dichotomy(const ExperimentSpec& spec)
{
    const auto start = std::chrono::steady_clock::now();
    const Setup s = prepare(spec);
    const double c_star = s.wave.c_star;
    std::vector<ClaimReport> out;

    {
        const double cw = witness_speed(c_star);
        const auto& p = s.normalized.profile;
        const auto base = p.grid();
        const auto E0 = energy_weighted(base, p.h, p.dh, cw, s.P, 0.0);
        const auto [lhs, rhs] = muratov_check(s.P, s.wave, cw);
        const double muratov_rel = std::abs(lhs - rhs) / std::max(std::abs(lhs), std::abs(rhs));
        bool ok = E0.value < 0.0 && muratov_rel < 1e-4;
        double prev_log = -std::numeric_limits<double>::infinity();
        json rows = json::array();
        for (double l : {0.0, 1.0, 10.0, 100.0, 1000.0}) {
            const auto El = energy_weighted(base.shifted(l), p.h, p.dh, cw, s.P, l);
            const double lg = El.log_abs();
            const bool finite = std::isfinite(El.value) && std::isfinite(lg);
            const bool consistent = std::abs(El.value - E0.value) <= 1e-12 * std::abs(E0.value);
            ok = ok && finite && consistent && El.value < 0.0 && lg > prev_log;
            prev_log = lg;
            rows.push_back({{"shift", l}, {"anchored_value", El.value}, {"log_abs_energy", lg}, {"finite", finite}});
        }
        out.push_back(make_claim("energy_witness", spec, E0.value, 0.0, 0.0, ok ? -E0.value : -1.0,
                                 {{"c", cw}, {"muratov_mismatch", muratov_rel}, {"translates", rows}}));
    }

    {
        const double tol = 1e-3;
        const double window = muratov_window(s.P, c_star);
        const auto grid = Grid1D::with_spacing(spec.x_min, spec.x_max, spec.dx);
        const Field u0 = initial_field(spec, s, grid);
        double worst = std::numeric_limits<double>::infinity();
        json runs = json::array();
        for (double c : {c_star, fast_speed(c_star, window)}) {
            double run_min = std::numeric_limits<double>::infinity();
            double t_min = 0.0;
            double max_increase = 0.0;
            std::optional<AnchoredEnergy> prev;
            std::vector<double> ts;
            std::vector<double> es;
            SimulationOptions opt;
            opt.front_level = s.band.epsilon;
            opt.probe_every = steps_per(spec.observe_every, spec.dt);
            opt.probe = [&](double t, std::span<const double> v) {
                const auto x = invasion_point(Field{grid, {v.begin(), v.end()}}, s.band.epsilon);
                if (!x) {
                    return;
                }
                const auto dv = centered_derivative(grid, v);
                const auto E = energy_weighted(grid, v, dv, c, s.P, *x);
                if (E.value < run_min) {
                    run_min = E.value;
                    t_min = t;
                }
                if (prev) {
                    max_increase = std::max(max_increase, E.reanchored(prev->anchor).value - prev->value);
                }
                prev = E;
                ts.push_back(t);
                es.push_back(E.value);
            };
            simulate(u0, spec.T, spec.dt, c, s.P, opt);
            worst = std::min(worst, run_min);
            runs.push_back({{"c", c},
                            {"min_anchored_energy", run_min},
                            {"t_min", t_min},
                            {"max_increase", max_increase},
                            {"series", {{"t", ts}, {"E", es}}}});
        }
        out.push_back(make_claim("energy_nonnegative", spec, worst, 0.0, tol, worst + tol, {{"runs", runs}}));
    }

    const double runtime = seconds_since(start);
    for (auto& r : out) {
        r.runtime = runtime;
        r.details["c_star"] = c_star;
    }
    return out;
}

// ---------------------------------------------------------------------------------------------
// Energy and front inequalities

namespace {

struct FineRecord
{
    std::vector<EnergySample> energy;
    std::vector<DecaySample> decay;
    FrontSeries fronts;
};

// Per-step record of E, D and invasion points in frame c, with full audits every
// `audit_every` steps after the burn-in.
FineRecord record_run(const Setup& s, const Field& u0, double T, double dt, double c, double burn_in,
                      std::size_t audit_every, const DerivedConstants* consts, std::vector<EnergyAudit>* audits,
                      double* poincare2)
{
    const auto& grid = u0.grid;
    const double eps = s.band.epsilon;
    FineRecord rec;
    rec.fronts.frame_speed = c;
    std::size_t k = 0;
    SimulationOptions opt;
    opt.burn_in = burn_in;
    opt.probe_every = 1;
    opt.probe = [&](double t, std::span<const double> v) {
        const std::size_t step = k++;
        Field f{grid, {v.begin(), v.end()}};
        const auto x = invasion_point(f, eps);
        const auto X = second_invasion_point(f, eps);
        if (!x || !X) {
            return;
        }
        rec.fronts.push(t, *x, *X, std::numeric_limits<double>::quiet_NaN());
        auto rhs = discrete_rhs(grid, v, c, s.P);
        const auto dv = centered_derivative(grid, v);
        const auto E = energy_weighted(grid, v, dv, c, s.P, *x);
        const auto D = weighted_integral(grid, square(rhs), c, *x);
        if (t >= burn_in) {
            rec.energy.push_back({t, E, D});
            rec.decay.push_back({t, E, *x});
        }
        if (audits != nullptr && t >= burn_in && step % audit_every == 0) {
            Snapshot snap{t, std::move(f), Field{grid, std::move(rhs)}, c};
            audits->push_back(audit_inequalities(snap, c, *consts, std::make_pair(*x, *X), s.band, s.P));
            const auto d2v = centered_derivative(grid, dv);
            *poincare2 = std::min(*poincare2, poincare_margin(grid, dv, d2v, c, *x, *x));
        }
    };
    simulate(u0, T, dt, c, s.P, opt);
    return rec;
}

}  // namespace

std::vector<ClaimReport> run_inequality_suite(const ExperimentSpec& spec)
{
    const auto start = std::chrono::steady_clock::now();
    const Setup s = prepare(spec);
    const double c_star = s.wave.c_star;
    const double c = resolve_frame_speed(spec, c_star);
    if (!(c > 0.0)) {
        throw std::invalid_argument("the inequality suite needs a positive frame speed");
    }
    const double burn_in = override_or(spec, "burn_in", 1.0);
    const auto grid = Grid1D::with_spacing(spec.x_min, spec.x_max, spec.dx);
    const Field u0 = initial_field(spec, s, grid);

    SimulationOptions pilot_opt;
    pilot_opt.burn_in = burn_in;
    const auto pilot = simulate(u0, spec.T, spec.dt, c, s.P, pilot_opt);
    const double B = override_or(spec, "B", pilot.B_observed);

    DerivedConstants consts = derive_constants(s.P, s.band, B);
    consts.C1 = override_or(spec, "C1", consts.C1);
    consts.kappa = override_or(spec, "kappa", consts.kappa);
    consts.gamma = override_or(spec, "gamma", consts.gamma);
    consts.C2 = override_or(spec, "C2", consts.C1 * consts.B * consts.B + consts.gamma * consts.K);
    consts.T0 = override_or(spec, "T0", consts.T0);
    consts.C0 = override_or(spec, "C0", consts.C0);

    // At least five steps per T0 window.
    const auto n_steps = static_cast<std::size_t>(
        std::max(std::ceil(spec.T / spec.dt - 1e-9), std::ceil(5.0 * spec.T / consts.T0)));
    const double dt = spec.T / static_cast<double>(n_steps);
    const std::size_t audit_every = steps_per(0.01, dt);

    std::vector<EnergyAudit> audits;
    double poincare2 = std::numeric_limits<double>::infinity();
    const auto rec = record_run(s, u0, spec.T, dt, c, burn_in, audit_every, &consts, &audits, &poincare2);

    // A frame slower than c* makes the weighted dissipation grow, which is what the
    // C1 = 0 control needs to detect.
    const double c_slow = witness_speed(c_star);
    const auto slow = record_run(s, u0, spec.T, spec.dt, c_slow, burn_in, 1, nullptr, nullptr, nullptr);

    std::vector<ClaimReport> out;
    const json common = {{"frame_speed", c}, {"dt", dt}, {"steps", n_steps}, {"constants", to_json(consts)},
                         {"B_pilot", pilot.B_observed}, {"burn_in", burn_in}};

    double lower = std::numeric_limits<double>::infinity();
    double dcec = std::numeric_limits<double>::infinity();
    double poincare1 = std::numeric_limits<double>::infinity();
    double t_lower = 0.0;
    double t_dcec = 0.0;
    for (const auto& a : audits) {
        if (a.lower_bound_margin < lower) {
            lower = a.lower_bound_margin;
            t_lower = a.time;
        }
        if (a.dcec_margin < dcec) {
            dcec = a.dcec_margin;
            t_dcec = a.time;
        }
        poincare1 = std::min(poincare1, a.poincare_margin);
    }
    auto with = [&](json extra) {
        json j = common;
        j.update(extra);
        return j;
    };
    out.push_back(make_claim("lower_bound", spec, lower, 0.0, 0.0, lower,
                             with({{"t_worst", t_lower}, {"audits", audits.size()}})));

    const double growth_main = dissipation_growth_margin(rec.energy, consts.C1);
    const double growth_slow = dissipation_growth_margin(slow.energy, consts.C1);
    out.push_back(make_claim("dissipation_growth", spec, std::min(growth_main, growth_slow), 0.0, 0.0,
                             std::min(growth_main, growth_slow),
                             with({{"margin_frame", growth_main}, {"margin_slow_frame", growth_slow},
                                   {"slow_frame_speed", c_slow}})));

    out.push_back(make_claim("dissipation_energy", spec, dcec, 0.0, 0.0, dcec, with({{"t_worst", t_dcec}})));

    const double decay = integrated_decay_margin(rec.decay, consts, c);
    out.push_back(make_claim("integrated_decay", spec, decay, 0.0, 0.0, decay, with({{"samples", rec.decay.size()}})));

    const auto xx = xxcontrol_check(rec.fronts, consts.C0, consts.T0);
    out.push_back(make_claim("front_control", spec, xx.worst_margin, 0.0, 0.0, xx.worst_margin,
                             with({{"t0_worst", xx.t0_worst},
                                   {"t_worst", xx.t_worst},
                                   {"pairs", xx.pairs},
                                   {"min_samples_per_window", xx.min_samples_per_window}})));

    const double poincare = std::min(poincare1, poincare2);
    out.push_back(make_claim("poincare", spec, poincare, 0.0, 0.0, poincare,
                             with({{"first_order", poincare1}, {"second_order", poincare2}})));

    // Negative controls pass when the broken constant produces a violation.
    const double nc_growth = std::min(dissipation_growth_margin(rec.energy, 0.0), dissipation_growth_margin(slow.energy, 0.0));
    out.push_back(make_claim("negative_control_growth", spec, nc_growth, 0.0, 0.0, -nc_growth,
                             with({{"C1", 0.0}, {"note", "passes when the C1 = 0 audit is violated"}})));
    const auto nc_front = xxcontrol_check(rec.fronts, 0.0, 5.0);
    out.push_back(make_claim("negative_control_front", spec, nc_front.worst_margin, 0.0, 0.0, -nc_front.worst_margin,
                             with({{"C0", 0.0}, {"T0", 5.0}, {"note", "passes when the C0 = 0 audit is violated"}})));

    const double runtime = seconds_since(start);
    for (auto& r : out) {
        r.runtime = runtime;
    }
    return out;
}

// ---------------------------------------------------------------------------------------------
// Repair behind the front

std::vector<ClaimReport> run_repair_experiment(const ExperimentSpec& spec)
{
    const auto start = std::chrono::steady_clock::now();
    const Setup s = prepare(spec);
    if (resolve_frame_speed(spec, s.wave.c_star) != 0.0) {
        throw std::invalid_argument("the repair experiment runs in the lab frame");
    }
    const double eps = s.band.epsilon;
    const auto grid = Grid1D::with_spacing(spec.x_min, spec.x_max, spec.dx);
    const Field u0 = initial_field(spec, s, grid);
    auto lag = [](double t) { return std::min(t / 10.0, 50.0); };
    auto lag_rate = [](double t) { return t < 500.0 ? 0.1 : 0.0; };

    std::vector<double> ts, xhat, err, energy, source;
    SimulationOptions opt;
    opt.front_level = eps;
    opt.probe_every = steps_per(spec.observe_every, spec.dt);
    opt.probe = [&](double t, std::span<const double> v) {
        Snapshot snap{t, Field{grid, {v.begin(), v.end()}}, Field{grid, discrete_rhs(grid, v, 0.0, s.P)}, 0.0};
        const auto x = invasion_point(snap.field, eps);
        if (!x) {
            throw NumericalFailure("front lost during the repair run");
        }
        const double xh = *x - lag(t);
        const double speed = instantaneous_speed(snap, *x).value_or(0.0);
        double e = 0.0;
        for (std::size_t i = 0; i < grid.n && grid.x(i) <= xh; ++i) {
            e = std::max(e, std::abs(v[i] - 1.0));
        }
        ts.push_back(t);
        xhat.push_back(xh);
        err.push_back(e);
        energy.push_back(truncated_energy(snap.field, xh, s.P));
        source.push_back(truncated_energy_source(snap.field, snap.time_derivative, xh, speed - lag_rate(t), s.P));
    };
    simulate(u0, spec.T, spec.dt, 0.0, s.P, opt);

    std::vector<ClaimReport> out;
    const double final_err = err.back();
    out.push_back(make_claim("repair", spec, final_err, 0.0, 1e-2, 1e-2 - final_err,
                             {{"cutoff", xhat.back()}, {"initial_error", err.front()}}));

    // E(t_{k+1}) - E(t_k) <= int S dt (trapezoid), with a tolerance tied to the energy scale
    // and the time quadrature.
    double scale = 0.0;
    for (double e : energy) {
        scale = std::max(scale, std::abs(e));
    }
    const double tol = 1e-6 * std::max(1.0, scale);
    double worst_excess = -std::numeric_limits<double>::infinity();
    double t_worst = 0.0;
    for (std::size_t k = 0; k + 1 < ts.size(); ++k) {
        const double allowed = 0.5 * (source[k] + source[k + 1]) * (ts[k + 1] - ts[k]);
        const double excess = energy[k + 1] - energy[k] - allowed;
        if (excess > worst_excess) {
            worst_excess = excess;
            t_worst = ts[k];
        }
    }
    out.push_back(make_claim("truncated_energy", spec, worst_excess, 0.0, tol, tol - worst_excess,
                             {{"t_worst", t_worst}, {"energy_scale", scale}}));
    out.front().details["series"] = {{"t", ts}, {"cutoff", xhat}, {"repair_error", err}, {"truncated_energy", energy},
                                     {"source", source}};
    const double runtime = seconds_since(start);
    for (auto& r : out) {
        r.runtime = runtime;
    }
    return out;
}

// ---------------------------------------------------------------------------------------------
// Randomized invariants

std::vector<ClaimReport> run_invariant_suite(const ExperimentSpec& spec)
{
    const auto start = std::chrono::steady_clock::now();
    const auto cases = static_cast<std::size_t>(override_or(spec, "cases", 1000.0));
    std::mt19937_64 rng(spec.seed);
    auto uniform = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
    auto random_grid = [&] {
        const double dx = uniform(0.01, 0.2);
        const auto n = static_cast<std::size_t>(uniform(200.0, 2000.0));
        const double x_min = uniform(-500.0, 0.0);
        return Grid1D{x_min, x_min + dx * static_cast<double>(n - 1), n};
    };
    // Decreasing front with random position and width plus a bounded ripple behind it.
    auto random_front = [&](const Grid1D& g, double ripple) {
        const double p = g.x_min + uniform(0.3, 0.6) * (g.x_max - g.x_min);
        const double w = uniform(0.5, 5.0) * g.dx() * 10.0;
        const double k = uniform(0.1, 2.0);
        std::vector<double> v(g.n);
        for (std::size_t i = 0; i < g.n; ++i) {
            const double x = g.x(i);
            const double base = 0.5 * (1.0 - std::tanh((x - p) / w));
            v[i] = base + (x < p - 6.0 * w ? ripple * std::sin(k * x) : 0.0);
        }
        return v;
    };

    std::vector<ClaimReport> out;

    {
        std::size_t failures = 0;
        double worst = 0.0;
        for (std::size_t i = 0; i < cases; ++i) {
            const auto g = random_grid();
            const auto v = random_front(g, uniform(0.0, 0.3));
            const double level = uniform(1e-3, 0.2);
            const double a = uniform(-300.0, 300.0);
            const auto x = invasion_point(Field{g, v}, level);
            const auto y = invasion_point(Field{g.shifted(a), v}, level);
            if (!x || !y) {
                ++failures;
                continue;
            }
            const double d = std::abs(*y - (*x + a));
            worst = std::max(worst, d);
            if (!(d <= 1e-9 * (1.0 + std::abs(*x) + std::abs(a)))) {
                ++failures;
            }
        }
        out.push_back(make_claim("translation_equivariance", spec, static_cast<double>(failures), 0.0, 0.0,
                                 failures == 0 && cases >= 1000 ? 0.0 : -static_cast<double>(failures + 1),
                                 {{"cases", cases}, {"worst_deviation", worst}}));
    }

    {
        std::size_t failures = 0;
        double closest = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < cases; ++i) {
            const auto g = random_grid();
            const double eps = uniform(1e-3, 0.1);
            // Ripple amplitude keeps |u| >= 2 eps behind the front.
            const auto v = random_front(g, uniform(0.0, 0.5 - 2.0 * eps));
            const Field f{g, v};
            const auto x = invasion_point(f, eps);
            const auto X = second_invasion_point(f, eps);
            if (!x || !X || !(*X < *x)) {
                ++failures;
            } else {
                closest = std::min(closest, *x - *X);
            }
        }
        out.push_back(make_claim("threshold_ordering", spec, static_cast<double>(failures), 0.0, 0.0,
                                 failures == 0 && cases >= 1000 ? 0.0 : -static_cast<double>(failures + 1),
                                 {{"cases", cases}, {"smallest_gap", closest}}));
    }

    {
        std::size_t failures = 0;
        for (std::size_t i = 0; i < cases; ++i) {
            const double a = uniform(0.05, 0.45);
            const auto P = cubic_potential(a);
            const auto n = static_cast<std::size_t>(uniform(16.0, 400.0));
            const Grid1D g{uniform(-100.0, 0.0), uniform(1.0, 100.0), n};
            ImexStepper stepper(g, uniform(1e-4, 0.1), uniform(-1.0, 1.0), P);
            for (double level : {0.0, 1.0, a}) {
                std::vector<double> v(n, level);
                stepper.advance(v);
                if (!std::all_of(v.begin(), v.end(), [&](double x) { return x == level; })) {
                    ++failures;
                }
            }
        }
        out.push_back(make_claim("equilibria", spec, static_cast<double>(failures), 0.0, 0.0,
                                 failures == 0 && cases >= 1000 ? 0.0 : -static_cast<double>(failures + 1),
                                 {{"cases", cases}, {"states_per_case", 3}}));
    }

    {
        std::size_t failures = 0;
        double worst = 0.0;
        for (std::size_t i = 0; i < cases; ++i) {
            const auto g = random_grid();
            std::vector<double> f(g.n);
            std::vector<double> af(g.n);
            for (std::size_t k = 0; k < g.n; ++k) {
                f[k] = uniform(-1.0, 1.0);
                af[k] = std::abs(f[k]);
            }
            const double c = uniform(0.05, 1.0);
            const double p = uniform(g.x_min, g.x_max);
            const double q = uniform(g.x_min, g.x_max);
            const auto Ip = weighted_integral(g, f, c, p);
            const auto Iq = weighted_integral(g, f, c, q);
            const double scale = weighted_integral(g, af, c, q).value;
            const double rel = std::abs(Ip.reanchored(q).value - Iq.value) / scale;
            worst = std::max(worst, rel);
            if (!(rel <= 1e-12)) {
                ++failures;
            }
        }
        out.push_back(make_claim("reanchoring", spec, static_cast<double>(failures), 0.0, 1e-12,
                                 failures == 0 && cases >= 1000 ? 0.0 : -static_cast<double>(failures + 1),
                                 {{"cases", cases}, {"worst_relative_deviation", worst}}));
    }

    const double runtime = seconds_since(start);
    for (auto& r : out) {
        r.runtime = runtime;
    }
    return out;
}

// ---------------------------------------------------------------------------------------------

std::vector<ClaimReport> run_experiment(const ExperimentSpec& spec)
{
    std::vector<ClaimReport> all;
    switch (spec.kind) {
        case ExperimentKind::wave:
            all = run_wave_experiment(spec);
            break;
        case ExperimentKind::identity:
            all = run_identity_experiment(spec);
            break;
        case ExperimentKind::convergence:
            all = run_convergence_experiment(spec);
            break;
        case ExperimentKind::dichotomy:
            all = run_energy_dichotomy(spec);
            break;
        case ExperimentKind::inequalities:
            all = run_inequality_suite(spec);
            break;
        case ExperimentKind::repair:
            all = run_repair_experiment(spec);
            break;
        case ExperimentKind::invariants:
            all = run_invariant_suite(spec);
            break;
    }
    if (spec.claims.empty()) {
        return all;
    }
    std::vector<ClaimReport> kept;
    for (const auto& id : spec.claims) {
        const auto it = std::find_if(all.begin(), all.end(), [&](const ClaimReport& r) { return r.id == id; });
        if (it == all.end()) {
            throw std::invalid_argument("experiment " + spec.name + " does not produce claim '" + id + "'");
        }
        kept.push_back(*it);
    }
    return kept;
}

std::vector<ExperimentSpec> default_suite(const std::string& family, const std::map<std::string, double>& params)
{
    ExperimentSpec base;
    base.family = family;
    base.params = params;

    std::vector<ExperimentSpec> suite;
    auto add = [&](const std::string& name, ExperimentKind kind, auto&& edit) {
        ExperimentSpec s = base;
        s.name = name;
        s.kind = kind;
        edit(s);
        suite.push_back(std::move(s));
    };
    add("wave", ExperimentKind::wave, [](ExperimentSpec&) {});
    add("identity", ExperimentKind::identity, [](ExperimentSpec& s) {
        s.frame_speed = 0.4;
        s.observe_every = 0.02;
    });
    add("convergence_step", ExperimentKind::convergence, [](ExperimentSpec& s) {
        s.frame = "lab";
        s.x_max = 300.0;
        s.T = 300.0;
    });
    add("convergence_overshoot", ExperimentKind::convergence, [](ExperimentSpec& s) {
        s.frame = "lab";
        s.x_max = 300.0;
        s.T = 300.0;
        s.initial.kind = InitialKind::overshoot_step;
    });
    add("dichotomy", ExperimentKind::dichotomy, [](ExperimentSpec& s) {
        s.T = 100.0;
        s.observe_every = 0.5;
    });
    add("inequalities", ExperimentKind::inequalities, [](ExperimentSpec& s) { s.frame_speed = 0.4; });
    add("repair", ExperimentKind::repair, [](ExperimentSpec& s) {
        s.frame = "lab";
        s.x_min = -250.0;
        s.x_max = 250.0;
        s.T = 400.0;
        s.observe_every = 0.1;
        s.initial.kind = InitialKind::dip_plateau;
    });
    add("invariants", ExperimentKind::invariants, [](ExperimentSpec&) {});
    return suite;
}

std::vector<ExperimentSpec> select_claims(std::vector<ExperimentSpec> suite, const std::vector<std::string>& claims)
{
    if (claims.empty()) {
        return suite;
    }
    const auto& registry = claim_registry();
    for (const auto& id : claims) {
        if (registry.find(id) == registry.end()) {
            throw std::invalid_argument("unknown claim '" + id + "'");
        }
    }
    std::vector<ExperimentSpec> kept;
    for (auto& spec : suite) {
        std::vector<std::string> wanted;
        for (const auto& id : claims) {
            if (registry.at(id) == spec.kind) {
                wanted.push_back(id);
            }
        }
        if (!wanted.empty()) {
            spec.claims = std::move(wanted);
            kept.push_back(std::move(spec));
        }
    }
    return kept;
}

std::vector<ClaimReport> run_suite(const std::vector<ExperimentSpec>& suite, unsigned workers)
{
    std::vector<std::vector<ClaimReport>> results(suite.size());
    std::vector<std::exception_ptr> errors(suite.size());
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i = next++; i < suite.size(); i = next++) {
            try {
                results[i] = run_experiment(suite[i]);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const unsigned n = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(suite.size())));
    std::vector<std::thread> pool;
    for (unsigned i = 1; i < n; ++i) {
        pool.emplace_back(work);
    }
    work();
    for (auto& t : pool) {
        t.join();
    }
    for (const auto& e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }
    std::vector<ClaimReport> merged;
    for (auto& r : results) {
        merged.insert(merged.end(), std::make_move_iterator(r.begin()), std::make_move_iterator(r.end()));
    }
    return merged;
}

std::string format_text(const std::vector<ClaimReport>& reports)
{
    std::ostringstream os;
    os << std::setprecision(6);
    for (const auto& r : reports) {
        os << (r.pass ? "PASS " : "FAIL ") << std::left << std::setw(26) << r.id << std::setw(24) << r.experiment
           << " measured=" << r.measured << " target=" << r.target << " tol=" << r.tolerance << " margin=" << r.margin
           << " (" << std::fixed << std::setprecision(1) << r.runtime << "s)" << std::defaultfloat
           << std::setprecision(6) << std::right << '\n';
    }
    return os.str();
}

std::string format_csv(const std::vector<ClaimReport>& reports)
{
    std::ostringstream os;
    os << std::setprecision(17);
    os << "id,experiment,measured,target,tolerance,margin,pass,runtime_s\n";
    for (const auto& r : reports) {
        os << r.id << ',' << r.experiment << ',' << r.measured << ',' << r.target << ',' << r.tolerance << ','
           << r.margin << ',' << (r.pass ? 1 : 0) << ',' << r.runtime << '\n';
    }
    return os.str();
}

}  // namespace bistable::verify
