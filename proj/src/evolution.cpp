#include "bistable/evolution.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>

#include "bistable/front.hpp"

namespace bistable {

namespace {

constexpr double kTailTolerance = 1e-6;

// Smooth step from 0 (s <= 0) to 1 (s >= 1).
double ramp(double s)
{
    if (s <= 0.0) {
        return 0.0;
    }
    if (s >= 1.0) {
        return 1.0;
    }
    return 0.5 * (1.0 - std::cos(std::numbers::pi * s));
}

std::size_t checked_step_count(double span, double dt, const char* what)
{
    const double k = span / dt;
    const double r = std::round(k);
    if (std::abs(k - r) > 1e-9 * std::max(1.0, r)) {
        std::ostringstream msg;
        msg << what << " (" << span << ") is not an integer multiple of dt (" << dt << ")";
        throw std::invalid_argument(msg.str());
    }
    return static_cast<std::size_t>(r);
}

}  // namespace

const char* to_string(InitialKind kind)
{
    switch (kind) {
        case InitialKind::sharp_step:
            return "sharp_step";
        case InitialKind::tanh_step:
            return "tanh_step";
        case InitialKind::exact_wave:
            return "exact_wave";
        case InitialKind::perturbed_wave:
            return "perturbed_wave";
        case InitialKind::overshoot_step:
            return "overshoot_step";
        case InitialKind::dip_plateau:
            return "dip_plateau";
    }
    return "unknown";
}

InitialKind parse_initial_kind(const std::string& name)
{
    for (auto k : {InitialKind::sharp_step, InitialKind::tanh_step, InitialKind::exact_wave,
                   InitialKind::perturbed_wave, InitialKind::overshoot_step, InitialKind::dip_plateau}) {
        if (name == to_string(k)) {
            return k;
        }
    }
    throw std::invalid_argument("unknown initial data kind '" + name + "'");
}

nlohmann::json to_json(const InitialDataSpec& s)
{
    nlohmann::json j{{"kind", to_string(s.kind)}, {"location", s.location}};
    switch (s.kind) {
        case InitialKind::tanh_step:
            j["width"] = s.width;
            break;
        case InitialKind::perturbed_wave:
            j["amplitude"] = s.amplitude;
            j["mode"] = s.mode;
            j["seed"] = s.seed;
            break;
        case InitialKind::overshoot_step:
            j["over"] = s.over;
            j["under"] = s.under;
            j["width"] = s.width;
            break;
        case InitialKind::dip_plateau:
            j["dip_value"] = s.dip_value;
            j["dip_from"] = s.dip_from;
            j["dip_to"] = s.dip_to;
            j["dip_ramp"] = s.dip_ramp;
            break;
        default:
            break;
    }
    return j;
}

Field make_initial_data(const InitialDataSpec& spec, const Grid1D& grid, const WaveResult* wave)
{
    const bool needs_wave = spec.kind == InitialKind::exact_wave || spec.kind == InitialKind::perturbed_wave;
    if (needs_wave && wave == nullptr) {
        throw std::invalid_argument(std::string(to_string(spec.kind)) + " initial data needs a wave profile");
    }
    const double x0 = spec.location;
    std::vector<double> u(grid.n);

    double phase = 0.0;
    if (spec.kind == InitialKind::perturbed_wave) {
        std::mt19937_64 rng(spec.seed);
        phase = std::uniform_real_distribution<double>(0.0, 2.0 * std::numbers::pi)(rng);
    }

    for (std::size_t i = 0; i < grid.n; ++i) {
        const double x = grid.x(i);
        switch (spec.kind) {
            case InitialKind::sharp_step:
                u[i] = x < x0 ? 1.0 : 0.0;
                break;
            case InitialKind::tanh_step:
                if (!(spec.width > 0.0)) {
                    throw std::invalid_argument("tanh_step width must be positive");
                }
                u[i] = 0.5 * (1.0 - std::tanh((x - x0) / spec.width));
                break;
            case InitialKind::exact_wave:
                u[i] = wave->profile.value(x - x0);
                break;
            case InitialKind::perturbed_wave: {
                const double z = x - x0;
                u[i] = wave->profile.value(z) +
                       spec.amplitude * std::sin(spec.mode * z + phase) * std::exp(-z * z / 50.0);
                break;
            }
            case InitialKind::overshoot_step: {
                // 1 | over | under | 0, each excursion `width` long (at least 10 units).
                const double len = std::max(spec.width, 10.0);
                if (x < x0 - len) {
                    u[i] = 1.0;
                } else if (x < x0) {
                    u[i] = spec.over;
                } else if (x < x0 + len) {
                    u[i] = spec.under;
                } else {
                    u[i] = 0.0;
                }
                break;
            }
            case InitialKind::dip_plateau: {
                if (!(spec.dip_from < spec.dip_to) || !(spec.dip_ramp > 0.0)) {
                    throw std::invalid_argument("dip_plateau needs dip_from < dip_to and a positive ramp");
                }
                const double base = wave != nullptr ? wave->profile.value(x - x0) : 0.5 * (1.0 - std::tanh(x - x0));
                const double bump = ramp((x - spec.dip_from + spec.dip_ramp) / spec.dip_ramp) *
                                    (1.0 - ramp((x - spec.dip_to) / spec.dip_ramp));
                u[i] = base - (base - spec.dip_value) * bump;
                break;
            }
        }
    }
    if (std::abs(u.front() - 1.0) > kTailTolerance || std::abs(u.back()) > kTailTolerance) {
        std::ostringstream msg;
        msg << to_string(spec.kind) << " initial data does not have tails (1, 0) on the grid: u(x_min) = "
            << u.front() << ", u(x_max) = " << u.back();
        throw std::invalid_argument(msg.str());
    }
    return Field{grid, std::move(u)};
}

std::vector<double> discrete_rhs(const Grid1D& grid, std::span<const double> v, double c, const Potential& P)
{
    const std::size_t n = v.size();
    const double dx = grid.dx();
    const double inv_dx2 = 1.0 / (dx * dx);
    const double adv = c / (2.0 * dx);
    std::vector<double> r(n, 0.0);
    for (std::size_t i = 1; i + 1 < n; ++i) {
        r[i] = (v[i + 1] - 2.0 * v[i] + v[i - 1]) * inv_dx2 + adv * (v[i + 1] - v[i - 1]) - P.dF(v[i]);
    }
    return r;
}

Snapshot make_snapshot(Field u, double time, double c, const Potential& P)
{
    Snapshot s;
    s.time = time;
    s.frame_speed = c;
    s.time_derivative = Field{u.grid, discrete_rhs(u.grid, u.values, c, P)};
    s.field = std::move(u);
    return s;
}

ImexStepper::ImexStepper(Grid1D grid, double dt, double c, Potential P)
    : grid_(grid), dt_(dt), c_(c), P_(std::move(P))
{
    if (!(dt > 0.0)) {
        throw std::invalid_argument("time step must be positive");
    }
    const double dx = grid_.dx();
    const double diff = 1.0 / (dx * dx);
    const double adv = c / (2.0 * dx);
    lower_ = -0.5 * dt * (diff - adv);
    upper_ = -0.5 * dt * (diff + adv);
    const double diag = 1.0 + dt * diff;

    const std::size_t m = grid_.n - 2;
    c_prime_.resize(m);
    inv_denom_.resize(m);
    double prev_c = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
        const double denom = diag - (k > 0 ? lower_ * prev_c : 0.0);
        if (!std::isfinite(denom) || std::abs(denom) < 1e-14) {
            throw NumericalAbort("tridiagonal factorization broke down (zero pivot)");
        }
        inv_denom_[k] = 1.0 / denom;
        prev_c = upper_ * inv_denom_[k];
        c_prime_[k] = prev_c;
    }
    work_rhs_.resize(grid_.n);
    delta_.resize(grid_.n);
    react0_.resize(grid_.n);
    react1_.resize(grid_.n);
    predicted_.resize(grid_.n);
}

void ImexStepper::solve_delta(std::span<const double> v, std::span<const double> reaction,
                              std::vector<double>& delta)
{
    const std::size_t n = grid_.n;
    const double dx = grid_.dx();
    const double diff = 1.0 / (dx * dx);
    const double adv = c_ / (2.0 * dx);
    // Forward sweep on the interior unknowns 1..n-2 (boundary increments are zero).
    double prev = 0.0;
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const std::size_t k = i - 1;
        const double Lv = (v[i + 1] - 2.0 * v[i] + v[i - 1]) * diff + adv * (v[i + 1] - v[i - 1]);
        const double r = dt_ * (Lv - reaction[i]);
        prev = (r - (k > 0 ? lower_ * prev : 0.0)) * inv_denom_[k];
        work_rhs_[i] = prev;
    }
    delta[0] = 0.0;
    delta[n - 1] = 0.0;
    double next = 0.0;
    for (std::size_t i = n - 1; i-- > 1;) {
        const std::size_t k = i - 1;
        next = work_rhs_[i] - c_prime_[k] * next;
        delta[i] = next;
    }
}

void ImexStepper::advance(std::vector<double>& v)
{
    const std::size_t n = grid_.n;
    if (v.size() != n) {
        throw std::invalid_argument("field size does not match the stepper grid");
    }
    for (std::size_t i = 0; i < n; ++i) {
        react0_[i] = P_.dF(v[i]);
    }
    solve_delta(v, react0_, delta_);
    for (std::size_t i = 0; i < n; ++i) {
        predicted_[i] = v[i] + delta_[i];
        react1_[i] = 0.5 * (react0_[i] + P_.dF(predicted_[i]));
    }
    solve_delta(v, react1_, delta_);
    bool finite = true;
    for (std::size_t i = 0; i < n; ++i) {
        v[i] += delta_[i];
        finite = finite && std::isfinite(v[i]);
    }
    if (!finite) {
        throw NumericalAbort("non-finite value after time step");
    }
}

Snapshot step(const Snapshot& s, double dt, double c, const Potential& P)
{
    ImexStepper stepper(s.field.grid, dt, c, P);
    std::vector<double> v = s.field.values;
    stepper.advance(v);
    return make_snapshot(Field{s.field.grid, std::move(v)}, s.time + dt, c, P);
}

double sup_bound(const Grid1D& grid, std::span<const double> v)
{
    const auto d1 = centered_derivative(grid, v);
    const auto d2 = second_derivative(grid, v);
    double sup = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        sup = std::max(sup, std::abs(v[i]) + std::abs(d1[i]) + std::abs(d2[i]));
    }
    return sup;
}

Trajectory simulate(const Field& u0, double T, double dt, double c, const Potential& P,
                    const SimulationOptions& options)
{
    if (!(T >= 0.0)) {
        throw std::invalid_argument("final time must be nonnegative");
    }
    if (!u0.all_finite()) {
        throw std::invalid_argument("initial field has non-finite values");
    }
    const std::size_t n_steps = T > 0.0 ? checked_step_count(T, dt, "final time") : 0;
    std::size_t snap_every = n_steps;
    if (options.snapshot_interval > 0.0 && n_steps > 0) {
        snap_every = checked_step_count(options.snapshot_interval, dt, "snapshot interval");
        if (snap_every == 0 || n_steps % snap_every != 0) {
            throw std::invalid_argument("snapshot interval must divide the run length");
        }
    }

    Trajectory traj;
    traj.frame_speed = c;
    traj.potential = P;
    traj.dt = dt;

    const Grid1D& grid = u0.grid;
    std::vector<double> v = u0.values;
    const double blow_up = 10.0 * options.B_expected;

    auto monitor = [&](double t) {
        double vmax = 0.0;
        for (double x : v) {
            vmax = std::max(vmax, std::abs(x));
        }
        if (!(vmax <= blow_up)) {
            std::ostringstream msg;
            msg << "solution blew up at t = " << t << ": sup |u| = " << vmax << " > " << blow_up;
            throw NumericalAbort(msg.str());
        }
        if (t >= options.burn_in) {
            traj.B_observed = std::max(traj.B_observed, sup_bound(grid, v));
        }
        if (options.front_level > 0.0) {
            const Field f{grid, v};
            const auto xbar = invasion_point(f, options.front_level);
            if (xbar && (*xbar - grid.x_min < options.front_margin || grid.x_max - *xbar < options.front_margin)) {
                std::ostringstream msg;
                msg << "front at x = " << *xbar << " left the safe region at t = " << t << " (margin "
                    << options.front_margin << ")";
                throw NumericalAbort(msg.str());
            }
        }
    };

    auto record = [&](double t) { traj.snapshots.push_back(make_snapshot(Field{grid, v}, t, c, P)); };

    monitor(0.0);
    record(0.0);
    if (options.probe && options.probe_every > 0) {
        options.probe(0.0, v);
    }
    if (n_steps == 0) {
        return traj;
    }

    ImexStepper stepper(grid, dt, c, P);
    const std::size_t monitor_every = std::max<std::size_t>(options.monitor_every, 1);
    for (std::size_t k = 1; k <= n_steps; ++k) {
        stepper.advance(v);
        const double t = static_cast<double>(k) * dt;
        const bool snap = k % snap_every == 0;
        if (snap || k % monitor_every == 0) {
            monitor(t);
        }
        if (snap) {
            record(t);
        }
        if (options.probe && options.probe_every > 0 && k % options.probe_every == 0) {
            options.probe(t, v);
        }
    }
    traj.steps = n_steps;
    return traj;
}

Field to_moving_frame(const Field& lab, double c, double t, const Grid1D& target)
{
    std::vector<double> v(target.n);
    for (std::size_t i = 0; i < target.n; ++i) {
        v[i] = interpolate_cubic(lab.grid, lab.values, target.x(i) + c * t);
    }
    return Field{target, std::move(v)};
}

}  // namespace bistable
