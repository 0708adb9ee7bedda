#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "bistable/field.hpp"
#include "bistable/potential.hpp"
#include "bistable/waveprofile.hpp"

namespace bistable {

enum class InitialKind
{
    sharp_step,
    tanh_step,
    exact_wave,
    perturbed_wave,
    overshoot_step,
    dip_plateau,
};

const char* to_string(InitialKind kind);
InitialKind parse_initial_kind(const std::string& name);

struct InitialDataSpec
{
    InitialKind kind = InitialKind::sharp_step;
    double location = 0.0;  ///< step position, or translation of a wave profile
    double width = 1.0;  ///< tanh_step
    double amplitude = 0.0;  ///< perturbed_wave
    double mode = 1.0;  ///< perturbed_wave wavenumber
    std::uint64_t seed = 0;  ///< perturbed_wave phase
    double over = 1.2;  ///< overshoot_step value behind the step
    double under = -0.2;  ///< overshoot_step value ahead of the step
    double dip_value = 0.6;  ///< dip_plateau level
    double dip_from = -150.0;
    double dip_to = -50.0;
    double dip_ramp = 5.0;  ///< transition length at each side of the plateau

    bool operator==(const InitialDataSpec&) const = default;
};

nlohmann::json to_json(const InitialDataSpec& spec);

/// Builds initial data with u = 1 at the left end of the grid and u = 0 at the right end.
/// Wave-based kinds need `wave`; its profile is used after normalization to the given level.
Field make_initial_data(const InitialDataSpec& spec, const Grid1D& grid, const WaveResult* wave = nullptr);

struct Snapshot
{
    double time = 0.0;
    Field field;
    Field time_derivative;  ///< discrete right-hand side, zero at the boundary nodes
    double frame_speed = 0.0;
};

/// Discrete right-hand side v_yy + c v_y - F'(v) with centered differences; zero at the ends.
std::vector<double> discrete_rhs(const Grid1D& grid, std::span<const double> v, double c, const Potential& P);

Snapshot make_snapshot(Field u, double time, double c, const Potential& P);

/// Crank-Nicolson treatment of diffusion and advection with a Heun average of the
/// reaction term. Boundary nodes are held at their current values.
class ImexStepper
{
  public:
    ImexStepper(Grid1D grid, double dt, double c, Potential P);

    /// Advances `v` by one time step in place.
    void advance(std::vector<double>& v);

    [[nodiscard]] const Grid1D& grid() const { return grid_; }
    [[nodiscard]] double dt() const { return dt_; }
    [[nodiscard]] double frame_speed() const { return c_; }
    [[nodiscard]] const Potential& potential() const { return P_; }

  private:
    void solve_delta(std::span<const double> v, std::span<const double> reaction, std::vector<double>& delta);

    Grid1D grid_;
    double dt_;
    double c_;
    Potential P_;
    double lower_;
    double upper_;
    std::vector<double> c_prime_;  ///< Thomas factors
    std::vector<double> inv_denom_;
    std::vector<double> work_rhs_;
    std::vector<double> delta_;
    std::vector<double> react0_;
    std::vector<double> react1_;
    std::vector<double> predicted_;
};

/// One step of the IMEX scheme from a snapshot.
Snapshot step(const Snapshot& s, double dt, double c, const Potential& P);

struct SimulationOptions
{
    double snapshot_interval = 0.0;  ///< 0 keeps only the initial and final snapshots
    std::size_t probe_every = 0;  ///< steps between probe calls, 0 disables probes
    std::function<void(double, std::span<const double>)> probe;
    double B_expected = 2.0;  ///< abort when |u| exceeds 10 B_expected
    double burn_in = 1.0;  ///< the sup-bound monitor starts at this time
    std::size_t monitor_every = 50;  ///< steps between sup-bound samples
    double front_margin = 50.0;  ///< minimum distance of the invasion point from the domain ends
    double front_level = 0.0;  ///< threshold used by the margin monitor; 0 disables it
};

struct Trajectory
{
    std::vector<Snapshot> snapshots;
    double frame_speed = 0.0;
    Potential potential;
    std::optional<EpsilonBand> band;
    double dt = 0.0;
    double B_observed = 0.0;  ///< sup of |u| + |u_x| + |u_xx| after burn-in
    std::size_t steps = 0;
};

/// Integrates from u0 over [0, T]. Throws NumericalAbort on NaN, blow-up, or a front
/// closer than the configured margin to either end of the grid.
Trajectory simulate(const Field& u0, double T, double dt, double c, const Potential& P,
                    const SimulationOptions& options = {});

/// sup over nodes of |u| + |u_x| + |u_xx| with centered differences.
double sup_bound(const Grid1D& grid, std::span<const double> v);

/// Field sampled at y = x - c t from a lab-frame field (cubic interpolation, clamped).
Field to_moving_frame(const Field& lab, double c, double t, const Grid1D& target);

}  // namespace bistable
