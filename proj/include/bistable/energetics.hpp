#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include <json.hpp>

#include "bistable/evolution.hpp"
#include "bistable/field.hpp"
#include "bistable/potential.hpp"

namespace bistable {

/// A weighted integral I = int e^{c y} f(y) dy stored as value = e^{-c anchor} I.
struct AnchoredEnergy
{
    double anchor = 0.0;
    double value = 0.0;
    double c = 0.0;

    /// Same quantity, expressed relative to another anchor.
    [[nodiscard]] AnchoredEnergy reanchored(double new_anchor) const
    {
        return {new_anchor, value * std::exp(c * (anchor - new_anchor)), c};
    }
    /// e^{c anchor} value; may overflow for large anchors.
    [[nodiscard]] double true_value() const { return std::exp(c * anchor) * value; }
    /// log |true value|, finite whenever value != 0.
    [[nodiscard]] double log_abs() const { return c * anchor + std::log(std::abs(value)); }
};

/// Composite trapezoid rule for int e^{c (y - anchor)} f(y) dy over the grid. When
/// `extend_left` is set, f is continued as a constant to -infinity (requires c > 0).
AnchoredEnergy weighted_integral(const Grid1D& grid, std::span<const double> f, double c, double anchor,
                                 bool extend_left = false);

std::vector<double> square(std::span<const double> v);

/// int e^{c y} (v_y^2 / 2 + F(v)), v_y by centered differences.
AnchoredEnergy energy_weighted(const Field& v, double c, const Potential& P, double anchor);
/// Same, with derivative samples supplied by the caller.
AnchoredEnergy energy_weighted(const Grid1D& grid, std::span<const double> v, std::span<const double> dv,
                               double c, const Potential& P, double anchor);

/// int e^{c y} (v_yy + c v_y - F'(v))^2 with the discrete right-hand side.
AnchoredEnergy dissipation_weighted(const Field& v, double c, const Potential& P, double anchor);
/// int e^{c y} v_t^2 from a stored time-derivative field.
AnchoredEnergy dissipation_from_rate(const Field& vt, double c, double anchor);

/// Squared weighted H^1 norm int e^{c y} (v^2 + v_y^2).
AnchoredEnergy h1c_norm_squared(const Field& v, double c, double anchor);

/// (int_{y0}^inf e^{c y} v_y^2) - (c^2/4) int_{y0}^inf e^{c y} v^2 at the given anchor.
double poincare_margin(const Grid1D& grid, std::span<const double> v, std::span<const double> dv, double c,
                       double y0, double anchor);

struct EnergySample
{
    double t;
    AnchoredEnergy E;
    AnchoredEnergy D;
};

struct IdentityResidual
{
    double max_residual = 0.0;  ///< max |dE/dt + D| / max(|D|, floor)
    double t_worst = 0.0;
    std::size_t checked = 0;
};

/// Central differences of E against D over samples with t >= t_min. All samples are
/// reanchored to the anchor of the first sample. The floor is relative to max |D|.
IdentityResidual dissipation_identity_residual(const std::vector<EnergySample>& series, double t_min = 0.0,
                                               double relative_floor = 1e-6);
IdentityResidual dissipation_identity_residual(const Trajectory& traj, double c, double anchor = 0.0,
                                               double t_min = 0.0, double relative_floor = 1e-6);

/// Cutoff weight: 1 for x <= x_hat, e^{x_hat - x} beyond.
double cutoff_weight(double x, double x_hat);

/// int phi (u_x^2 / 2 + F(u) - F(1)) over the line, with the constant far-right state
/// continued analytically beyond the grid.
double truncated_energy(const Field& u, double x_hat, const Potential& P);

/// int_{x_hat}^inf phi (x_hat' (u_x^2 / 2 + F(u) - F(1)) + u_x u_t): the source bounding the
/// growth of the truncated energy when the cutoff moves at speed x_hat'.
double truncated_energy_source(const Field& u, const Field& ut, double x_hat, double x_hat_rate,
                               const Potential& P);

struct EnergyAudit
{
    double time = 0.0;
    AnchoredEnergy E;
    AnchoredEnergy D;
    bool has_front = false;
    double lower_bound_margin = 0.0;  ///< value - (-A/c + kappa eps^2) at the invasion point
    double dcec_margin = 0.0;  ///< (D - gamma E + C2/c e^{c Ybar}) at the invasion point
    double poincare_margin = 0.0;  ///< first-order weighted Poincare inequality beyond the invasion point
    double h1c_norm = 0.0;  ///< at the invasion point
};

nlohmann::json to_json(const EnergyAudit& a);

/// Audits a snapshot taken in the frame of speed c. `fronts` holds the invasion points
/// (ybar, Ybar) in the same frame; without them only E and D are reported.
EnergyAudit audit_inequalities(const Snapshot& snap, double c, const DerivedConstants& consts,
                               std::optional<std::pair<double, double>> fronts, const EpsilonBand& band,
                               const Potential& P);

/// Worst margin of D(t + s) <= e^{C1 s} D(t) over consecutive samples.
double dissipation_growth_margin(const std::vector<EnergySample>& series, double C1);

struct DecaySample
{
    double t;
    AnchoredEnergy E;
    double ybar;
};

/// Worst margin of E(t) <= e^{-gamma (t - t0)} E(t0) + (C2 T0 / c) e^{c (ybar(t0) + C0)} over all
/// sample pairs with t in [t0, t0 + T0]; margins are expressed at anchor ybar(t0).
double integrated_decay_margin(const std::vector<DecaySample>& series, const DerivedConstants& consts, double c);

}  // namespace bistable
