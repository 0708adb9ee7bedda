#pragma once

#include <utility>
#include <vector>

#include <json.hpp>

#include "bistable/field.hpp"
#include "bistable/potential.hpp"

namespace bistable {

/// A monotone front profile sampled on a uniform grid, with exponential tails
/// beyond the sampled range.
struct Profile
{
    double y_min = 0.0;
    double dy = 0.01;
    std::vector<double> h;
    std::vector<double> dh;  ///< h' at the nodes
    double rate_left = 0.0;  ///< h - 1 ~ e^{rate_left y} as y -> -inf
    double rate_right = 0.0;  ///< h ~ e^{rate_right y} as y -> +inf

    [[nodiscard]] std::size_t size() const { return h.size(); }
    [[nodiscard]] double y(std::size_t i) const { return y_min + static_cast<double>(i) * dy; }
    [[nodiscard]] double y_max() const { return y(h.size() - 1); }
    [[nodiscard]] Grid1D grid() const { return Grid1D{y_min, y_max(), h.size()}; }

    /// Profile value at arbitrary y: cubic Hermite inside, exponential tails outside.
    [[nodiscard]] double value(double y) const;
    [[nodiscard]] double slope(double y) const;
};

struct WaveResult
{
    double c_star = 0.0;
    Profile profile;
    double shift = 0.0;  ///< cumulative translation applied to the raw (midpoint-centered) profile
    double decay_plus = 0.0;  ///< exponent of h at +inf (negative)
    double decay_minus = 0.0;  ///< exponent of h - 1 at -inf (positive)
    double residual = 0.0;  ///< sup |h'' + c h' - F'(h)| on the grid, finite differences
    std::pair<double, double> bracket{0.0, 0.0};  ///< final bisection bracket
    bool polished = false;  ///< speed refined by two-sided matching

    /// Samples h(x - offset) onto `grid`.
    [[nodiscard]] Field sample(const Grid1D& grid, double offset = 0.0) const;
    /// The profile itself as a field on its own grid.
    [[nodiscard]] Field as_field() const;
};

nlohmann::json to_json(const WaveResult& w);

enum class ShootOutcome
{
    crossed_zero_with_negative_slope,
    slope_vanished_above_zero,
    exited_window,
};

const char* to_string(ShootOutcome outcome);

struct ShootResult
{
    ShootOutcome classification = ShootOutcome::exited_window;
    double event_y = 0.0;
    double final_h = 0.0;  ///< h when integration stopped
    double dy = 0.01;  ///< spacing of the recorded trajectory, starting at y = 0
    std::vector<double> h;
    std::vector<double> dh;
};

struct ShootOptions
{
    double start_offset = 1e-8;
    double window = 200.0;
    double tol = 1e-10;
    double dy = 0.01;
    bool record = true;
};

/// Integrates h'' + c h' - F'(h) = 0 from the unstable manifold of (1, 0) and
/// classifies how the trajectory leaves the strip 0 < h < 1.
ShootResult shoot(const Potential& P, double c, const ShootOptions& options = {});

/// (mu_minus, mu_plus): decay exponent of h at +inf and growth exponent of h - 1 at -inf.
std::pair<double, double> decay_rates(const Potential& P, double c);

struct WaveOptions
{
    ShootOptions shoot;
    double tail_tolerance = 1e-10;  ///< profile grid extends until both tails are below this
    bool polish = true;
};

/// Raised when the shooting classification does not bracket a wave speed.
class NoBracket : public NumericalFailure
{
  public:
    using NumericalFailure::NumericalFailure;
};

/// Bisection on the shooting classification to bracket width `tol`, then the
/// profile is assembled at the final speed.
WaveResult find_wave_speed(const Potential& P, double c_lo, double c_hi, double tol,
                           const WaveOptions& options = {});

/// Builds the monotone profile at speed c by integrating from both saddles to the
/// midpoint level 1/2. The result is centered so that h(0) = 1/2.
WaveResult build_profile(const Potential& P, double c, const WaveOptions& options = {});

/// Translates the profile so that h(0) = level.
WaveResult normalize_profile(const WaveResult& w, double level);
WaveResult normalize_profile(const WaveResult& w, const EpsilonBand& band);

/// Location y with h(y) = level (profile is strictly decreasing).
double level_crossing(const Profile& p, double level);

/// Least-squares slope of log h over the nodes with y in [y_from, y_to].
double tail_slope(const Profile& p, double y_from, double y_to);

/// Least-squares slope of log h over trajectory nodes with h in [h_lo, h_hi].
double tail_slope_by_level(const std::vector<double>& h, double dy, double h_lo, double h_hi);

/// Upper end of the speed window in which the weighted wave integrals converge.
double muratov_window(const Potential& P, double c_star);

/// (c E_c[h], (c - c*) int e^{cy} h'^2), both anchored at y = 0 of the profile.
std::pair<double, double> muratov_check(const Potential& P, const WaveResult& w, double c);

}  // namespace bistable
