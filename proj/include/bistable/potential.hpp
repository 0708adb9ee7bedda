#pragma once

#include <cmath>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "bistable/errors.hpp"

namespace bistable {

/// A smooth scalar potential F together with its first two derivatives.
///
/// The reaction-diffusion equation driven by a potential reads
/// u_t = u_xx - F'(u). Instances are immutable values.
struct Potential
{
    std::function<double(double)> F;
    std::function<double(double)> dF;
    std::function<double(double)> d2F;
    std::string name;
    std::map<std::string, double> params;
};

/// Quartic potential with F'(u) = u (u - 1) (u - a), 0 < a < 1/2.
Potential cubic_potential(double a);

/// Potential whose F' = u (u^2 - 1)(u^2 - b^2); two global minima at u = +-1.
/// Used as a test double that violates the uniqueness of the global minimum.
Potential symmetric_double_well(double b);

/// Builds a builtin potential from a family name and its parameters.
Potential make_potential(const std::string& family, const std::map<std::string, double>& params);

struct CriticalPoint
{
    double u;
    double value;  ///< F(u)
    double curvature;  ///< F''(u)
};

/// Outcome of checking the structural assumptions on a potential over a sampled interval.
struct AssumptionReport
{
    bool coercive_ok = false;
    bool min0_ok = false;  ///< F(0) = F'(0) = 0, F''(0) > 0
    bool min1_ok = false;  ///< F(1) < 0, F'(1) = 0, F''(1) > 0
    bool other_ok = false;  ///< no critical value <= 0 besides u = 0 and u = 1
    double A = 0.0;  ///< -F(1)
    double beta = 0.0;  ///< F''(0)
    double d2F_at_1 = 0.0;
    std::vector<CriticalPoint> critical_points;
    std::vector<std::pair<double, double>> negative_critical_values;
    std::pair<double, double> search_interval{0.0, 0.0};
    std::vector<std::string> diagnostics;

    [[nodiscard]] bool all_pass() const { return coercive_ok && min0_ok && min1_ok && other_ok; }
};

nlohmann::json to_json(const AssumptionReport& report);

/// Samples F' on `interval`, brackets every sign change, refines each root by
/// bisection and classifies the critical points.
AssumptionReport validate_assumptions(const Potential& P, std::pair<double, double> interval,
                                      std::size_t n_samples = 20001);

/// Neighbourhood [-2 eps, 2 eps] of the origin on which beta1 <= F'' <= beta2.
struct EpsilonBand
{
    double epsilon;
    double beta1;
    double beta2;
};

/// Largest eps (relative tolerance 1e-6) such that F'' stays in
/// [beta1_frac F''(0), beta2_frac F''(0)] on [-2 eps, 2 eps].
EpsilonBand select_epsilon(const Potential& P, double beta1_frac = 0.5, double beta2_frac = 1.5);

/// Whether F'' stays within the band on `n` uniform samples of [-2 eps, 2 eps].
bool band_holds(const Potential& P, const EpsilonBand& band, std::size_t n);

struct DerivedConstants
{
    double B;  ///< a-priori bound on |u| + |u_x| + |u_xx|
    double C1;  ///< F'' >= -C1/2 on [-B, B]
    double kappa;
    double gamma;
    double K;  ///< B^2/2 + sup F on [-B, B]
    double C2;  ///< C1 B^2 + gamma K
    double KF;  ///< sup |F'| on [-B, B]
    double T0;
    double C0;
};

nlohmann::json to_json(const DerivedConstants& constants);

/// Constants entering the energy/dissipation estimates, with kappa = sqrt(beta1)/2,
/// gamma = 2 beta1^2 / beta2, T0 = eps / (2 sup|F'|) and C0 solving
/// B erfc(C0 / sqrt(4 T0)) = eps.
DerivedConstants derive_constants(const Potential& P, const EpsilonBand& band, double B);

/// Upper end of the admissible kappa window for the energy lower bound at speed c.
inline double kappa_admissible_max(double c, double beta1)
{
    return 0.25 * (c + std::sqrt(c * c + 4.0 * beta1));
}

}  // namespace bistable
