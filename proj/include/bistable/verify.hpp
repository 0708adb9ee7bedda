#pragma once

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "bistable/evolution.hpp"
#include "bistable/potential.hpp"

namespace bistable::verify {

/// Outcome of one checkable claim.
struct ClaimReport
{
    std::string id;
    std::string experiment;
    double measured = 0.0;  ///< headline measured quantity
    double target = 0.0;
    double tolerance = 0.0;
    double margin = 0.0;  ///< >= 0 means the claim holds
    bool pass = false;
    double runtime = 0.0;  ///< seconds spent in the experiment that produced the claim
    nlohmann::json details;
};

nlohmann::json to_json(const ClaimReport& r);

enum class ExperimentKind
{
    wave,
    identity,
    convergence,
    dichotomy,
    inequalities,
    repair,
    invariants,
};

const char* to_string(ExperimentKind kind);
ExperimentKind parse_experiment_kind(const std::string& name);

struct ExperimentSpec
{
    std::string name;
    ExperimentKind kind = ExperimentKind::wave;
    std::string family = "cubic";
    std::map<std::string, double> params{{"a", 0.25}};
    double beta1_frac = 0.5;
    double beta2_frac = 1.5;
    InitialDataSpec initial;
    double x_min = -100.0;
    double x_max = 100.0;
    double dx = 0.05;
    double dt = 1e-3;
    double T = 50.0;
    std::string frame = "value";  ///< lab, cstar or value
    double frame_speed = 0.0;  ///< used when frame = value
    double observe_every = 1.0;  ///< snapshot / probe cadence in time units
    std::uint64_t seed = 1;
    std::vector<std::string> claims;  ///< empty means every claim of the experiment kind
    std::map<std::string, double> overrides;  ///< e.g. C1, C0, T0, B
};

nlohmann::json to_json(const ExperimentSpec& spec);

/// Claim identifiers and the experiment kind that produces each.
const std::map<std::string, ExperimentKind>& claim_registry();

/// Claim identifiers produced by an experiment kind, in report order.
std::vector<std::string> claims_of(ExperimentKind kind);

/// Frame speed implied by spec.frame, given the wave speed.
double resolve_frame_speed(const ExperimentSpec& spec, double c_star);

std::vector<ClaimReport> run_wave_experiment(const ExperimentSpec& spec);
std::vector<ClaimReport> run_identity_experiment(const ExperimentSpec& spec);
std::vector<ClaimReport> run_convergence_experiment(const ExperimentSpec& spec);
std::vector<ClaimReport> run_energy_dichotomy(const ExperimentSpec& spec);
std::vector<ClaimReport> run_inequality_suite(const ExperimentSpec& spec);
std::vector<ClaimReport> run_repair_experiment(const ExperimentSpec& spec);
std::vector<ClaimReport> run_invariant_suite(const ExperimentSpec& spec);

/// Dispatches on spec.kind and keeps only the requested claims.
std::vector<ClaimReport> run_experiment(const ExperimentSpec& spec);

/// The standard experiment set for a potential family.
std::vector<ExperimentSpec> default_suite(const std::string& family, const std::map<std::string, double>& params);

/// Restricts a suite to the given claim ids (empty keeps everything). Throws
/// std::invalid_argument for unknown ids.
std::vector<ExperimentSpec> select_claims(std::vector<ExperimentSpec> suite, const std::vector<std::string>& claims);

/// Runs the experiments on up to `workers` threads; reports keep suite order.
std::vector<ClaimReport> run_suite(const std::vector<ExperimentSpec>& suite, unsigned workers);

std::string format_text(const std::vector<ClaimReport>& reports);
std::string format_csv(const std::vector<ClaimReport>& reports);

}  // namespace bistable::verify
