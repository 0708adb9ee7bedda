#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "bistable/evolution.hpp"

namespace bistable {

/// Malformed or out-of-range configuration.
class ConfigError : public std::invalid_argument
{
  public:
    using std::invalid_argument::invalid_argument;
};

/// A value in a config document: number, string, or a list of either.
using ConfigValue = std::variant<double, std::string, std::vector<double>, std::vector<std::string>>;

/// Flat `section.key -> value` view of a config file.
using ConfigDocument = std::map<std::string, ConfigValue>;

/// Parses `key = value` lines grouped under `[section]` headers. Strings are double
/// quoted, lists use brackets, `#` starts a comment.
ConfigDocument parse_config_text(const std::string& text);
std::string serialize_config_document(const ConfigDocument& doc);

struct RunConfig
{
    std::string family = "cubic";
    std::map<std::string, double> params{{"a", 0.25}};
    double beta1_frac = 0.5;
    double beta2_frac = 1.5;
    double x_min = -100.0;
    double x_max = 100.0;
    double dx = 0.05;
    double dt = 1e-3;
    double T = 50.0;
    std::string frame = "lab";  ///< lab, cstar or value
    double frame_speed = 0.0;
    InitialDataSpec initial;
    double observe_every = 1.0;
    std::string out_dir = "out";
    std::vector<std::string> claims;
    std::vector<double> muratov_speeds;
    unsigned workers = 1;
    std::map<std::string, double> overrides;

    bool operator==(const RunConfig&) const = default;
};

/// Applies the keys present in `doc` on top of `base`; unknown keys are rejected.
RunConfig config_from_document(const ConfigDocument& doc, RunConfig base = {});
ConfigDocument config_to_document(const RunConfig& cfg);

RunConfig parse_config(const std::string& text, RunConfig base = {});
std::string serialize_config(const RunConfig& cfg);
RunConfig load_config(const std::string& path, RunConfig base = {});

/// Checks every numeric field against the preconditions of the modules that consume it.
void validate_config(const RunConfig& cfg);

}  // namespace bistable
