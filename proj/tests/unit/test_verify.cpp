#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "bistable/verify.hpp"

using namespace bistable;
using namespace bistable::verify;

namespace {

const std::vector<ExperimentKind> kAllKinds{ExperimentKind::wave,         ExperimentKind::identity,
                                            ExperimentKind::convergence,  ExperimentKind::dichotomy,
                                            ExperimentKind::inequalities, ExperimentKind::repair,
                                            ExperimentKind::invariants};

ExperimentSpec find_spec(const std::vector<ExperimentSpec>& suite, ExperimentKind kind)
{
    const auto it = std::find_if(suite.begin(), suite.end(), [&](const auto& s) { return s.kind == kind; });
    REQUIRE(it != suite.end());
    return *it;
}

}  // namespace

TEST_CASE("claim registry and experiment kinds agree")
{
    std::set<std::string> listed;
    for (auto kind : kAllKinds) {
        CHECK(parse_experiment_kind(to_string(kind)) == kind);
        const auto ids = claims_of(kind);
        CHECK_FALSE(ids.empty());
        for (const auto& id : ids) {
            CHECK(claim_registry().at(id) == kind);
            CHECK(listed.insert(id).second);
        }
    }
    CHECK(listed.size() == claim_registry().size());
    CHECK_THROWS_AS(parse_experiment_kind("weather"), std::invalid_argument);
}

TEST_CASE("the default suite covers every claim")
{
    const auto suite = default_suite("cubic", {{"a", 0.25}});
    std::set<ExperimentKind> kinds;
    std::set<std::string> names;
    for (const auto& s : suite) {
        kinds.insert(s.kind);
        CHECK(names.insert(s.name).second);
        CHECK(s.family == "cubic");
        CHECK(s.params.at("a") == 0.25);
    }
    CHECK(kinds.size() == kAllKinds.size());
}

TEST_CASE("claim selection")
{
    const auto suite = default_suite("cubic", {{"a", 0.25}});
    CHECK(select_claims(suite, {}).size() == suite.size());
    const auto one = select_claims(suite, {"muratov"});
    REQUIRE(one.size() == 1);
    CHECK(one[0].kind == ExperimentKind::wave);
    CHECK(one[0].claims == std::vector<std::string>{"muratov"});
    const auto mixed = select_claims(suite, {"wave_speed", "repair", "wave_profile"});
    REQUIRE(mixed.size() == 2);
    CHECK(mixed[0].claims == std::vector<std::string>{"wave_speed", "wave_profile"});
    CHECK(mixed[1].kind == ExperimentKind::repair);
    CHECK_THROWS_AS(select_claims(suite, {"wave_speed", "perpetual_motion"}), std::invalid_argument);
}

TEST_CASE("frame resolution")
{
    ExperimentSpec s;
    s.frame = "lab";
    CHECK(resolve_frame_speed(s, 0.35) == 0.0);
    s.frame = "cstar";
    CHECK(resolve_frame_speed(s, 0.35) == 0.35);
    s.frame = "value";
    s.frame_speed = 0.7;
    CHECK(resolve_frame_speed(s, 0.35) == 0.7);
    s.frame = "spinning";
    CHECK_THROWS_AS(resolve_frame_speed(s, 0.35), std::invalid_argument);
}

TEST_CASE("wave experiment on the cubic family")
{
    const auto suite = default_suite("cubic", {{"a", 0.25}});
    const auto reports = run_experiment(find_spec(suite, ExperimentKind::wave));
    REQUIRE(reports.size() == claims_of(ExperimentKind::wave).size());
    for (const auto& r : reports) {
        CAPTURE(r.id);
        CHECK(r.pass);
        CHECK(r.margin >= 0.0);
        CHECK(r.experiment == to_string(ExperimentKind::wave));
    }
    const auto speed = std::find_if(reports.begin(), reports.end(), [](const auto& r) { return r.id == "wave_speed"; });
    REQUIRE(speed != reports.end());
    CHECK(speed->measured == doctest::Approx(0.5 / std::sqrt(2.0)).epsilon(1e-9));
    const auto j = to_json(*speed);
    CHECK(j.at("id") == "wave_speed");
    CHECK(j.at("pass") == true);
}

TEST_CASE("claim filtering inside an experiment")
{
    auto spec = find_spec(default_suite("cubic", {{"a", 0.25}}), ExperimentKind::wave);
    spec.claims = {"decay_exponent"};
    const auto reports = run_experiment(spec);
    REQUIRE(reports.size() == 1);
    CHECK(reports[0].id == "decay_exponent");
}

TEST_CASE("invalid potentials are refused before any numerics")
{
    auto spec = find_spec(default_suite("cubic", {{"a", 0.25}}), ExperimentKind::wave);
    spec.params["a"] = 0.6;
    CHECK_THROWS_AS(run_experiment(spec), InvalidPotential);
}

TEST_CASE("invariant suite")
{
    auto spec = find_spec(default_suite("cubic", {{"a", 0.25}}), ExperimentKind::invariants);
    const auto reports = run_experiment(spec);
    REQUIRE(reports.size() == claims_of(ExperimentKind::invariants).size());
    for (const auto& r : reports) {
        CAPTURE(r.id);
        CHECK(r.pass);
        CHECK(r.details.at("cases") == 1000);
    }
    // Fewer than a thousand cases is not enough evidence, even without failures.
    spec.overrides["cases"] = 50;
    for (const auto& r : run_experiment(spec)) {
        CAPTURE(r.id);
        CHECK_FALSE(r.pass);
        CHECK(r.measured == 0.0);
    }
}

TEST_CASE("suite runner keeps order across workers and formats reports")
{
    auto suite = select_claims(default_suite("cubic", {{"a", 0.25}}), {"wave_speed", "threshold_ordering"});
    for (auto& s : suite) {
        s.overrides["cases"] = 20;
    }
    const auto serial = run_suite(suite, 1);
    const auto parallel = run_suite(suite, 2);
    REQUIRE(serial.size() == 2);
    REQUIRE(parallel.size() == 2);
    for (std::size_t i = 0; i < serial.size(); ++i) {
        CHECK(serial[i].id == parallel[i].id);
        CHECK(serial[i].measured == parallel[i].measured);
    }
    const auto csv = format_csv(serial);
    std::istringstream lines(csv);
    std::string header;
    std::getline(lines, header);
    CHECK(header == "id,experiment,measured,target,tolerance,margin,pass,runtime_s");
    std::string row;
    std::getline(lines, row);
    CHECK(row.rfind("wave_speed,wave,", 0) == 0);
    const auto text = format_text(serial);
    CHECK(text.find("wave_speed") != std::string::npos);
    CHECK(text.find("threshold_ordering") != std::string::npos);
}

TEST_CASE("suite runner propagates failures")
{
    auto suite = select_claims(default_suite("cubic", {{"a", 0.25}}), {"wave_speed"});
    suite[0].params["a"] = 0.7;
    CHECK_THROWS_AS(run_suite(suite, 2), InvalidPotential);
}
