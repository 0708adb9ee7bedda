#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <random>

#include "bistable/config.hpp"

using namespace bistable;

namespace {

RunConfig random_config(std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<int> small(0, 4);
    auto any = [&] { return std::ldexp(unit(rng) - 0.5, small(rng) * 7 - 10); };
    RunConfig c;
    c.params = {{"a", unit(rng) * 0.5}};
    if (small(rng) == 0) {
        c.params["b"] = any();
    }
    c.beta1_frac = unit(rng);
    c.beta2_frac = 1.0 + unit(rng);
    c.x_min = any();
    c.x_max = c.x_min + 1.0 + unit(rng) * 100.0;
    c.dx = unit(rng) / 7.0;
    c.dt = unit(rng) * 1e-3;
    c.T = any();
    c.frame = std::vector<std::string>{"lab", "cstar", "value"}[static_cast<std::size_t>(small(rng) % 3)];
    c.frame_speed = any();
    c.initial.kind = static_cast<InitialKind>(small(rng));
    c.initial.location = any();
    c.initial.width = unit(rng);
    c.initial.amplitude = any();
    c.initial.seed = static_cast<std::uint64_t>(unit(rng) * 1e15);
    c.initial.dip_from = any();
    c.initial.dip_ramp = unit(rng) * 1e-300;
    c.observe_every = unit(rng);
    c.out_dir = small(rng) == 0 ? "dir with \"quotes\" # and \\ slashes" : "runs/" + std::to_string(rng() % 1000);
    for (int i = small(rng); i > 0; --i) {
        c.claims.push_back("claim_" + std::to_string(i));
        c.muratov_speeds.push_back(unit(rng));
    }
    c.workers = static_cast<unsigned>(1 + small(rng));
    if (small(rng) < 2) {
        c.overrides["C1"] = any();
    }
    return c;
}

}  // namespace

TEST_CASE("defaults survive a round trip")
{
    const RunConfig d;
    CHECK(parse_config(serialize_config(d)) == d);
    CHECK_NOTHROW(validate_config(d));
}

TEST_CASE("randomized configs round trip exactly")
{
    std::mt19937_64 rng(20261015);
    for (int i = 0; i < 500; ++i) {
        const auto c = random_config(rng);
        const auto text = serialize_config(c);
        const auto back = parse_config(text);
        REQUIRE_MESSAGE(back == c, text);
        CHECK(serialize_config(back) == text);
    }
}

TEST_CASE("parsing a hand-written file")
{
    const std::string text = R"(# comment line
[potential]
family = "cubic"
a = 0.3   # trailing comment

[grid]
x_min = -50
x_max = 150
dx = 0.1

[time]
dt = 0.005
T = 20

[frame]
mode = "cstar"

[initial]
kind = "tanh_step"
width = 2.5

[verify]
claims = ["wave_speed", "muratov"]
muratov_speeds = [0.2, 0.4]
workers = 3

[overrides]
C1 = 0
)";
    const auto c = parse_config(text);
    CHECK(c.family == "cubic");
    CHECK(c.params == std::map<std::string, double>{{"a", 0.3}});
    CHECK(c.x_min == -50.0);
    CHECK(c.dx == 0.1);
    CHECK(c.T == 20.0);
    CHECK(c.frame == "cstar");
    CHECK(c.initial.kind == InitialKind::tanh_step);
    CHECK(c.initial.width == 2.5);
    CHECK(c.claims == std::vector<std::string>{"wave_speed", "muratov"});
    CHECK(c.muratov_speeds == std::vector<double>{0.2, 0.4});
    CHECK(c.workers == 3);
    CHECK(c.overrides.at("C1") == 0.0);
    CHECK(c.dt == 0.005);
    CHECK_NOTHROW(validate_config(c));
}

TEST_CASE("keys absent from the file keep the base values")
{
    RunConfig base;
    base.T = 7.0;
    base.out_dir = "elsewhere";
    base.overrides["C0"] = 1.5;
    const auto c = parse_config("[grid]\ndx = 0.025\n", base);
    CHECK(c.T == 7.0);
    CHECK(c.out_dir == "elsewhere");
    CHECK(c.dx == 0.025);
    CHECK(c.overrides.at("C0") == 1.5);
    // Naming a family resets the parameters inherited from the base.
    const auto d = parse_config("[potential]\nfamily = \"cubic\"\n", base);
    CHECK(d.params.empty());
}

TEST_CASE("malformed text is rejected with the line number")
{
    auto line_of = [](const std::string& text) {
        try {
            parse_config_text(text);
        } catch (const ConfigError& e) {
            return std::string(e.what());
        }
        return std::string("accepted");
    };
    CHECK(line_of("[grid]\ndx 0.1\n").find("line 2") != std::string::npos);
    CHECK(line_of("[grid\n").find("line 1") != std::string::npos);
    CHECK(line_of("a = \"open\n").find("unterminated") != std::string::npos);
    CHECK(line_of("a = [1, 2\n").find("unterminated") != std::string::npos);
    CHECK(line_of("a = 1\na = 2\n").find("duplicate") != std::string::npos);
    CHECK(line_of("a = 1x\n").find("number") != std::string::npos);
    CHECK(line_of("a = [\"x\", 1]\n") != "accepted");
    CHECK(line_of("a = \"\\q\"\n").find("escape") != std::string::npos);
    CHECK(line_of("bad key = 1\n").find("invalid key") != std::string::npos);
    CHECK(line_of("a =\n").find("missing") != std::string::npos);
}

TEST_CASE("unknown or mistyped keys are rejected")
{
    CHECK_THROWS_AS(parse_config("[grid]\nspacing = 0.1\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("[mystery]\nx = 1\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("[grid]\ndx = \"fine\"\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("[frame]\nmode = 3\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("[verify]\nclaims = [1, 2]\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("[verify]\nworkers = 2.5\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("[initial]\nkind = \"ramp\"\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("[initial]\nseed = -1\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("[overrides]\nC1 = \"big\"\n"), ConfigError);
    CHECK_THROWS_AS(load_config("/nonexistent/config.toml"), ConfigError);
}

TEST_CASE("validation of numeric fields")
{
    auto invalid = [](auto mutate) {
        RunConfig c;
        mutate(c);
        try {
            validate_config(c);
        } catch (const ConfigError&) {
            return true;
        }
        return false;
    };
    CHECK(invalid([](RunConfig& c) { c.dx = 0.03; }));
    CHECK(invalid([](RunConfig& c) { c.dx = -0.1; }));
    CHECK(invalid([](RunConfig& c) { c.x_max = c.x_min; }));
    CHECK(invalid([](RunConfig& c) { c.T = 0.0105; }));
    CHECK(invalid([](RunConfig& c) { c.dt = 0.0; }));
    CHECK(invalid([](RunConfig& c) { c.beta1_frac = 1.0; }));
    CHECK(invalid([](RunConfig& c) { c.beta2_frac = 1.0; }));
    CHECK(invalid([](RunConfig& c) { c.frame = "rotating"; }));
    CHECK(invalid([](RunConfig& c) { c.observe_every = 0.0; }));
    CHECK(invalid([](RunConfig& c) { c.muratov_speeds = {0.3, -0.1}; }));
    CHECK(invalid([](RunConfig& c) { c.params["a"] = std::nan(""); }));
    CHECK(invalid([](RunConfig& c) { c.out_dir.clear(); }));
    CHECK_FALSE(invalid([](RunConfig& c) { c.T = 0.0; }));
}

TEST_CASE("loading from a file")
{
    const std::string path = "test_config_roundtrip.toml";
    RunConfig c;
    c.T = 12.5;
    c.claims = {"wave_speed"};
    {
        std::ofstream out(path);
        out << serialize_config(c);
    }
    CHECK(load_config(path) == c);
    std::remove(path.c_str());
}
