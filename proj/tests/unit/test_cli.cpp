#include <doctest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name)
{
    const auto dir = fs::temp_directory_path() / ("bistable_cli_test_" + name);
    fs::remove_all(dir);
    return dir;
}

// Runs the CLI with stdout/stderr captured to `log` and returns its exit status.
int run(const std::string& args, const fs::path& log, const std::string& env = "")
{
    const std::string cmd = env + " '" + std::string(BISTABLE_CLI) + "' " + args + " > '" + log.string() + "' 2>&1";
    const int status = std::system(cmd.c_str());
    REQUIRE(WIFEXITED(status));
    return WEXITSTATUS(status);
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("wave command writes the profile and passes the energy identity")
{
    const auto dir = scratch("wave");
    CHECK(run("wave --a 0.25 --check-muratov 0.3,0.45 --out '" + dir.string() + "'", dir.string() + ".log") == 0);
    for (const char* f : {"wave.json", "profile.csv", "config.toml", "manifest.json"}) {
        CHECK_MESSAGE(fs::exists(dir / f), f);
    }
    const auto j = nlohmann::json::parse(slurp(dir / "wave.json"));
    CHECK(j.at("c_star").get<double>() == doctest::Approx(0.5 / std::sqrt(2.0)).epsilon(1e-9));
    CHECK(j.at("muratov").size() == 2);
    std::ifstream csv(dir / "profile.csv");
    std::string header;
    std::getline(csv, header);
    CHECK(header == "y,h,dh");
}

TEST_CASE("invalid parameters exit with a configuration error")
{
    const auto log = fs::temp_directory_path() / "bistable_cli_test_bad.log";
    CHECK(run("wave --a 0.6 --out '" + scratch("bad").string() + "'", log) == 2);
    CHECK(slurp(log).find("configuration error") != std::string::npos);
    CHECK(run("simulate --dx 0.03 --out '" + scratch("bad2").string() + "'", log) == 2);
    CHECK(run("simulate --no-such-flag", log) == 2);
    CHECK(run("verify --claims perpetual_motion --out '" + scratch("bad3").string() + "'", log) == 2);
    CHECK(run("verify --override C1 --out '" + scratch("bad4").string() + "'", log) == 2);
    CHECK(run("wave --out '" + scratch("bad5").string() + "'", log, "BISTABLE_WORKERS=zero") == 2);
}

TEST_CASE("simulate at zero final time")
{
    const auto dir = scratch("sim0");
    CHECK(run("simulate --T 0 --out '" + dir.string() + "'", dir.string() + ".log") == 0);
    for (const char* f : {"front_series.csv", "final_state.csv", "summary.json", "config.toml", "manifest.json"}) {
        CHECK_MESSAGE(fs::exists(dir / f), f);
    }
}

TEST_CASE("config file values sit between the environment and the flags")
{
    const auto dir = scratch("cfg");
    fs::create_directories(dir);
    const auto cfg = dir / "run.toml";
    std::ofstream(cfg) << "[grid]\nx_min = -60\nx_max = 60\ndx = 0.1\n\n[time]\ndt = 0.01\nT = 1\n";
    const auto out = dir / "out";
    CHECK(run("simulate --config '" + cfg.string() + "' --dx 0.05", dir / "log", "BISTABLE_OUT='" + out.string() + "'") ==
          0);
    const auto written = slurp(out / "config.toml");
    CHECK(written.find("dx = 0.05") != std::string::npos);
    CHECK(written.find("x_min = -60") != std::string::npos);
    CHECK(written.find("T = 1") != std::string::npos);
    const auto summary = nlohmann::json::parse(slurp(out / "summary.json"));
    CHECK(summary.contains("final_xbar"));
}

TEST_CASE("a front leaving the domain aborts with status 3")
{
    const auto dir = scratch("abort");
    CHECK(run("simulate --x-min -60 --x-max 60 --dx 0.1 --dt 0.01 --T 200 --out '" + dir.string() + "'",
              dir.string() + ".log") == 3);
    CHECK(slurp(dir.string() + ".log").find("numerical abort") != std::string::npos);
}

TEST_CASE("verify reports and claim listing")
{
    const auto dir = scratch("verify");
    CHECK(run("verify --claims muratov,wave_speed --out '" + dir.string() + "'", dir.string() + ".log") == 0);
    for (const char* f : {"report.json", "report.csv", "report.txt", "config.toml", "manifest.json"}) {
        CHECK_MESSAGE(fs::exists(dir / f), f);
    }
    const auto report = nlohmann::json::parse(slurp(dir / "report.json"));
    CHECK(report.at("claims").size() == 2);
    const auto list = fs::temp_directory_path() / "bistable_cli_test_list.log";
    CHECK(run("verify --list-claims --out '" + scratch("list").string() + "'", list) == 0);
    const auto ids = slurp(list);
    for (const char* id : {"wave_speed", "lyapunov_identity", "front_control", "repair", "reanchoring"}) {
        CHECK(ids.find(id) != std::string::npos);
    }
}

TEST_CASE("removing the growth constant makes the dissipation claim fail")
{
    const auto dir = scratch("negative");
    CHECK(run("verify --claims dissipation_growth --override C1=0 --out '" + dir.string() + "'",
              dir.string() + ".log") == 1);
    CHECK(slurp(dir / "report.txt").find("FAIL") != std::string::npos);
}
