#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "bistable/config.hpp"
#include "bistable/energetics.hpp"
#include "bistable/evolution.hpp"
#include "bistable/front.hpp"
#include "bistable/potential.hpp"
#include "bistable/verify.hpp"
#include "bistable/waveprofile.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace bistable;

namespace {

enum Exit
{
    kOk = 0,
    kClaimFailed = 1,
    kConfigError = 2,
    kNumericalAbort = 3,
};

std::string num(double v)
{
    if (std::isnan(v)) {
        return "nan";
    }
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

/// Collects the files written by a command and emits the manifest.
class Output
{
  public:
    Output(fs::path dir, std::string command) : dir_(std::move(dir)), command_(std::move(command))
    {
        fs::create_directories(dir_);
    }

    std::ofstream open(const std::string& name)
    {
        files_.push_back(name);
        std::ofstream out(dir_ / name);
        if (!out) {
            throw std::runtime_error("cannot write " + (dir_ / name).string());
        }
        return out;
    }

    void write(const std::string& name, const std::string& text) { open(name) << text; }

    void csv(const std::string& name, const std::vector<std::string>& header,
             const std::vector<const std::vector<double>*>& columns)
    {
        auto out = open(name);
        for (std::size_t j = 0; j < header.size(); ++j) {
            out << (j ? "," : "") << header[j];
        }
        out << '\n';
        const std::size_t rows = columns.empty() ? 0 : columns.front()->size();
        for (std::size_t i = 0; i < rows; ++i) {
            for (std::size_t j = 0; j < columns.size(); ++j) {
                out << (j ? "," : "") << num((*columns[j])[i]);
            }
            out << '\n';
        }
    }

    void finish(const RunConfig& cfg)
    {
        write("config.toml", serialize_config(cfg));
        json m = {{"command", command_}, {"files", files_}};
        m["files"].push_back("manifest.json");
        std::ofstream(dir_ / "manifest.json") << m.dump(2) << '\n';
    }

  private:
    fs::path dir_;
    std::string command_;
    std::vector<std::string> files_;
};

/// Flags shared by every subcommand. Values are applied only when given.
struct Flags
{
    std::string config;
    std::string family;
    double a = 0.0;
    std::vector<std::string> params;
    double dx = 0.0;
    double dt = 0.0;
    double T = 0.0;
    double x_min = 0.0;
    double x_max = 0.0;
    std::string frame;
    double frame_speed = 0.0;
    std::string initial;
    double observe = 0.0;
    std::string out;
    unsigned workers = 1;
    std::vector<std::string> claims;
    std::vector<std::string> overrides;
    std::vector<double> muratov;
    bool list_claims = false;

    std::map<std::string, CLI::Option*> given;
};

void add_common(CLI::App& app, Flags& f)
{
    f.given["config"] = app.add_option("--config", f.config, "TOML-style config file");
    f.given["family"] = app.add_option("--family", f.family, "potential family (cubic, double_well)");
    f.given["a"] = app.add_option("--a", f.a, "cubic potential parameter");
    f.given["param"] = app.add_option("--param", f.params, "potential parameter KEY=VALUE")->delimiter(',');
    f.given["out"] = app.add_option("--out", f.out, "output directory");
}

void add_grid(CLI::App& app, Flags& f)
{
    f.given["dx"] = app.add_option("--dx", f.dx, "grid spacing");
    f.given["dt"] = app.add_option("--dt", f.dt, "time step");
    f.given["T"] = app.add_option("--T", f.T, "final time");
    f.given["x_min"] = app.add_option("--x-min", f.x_min, "left end of the domain");
    f.given["x_max"] = app.add_option("--x-max", f.x_max, "right end of the domain");
    f.given["frame"] = app.add_option("--frame", f.frame, "lab, cstar, value, or a numeric frame speed");
    f.given["frame_speed"] = app.add_option("--frame-speed", f.frame_speed, "frame speed for --frame value");
    f.given["initial"] = app.add_option("--initial", f.initial, "initial data kind");
    f.given["observe"] = app.add_option("--observe", f.observe, "observer cadence in time units");
}

bool has(const Flags& f, const std::string& key)
{
    const auto it = f.given.find(key);
    return it != f.given.end() && it->second->count() > 0;
}

std::pair<std::string, double> key_value(const std::string& s)
{
    const auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0) {
        throw ConfigError("expected KEY=VALUE, got '" + s + "'");
    }
    const std::string v = s.substr(eq + 1);
    double x = 0.0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (ec != std::errc() || ptr != v.data() + v.size()) {
        throw ConfigError("value of '" + s.substr(0, eq) + "' is not a number");
    }
    return {s.substr(0, eq), x};
}

// defaults < environment < config file < flags
RunConfig resolve(const Flags& f)
{
    RunConfig cfg;
    if (const char* root = std::getenv("BISTABLE_OUT"); root != nullptr && *root != '\0') {
        cfg.out_dir = root;
    }
    if (const char* w = std::getenv("BISTABLE_WORKERS"); w != nullptr && *w != '\0') {
        unsigned n = 0;
        const auto [ptr, ec] = std::from_chars(w, w + std::strlen(w), n);
        if (ec != std::errc() || *ptr != '\0' || n == 0) {
            throw ConfigError(std::string("BISTABLE_WORKERS must be a positive integer, got '") + w + "'");
        }
        cfg.workers = n;
    }
    if (has(f, "config")) {
        cfg = load_config(f.config, cfg);
    }
    if (has(f, "family") && f.family != cfg.family) {
        cfg.family = f.family;
        cfg.params.clear();
    }
    if (has(f, "a")) {
        cfg.params["a"] = f.a;
    }
    for (const auto& p : f.params) {
        const auto [k, v] = key_value(p);
        cfg.params[k] = v;
    }
    if (has(f, "dx")) cfg.dx = f.dx;
    if (has(f, "dt")) cfg.dt = f.dt;
    if (has(f, "T")) cfg.T = f.T;
    if (has(f, "x_min")) cfg.x_min = f.x_min;
    if (has(f, "x_max")) cfg.x_max = f.x_max;
    if (has(f, "frame")) {
        if (f.frame == "lab" || f.frame == "cstar" || f.frame == "value") {
            cfg.frame = f.frame;
        } else {
            double c = 0.0;
            const auto [ptr, ec] = std::from_chars(f.frame.data(), f.frame.data() + f.frame.size(), c);
            if (ec != std::errc() || ptr != f.frame.data() + f.frame.size()) {
                throw ConfigError("--frame must be lab, cstar, value or a number");
            }
            cfg.frame = "value";
            cfg.frame_speed = c;
        }
    }
    if (has(f, "frame_speed")) {
        cfg.frame = "value";
        cfg.frame_speed = f.frame_speed;
    }
    if (has(f, "initial")) {
        try {
            cfg.initial.kind = parse_initial_kind(f.initial);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(e.what());
        }
    }
    if (has(f, "observe")) cfg.observe_every = f.observe;
    if (has(f, "out")) cfg.out_dir = f.out;
    if (has(f, "workers")) cfg.workers = f.workers;
    if (has(f, "claims")) cfg.claims = f.claims;
    if (has(f, "muratov")) cfg.muratov_speeds = f.muratov;
    for (const auto& o : f.overrides) {
        const auto [k, v] = key_value(o);
        cfg.overrides[k] = v;
    }
    validate_config(cfg);
    return cfg;
}

Potential checked_potential(const RunConfig& cfg)
{
    const Potential P = make_potential(cfg.family, cfg.params);
    const auto report = validate_assumptions(P, {-2.0, 2.0});
    if (!report.all_pass()) {
        std::string why = "potential " + P.name + " violates the structural assumptions";
        for (const auto& d : report.diagnostics) {
            why += "; " + d;
        }
        throw InvalidPotential(why);
    }
    return P;
}

WaveResult compute_wave(const Potential& P)
{
    return find_wave_speed(P, 0.0, 2.0, 1e-10);
}

double frame_of(const RunConfig& cfg, double c_star)
{
    if (cfg.frame == "lab") {
        return 0.0;
    }
    return cfg.frame == "cstar" ? c_star : cfg.frame_speed;
}

int cmd_wave(const RunConfig& cfg)
{
    const Potential P = checked_potential(cfg);
    const auto band = select_epsilon(P, cfg.beta1_frac, cfg.beta2_frac);
    const auto w = compute_wave(P);
    const auto we = normalize_profile(w, band);
    const auto [mu_minus, mu_plus] = decay_rates(P, w.c_star);
    const auto& p = we.profile;
    const double E = energy_weighted(p.grid(), p.h, p.dh, w.c_star, P, 0.0).value;

    std::cout << std::setprecision(10);
    std::cout << "c* = " << w.c_star << '\n'
              << "decay exponent at +inf = " << mu_minus << '\n'
              << "growth exponent at -inf = " << mu_plus << '\n'
              << "E_c*[h] = " << E << '\n'
              << "profile residual = " << w.residual << '\n'
              << "epsilon = " << band.epsilon << '\n';

    json j = to_json(w);
    j["epsilon"] = band.epsilon;
    j["normalization_shift"] = we.shift - w.shift;
    j["energy_at_cstar"] = E;
    json rows = json::array();
    bool ok = true;
    if (!cfg.muratov_speeds.empty()) {
        const double window = muratov_window(P, w.c_star);
        std::cout << "muratov identity (c, c E_c[h], (c - c*) int e^{cy} h'^2, relative mismatch):\n";
        for (double c : cfg.muratov_speeds) {
            if (!(c < window)) {
                throw ConfigError("muratov speed " + num(c) + " is outside the convergence window (0, " +
                                  num(window) + ")");
            }
            const auto [lhs, rhs] = muratov_check(P, w, c);
            const double rel = std::abs(lhs - rhs) / std::max(std::abs(lhs), std::abs(rhs));
            const bool pass = rel < 1e-4;
            ok = ok && pass;
            std::cout << "  " << (pass ? "PASS " : "FAIL ") << c << ' ' << lhs << ' ' << rhs << ' ' << rel << '\n';
            rows.push_back({{"c", c}, {"lhs", lhs}, {"rhs", rhs}, {"relative_mismatch", rel}, {"pass", pass}});
        }
    }
    j["muratov"] = rows;

    Output out(cfg.out_dir, "wave");
    out.write("wave.json", j.dump(2) + "\n");
    std::vector<double> y(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) {
        y[i] = p.y(i);
    }
    out.csv("profile.csv", {"y", "h", "dh"}, {&y, &p.h, &p.dh});
    out.finish(cfg);
    return ok ? kOk : kClaimFailed;
}

int cmd_simulate(const RunConfig& cfg)
{
    const Potential P = checked_potential(cfg);
    const auto band = select_epsilon(P, cfg.beta1_frac, cfg.beta2_frac);
    const auto w = compute_wave(P);
    const auto we = normalize_profile(w, band);
    const double c = frame_of(cfg, w.c_star);
    const auto grid = Grid1D::with_spacing(cfg.x_min, cfg.x_max, cfg.dx);
    const Field u0 = make_initial_data(cfg.initial, grid, &we);

    FrontSeries series;
    series.frame_speed = 0.0;  // stored in lab coordinates
    std::vector<double> at, anchor, Ev, Dv, lower, poinc, gap;
    // Provisional constants; the B-dependent margin is recomputed after the run.
    const auto provisional = derive_constants(P, band, 2.0);
    SimulationOptions opt;
    opt.front_level = band.epsilon;
    opt.probe_every = static_cast<std::size_t>(std::max(1.0, std::round(cfg.observe_every / cfg.dt)));
    opt.probe = [&](double t, std::span<const double> v) {
        Snapshot s{t, Field{grid, {v.begin(), v.end()}}, Field{grid, discrete_rhs(grid, v, c, P)}, c};
        const auto x = invasion_point(s.field, band.epsilon);
        const auto X = second_invasion_point(s.field, band.epsilon);
        if (!x || !X) {
            return;
        }
        series.push(t, *x + c * t, *X + c * t,
                    instantaneous_speed(s, *x).value_or(std::numeric_limits<double>::quiet_NaN()));
        if (c > 0.0) {
            const auto a = audit_inequalities(s, c, provisional, std::make_pair(*x, *X), band, P);
            at.push_back(t);
            anchor.push_back(*x);
            Ev.push_back(a.E.value);
            Dv.push_back(a.D.value);
            lower.push_back(a.lower_bound_margin);
            poinc.push_back(a.poincare_margin);
            gap.push_back(*X - *x);
        }
    };
    const auto traj = simulate(u0, cfg.T, cfg.dt, c, P, opt);
    const auto& last = traj.snapshots.back();

    Output out(cfg.out_dir, "simulate");
    const auto slopes = trailing_slopes(series, std::min(50.0, std::max(cfg.T / 4.0, cfg.observe_every * 3.0)));
    out.csv("front_series.csv", {"t", "xbar", "Xbar", "xbar_prime", "windowed_slope"},
            {&series.times, &series.xbar, &series.Xbar, &series.xbar_prime, &slopes});

    const double B = traj.B_observed > 0.0 ? traj.B_observed : sup_bound(grid, last.field.values);
    const auto consts = derive_constants(P, band, B);
    if (c > 0.0) {
        std::vector<double> dcec(at.size());
        for (std::size_t i = 0; i < at.size(); ++i) {
            dcec[i] = Dv[i] - consts.gamma * Ev[i] + consts.C2 / c * std::exp(c * gap[i]);
        }
        out.csv("audits.csv",
                {"t", "anchor", "E_anchored", "D_anchored", "lower_bound_margin", "dcec_margin", "poincare_margin"},
                {&at, &anchor, &Ev, &Dv, &lower, &dcec, &poinc});
    }

    std::vector<double> xs(grid.n);
    for (std::size_t i = 0; i < grid.n; ++i) {
        xs[i] = grid.x(i) + c * last.time;
    }
    out.csv("final_state.csv", {"x", "u", "u_t"}, {&xs, &last.field.values, &last.time_derivative.values});

    json summary = {{"c_star", w.c_star},
                    {"epsilon", band.epsilon},
                    {"frame_speed", c},
                    {"steps", traj.steps},
                    {"final_time", last.time},
                    {"B_observed", traj.B_observed},
                    {"constants", to_json(consts)},
                    {"initial", to_json(cfg.initial)}};
    if (const auto x = invasion_point(last.field, band.epsilon)) {
        const auto prof = front_profile(last, *x, std::min(20.0, *x - grid.x_min), cfg.dx);
        std::vector<double> diff(prof.offsets.size());
        double err = 0.0;
        for (std::size_t k = 0; k < diff.size(); ++k) {
            diff[k] = prof.values[k] - we.profile.value(prof.offsets[k]);
            err = std::max(err, std::abs(diff[k]));
        }
        out.csv("final_profile.csv", {"z", "u", "u_minus_h"}, {&prof.offsets, &prof.values, &diff});
        summary["final_xbar"] = *x + c * last.time;
        summary["final_speed"] = series.xbar_prime.empty() ? json(nullptr) : json(series.xbar_prime.back());
        summary["profile_error"] = err;
    }
    out.write("summary.json", summary.dump(2) + "\n");
    out.finish(cfg);

    std::cout << std::setprecision(8) << "c* = " << w.c_star << ", frame speed = " << c << ", steps = " << traj.steps
              << '\n';
    if (summary.contains("final_xbar")) {
        std::cout << "final xbar = " << summary["final_xbar"].get<double>() << ", profile error vs wave = "
                  << summary["profile_error"].get<double>() << '\n';
    }
    if (!series.xbar_prime.empty()) {
        std::cout << "final front speed = " << series.xbar_prime.back() << '\n';
    }
    return kOk;
}

// Writes every `series` object found in the report details as CSV files.
void write_series(Output& out, const std::string& stem, const json& node)
{
    if (!node.is_object()) {
        return;
    }
    std::vector<std::string> header;
    std::vector<std::vector<double>> cols;
    for (const auto& [key, value] : node.items()) {
        if (value.is_object()) {
            write_series(out, stem + "_" + key, value);
        } else if (value.is_array() && (value.empty() || value.front().is_number())) {
            header.push_back(key);
            std::vector<double> col;
            for (const auto& x : value) {
                col.push_back(x.is_number() ? x.get<double>() : std::numeric_limits<double>::quiet_NaN());
            }
            cols.push_back(std::move(col));
        }
    }
    if (cols.empty()) {
        return;
    }
    for (const auto& c : cols) {
        if (c.size() != cols.front().size()) {
            return;
        }
    }
    std::vector<const std::vector<double>*> ptrs;
    for (const auto& c : cols) {
        ptrs.push_back(&c);
    }
    out.csv(stem + ".csv", header, ptrs);
}

int cmd_verify(const RunConfig& cfg, bool list_only)
{
    if (list_only) {
        for (const auto& [id, kind] : verify::claim_registry()) {
            std::cout << id << " (" << verify::to_string(kind) << ")\n";
        }
        return kOk;
    }
    auto suite = verify::select_claims(verify::default_suite(cfg.family, cfg.params), cfg.claims);
    for (auto& spec : suite) {
        spec.beta1_frac = cfg.beta1_frac;
        spec.beta2_frac = cfg.beta2_frac;
        for (const auto& [k, v] : cfg.overrides) {
            spec.overrides[k] = v;
        }
    }
    // Fail on a bad potential before any experiment starts.
    checked_potential(cfg);
    const auto reports = verify::run_suite(suite, cfg.workers);

    Output out(cfg.out_dir, "verify");
    json all = json::array();
    for (const auto& r : reports) {
        json j = verify::to_json(r);
        if (j["details"].contains("series")) {
            write_series(out, "series_" + r.experiment + "_" + r.id, j["details"]["series"]);
            j["details"].erase("series");
        }
        all.push_back(j);
    }
    json specs = json::array();
    for (const auto& s : suite) {
        specs.push_back(verify::to_json(s));
    }
    out.write("report.json", json{{"experiments", specs}, {"claims", all}}.dump(2) + "\n");
    out.write("report.csv", verify::format_csv(reports));
    const std::string text = verify::format_text(reports);
    out.write("report.txt", text);
    out.finish(cfg);

    std::cout << text;
    const auto failed = std::count_if(reports.begin(), reports.end(), [](const auto& r) { return !r.pass; });
    std::cout << reports.size() - static_cast<std::size_t>(failed) << "/" << reports.size() << " claims pass\n";
    return failed == 0 ? kOk : kClaimFailed;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Travelling fronts of bistable reaction-diffusion equations"};
    app.require_subcommand(1);

    Flags wf, sf, vf;
    auto* wave = app.add_subcommand("wave", "compute the travelling wave and its speed");
    add_common(*wave, wf);
    wf.given["muratov"] =
        wave->add_option("--check-muratov", wf.muratov, "speeds at which to check the energy identity")->delimiter(',');

    auto* sim = app.add_subcommand("simulate", "integrate the equation and record the front");
    add_common(*sim, sf);
    add_grid(*sim, sf);

    auto* ver = app.add_subcommand("verify", "run the verification experiments");
    add_common(*ver, vf);
    vf.given["claims"] = ver->add_option("--claims", vf.claims, "claim ids to run (default: all)")->delimiter(',');
    vf.given["workers"] = ver->add_option("--workers", vf.workers, "concurrent experiments")->check(CLI::PositiveNumber);
    vf.given["override"] = ver->add_option("--override", vf.overrides, "constant override KEY=VALUE (e.g. C1=0)");
    ver->add_flag("--list-claims", vf.list_claims, "print the registered claim ids");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfigError;
    }

    try {
        if (wave->parsed()) {
            return cmd_wave(resolve(wf));
        }
        if (sim->parsed()) {
            return cmd_simulate(resolve(sf));
        }
        return cmd_verify(resolve(vf), vf.list_claims);
    } catch (const NumericalFailure& e) {
        std::cerr << "numerical abort: " << e.what() << '\n';
        return kNumericalAbort;
    } catch (const TailNotDecayed& e) {
        std::cerr << "numerical abort: " << e.what() << '\n';
        return kNumericalAbort;
    } catch (const std::invalid_argument& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return kConfigError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kNumericalAbort;
    }
}
