#include "bistable/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <utility>

namespace bistable {

namespace {

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

bool valid_name(const std::string& s)
{
    if (s.empty()) {
        return false;
    }
    for (char ch : s) {
        if (!(std::isalnum(static_cast<unsigned char>(ch)) || ch == '_' || ch == '-')) {
            return false;
        }
    }
    return true;
}

[[noreturn]] void fail(std::size_t line, const std::string& what)
{
    throw ConfigError("config line " + std::to_string(line) + ": " + what);
}

std::string strip_comment(const std::string& s)
{
    bool quoted = false;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '\\' && quoted) {
            ++i;
        } else if (s[i] == '"') {
            quoted = !quoted;
        } else if (s[i] == '#' && !quoted) {
            return s.substr(0, i);
        }
    }
    return s;
}

// Parses a quoted string starting at s[pos] == '"'; advances pos past the closing quote.
std::string parse_string(const std::string& s, std::size_t& pos, std::size_t line)
{
    std::string out;
    for (++pos; pos < s.size(); ++pos) {
        const char ch = s[pos];
        if (ch == '\\') {
            if (++pos == s.size()) {
                break;
            }
            const char esc = s[pos];
            if (esc == 'n') {
                out += '\n';
            } else if (esc == 't') {
                out += '\t';
            } else if (esc == '"' || esc == '\\') {
                out += esc;
            } else {
                fail(line, std::string("unknown escape \\") + esc);
            }
        } else if (ch == '"') {
            ++pos;
            return out;
        } else {
            out += ch;
        }
    }
    fail(line, "unterminated string");
}

double parse_number(const std::string& token, std::size_t line)
{
    const std::string t = trim(token);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (t.empty() || ec != std::errc() || ptr != t.data() + t.size()) {
        fail(line, "expected a number, got '" + t + "'");
    }
    return v;
}

ConfigValue parse_value(const std::string& raw, std::size_t line)
{
    const std::string s = trim(raw);
    if (s.empty()) {
        fail(line, "missing value");
    }
    if (s.front() == '"') {
        std::size_t pos = 0;
        std::string v = parse_string(s, pos, line);
        if (!trim(s.substr(pos)).empty()) {
            fail(line, "trailing characters after string");
        }
        return v;
    }
    if (s.front() == '[') {
        if (s.back() != ']') {
            fail(line, "unterminated list");
        }
        const std::string body = trim(s.substr(1, s.size() - 2));
        if (body.empty()) {
            return std::vector<double>{};
        }
        if (body.front() == '"') {
            std::vector<std::string> items;
            std::size_t pos = 0;
            while (true) {
                while (pos < body.size() && (body[pos] == ' ' || body[pos] == '\t')) {
                    ++pos;
                }
                if (pos >= body.size() || body[pos] != '"') {
                    fail(line, "list mixes strings and other values");
                }
                items.push_back(parse_string(body, pos, line));
                while (pos < body.size() && (body[pos] == ' ' || body[pos] == '\t')) {
                    ++pos;
                }
                if (pos == body.size()) {
                    break;
                }
                if (body[pos] != ',') {
                    fail(line, "expected ',' between list items");
                }
                ++pos;
            }
            return items;
        }
        std::vector<double> items;
        std::stringstream ss(body);
        std::string tok;
        while (std::getline(ss, tok, ',')) {
            items.push_back(parse_number(tok, line));
        }
        return items;
    }
    return parse_number(s, line);
}

std::string format_number(double v)
{
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

std::string quote(const std::string& s)
{
    std::string out = "\"";
    for (char ch : s) {
        if (ch == '"' || ch == '\\') {
            out += '\\';
            out += ch;
        } else if (ch == '\n') {
            out += "\\n";
        } else if (ch == '\t') {
            out += "\\t";
        } else {
            out += ch;
        }
    }
    return out + '"';
}

std::string format_value(const ConfigValue& v)
{
    if (const auto* d = std::get_if<double>(&v)) {
        return format_number(*d);
    }
    if (const auto* s = std::get_if<std::string>(&v)) {
        return quote(*s);
    }
    std::string out = "[";
    if (const auto* ds = std::get_if<std::vector<double>>(&v)) {
        for (std::size_t i = 0; i < ds->size(); ++i) {
            out += (i ? ", " : "") + format_number((*ds)[i]);
        }
    } else {
        const auto& ss = std::get<std::vector<std::string>>(v);
        for (std::size_t i = 0; i < ss.size(); ++i) {
            out += (i ? ", " : "") + quote(ss[i]);
        }
    }
    return out + "]";
}

class Reader
{
  public:
    explicit Reader(const ConfigDocument& doc) : doc_(doc) {}

    void number(const std::string& key, double& out)
    {
        if (const auto* v = find(key)) {
            if (const auto* d = std::get_if<double>(v)) {
                out = *d;
            } else {
                throw ConfigError("config key '" + key + "' must be a number");
            }
        }
    }

    void text(const std::string& key, std::string& out)
    {
        if (const auto* v = find(key)) {
            if (const auto* s = std::get_if<std::string>(v)) {
                out = *s;
            } else {
                throw ConfigError("config key '" + key + "' must be a string");
            }
        }
    }

    void numbers(const std::string& key, std::vector<double>& out)
    {
        if (const auto* v = find(key)) {
            if (const auto* d = std::get_if<std::vector<double>>(v)) {
                out = *d;
            } else {
                throw ConfigError("config key '" + key + "' must be a list of numbers");
            }
        }
    }

    void texts(const std::string& key, std::vector<std::string>& out)
    {
        if (const auto* v = find(key)) {
            if (const auto* s = std::get_if<std::vector<std::string>>(v)) {
                out = *s;
            } else if (const auto* d = std::get_if<std::vector<double>>(v); d && d->empty()) {
                out.clear();
            } else {
                throw ConfigError("config key '" + key + "' must be a list of strings");
            }
        }
    }

    /// Numeric keys of a section that were not consumed otherwise.
    std::map<std::string, double> section_numbers(const std::string& section)
    {
        std::map<std::string, double> out;
        const std::string prefix = section + ".";
        for (const auto& [key, value] : doc_) {
            if (key.rfind(prefix, 0) != 0 || used_.count(key)) {
                continue;
            }
            const auto* d = std::get_if<double>(&value);
            if (d == nullptr) {
                throw ConfigError("config key '" + key + "' must be a number");
            }
            out[key.substr(prefix.size())] = *d;
            used_.insert(key);
        }
        return out;
    }

    void reject_unknown() const
    {
        for (const auto& [key, value] : doc_) {
            if (!used_.count(key)) {
                throw ConfigError("unknown config key '" + key + "'");
            }
        }
    }

  private:
    const ConfigValue* find(const std::string& key)
    {
        const auto it = doc_.find(key);
        if (it == doc_.end()) {
            return nullptr;
        }
        used_.insert(key);
        return &it->second;
    }

    const ConfigDocument& doc_;
    std::set<std::string> used_;
};

}  // namespace

ConfigDocument parse_config_text(const std::string& text)
{
    ConfigDocument doc;
    std::istringstream in(text);
    std::string raw;
    std::string section;
    std::size_t line = 0;
    while (std::getline(in, raw)) {
        ++line;
        const std::string s = trim(strip_comment(raw));
        if (s.empty()) {
            continue;
        }
        if (s.front() == '[') {
            if (s.back() != ']') {
                fail(line, "malformed section header");
            }
            section = trim(s.substr(1, s.size() - 2));
            if (!valid_name(section)) {
                fail(line, "invalid section name '" + section + "'");
            }
            continue;
        }
        const auto eq = s.find('=');
        if (eq == std::string::npos) {
            fail(line, "expected 'key = value'");
        }
        const std::string key = trim(s.substr(0, eq));
        if (!valid_name(key)) {
            fail(line, "invalid key '" + key + "'");
        }
        const std::string full = section.empty() ? key : section + "." + key;
        if (!doc.emplace(full, parse_value(s.substr(eq + 1), line)).second) {
            fail(line, "duplicate key '" + full + "'");
        }
    }
    return doc;
}

std::string serialize_config_document(const ConfigDocument& doc)
{
    std::map<std::string, std::vector<std::pair<std::string, const ConfigValue*>>> sections;
    for (const auto& [key, value] : doc) {
        const auto dot = key.find('.');
        if (dot == std::string::npos) {
            sections[""].emplace_back(key, &value);
        } else {
            sections[key.substr(0, dot)].emplace_back(key.substr(dot + 1), &value);
        }
    }
    std::ostringstream os;
    bool first = true;
    for (const auto& [name, entries] : sections) {
        if (!name.empty()) {
            os << (first ? "" : "\n") << '[' << name << "]\n";
        }
        first = false;
        for (const auto& [key, value] : entries) {
            os << key << " = " << format_value(*value) << '\n';
        }
    }
    return os.str();
}

RunConfig config_from_document(const ConfigDocument& doc, RunConfig base)
{
    RunConfig cfg = std::move(base);
    Reader r(doc);
    r.text("potential.family", cfg.family);
    if (doc.count("potential.family")) {
        cfg.params.clear();
    }
    for (const auto& [k, v] : r.section_numbers("potential")) {
        cfg.params[k] = v;
    }
    r.number("band.beta1_frac", cfg.beta1_frac);
    r.number("band.beta2_frac", cfg.beta2_frac);
    r.number("grid.x_min", cfg.x_min);
    r.number("grid.x_max", cfg.x_max);
    r.number("grid.dx", cfg.dx);
    r.number("time.dt", cfg.dt);
    r.number("time.T", cfg.T);
    r.number("time.observe_every", cfg.observe_every);
    r.text("frame.mode", cfg.frame);
    r.number("frame.speed", cfg.frame_speed);

    std::string kind = to_string(cfg.initial.kind);
    r.text("initial.kind", kind);
    try {
        cfg.initial.kind = parse_initial_kind(kind);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    auto& in = cfg.initial;
    r.number("initial.location", in.location);
    r.number("initial.width", in.width);
    r.number("initial.amplitude", in.amplitude);
    r.number("initial.mode", in.mode);
    double seed = static_cast<double>(in.seed);
    r.number("initial.seed", seed);
    if (!(seed >= 0.0 && seed <= 9007199254740992.0 && std::floor(seed) == seed)) {
        throw ConfigError("initial.seed must be a nonnegative integer below 2^53");
    }
    in.seed = static_cast<std::uint64_t>(seed);
    r.number("initial.over", in.over);
    r.number("initial.under", in.under);
    r.number("initial.dip_value", in.dip_value);
    r.number("initial.dip_from", in.dip_from);
    r.number("initial.dip_to", in.dip_to);
    r.number("initial.dip_ramp", in.dip_ramp);

    r.text("output.dir", cfg.out_dir);
    r.texts("verify.claims", cfg.claims);
    r.numbers("verify.muratov_speeds", cfg.muratov_speeds);
    double workers = cfg.workers;
    r.number("verify.workers", workers);
    if (!(workers >= 1.0 && workers <= 1024.0 && std::floor(workers) == workers)) {
        throw ConfigError("verify.workers must be an integer in [1, 1024]");
    }
    cfg.workers = static_cast<unsigned>(workers);
    for (const auto& [k, v] : r.section_numbers("overrides")) {
        cfg.overrides[k] = v;
    }
    r.reject_unknown();
    return cfg;
}

ConfigDocument config_to_document(const RunConfig& cfg)
{
    ConfigDocument doc;
    doc["potential.family"] = cfg.family;
    for (const auto& [k, v] : cfg.params) {
        doc["potential." + k] = v;
    }
    doc["band.beta1_frac"] = cfg.beta1_frac;
    doc["band.beta2_frac"] = cfg.beta2_frac;
    doc["grid.x_min"] = cfg.x_min;
    doc["grid.x_max"] = cfg.x_max;
    doc["grid.dx"] = cfg.dx;
    doc["time.dt"] = cfg.dt;
    doc["time.T"] = cfg.T;
    doc["time.observe_every"] = cfg.observe_every;
    doc["frame.mode"] = cfg.frame;
    doc["frame.speed"] = cfg.frame_speed;
    const auto& in = cfg.initial;
    doc["initial.kind"] = std::string(to_string(in.kind));
    doc["initial.location"] = in.location;
    doc["initial.width"] = in.width;
    doc["initial.amplitude"] = in.amplitude;
    doc["initial.mode"] = in.mode;
    doc["initial.seed"] = static_cast<double>(in.seed);
    doc["initial.over"] = in.over;
    doc["initial.under"] = in.under;
    doc["initial.dip_value"] = in.dip_value;
    doc["initial.dip_from"] = in.dip_from;
    doc["initial.dip_to"] = in.dip_to;
    doc["initial.dip_ramp"] = in.dip_ramp;
    doc["output.dir"] = cfg.out_dir;
    doc["verify.claims"] = cfg.claims;
    doc["verify.muratov_speeds"] = cfg.muratov_speeds;
    doc["verify.workers"] = static_cast<double>(cfg.workers);
    for (const auto& [k, v] : cfg.overrides) {
        doc["overrides." + k] = v;
    }
    return doc;
}

RunConfig parse_config(const std::string& text, RunConfig base)
{
    return config_from_document(parse_config_text(text), std::move(base));
}

std::string serialize_config(const RunConfig& cfg)
{
    return serialize_config_document(config_to_document(cfg));
}

RunConfig load_config(const std::string& path, RunConfig base)
{
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot read config file '" + path + "'");
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), std::move(base));
}

void validate_config(const RunConfig& cfg)
{
    auto require = [](bool ok, const std::string& what) {
        if (!ok) {
            throw ConfigError(what);
        }
    };
    for (const auto& [k, v] : cfg.params) {
        require(std::isfinite(v), "potential parameter '" + k + "' must be finite");
    }
    require(cfg.beta1_frac > 0.0 && cfg.beta1_frac < 1.0, "band.beta1_frac must lie in (0, 1)");
    require(cfg.beta2_frac > 1.0 && std::isfinite(cfg.beta2_frac), "band.beta2_frac must exceed 1");
    require(std::isfinite(cfg.x_min) && std::isfinite(cfg.x_max) && cfg.x_max > cfg.x_min,
            "grid.x_max must exceed grid.x_min");
    require(cfg.dx > 0.0 && cfg.dx < 0.5 * (cfg.x_max - cfg.x_min), "grid.dx must be positive and below half the span");
    const double cells = (cfg.x_max - cfg.x_min) / cfg.dx;
    require(std::abs(cells - std::round(cells)) <= 1e-9 * std::max(1.0, cells),
            "grid span must be an integer multiple of grid.dx");
    require(cfg.dt > 0.0 && std::isfinite(cfg.dt), "time.dt must be positive");
    require(cfg.T >= 0.0 && std::isfinite(cfg.T), "time.T must be nonnegative");
    const double steps = cfg.T / cfg.dt;
    require(std::abs(steps - std::round(steps)) <= 1e-9 * std::max(1.0, steps),
            "time.T must be an integer multiple of time.dt");
    require(cfg.observe_every > 0.0 && std::isfinite(cfg.observe_every), "time.observe_every must be positive");
    require(cfg.frame == "lab" || cfg.frame == "cstar" || cfg.frame == "value", "frame.mode must be lab, cstar or value");
    require(std::isfinite(cfg.frame_speed), "frame.speed must be finite");
    require(cfg.initial.width > 0.0, "initial.width must be positive");
    require(!cfg.out_dir.empty(), "output.dir must not be empty");
    require(cfg.workers >= 1, "verify.workers must be at least 1");
    for (double c : cfg.muratov_speeds) {
        require(c > 0.0 && std::isfinite(c), "verify.muratov_speeds must be positive");
    }
}

}  // namespace bistable
