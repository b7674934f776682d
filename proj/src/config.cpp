#include "gfruin/config.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "gfruin/errors.hpp"

namespace gfruin {

namespace {

[[noreturn]] void config_error(const std::string& msg) { throw Error(ErrorKind::ConfigError, msg); }

class Parser {
public:
    explicit Parser(const std::string& text) : s_(text) {}

    ConfigDocument document() {
        ConfigDocument doc;
        doc.emplace_back("", std::vector<std::pair<std::string, ConfigValue>>{});
        std::set<std::string> sections{""};
        while (true) {
            skip_blank_lines();
            if (eof()) break;
            const std::size_t start = pos_;
            if (peek() == '[') {
                ++pos_;
                skip_spaces();
                const std::string name = key();
                skip_spaces();
                expect(']');
                end_of_line();
                if (!sections.insert(name).second) fail_at(start, "duplicate section [" + name + "]");
                doc.emplace_back(name, std::vector<std::pair<std::string, ConfigValue>>{});
                continue;
            }
            auto& entries = doc.back().second;
            const std::string k = key();
            for (const auto& [existing, v] : entries) {
                if (existing == k) fail_at(start, "duplicate key '" + k + "'");
            }
            skip_spaces();
            expect('=');
            skip_spaces();
            ConfigValue v = value();
            end_of_line();
            entries.emplace_back(k, std::move(v));
        }
        return doc;
    }

private:
    bool eof() const { return pos_ >= s_.size(); }
    char peek() const { return eof() ? '\0' : s_[pos_]; }

    [[noreturn]] void fail(const std::string& msg) const { fail_at(pos_, msg); }

    [[noreturn]] void fail_at(std::size_t pos, const std::string& msg) const {
        int line = 1;
        for (std::size_t i = 0; i < pos && i < s_.size(); ++i) line += s_[i] == '\n';
        config_error("line " + std::to_string(line) + ": " + msg);
    }

    void expect(char c) {
        if (peek() != c) fail(std::string("expected '") + c + "'");
        ++pos_;
    }

    void skip_spaces() {
        while (!eof() && (peek() == ' ' || peek() == '\t')) ++pos_;
    }

    void skip_comment() {
        if (peek() == '#') {
            while (!eof() && peek() != '\n') ++pos_;
        }
    }

    void skip_blank_lines() {
        while (!eof()) {
            skip_spaces();
            skip_comment();
            if (peek() == '\n' || peek() == '\r') {
                ++pos_;
            } else {
                break;
            }
        }
    }

    // Whitespace, comments and newlines inside arrays.
    void skip_all() {
        while (!eof()) {
            skip_spaces();
            skip_comment();
            if (peek() == '\n' || peek() == '\r') {
                ++pos_;
            } else {
                break;
            }
        }
    }

    void end_of_line() {
        skip_spaces();
        skip_comment();
        if (eof()) return;
        if (peek() == '\r') ++pos_;
        if (peek() != '\n') fail("unexpected trailing characters");
        ++pos_;
    }

    std::string key() {
        if (peek() == '"') return string();
        const std::size_t start = pos_;
        while (!eof() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_' || peek() == '-')) {
            ++pos_;
        }
        if (pos_ == start) fail("expected a key");
        return s_.substr(start, pos_ - start);
    }

    std::string string() {
        expect('"');
        std::string out;
        while (true) {
            if (eof() || peek() == '\n') fail("unterminated string");
            const char c = s_[pos_++];
            if (c == '"') break;
            if (c == '\\') {
                if (eof()) fail("unterminated escape");
                const char e = s_[pos_++];
                switch (e) {
                    case '"': out += '"'; break;
                    case '\\': out += '\\'; break;
                    case 'n': out += '\n'; break;
                    case 't': out += '\t'; break;
                    default: fail(std::string("unsupported escape \\") + e);
                }
            } else {
                out += c;
            }
        }
        return out;
    }

    ConfigValue value() {
        ConfigValue v;
        const char c = peek();
        if (c == '"') {
            v.kind = ConfigValue::Kind::String;
            v.text = string();
        } else if (c == '[') {
            v.kind = ConfigValue::Kind::Array;
            ++pos_;
            skip_all();
            while (peek() != ']') {
                v.array.push_back(value());
                skip_all();
                if (peek() == ',') {
                    ++pos_;
                    skip_all();
                } else if (peek() != ']') {
                    fail("expected ',' or ']' in array");
                }
            }
            ++pos_;
        } else if (c == '{') {
            v.kind = ConfigValue::Kind::Table;
            ++pos_;
            skip_spaces();
            while (peek() != '}') {
                const std::string k = key();
                for (const auto& [existing, x] : v.table) {
                    if (existing == k) fail("duplicate key '" + k + "' in inline table");
                }
                skip_spaces();
                expect('=');
                skip_spaces();
                v.table.emplace_back(k, value());
                skip_spaces();
                if (peek() == ',') {
                    ++pos_;
                    skip_spaces();
                } else if (peek() != '}') {
                    fail("expected ',' or '}' in inline table");
                }
            }
            ++pos_;
        } else if (s_.compare(pos_, 4, "true") == 0) {
            v.kind = ConfigValue::Kind::Bool;
            v.boolean = true;
            pos_ += 4;
        } else if (s_.compare(pos_, 5, "false") == 0) {
            v.kind = ConfigValue::Kind::Bool;
            pos_ += 5;
        } else {
            v.kind = ConfigValue::Kind::Number;
            const std::size_t start = pos_;
            while (!eof() && (std::isdigit(static_cast<unsigned char>(peek())) || peek() == '.' ||
                              peek() == 'e' || peek() == 'E' || peek() == '+' || peek() == '-' ||
                              peek() == '_')) {
                ++pos_;
            }
            v.text = s_.substr(start, pos_ - start);
            std::erase(v.text, '_');
            if (v.text.empty()) fail("expected a value");
            const char* b = v.text.data();
            const char* e = b + v.text.size();
            if (*b == '+') ++b;
            double d = 0.0;
            const auto [p, ec] = std::from_chars(b, e, d);
            if (ec != std::errc() || p != e) fail("malformed number '" + v.text + "'");
        }
        return v;
    }

    const std::string& s_;
    std::size_t pos_ = 0;
};

const char* kind_name(ConfigValue::Kind k) {
    switch (k) {
        case ConfigValue::Kind::Number: return "number";
        case ConfigValue::Kind::String: return "string";
        case ConfigValue::Kind::Bool: return "boolean";
        case ConfigValue::Kind::Array: return "array";
        case ConfigValue::Kind::Table: return "table";
    }
    return "value";
}

void require_kind(const ConfigValue& v, ConfigValue::Kind k, const std::string& key) {
    if (v.kind != k) {
        config_error("'" + key + "' must be a " + kind_name(k) + ", got a " + kind_name(v.kind));
    }
}

}  // namespace

double ConfigValue::as_double(const std::string& key) const {
    require_kind(*this, Kind::Number, key);
    const char* b = text.data();
    if (*b == '+') ++b;
    double d = 0.0;
    std::from_chars(b, text.data() + text.size(), d);
    if (!std::isfinite(d)) config_error("'" + key + "' must be finite");
    return d;
}

std::uint64_t ConfigValue::as_uint(const std::string& key) const {
    require_kind(*this, Kind::Number, key);
    const char* b = text.data();
    if (*b == '+') ++b;
    std::uint64_t u = 0;
    const auto [p, ec] = std::from_chars(b, text.data() + text.size(), u);
    if (ec != std::errc() || p != text.data() + text.size()) {
        config_error("'" + key + "' must be a nonnegative integer, got '" + text + "'");
    }
    return u;
}

const std::string& ConfigValue::as_string(const std::string& key) const {
    require_kind(*this, Kind::String, key);
    return text;
}

bool ConfigValue::as_bool(const std::string& key) const {
    require_kind(*this, Kind::Bool, key);
    return boolean;
}

std::vector<double> ConfigValue::as_double_list(const std::string& key) const {
    require_kind(*this, Kind::Array, key);
    std::vector<double> out;
    out.reserve(array.size());
    for (const auto& v : array) out.push_back(v.as_double(key + "[]"));
    return out;
}

ConfigDocument parse_document(const std::string& text) { return Parser(text).document(); }

namespace {

InnovationSpec parse_innovation(const ConfigValue& v) {
    require_kind(v, ConfigValue::Kind::Table, "innovation");
    std::string kind;
    for (const auto& [k, x] : v.table) {
        if (k == "kind") kind = x.as_string("innovation.kind");
    }
    if (kind.empty()) config_error("innovation needs a 'kind' (gaussian, two_point or weibull)");
    auto get = [&](const std::string& name, double fallback, std::set<std::string>& seen) {
        seen.insert(name);
        for (const auto& [k, x] : v.table) {
            if (k == name) return x.as_double("innovation." + name);
        }
        return fallback;
    };
    std::set<std::string> seen{"kind"};
    InnovationSpec spec;
    if (kind == "gaussian") {
        GaussianSpec g;
        g.mu = get("mu", g.mu, seen);
        g.sigma = get("sigma", g.sigma, seen);
        spec = g;
    } else if (kind == "two_point") {
        TwoPointSpec t;
        t.p = get("p", t.p, seen);
        t.lo = get("lo", t.lo, seen);
        t.hi = get("hi", t.hi, seen);
        spec = t;
    } else if (kind == "weibull") {
        WeibullTailSpec w;
        w.alpha = get("alpha", w.alpha, seen);
        w.mu = get("mu", w.mu, seen);
        w.scale = get("scale", w.scale, seen);
        spec = w;
    } else {
        config_error("unknown innovation kind '" + kind + "'");
    }
    for (const auto& [k, x] : v.table) {
        if (!seen.count(k)) config_error("unknown key 'innovation." + k + "' for kind " + kind);
    }
    try {
        InnovationModel check(spec);
    } catch (const Error& e) {
        config_error(std::string("invalid innovation: ") + e.what());
    }
    return spec;
}

}  // namespace

RunConfig parse_config(const std::string& text) {
    const auto doc = parse_document(text);
    RunConfig cfg;
    bool have_gamma = false;
    for (const auto& [section, entries] : doc) {
        if (section.empty()) {
            for (const auto& [k, v] : entries) {
                if (k == "gamma") {
                    cfg.g.gamma = v.as_double(k);
                    have_gamma = true;
                } else if (k == "theta_poly") {
                    cfg.g.theta_poly = v.as_double_list(k);
                } else if (k == "phi_poly") {
                    cfg.g.phi_poly = v.as_double_list(k);
                } else if (k == "innovation") {
                    cfg.innovation = parse_innovation(v);
                } else {
                    config_error("unknown top-level key '" + k + "'");
                }
            }
        } else if (section == "sim") {
            for (const auto& [k, v] : entries) {
                const std::string key = "sim." + k;
                if (k == "t_levels") {
                    cfg.sim.t_levels = v.as_double_list(key);
                } else if (k == "replications") {
                    cfg.sim.replications = v.as_uint(key);
                } else if (k == "seed") {
                    cfg.sim.seed = v.as_uint(key);
                } else if (k == "horizon_mult") {
                    cfg.sim.horizon_mult = v.as_double(key);
                } else if (k == "path_length") {
                    cfg.sim.path_length = v.as_uint(key);
                } else if (k == "threads") {
                    cfg.sim.threads = static_cast<unsigned>(v.as_uint(key));
                } else if (k == "estimator") {
                    cfg.sim.estimator = parse_estimator(v.as_string(key));
                } else if (k == "convolution") {
                    cfg.sim.convolution = parse_convolution(v.as_string(key));
                } else {
                    config_error("unknown key '" + key + "'");
                }
            }
        } else if (section == "outputs") {
            for (const auto& [k, v] : entries) {
                if (k == "json") {
                    cfg.outputs.json = v.as_string("outputs.json");
                } else if (k == "csv") {
                    cfg.outputs.csv = v.as_string("outputs.csv");
                } else {
                    config_error("unknown key 'outputs." + k + "'");
                }
            }
        } else {
            config_error("unknown section [" + section + "]");
        }
    }
    if (!have_gamma) config_error("missing required key 'gamma'");
    if (cfg.g.theta_poly.empty() || cfg.g.phi_poly.empty()) {
        config_error("theta_poly and phi_poly must be nonempty");
    }
    if (!(cfg.g.gamma > 0.0)) config_error("gamma must be positive");
    cfg.sim.validate();
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) config_error("cannot read config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string format_double(double x) {
    char buf[64];
    const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, x);
    std::string s(buf, p);
    if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
    return s;
}

namespace {

std::string quote(const std::string& s) {
    std::string out = "\"";
    for (char c : s) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\t': out += "\\t"; break;
            default: out += c;
        }
    }
    return out + "\"";
}

std::string list(const std::vector<double>& v) {
    std::string out = "[";
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ", ";
        out += format_double(v[i]);
    }
    return out + "]";
}

}  // namespace

std::string emit_config(const RunConfig& cfg, bool include_threads) {
    std::ostringstream o;
    o << "gamma = " << format_double(cfg.g.gamma) << '\n';
    o << "theta_poly = " << list(cfg.g.theta_poly) << '\n';
    o << "phi_poly = " << list(cfg.g.phi_poly) << '\n';
    std::visit(
        [&](const auto& s) {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, GaussianSpec>) {
                o << "innovation = { kind = \"gaussian\", mu = " << format_double(s.mu)
                  << ", sigma = " << format_double(s.sigma) << " }\n";
            } else if constexpr (std::is_same_v<T, TwoPointSpec>) {
                o << "innovation = { kind = \"two_point\", p = " << format_double(s.p)
                  << ", lo = " << format_double(s.lo) << ", hi = " << format_double(s.hi) << " }\n";
            } else {
                o << "innovation = { kind = \"weibull\", alpha = " << format_double(s.alpha)
                  << ", mu = " << format_double(s.mu) << ", scale = " << format_double(s.scale)
                  << " }\n";
            }
        },
        cfg.innovation);
    o << "\n[sim]\n";
    o << "t_levels = " << list(cfg.sim.t_levels) << '\n';
    o << "replications = " << cfg.sim.replications << '\n';
    o << "seed = " << cfg.sim.seed << '\n';
    if (cfg.sim.horizon_mult) o << "horizon_mult = " << format_double(*cfg.sim.horizon_mult) << '\n';
    if (cfg.sim.path_length) o << "path_length = " << *cfg.sim.path_length << '\n';
    if (include_threads) o << "threads = " << cfg.sim.threads << '\n';
    o << "estimator = " << quote(to_string(cfg.sim.estimator)) << '\n';
    o << "convolution = " << quote(to_string(cfg.sim.convolution)) << '\n';
    if (!cfg.outputs.json.empty() || !cfg.outputs.csv.empty()) {
        o << "\n[outputs]\n";
        if (!cfg.outputs.json.empty()) o << "json = " << quote(cfg.outputs.json) << '\n';
        if (!cfg.outputs.csv.empty()) o << "csv = " << quote(cfg.outputs.csv) << '\n';
    }
    return o.str();
}

std::uint64_t fnv1a64(const std::string& data) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace gfruin
