#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "gfruin/innovation.hpp"
#include "gfruin/kernel_coeffs.hpp"
#include "gfruin/simulator.hpp"

namespace gfruin {

/// Parsed value of the configuration language, a strict subset of TOML:
/// numbers, strings, booleans, arrays and inline tables. Numbers keep their
/// source token so integers and doubles both convert exactly.
struct ConfigValue {
    enum class Kind { Number, String, Bool, Array, Table };
    Kind kind = Kind::Number;
    std::string text;
    bool boolean = false;
    std::vector<ConfigValue> array;
    std::vector<std::pair<std::string, ConfigValue>> table;

    double as_double(const std::string& key) const;
    std::uint64_t as_uint(const std::string& key) const;
    const std::string& as_string(const std::string& key) const;
    bool as_bool(const std::string& key) const;
    std::vector<double> as_double_list(const std::string& key) const;
};

/// Ordered key/value pairs per section; "" is the top level.
using ConfigDocument = std::vector<std::pair<std::string, std::vector<std::pair<std::string, ConfigValue>>>>;

/// Throws ConfigError with a line number on malformed input or duplicate keys.
ConfigDocument parse_document(const std::string& text);

struct OutputPaths {
    std::string json;
    std::string csv;
    bool operator==(const OutputPaths&) const = default;
};

struct RunConfig {
    GFunction g;
    InnovationSpec innovation = GaussianSpec{};
    SimConfig sim;
    OutputPaths outputs;

    bool operator==(const RunConfig&) const = default;
};

/// Parse and validate. Unknown sections or keys are rejected.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

/// Canonical text form; parse_config(emit_config(c)) == c.
/// With include_threads = false the threads key is omitted, which is the
/// form hashed into run manifests.
std::string emit_config(const RunConfig& cfg, bool include_threads = true);

/// Shortest decimal form that reads back to the same double.
std::string format_double(double x);

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(const std::string& data);

}  // namespace gfruin
