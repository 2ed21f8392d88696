#pragma once

#include "stretchopt/config.hpp"

#include <stdexcept>
#include <string>

namespace stretchopt::io {

/// Malformed JSON; line() is 1-based.
class ConfigParseError : public std::runtime_error {
public:
    ConfigParseError(int line, const std::string& what)
        : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
    int line() const { return line_; }

private:
    int line_;
};

/// Parse a JSON object into a validated RunConfig. Omitted keys keep their
/// defaults; unknown keys and bad values raise ConfigError naming the key.
RunConfig parse_config_string(const std::string& text);
RunConfig parse_config(const std::string& path);

/// Every key with its value, in a fixed order.
std::string config_to_json(const RunConfig& cfg);

}  // namespace stretchopt::io
