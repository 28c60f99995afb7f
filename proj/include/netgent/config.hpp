#pragma once

#include "netgent/errors.hpp"

#include <map>
#include <optional>
#include <string>

namespace netgent::config {

class ConfigError : public Error {
public:
    using Error::Error;
};

// Flat `key = value` file with optional [section] headers that prefix the
// following keys as "section.key". '#' starts a comment. Values are taken
// verbatim after trimming; surrounding double quotes are stripped.
std::map<std::string, std::string> parse_config_text(const std::string& text);
std::map<std::string, std::string> load_config_file(const std::string& path);

// Precedence: explicit flag value > environment variable > config file.
std::optional<std::string> resolve_setting(const std::optional<std::string>& flag_value,
                                           const char* env_name,
                                           const std::map<std::string, std::string>& file_values,
                                           const std::string& file_key);

} // namespace netgent::config
