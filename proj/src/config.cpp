#include "netgent/config.hpp"

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace netgent::config {
namespace {

std::string trim(const std::string& s) {
    size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

} // namespace

std::map<std::string, std::string> parse_config_text(const std::string& text) {
    std::map<std::string, std::string> values;
    std::istringstream in(text);
    std::string line;
    std::string section;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError("unterminated section header (line " +
                                  std::to_string(line_no) + ")");
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("expected key = value (line " + std::to_string(line_no) + ")");
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key.empty())
            throw ConfigError("empty key (line " + std::to_string(line_no) + ")");
        if (value.size() >= 2 && value.front() == '"' && value.back() == '"')
            value = value.substr(1, value.size() - 2);
        values[section.empty() ? key : section + "." + key] = value;
    }
    return values;
}

std::map<std::string, std::string> load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str());
}

std::optional<std::string> resolve_setting(const std::optional<std::string>& flag_value,
                                           const char* env_name,
                                           const std::map<std::string, std::string>& file_values,
                                           const std::string& file_key) {
    if (flag_value && !flag_value->empty()) return flag_value;
    if (env_name) {
        const char* env = std::getenv(env_name);
        if (env && *env) return std::string(env);
    }
    auto it = file_values.find(file_key);
    if (it != file_values.end()) return it->second;
    return std::nullopt;
}

} // namespace netgent::config
