#include "fitkd/config.hpp"

#include <cctype>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "fitkd/checkpoint.hpp"

namespace fitkd {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

[[noreturn]] void fail(const std::string& origin, std::size_t line, const std::string& what) {
    throw std::runtime_error("config: " + origin + ":" + std::to_string(line) + ": " + what);
}

[[noreturn]] void fail_key(const std::string& origin, const std::string& key,
                           const std::string& what) {
    throw std::runtime_error("config: " + origin + ": key \"" + key + "\" " + what);
}

}  // namespace

Config Config::parse(const std::string& text, const std::string& origin) {
    Config config;
    config.origin_ = origin;
    std::istringstream stream(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(stream, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const std::string stripped = trim(line);
        if (stripped.empty() || stripped[0] == '#') continue;
        const std::size_t eq = stripped.find('=');
        if (eq == std::string::npos) fail(origin, line_no, "expected key = value");
        const std::string key = trim(stripped.substr(0, eq));
        const std::string value = trim(stripped.substr(eq + 1));
        if (key.empty()) fail(origin, line_no, "empty key");
        if (key.find_first_of(" \t") != std::string::npos) {
            fail(origin, line_no, "key \"" + key + "\" contains whitespace");
        }
        if (config.values_.count(key)) fail(origin, line_no, "duplicate key \"" + key + "\"");
        config.values_.emplace(key, value);
        config.order_.push_back(key);
    }
    return config;
}

Config Config::parse_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("config: cannot open " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse(text, path);
}

std::string Config::get_string(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) fail_key(origin_, key, "is missing");
    return it->second;
}

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
    auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
}

long Config::get_int(const std::string& key) const {
    const std::string raw = get_string(key);
    std::size_t used = 0;
    long value = 0;
    try {
        value = std::stol(raw, &used);
    } catch (const std::exception&) {
        fail_key(origin_, key, "has non-integer value \"" + raw + "\"");
    }
    if (used != raw.size()) fail_key(origin_, key, "has non-integer value \"" + raw + "\"");
    return value;
}

long Config::get_int(const std::string& key, long fallback) const {
    return has(key) ? get_int(key) : fallback;
}

double Config::get_real(const std::string& key) const {
    const std::string raw = get_string(key);
    std::size_t used = 0;
    double value = 0.0;
    try {
        value = std::stod(raw, &used);
    } catch (const std::exception&) {
        fail_key(origin_, key, "has non-numeric value \"" + raw + "\"");
    }
    if (used != raw.size()) fail_key(origin_, key, "has non-numeric value \"" + raw + "\"");
    return value;
}

double Config::get_real(const std::string& key, double fallback) const {
    return has(key) ? get_real(key) : fallback;
}

bool Config::get_bool(const std::string& key) const {
    const std::string raw = get_string(key);
    if (raw == "true") return true;
    if (raw == "false") return false;
    fail_key(origin_, key, "has non-boolean value \"" + raw + "\" (expected true or false)");
}

bool Config::get_bool(const std::string& key, bool fallback) const {
    return has(key) ? get_bool(key) : fallback;
}

void Config::require_known(const std::set<std::string>& known) const {
    for (const std::string& key : order_) {
        if (!known.count(key)) fail_key(origin_, key, "is not a recognized setting");
    }
}

std::string Config::digest() const {
    std::uint64_t hash = 14695981039346656037ULL;
    for (const auto& [key, value] : values_) {  // std::map iterates sorted
        const std::string line = key + "=" + value + "\n";
        hash = fnv1a(line.data(), line.size(), hash);
    }
    return hex64(hash);
}

}  // namespace fitkd
