#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

namespace fitkd {

// Flat "key = value" configuration text: one pair per line, full-line '#'
// comments, blank lines ignored. Keys are single tokens; values keep their
// interior spaces. Duplicate keys are errors (fail fast beats last-wins).
class Config {
public:
    static Config parse(const std::string& text, const std::string& origin = "<config>");
    static Config parse_file(const std::string& path);

    bool has(const std::string& key) const { return values_.count(key) != 0; }
    const std::vector<std::string>& keys() const { return order_; }  // file order
    const std::string& origin() const { return origin_; }

    // Missing keys (no-fallback overloads) and malformed values raise errors
    // naming the origin and key.
    std::string get_string(const std::string& key) const;
    std::string get_string(const std::string& key, const std::string& fallback) const;
    long get_int(const std::string& key) const;
    long get_int(const std::string& key, long fallback) const;
    double get_real(const std::string& key) const;
    double get_real(const std::string& key, double fallback) const;
    bool get_bool(const std::string& key) const;  // exactly "true" or "false"
    bool get_bool(const std::string& key, bool fallback) const;

    // Every present key must appear in the documented key table.
    void require_known(const std::set<std::string>& known) const;

    // FNV-1a over the sorted "key=value\n" lines; stable across reordering
    // and comments.
    std::string digest() const;

private:
    std::string origin_;
    std::map<std::string, std::string> values_;
    std::vector<std::string> order_;
};

}  // namespace fitkd
