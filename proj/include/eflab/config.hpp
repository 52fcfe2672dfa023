#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

namespace eflab::config {

// Flat typed key/value config with [dotted.section] headers (a TOML subset:
// numbers, strings, booleans, homogeneous arrays, # comments). Keys are
// addressed by their full dotted path.
struct Value {
    std::variant<double, std::string, bool, std::vector<double>,
                 std::vector<std::string>>
        v;
    int line = 0;
};

class Config {
public:
    static Config parse_text(const std::string& text, const std::string& origin = "");
    static Config parse_file(const std::string& path);

    bool has(const std::string& path) const { return kv_.count(path) > 0; }

    double num(const std::string& path) const;
    double num_or(const std::string& path, double fallback) const;
    std::string str(const std::string& path) const;
    std::string str_or(const std::string& path, const std::string& fallback) const;
    bool flag_or(const std::string& path, bool fallback) const;
    std::vector<double> num_list(const std::string& path) const;
    std::vector<double> num_list_or(const std::string& path,
                                    const std::vector<double>& fallback) const;

    // immediate child section names under `prefix.` (e.g. probe blocks)
    std::vector<std::string> subsections(const std::string& prefix) const;

    const std::string& text() const { return raw_; }

private:
    [[noreturn]] void missing(const std::string& path) const;
    const Value& at(const std::string& path) const;

    std::map<std::string, Value> kv_;
    std::string raw_;
    std::string origin_;
};

}  // namespace eflab::config
