#include "eflab/config.hpp"

#include <cctype>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace eflab::config {

namespace {

[[noreturn]] void parse_fail(const std::string& origin, int line,
                             const std::string& what) {
    std::ostringstream os;
    os << "config error";
    if (!origin.empty()) os << " in " << origin;
    os << " at line " << line << ": " << what;
    throw std::invalid_argument(os.str());
}

std::string trim(const std::string& s) {
    size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

std::string strip_comment(const std::string& s) {
    bool in_str = false;
    for (size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '"') in_str = !in_str;
        if (s[i] == '#' && !in_str) return s.substr(0, i);
    }
    return s;
}

Value parse_value(const std::string& text, int line, const std::string& origin) {
    Value out;
    out.line = line;
    const std::string t = trim(text);
    if (t.empty()) parse_fail(origin, line, "empty value");
    if (t.front() == '"') {
        if (t.size() < 2 || t.back() != '"')
            parse_fail(origin, line, "unterminated string");
        out.v = t.substr(1, t.size() - 2);
        return out;
    }
    if (t == "true" || t == "false") {
        out.v = (t == "true");
        return out;
    }
    if (t.front() == '[') {
        if (t.back() != ']') parse_fail(origin, line, "unterminated array");
        std::string inner = t.substr(1, t.size() - 2);
        std::vector<double> nums;
        std::vector<std::string> strs;
        bool is_str = false;
        std::string cur;
        bool in_str = false;
        auto flush = [&]() {
            const std::string item = trim(cur);
            cur.clear();
            if (item.empty()) return;
            if (item.front() == '"') {
                is_str = true;
                strs.push_back(item.substr(1, item.size() - 2));
            } else {
                try {
                    nums.push_back(std::stod(item));
                } catch (...) {
                    parse_fail(origin, line, "bad array element '" + item + "'");
                }
            }
        };
        for (char c : inner) {
            if (c == '"') in_str = !in_str;
            if (c == ',' && !in_str) {
                flush();
                continue;
            }
            cur += c;
        }
        flush();
        if (is_str)
            out.v = strs;
        else
            out.v = nums;
        return out;
    }
    try {
        size_t used = 0;
        const double d = std::stod(t, &used);
        if (used != t.size()) parse_fail(origin, line, "bad numeric value '" + t + "'");
        out.v = d;
        return out;
    } catch (const std::invalid_argument&) {
        parse_fail(origin, line, "unrecognized value '" + t + "'");
    }
}

}  // namespace

Config Config::parse_text(const std::string& text, const std::string& origin) {
    Config cfg;
    cfg.raw_ = text;
    cfg.origin_ = origin;
    std::istringstream is(text);
    std::string rawline;
    std::string section;
    int line = 0;
    while (std::getline(is, rawline)) {
        ++line;
        const std::string s = trim(strip_comment(rawline));
        if (s.empty()) continue;
        if (s.front() == '[') {
            if (s.back() != ']') parse_fail(origin, line, "unterminated section header");
            section = trim(s.substr(1, s.size() - 2));
            if (section.empty()) parse_fail(origin, line, "empty section name");
            continue;
        }
        const size_t eq = s.find('=');
        if (eq == std::string::npos)
            parse_fail(origin, line, "expected 'key = value'");
        const std::string key = trim(s.substr(0, eq));
        if (key.empty()) parse_fail(origin, line, "empty key");
        const std::string path = section.empty() ? key : section + "." + key;
        if (cfg.kv_.count(path)) parse_fail(origin, line, "duplicate key '" + path + "'");
        cfg.kv_[path] = parse_value(s.substr(eq + 1), line, origin);
    }
    return cfg;
}

Config Config::parse_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::invalid_argument("config error: cannot open " + path);
    std::ostringstream os;
    os << f.rdbuf();
    return parse_text(os.str(), path);
}

void Config::missing(const std::string& path) const {
    throw std::invalid_argument("config error: missing required field '" + path + "'" +
                                (origin_.empty() ? "" : " in " + origin_));
}

const Value& Config::at(const std::string& path) const {
    auto it = kv_.find(path);
    if (it == kv_.end()) missing(path);
    return it->second;
}

double Config::num(const std::string& path) const {
    const Value& v = at(path);
    if (auto d = std::get_if<double>(&v.v)) return *d;
    throw std::invalid_argument("config error: field '" + path + "' (line " +
                                std::to_string(v.line) + ") is not a number");
}

double Config::num_or(const std::string& path, double fallback) const {
    return has(path) ? num(path) : fallback;
}

std::string Config::str(const std::string& path) const {
    const Value& v = at(path);
    if (auto s = std::get_if<std::string>(&v.v)) return *s;
    throw std::invalid_argument("config error: field '" + path + "' (line " +
                                std::to_string(v.line) + ") is not a string");
}

std::string Config::str_or(const std::string& path, const std::string& fallback) const {
    return has(path) ? str(path) : fallback;
}

bool Config::flag_or(const std::string& path, bool fallback) const {
    if (!has(path)) return fallback;
    const Value& v = at(path);
    if (auto b = std::get_if<bool>(&v.v)) return *b;
    throw std::invalid_argument("config error: field '" + path + "' (line " +
                                std::to_string(v.line) + ") is not a boolean");
}

std::vector<double> Config::num_list(const std::string& path) const {
    const Value& v = at(path);
    if (auto l = std::get_if<std::vector<double>>(&v.v)) return *l;
    throw std::invalid_argument("config error: field '" + path + "' (line " +
                                std::to_string(v.line) + ") is not a numeric array");
}

std::vector<double> Config::num_list_or(const std::string& path,
                                        const std::vector<double>& fallback) const {
    return has(path) ? num_list(path) : fallback;
}

std::vector<std::string> Config::subsections(const std::string& prefix) const {
    std::set<std::string> names;
    const std::string pre = prefix + ".";
    for (const auto& [k, v] : kv_) {
        if (k.rfind(pre, 0) != 0) continue;
        const std::string rest = k.substr(pre.size());
        const size_t dot = rest.find('.');
        if (dot != std::string::npos) names.insert(rest.substr(0, dot));
    }
    return {names.begin(), names.end()};
}

}  // namespace eflab::config
