#include "exakit/kvconfig.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace exakit {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

// Thousands separators may be written as underscores: 28_773_888.
std::string strip_separators(const std::string& v) {
    std::string digits;
    for (char c : v)
        if (c != '_') digits.push_back(c);
    return digits;
}

std::int64_t to_int(const std::string& key, const std::string& v) {
    const std::string digits = strip_separators(v);
    std::int64_t out = 0;
    const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), out);
    if (ec != std::errc{} || ptr != digits.data() + digits.size() || digits.empty()) {
        throw ConfigError("config key '" + key + "': expected an integer, got '" + v + "'");
    }
    return out;
}

double to_double(const std::string& key, const std::string& v) {
    const std::string digits = strip_separators(v);
    std::size_t used = 0;
    double out = 0.0;
    try {
        out = std::stod(digits, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != digits.size()) {
        throw ConfigError("config key '" + key + "': expected a number, got '" + v + "'");
    }
    return out;
}

}  // namespace

KvConfig KvConfig::parse(const std::string& text) {
    KvConfig cfg;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
        if (!cfg.values_.emplace(key, value).second) {
            throw ConfigError("config line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
        }
    }
    return cfg;
}

KvConfig KvConfig::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read config file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

std::string KvConfig::get_string(const std::string& key, const std::string& fallback) const {
    const auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
}

std::string KvConfig::require_string(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError("missing required config key '" + key + "'");
    return it->second;
}

std::int64_t KvConfig::get_int(const std::string& key, std::int64_t fallback) const {
    return has(key) ? to_int(key, values_.at(key)) : fallback;
}

std::int64_t KvConfig::require_int(const std::string& key) const { return to_int(key, require_string(key)); }

double KvConfig::get_double(const std::string& key, double fallback) const {
    return has(key) ? to_double(key, values_.at(key)) : fallback;
}

double KvConfig::require_double(const std::string& key) const { return to_double(key, require_string(key)); }

bool KvConfig::get_bool(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const std::string& v = values_.at(key);
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError("config key '" + key + "': expected true/false, got '" + v + "'");
}

std::vector<std::int64_t> KvConfig::get_int_list(const std::string& key) const {
    std::vector<std::int64_t> out;
    std::istringstream in(require_string(key));
    std::string item;
    while (std::getline(in, item, ',')) out.push_back(to_int(key, trim(item)));
    return out;
}

void KvConfig::check_known(const std::set<std::string>& known) const {
    std::string bad;
    for (const auto& [k, v] : values_) {
        if (!known.count(k)) bad += (bad.empty() ? "" : ", ") + k;
    }
    if (!bad.empty()) throw ConfigError("unknown config keys: " + bad);
}

}  // namespace exakit
