#include "ldw/kv_config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "ldw/error.hpp"

namespace ldw {
namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

}  // namespace

KvConfig KvConfig::parse(const std::string& text, const std::string& origin) {
    KvConfig cfg;
    cfg.origin_ = origin;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        const auto body = trim(line);
        if (body.empty()) continue;
        const auto eq = body.find('=');
        if (eq == std::string::npos) {
            throw Error(ErrorCode::Config, origin + ":" + std::to_string(lineno) + ": expected key = value");
        }
        auto key = trim(std::string_view(body).substr(0, eq));
        auto value = trim(std::string_view(body).substr(eq + 1));
        if (key.empty()) throw Error(ErrorCode::Config, origin + ":" + std::to_string(lineno) + ": empty key");
        if (!cfg.values_.emplace(key, value).second) {
            throw Error(ErrorCode::Config, origin + ":" + std::to_string(lineno) + ": duplicate key " + key);
        }
    }
    return cfg;
}

KvConfig KvConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Io, "cannot open config " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str(), path.string());
}

void KvConfig::reject_unknown(const std::set<std::string>& allowed) const {
    for (const auto& [key, value] : values_) {
        if (!allowed.contains(key)) throw Error(ErrorCode::Config, origin_ + ": unknown key " + key);
    }
}

const std::string& KvConfig::require(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) throw Error(ErrorCode::Config, origin_ + ": missing key " + key);
    return it->second;
}

double KvConfig::number(const std::string& key) const {
    const auto& s = require(key);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
        throw Error(ErrorCode::Config, origin_ + ": key " + key + " is not a number: " + s);
    }
    return v;
}

double KvConfig::number_or(const std::string& key, double fallback) const {
    return has(key) ? number(key) : fallback;
}

long KvConfig::integer(const std::string& key) const {
    const auto& s = require(key);
    long v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
        throw Error(ErrorCode::Config, origin_ + ": key " + key + " is not an integer: " + s);
    }
    return v;
}

long KvConfig::integer_or(const std::string& key, long fallback) const {
    return has(key) ? integer(key) : fallback;
}

std::string KvConfig::string_or(const std::string& key, const std::string& fallback) const {
    return has(key) ? require(key) : fallback;
}

bool KvConfig::boolean_or(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const auto& s = require(key);
    if (s == "true" || s == "1" || s == "yes") return true;
    if (s == "false" || s == "0" || s == "no") return false;
    throw Error(ErrorCode::Config, origin_ + ": key " + key + " is not a boolean: " + s);
}

}  // namespace ldw
