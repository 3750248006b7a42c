#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>

namespace ldw {

/// Flat "key = value" file. '#' starts a comment; blank lines are ignored.
class KvConfig {
public:
    static KvConfig parse(const std::string& text, const std::string& origin = "<string>");
    static KvConfig load(const std::filesystem::path& path);

    /// Throws Config naming the first key not in `allowed`.
    void reject_unknown(const std::set<std::string>& allowed) const;

    bool has(const std::string& key) const { return values_.contains(key); }
    const std::string& require(const std::string& key) const;
    double number(const std::string& key) const;
    double number_or(const std::string& key, double fallback) const;
    long integer(const std::string& key) const;
    long integer_or(const std::string& key, long fallback) const;
    std::string string_or(const std::string& key, const std::string& fallback) const;
    bool boolean_or(const std::string& key, bool fallback) const;

    const std::map<std::string, std::string>& values() const { return values_; }
    const std::string& origin() const { return origin_; }

private:
    std::map<std::string, std::string> values_;
    std::string origin_;
};

}  // namespace ldw
