#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace medrep {

// Flat `key = value` file with optional `[section]` headers; keys are
// stored as "section.key". Values are quoted strings, numbers, booleans
// or single-line arrays. '#' starts a comment outside quotes.
class ConfigFile {
public:
    static ConfigFile parse(std::string_view text);
    static ConfigFile load(const std::filesystem::path& path);

    bool has(const std::string& key) const { return values_.count(key) != 0; }
    // Raw value text with quotes stripped from strings.
    const std::string& raw(const std::string& key) const;
    void set(const std::string& key, std::string value) { values_[key] = std::move(value); }

    std::string get_string(const std::string& key) const;
    std::string get_string(const std::string& key, const std::string& fallback) const;
    std::int64_t get_int(const std::string& key) const;
    std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
    std::uint64_t get_uint(const std::string& key, std::uint64_t fallback) const;
    double get_double(const std::string& key) const;
    double get_double(const std::string& key, double fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    std::vector<std::string> get_list(const std::string& key) const;

    // Keys under "section." with the prefix removed.
    std::map<std::string, std::string> section(const std::string& name) const;
    const std::map<std::string, std::string>& values() const { return values_; }

    // FNV-1a over the canonical "key=value" lines of the given sections
    // (all keys when empty).
    std::uint64_t hash(const std::vector<std::string>& sections = {}) const;

private:
    std::map<std::string, std::string> values_;
};

}  // namespace medrep
