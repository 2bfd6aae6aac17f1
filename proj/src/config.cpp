#include "medrep/config.hpp"

#include <cerrno>
#include <charconv>
#include <cstdlib>

#include "medrep/error.hpp"
#include "medrep/io.hpp"

namespace medrep {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::string_view strip_comment(std::string_view line) {
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '"') quoted = !quoted;
        else if (line[i] == '#' && !quoted) return line.substr(0, i);
    }
    return line;
}

[[noreturn]] void fail(std::size_t line_no, const std::string& what) {
    throw Error(ErrorCode::ConfigError, "config line " + std::to_string(line_no) + ": " + what);
}

std::string unquote(std::string_view v) {
    if (v.size() >= 2 && v.front() == '"' && v.back() == '"') return std::string(v.substr(1, v.size() - 2));
    return std::string(v);
}

}  // namespace

ConfigFile ConfigFile::parse(std::string_view text) {
    ConfigFile cfg;
    std::string section;
    std::size_t line_no = 0;
    while (!text.empty()) {
        const auto nl = text.find('\n');
        auto line = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        ++line_no;
        line = trim(strip_comment(line));
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') fail(line_no, "unterminated section header");
            section = std::string(trim(line.substr(1, line.size() - 2)));
            if (section.empty()) fail(line_no, "empty section name");
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) fail(line_no, "expected key = value");
        const auto key = trim(line.substr(0, eq));
        const auto value = trim(line.substr(eq + 1));
        if (key.empty()) fail(line_no, "empty key");
        if (value.empty()) fail(line_no, "empty value for '" + std::string(key) + "'");
        if (value.front() == '"' && (value.size() < 2 || value.back() != '"')) fail(line_no, "unterminated string");
        if (value.front() == '[' && value.back() != ']') fail(line_no, "unterminated array");
        const auto full = section.empty() ? std::string(key) : section + "." + std::string(key);
        if (cfg.values_.count(full)) fail(line_no, "duplicate key '" + full + "'");
        cfg.values_[full] = unquote(value);
    }
    return cfg;
}

ConfigFile ConfigFile::load(const std::filesystem::path& path) {
    std::string text;
    try {
        text = io::read_file(path);
    } catch (const Error& e) {
        throw Error(ErrorCode::ConfigError, e.what());
    }
    return parse(text);
}

const std::string& ConfigFile::raw(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw Error(ErrorCode::ConfigError, "missing config key '" + key + "'");
    return it->second;
}

std::string ConfigFile::get_string(const std::string& key) const { return raw(key); }

std::string ConfigFile::get_string(const std::string& key, const std::string& fallback) const {
    return has(key) ? raw(key) : fallback;
}

std::int64_t ConfigFile::get_int(const std::string& key) const {
    const auto& v = raw(key);
    std::int64_t out = 0;
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size())
        throw Error(ErrorCode::ConfigError, "config key '" + key + "' is not an integer: " + v);
    return out;
}

std::int64_t ConfigFile::get_int(const std::string& key, std::int64_t fallback) const {
    return has(key) ? get_int(key) : fallback;
}

std::uint64_t ConfigFile::get_uint(const std::string& key, std::uint64_t fallback) const {
    if (!has(key)) return fallback;
    const auto& v = raw(key);
    std::uint64_t out = 0;
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size())
        throw Error(ErrorCode::ConfigError, "config key '" + key + "' is not an unsigned integer: " + v);
    return out;
}

double ConfigFile::get_double(const std::string& key) const {
    const auto& v = raw(key);
    char* end = nullptr;
    errno = 0;
    const double out = std::strtod(v.c_str(), &end);
    if (v.empty() || end != v.c_str() + v.size() || errno == ERANGE)
        throw Error(ErrorCode::ConfigError, "config key '" + key + "' is not a number: " + v);
    return out;
}

double ConfigFile::get_double(const std::string& key, double fallback) const {
    return has(key) ? get_double(key) : fallback;
}

bool ConfigFile::get_bool(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const auto& v = raw(key);
    if (v == "true") return true;
    if (v == "false") return false;
    throw Error(ErrorCode::ConfigError, "config key '" + key + "' is not a boolean: " + v);
}

std::vector<std::string> ConfigFile::get_list(const std::string& key) const {
    std::string_view v = raw(key);
    if (v.size() < 2 || v.front() != '[' || v.back() != ']') return {unquote(v)};
    v = trim(v.substr(1, v.size() - 2));
    std::vector<std::string> out;
    while (!v.empty()) {
        const auto comma = v.find(',');
        const auto item = trim(v.substr(0, comma));
        if (item.empty()) throw Error(ErrorCode::ConfigError, "empty element in list '" + key + "'");
        out.push_back(unquote(item));
        if (comma == std::string_view::npos) break;
        v = trim(v.substr(comma + 1));
    }
    return out;
}

std::map<std::string, std::string> ConfigFile::section(const std::string& name) const {
    std::map<std::string, std::string> out;
    const auto prefix = name + ".";
    for (const auto& [k, v] : values_)
        if (k.compare(0, prefix.size(), prefix) == 0) out[k.substr(prefix.size())] = v;
    return out;
}

std::uint64_t ConfigFile::hash(const std::vector<std::string>& sections) const {
    std::string canonical;
    for (const auto& [k, v] : values_) {
        bool keep = sections.empty();
        for (const auto& s : sections) keep = keep || k.compare(0, s.size() + 1, s + ".") == 0;
        if (keep) canonical += k + "=" + v + "\n";
    }
    return io::fnv1a64(canonical);
}

}  // namespace medrep
