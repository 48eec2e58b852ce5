#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace lyap {

/// One [section] of a key=value config file. Keys remember their source line
/// for diagnostics; iteration order is sorted so serialization is canonical.
class ConfigSection {
public:
    ConfigSection() = default;
    explicit ConfigSection(std::string name) : name_(std::move(name)) {}

    const std::string& name() const noexcept { return name_; }

    void set(const std::string& key, std::string value, int line = 0);
    bool has(const std::string& key) const { return entries_.count(key) != 0; }
    const std::map<std::string, std::pair<std::string, int>>& entries() const noexcept { return entries_; }

    /// Throws ConfigError naming section, key and line.
    const std::string& require(const std::string& key) const;
    std::optional<std::string> get(const std::string& key) const;

    double get_double(const std::string& key, std::optional<double> fallback = std::nullopt) const;
    std::int64_t get_int(const std::string& key, std::optional<std::int64_t> fallback = std::nullopt) const;
    std::uint64_t get_uint(const std::string& key, std::optional<std::uint64_t> fallback = std::nullopt) const;
    bool get_bool(const std::string& key, std::optional<bool> fallback = std::nullopt) const;
    std::vector<double> get_doubles(const std::string& key, std::optional<std::vector<double>> fallback = std::nullopt) const;

    /// Throws ConfigError on the first key not in `allowed`.
    void reject_unknown(const std::vector<std::string>& allowed) const;

    int line_of(const std::string& key) const;

    /// Throws ConfigError naming the section, key and line.
    [[noreturn]] void fail(const std::string& key, const std::string& what) const;

private:
    std::string name_;
    std::map<std::string, std::pair<std::string, int>> entries_;
};

/// Parsed config file: ordered list of sections.
class ConfigFile {
public:
    static ConfigFile parse(const std::string& text, const std::string& origin = "<config>");
    static ConfigFile load(const std::string& path);

    bool has(const std::string& section) const;
    const ConfigSection& section(const std::string& name) const;
    ConfigSection& section_or_add(const std::string& name);
    const std::vector<ConfigSection>& sections() const noexcept { return sections_; }

    /// Throws ConfigError on any section not in `allowed`.
    void reject_unknown_sections(const std::vector<std::string>& allowed) const;

    std::string to_string() const;

private:
    std::vector<ConfigSection> sections_;
};

std::vector<double> parse_double_list(const std::string& text, char sep = ',');
std::string format_double(double x);
std::string join_doubles(const std::vector<double>& values, char sep = ',');

}  // namespace lyap
