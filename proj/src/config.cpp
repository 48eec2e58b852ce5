#include "lyap/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "lyap/error.hpp"

namespace lyap {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

double parse_double_strict(const std::string& text, bool& ok) {
    const std::string t = trim(text);
    double value = 0.0;
    const auto res = std::from_chars(t.data(), t.data() + t.size(), value);
    ok = !t.empty() && res.ec == std::errc{} && res.ptr == t.data() + t.size() && std::isfinite(value);
    return value;
}

}  // namespace

void ConfigSection::set(const std::string& key, std::string value, int line) {
    entries_[key] = {std::move(value), line};
}

void ConfigSection::fail(const std::string& key, const std::string& what) const {
    std::ostringstream os;
    os << "[" << name_ << "] " << key;
    if (const int line = line_of(key); line > 0) os << " (line " << line << ")";
    os << ": " << what;
    throw ConfigError(os.str());
}

int ConfigSection::line_of(const std::string& key) const {
    const auto it = entries_.find(key);
    return it == entries_.end() ? 0 : it->second.second;
}

const std::string& ConfigSection::require(const std::string& key) const {
    const auto it = entries_.find(key);
    if (it == entries_.end()) fail(key, "required key is missing");
    return it->second.first;
}

std::optional<std::string> ConfigSection::get(const std::string& key) const {
    const auto it = entries_.find(key);
    if (it == entries_.end()) return std::nullopt;
    return it->second.first;
}

double ConfigSection::get_double(const std::string& key, std::optional<double> fallback) const {
    if (!has(key)) {
        if (fallback) return *fallback;
        require(key);
    }
    bool ok = false;
    const double v = parse_double_strict(require(key), ok);
    if (!ok) fail(key, "expected a finite real number, got '" + require(key) + "'");
    return v;
}

std::int64_t ConfigSection::get_int(const std::string& key, std::optional<std::int64_t> fallback) const {
    if (!has(key)) {
        if (fallback) return *fallback;
        require(key);
    }
    const std::string t = trim(require(key));
    std::int64_t v = 0;
    const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
    if (t.empty() || res.ec != std::errc{} || res.ptr != t.data() + t.size()) {
        fail(key, "expected an integer, got '" + t + "'");
    }
    return v;
}

std::uint64_t ConfigSection::get_uint(const std::string& key, std::optional<std::uint64_t> fallback) const {
    if (!has(key)) {
        if (fallback) return *fallback;
        require(key);
    }
    const std::string t = trim(require(key));
    std::uint64_t v = 0;
    const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
    if (t.empty() || res.ec != std::errc{} || res.ptr != t.data() + t.size()) {
        fail(key, "expected a nonnegative integer, got '" + t + "'");
    }
    return v;
}

bool ConfigSection::get_bool(const std::string& key, std::optional<bool> fallback) const {
    if (!has(key)) {
        if (fallback) return *fallback;
        require(key);
    }
    const std::string t = trim(require(key));
    if (t == "true" || t == "1" || t == "yes") return true;
    if (t == "false" || t == "0" || t == "no") return false;
    fail(key, "expected true/false, got '" + t + "'");
}

std::vector<double> ConfigSection::get_doubles(const std::string& key,
                                               std::optional<std::vector<double>> fallback) const {
    if (!has(key)) {
        if (fallback) return *fallback;
        require(key);
    }
    try {
        return parse_double_list(require(key));
    } catch (const ConfigError& e) {
        fail(key, e.what());
    }
}

void ConfigSection::reject_unknown(const std::vector<std::string>& allowed) const {
    for (const auto& [key, value] : entries_) {
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) fail(key, "unknown key");
    }
}

ConfigFile ConfigFile::parse(const std::string& text, const std::string& origin) {
    ConfigFile cfg;
    std::istringstream in(text);
    std::string raw;
    int line_no = 0;
    ConfigSection* current = nullptr;
    while (std::getline(in, raw)) {
        ++line_no;
        std::string line = raw;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const std::string where = origin + ":" + std::to_string(line_no) + ": ";
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError(where + "malformed section header '" + line + "'");
            const std::string name = trim(line.substr(1, line.size() - 2));
            if (name.empty()) throw ConfigError(where + "empty section name");
            if (cfg.has(name)) throw ConfigError(where + "duplicate section [" + name + "]");
            cfg.sections_.emplace_back(name);
            current = &cfg.sections_.back();
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError(where + "expected key = value, got '" + line + "'");
        if (current == nullptr) throw ConfigError(where + "key outside of any [section]");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError(where + "empty key");
        if (current->has(key)) throw ConfigError(where + "duplicate key '" + key + "'");
        current->set(key, value, line_no);
    }
    return cfg;
}

ConfigFile ConfigFile::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str(), path);
}

bool ConfigFile::has(const std::string& section) const {
    return std::any_of(sections_.begin(), sections_.end(),
                       [&](const ConfigSection& s) { return s.name() == section; });
}

const ConfigSection& ConfigFile::section(const std::string& name) const {
    for (const auto& s : sections_)
        if (s.name() == name) return s;
    throw ConfigError("missing required section [" + name + "]");
}

ConfigSection& ConfigFile::section_or_add(const std::string& name) {
    for (auto& s : sections_)
        if (s.name() == name) return s;
    sections_.emplace_back(name);
    return sections_.back();
}

void ConfigFile::reject_unknown_sections(const std::vector<std::string>& allowed) const {
    for (const auto& s : sections_) {
        if (std::find(allowed.begin(), allowed.end(), s.name()) == allowed.end()) {
            throw ConfigError("unknown section [" + s.name() + "]");
        }
    }
}

std::string ConfigFile::to_string() const {
    std::ostringstream os;
    bool first = true;
    for (const auto& s : sections_) {
        if (!first) os << "\n";
        first = false;
        os << "[" << s.name() << "]\n";
        for (const auto& [key, value] : s.entries()) os << key << " = " << value.first << "\n";
    }
    return os.str();
}

std::vector<double> parse_double_list(const std::string& text, char sep) {
    std::vector<double> out;
    std::string item;
    std::istringstream in(text);
    while (std::getline(in, item, sep)) {
        bool ok = false;
        const double v = parse_double_strict(item, ok);
        if (!ok) throw ConfigError("expected a list of finite reals, got '" + trim(item) + "'");
        out.push_back(v);
    }
    if (out.empty()) throw ConfigError("expected a nonempty list");
    return out;
}

std::string format_double(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, res.ptr);
}

std::string join_doubles(const std::vector<double>& values, char sep) {
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) out += sep;
        out += format_double(values[i]);
    }
    return out;
}

}  // namespace lyap
