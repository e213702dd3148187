#pragma once

#include <cctype>
#include <cstdint>
#include <istream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "hcr/common.hpp"

namespace hcr {

/// UTF-8 `key = value` configuration with `[section]` headers and `#`
/// comments. Keys before any header live in the "" section.
class ConfigFile {
public:
    static ConfigFile parse(std::istream& in) {
        ConfigFile cfg;
        std::string line;
        std::string section;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            const std::size_t hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            const std::string trimmed = trim(line);
            if (trimmed.empty()) continue;
            if (trimmed.front() == '[') {
                if (trimmed.back() != ']' || trimmed.size() < 3) {
                    throw InvalidInput("config line " + std::to_string(line_no) +
                                       ": malformed section header");
                }
                section = trim(trimmed.substr(1, trimmed.size() - 2));
                cfg.sections_[section];  // register even if empty
                continue;
            }
            const std::size_t eq = trimmed.find('=');
            if (eq == std::string::npos) {
                throw InvalidInput("config line " + std::to_string(line_no) + ": expected key = value");
            }
            const std::string key = trim(trimmed.substr(0, eq));
            const std::string value = trim(trimmed.substr(eq + 1));
            if (key.empty()) {
                throw InvalidInput("config line " + std::to_string(line_no) + ": empty key");
            }
            cfg.sections_[section][key] = value;
        }
        return cfg;
    }

    static ConfigFile parse(const std::string& text) {
        std::istringstream in(text);
        return parse(in);
    }

    bool has_section(const std::string& section) const { return sections_.count(section) > 0; }

    bool has(const std::string& section, const std::string& key) const {
        auto it = sections_.find(section);
        return it != sections_.end() && it->second.count(key) > 0;
    }

    const std::string& get(const std::string& section, const std::string& key) const {
        auto it = sections_.find(section);
        if (it == sections_.end() || !it->second.count(key)) {
            throw InvalidInput("config: missing key '" + key + "' in section [" + section + "]");
        }
        return it->second.at(key);
    }

    std::string get_or(const std::string& section, const std::string& key,
                       const std::string& fallback) const {
        return has(section, key) ? get(section, key) : fallback;
    }

    double get_double(const std::string& section, const std::string& key, double fallback) const {
        if (!has(section, key)) return fallback;
        return to_double(get(section, key), section, key);
    }

    std::uint64_t get_u64(const std::string& section, const std::string& key,
                          std::uint64_t fallback) const {
        if (!has(section, key)) return fallback;
        return to_u64(get(section, key), section, key);
    }

    std::uint32_t get_u32(const std::string& section, const std::string& key,
                          std::uint32_t fallback) const {
        const std::uint64_t v = get_u64(section, key, fallback);
        if (v > UINT32_MAX) throw InvalidInput("config: value out of range for " + key);
        return static_cast<std::uint32_t>(v);
    }

    bool get_bool(const std::string& section, const std::string& key, bool fallback) const {
        if (!has(section, key)) return fallback;
        const std::string& v = get(section, key);
        if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
        if (v == "false" || v == "0" || v == "no" || v == "off") return false;
        throw InvalidInput("config: boolean expected for '" + key + "', got '" + v + "'");
    }

    std::vector<double> get_double_list(const std::string& section, const std::string& key,
                                        const std::vector<double>& fallback) const {
        if (!has(section, key)) return fallback;
        std::vector<double> out;
        for (const std::string& tok : split_list(get(section, key))) {
            out.push_back(to_double(tok, section, key));
        }
        return out;
    }

    std::vector<std::uint64_t> get_u64_list(const std::string& section, const std::string& key,
                                            const std::vector<std::uint64_t>& fallback) const {
        if (!has(section, key)) return fallback;
        std::vector<std::uint64_t> out;
        for (const std::string& tok : split_list(get(section, key))) {
            out.push_back(to_u64(tok, section, key));
        }
        return out;
    }

    std::vector<std::string> section_names() const {
        std::vector<std::string> names;
        for (const auto& [name, _] : sections_) names.push_back(name);
        return names;
    }

    static std::vector<std::string> split_list(const std::string& value) {
        std::vector<std::string> out;
        std::size_t start = 0;
        for (std::size_t i = 0; i <= value.size(); ++i) {
            if (i == value.size() || value[i] == ',') {
                const std::string tok = trim(value.substr(start, i - start));
                if (!tok.empty()) out.push_back(tok);
                start = i + 1;
            }
        }
        return out;
    }

private:
    static std::string trim(const std::string& s) {
        std::size_t a = 0, b = s.size();
        while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
        while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
        return s.substr(a, b - a);
    }

    static double to_double(const std::string& v, const std::string& section, const std::string& key) {
        std::size_t pos = 0;
        double out = 0.0;
        try {
            out = std::stod(v, &pos);
        } catch (const std::exception&) {
            throw InvalidInput("config: bad number for [" + section + "]." + key + ": '" + v + "'");
        }
        if (pos != v.size()) {
            throw InvalidInput("config: bad number for [" + section + "]." + key + ": '" + v + "'");
        }
        return out;
    }

    static std::uint64_t to_u64(const std::string& v, const std::string& section,
                                const std::string& key) {
        std::size_t pos = 0;
        unsigned long long out = 0;
        try {
            out = std::stoull(v, &pos);
        } catch (const std::exception&) {
            throw InvalidInput("config: bad integer for [" + section + "]." + key + ": '" + v + "'");
        }
        if (pos != v.size()) {
            throw InvalidInput("config: bad integer for [" + section + "]." + key + ": '" + v + "'");
        }
        return out;
    }

    std::map<std::string, std::map<std::string, std::string>> sections_;
};

}  // namespace hcr
