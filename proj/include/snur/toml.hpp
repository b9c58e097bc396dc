#pragma once

#include <cctype>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "snur/common.hpp"

namespace snur {

// Minimal TOML subset: [section] / [a.b] headers, key = value lines, '#'
// comments, values of type string ("..."), integer, float, or boolean.
// Enough for flat experiment configs; arrays and tables-of-tables are out.
struct TomlValue {
    enum class Type { string, integer, floating, boolean };
    Type type = Type::string;
    std::string s;
    std::int64_t i = 0;
    double d = 0.0;
    bool b = false;
};

class TomlTable {
public:
    static TomlTable parse(const std::string& text) {
        TomlTable t;
        std::string section;
        std::size_t line_no = 0, pos = 0;
        while (pos <= text.size()) {
            std::size_t eol = text.find('\n', pos);
            if (eol == std::string::npos) eol = text.size();
            std::string line = text.substr(pos, eol - pos);
            pos = eol + 1;
            ++line_no;

            std::size_t hash = find_comment(line);
            if (hash != std::string::npos) line.resize(hash);
            line = trim(line);
            if (line.empty()) continue;

            if (line.front() == '[') {
                if (line.back() != ']')
                    throw ConfigError("line " + std::to_string(line_no) + ": malformed section");
                section = trim(line.substr(1, line.size() - 2));
                if (section.empty())
                    throw ConfigError("line " + std::to_string(line_no) + ": empty section name");
                continue;
            }

            std::size_t eq = line.find('=');
            if (eq == std::string::npos)
                throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
            std::string key = trim(line.substr(0, eq));
            std::string raw = trim(line.substr(eq + 1));
            if (key.empty() || raw.empty())
                throw ConfigError("line " + std::to_string(line_no) + ": empty key or value");
            std::string full = section.empty() ? key : section + "." + key;
            if (t.values_.count(full))
                throw ConfigError("line " + std::to_string(line_no) + ": duplicate key " + full);
            t.values_[full] = parse_value(raw, line_no);
        }
        return t;
    }

    static TomlTable parse_file(const std::filesystem::path& path) {
        std::ifstream f(path);
        if (!f) throw IoError("cannot open config: " + path.string());
        std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
        return parse(text);
    }

    bool has(const std::string& key) const { return values_.count(key) > 0; }

    std::string get_string(const std::string& key, const std::string& def) const {
        auto it = touch(key);
        if (it == values_.end()) return def;
        if (it->second.type != TomlValue::Type::string)
            throw ConfigError("key " + key + ": expected a string");
        return it->second.s;
    }

    std::int64_t get_int(const std::string& key, std::int64_t def) const {
        auto it = touch(key);
        if (it == values_.end()) return def;
        if (it->second.type != TomlValue::Type::integer)
            throw ConfigError("key " + key + ": expected an integer");
        return it->second.i;
    }

    double get_double(const std::string& key, double def) const {
        auto it = touch(key);
        if (it == values_.end()) return def;
        if (it->second.type == TomlValue::Type::integer)
            return static_cast<double>(it->second.i);
        if (it->second.type != TomlValue::Type::floating)
            throw ConfigError("key " + key + ": expected a number");
        return it->second.d;
    }

    bool get_bool(const std::string& key, bool def) const {
        auto it = touch(key);
        if (it == values_.end()) return def;
        if (it->second.type != TomlValue::Type::boolean)
            throw ConfigError("key " + key + ": expected a boolean");
        return it->second.b;
    }

    // keys present in the file but never read; non-empty means a typo
    std::vector<std::string> unconsumed() const {
        std::vector<std::string> out;
        for (const auto& [k, v] : values_)
            if (!consumed_.count(k)) out.push_back(k);
        return out;
    }

private:
    static std::string trim(const std::string& s) {
        std::size_t a = 0, b = s.size();
        while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
        while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
        return s.substr(a, b - a);
    }

    // '#' starts a comment unless inside a quoted string
    static std::size_t find_comment(const std::string& line) {
        bool in_str = false;
        for (std::size_t i = 0; i < line.size(); ++i) {
            if (line[i] == '"') in_str = !in_str;
            if (line[i] == '#' && !in_str) return i;
        }
        return std::string::npos;
    }

    static TomlValue parse_value(const std::string& raw, std::size_t line_no) {
        TomlValue v;
        if (raw.front() == '"') {
            if (raw.size() < 2 || raw.back() != '"')
                throw ConfigError("line " + std::to_string(line_no) + ": unterminated string");
            v.type = TomlValue::Type::string;
            v.s = raw.substr(1, raw.size() - 2);
            if (v.s.find('"') != std::string::npos)
                throw ConfigError("line " + std::to_string(line_no) + ": stray quote in string");
            return v;
        }
        if (raw == "true" || raw == "false") {
            v.type = TomlValue::Type::boolean;
            v.b = raw == "true";
            return v;
        }
        // integer first; fall through to float on '.', 'e', 'inf', 'nan'
        {
            std::int64_t i = 0;
            auto [p, ec] = std::from_chars(raw.data(), raw.data() + raw.size(), i);
            if (ec == std::errc() && p == raw.data() + raw.size()) {
                v.type = TomlValue::Type::integer;
                v.i = i;
                return v;
            }
        }
        {
            double d = 0.0;
            auto [p, ec] = std::from_chars(raw.data(), raw.data() + raw.size(), d);
            if (ec == std::errc() && p == raw.data() + raw.size()) {
                v.type = TomlValue::Type::floating;
                v.d = d;
                return v;
            }
        }
        throw ConfigError("line " + std::to_string(line_no) + ": cannot parse value '" + raw + "'");
    }

    std::map<std::string, TomlValue>::const_iterator touch(const std::string& key) const {
        auto it = values_.find(key);
        if (it != values_.end()) consumed_.insert(key);
        return it;
    }

    std::map<std::string, TomlValue> values_;
    mutable std::set<std::string> consumed_;
};

}  // namespace snur
