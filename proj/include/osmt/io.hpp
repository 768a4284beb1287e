#pragma once

#include <fstream>
#include <map>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "osmt/errors.hpp"
#include "osmt/grid.hpp"

namespace osmt {

/// One parsed key=value line of a config file.
struct ConfigEntry {
    std::string key;
    std::string value;
    int line = 0;
};

/// Parses '#'-commented key=value lines; keys are validated by the consumer.
inline std::vector<ConfigEntry> parse_key_value_stream(std::istream& is) {
    std::vector<ConfigEntry> out;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) continue;
        const auto last = line.find_last_not_of(" \t\r");
        std::string trimmed = line.substr(first, last - first + 1);
        const auto eq = trimmed.find('=');
        if (eq == std::string::npos)
            throw ConfigError("expected key=value, got '" + trimmed + "'", lineno);
        std::string key = trimmed.substr(0, eq);
        std::string value = trimmed.substr(eq + 1);
        const auto kend = key.find_last_not_of(" \t");
        key.erase(kend == std::string::npos ? 0 : kend + 1);
        const auto vstart = value.find_first_not_of(" \t");
        value.erase(0, vstart == std::string::npos ? value.size() : vstart);
        if (key.empty()) throw ConfigError("empty key", lineno);
        out.push_back({std::move(key), std::move(value), lineno});
    }
    return out;
}

/// RFC-4180 field quoting: fields with commas, quotes or newlines are wrapped
/// and inner quotes doubled.
inline std::string csv_escape(std::string_view field) {
    const bool needs = field.find_first_of(",\"\r\n") != std::string_view::npos;
    if (!needs) return std::string(field);
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

class CsvWriter {
public:
    explicit CsvWriter(std::ostream& os) : os_(os) {}

    void write_row(const std::vector<std::string>& fields) {
        for (std::size_t i = 0; i < fields.size(); ++i) {
            if (i) os_ << ',';
            os_ << csv_escape(fields[i]);
        }
        os_ << "\r\n";
    }

private:
    std::ostream& os_;
};

}  // namespace osmt
