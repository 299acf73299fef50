// csv.hpp - RFC 4180 reading/writing and deterministic number formatting
#pragma once

#include <charconv>
#include <cmath>
#include <cstdio>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace wfp::csv {

// Shortest round-trip representation; identical input bits give identical text.
inline std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline std::string format_fixed(double v, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
    return std::string(buf);
}

inline std::optional<double> parse_double(std::string_view s) {
    // from_chars rejects leading whitespace and requires full consumption here.
    size_t b = 0, e = s.size();
    while (b < e && (s[b] == ' ' || s[b] == '\t')) ++b;
    while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
    if (b == e) return std::nullopt;
    double v = 0;
    auto res = std::from_chars(s.data() + b, s.data() + e, v);
    if (res.ec != std::errc() || res.ptr != s.data() + e) return std::nullopt;
    return v;
}

inline bool needs_quoting(std::string_view field) {
    return field.find_first_of(",\"\r\n") != std::string_view::npos;
}

inline std::string quote(std::string_view field) {
    if (!needs_quoting(field)) return std::string(field);
    std::string out = "\"";
    for (char c : field) {
        out += c;
        if (c == '"') out += '"';
    }
    out += '"';
    return out;
}

inline std::string join_row(const std::vector<std::string>& fields) {
    std::string out;
    for (size_t i = 0; i < fields.size(); ++i) {
        if (i) out += ',';
        out += quote(fields[i]);
    }
    out += "\r\n";
    return out;
}

// Parses a whole document into rows of unquoted fields. Handles quoted
// fields, embedded separators/newlines, and both LF and CRLF line endings.
inline std::vector<std::vector<std::string>> parse(std::string_view text) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    bool in_quotes = false;
    bool row_started = false;
    size_t i = 0;
    auto end_field = [&] {
        row.push_back(std::move(field));
        field.clear();
    };
    auto end_row = [&] {
        end_field();
        rows.push_back(std::move(row));
        row.clear();
        row_started = false;
    };
    while (i < text.size()) {
        char c = text[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                field += c;
            }
        } else if (c == '"' && field.empty()) {
            in_quotes = true;
            row_started = true;
        } else if (c == ',') {
            end_field();
            row_started = true;
        } else if (c == '\n') {
            if (!field.empty() && field.back() == '\r') field.pop_back();
            if (row_started || !field.empty()) end_row();
        } else {
            field += c;
            row_started = true;
        }
        ++i;
    }
    if (!field.empty() && field.back() == '\r') field.pop_back();
    if (row_started || !field.empty()) end_row();
    return rows;
}

} // namespace wfp::csv
