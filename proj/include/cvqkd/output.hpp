#pragma once

// Locale-independent rendering of results as text, CSV or JSON lines.
// Floating-point values always carry 9 significant digits.

#include <charconv>
#include <cmath>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

namespace cvqkd {

inline constexpr std::string_view version_string = "cvqkd-bounds 1.0.0";
inline constexpr int significant_digits = 9;

inline std::string format_number(double value) {
    if (std::isnan(value)) {
        return "nan";
    }
    if (std::isinf(value)) {
        return value > 0 ? "inf" : "-inf";
    }
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::general, significant_digits);
    if (res.ec != std::errc{}) {
        throw std::runtime_error("format_number: conversion failed");
    }
    return {buf, res.ptr};
}

/// The double nearest to `value` rounded to 9 significant digits, so JSON
/// serialisation prints the same digits as the text and CSV renderers.
inline double round_to_output_precision(double value) {
    if (!std::isfinite(value)) {
        return value;
    }
    const std::string s = format_number(value);
    double out = 0.0;
    std::from_chars(s.data(), s.data() + s.size(), out);
    return out;
}

using FieldValue = std::variant<std::monostate, double, std::string>;

struct Field {
    std::string key;
    FieldValue value;
};

inline std::string render(const FieldValue& v) {
    if (const auto* d = std::get_if<double>(&v)) {
        return format_number(*d);
    }
    if (const auto* s = std::get_if<std::string>(&v)) {
        return *s;
    }
    return {};
}

inline nlohmann::ordered_json to_json_value(const FieldValue& v) {
    if (const auto* d = std::get_if<double>(&v)) {
        return round_to_output_precision(*d);
    }
    if (const auto* s = std::get_if<std::string>(&v)) {
        return *s;
    }
    return nullptr;
}

/// Ordered key/value output: echoed parameters, then results. Empty values
/// (std::monostate) render as empty CSV cells and are omitted from JSON.
struct OutputRecord {
    std::vector<Field> params;
    std::vector<Field> results;

    void write_text(std::ostream& out) const {
        for (const auto* group : {&params, &results}) {
            for (const Field& f : *group) {
                if (!std::holds_alternative<std::monostate>(f.value)) {
                    out << f.key << ": " << render(f.value) << '\n';
                }
            }
        }
        out << "version: " << version_string << '\n';
    }

    void write_csv_header(std::ostream& out) const {
        bool first = true;
        for (const auto* group : {&params, &results}) {
            for (const Field& f : *group) {
                out << (first ? "" : ",") << f.key;
                first = false;
            }
        }
        out << (first ? "" : ",") << "version\n";
    }

    void write_csv_row(std::ostream& out) const {
        bool first = true;
        for (const auto* group : {&params, &results}) {
            for (const Field& f : *group) {
                out << (first ? "" : ",") << render(f.value);
                first = false;
            }
        }
        out << (first ? "" : ",") << version_string << '\n';
    }

    nlohmann::ordered_json to_json() const {
        nlohmann::ordered_json j;
        nlohmann::ordered_json p = nlohmann::ordered_json::object();
        for (const Field& f : params) {
            if (!std::holds_alternative<std::monostate>(f.value)) {
                p[f.key] = to_json_value(f.value);
            }
        }
        j["params"] = std::move(p);
        for (const Field& f : results) {
            if (!std::holds_alternative<std::monostate>(f.value)) {
                j[f.key] = to_json_value(f.value);
            }
        }
        j["version"] = std::string(version_string);
        return j;
    }

    void write_json(std::ostream& out) const { out << to_json().dump() << '\n'; }
};

/// Plain CSV table: header once, then rows of optional numbers (empty cell when absent).
class CsvTable {
  public:
    explicit CsvTable(std::vector<std::string> columns) : columns_(std::move(columns)) {}

    void add_row(std::vector<std::optional<double>> row) {
        if (row.size() != columns_.size()) {
            throw std::invalid_argument("CsvTable: row width does not match the header");
        }
        rows_.push_back(std::move(row));
    }

    std::size_t size() const { return rows_.size(); }

    void write(std::ostream& out) const {
        for (std::size_t i = 0; i < columns_.size(); ++i) {
            out << (i ? "," : "") << columns_[i];
        }
        out << '\n';
        for (const auto& row : rows_) {
            for (std::size_t i = 0; i < row.size(); ++i) {
                out << (i ? "," : "") << (row[i] ? format_number(*row[i]) : std::string{});
            }
            out << '\n';
        }
    }

  private:
    std::vector<std::string> columns_;
    std::vector<std::vector<std::optional<double>>> rows_;
};

} // namespace cvqkd
