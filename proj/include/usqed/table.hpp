#pragma once

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdio>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "usqed/error.hpp"

namespace usqed {

using Json = nlohmann::json;
using Cell = std::variant<double, long long, std::string>;

struct Column {
    std::string name;
    bool audited = false; ///< physical quantity compared by the truncation audit
};

/// Typed result rows plus a metadata block. Rendered as CSV with a '#'-prefixed JSON header.
class ResultTable {
public:
    ResultTable() = default;
    explicit ResultTable(std::vector<Column> columns) : columns_(std::move(columns)) {}

    const std::vector<Column>& columns() const noexcept { return columns_; }
    const std::vector<std::vector<Cell>>& rows() const noexcept { return rows_; }
    std::size_t row_count() const noexcept { return rows_.size(); }

    void add_row(std::vector<Cell> row) {
        if (row.size() != columns_.size())
            throw Error("ResultTable: row has " + std::to_string(row.size()) + " cells, expected " +
                        std::to_string(columns_.size()));
        rows_.push_back(std::move(row));
    }

    void insert_row(std::size_t at, std::vector<Cell> row) {
        if (row.size() != columns_.size()) throw Error("ResultTable: row width mismatch");
        rows_.insert(rows_.begin() + static_cast<std::ptrdiff_t>(at), std::move(row));
    }

    std::size_t column_index(const std::string& name) const {
        for (std::size_t i = 0; i < columns_.size(); ++i)
            if (columns_[i].name == name) return i;
        throw Error("ResultTable: no column '" + name + "'");
    }

    static double as_double(const Cell& c) {
        if (const auto* d = std::get_if<double>(&c)) return *d;
        if (const auto* i = std::get_if<long long>(&c)) return static_cast<double>(*i);
        return std::nan("");
    }

    std::vector<double> numeric(const std::string& name) const {
        const std::size_t k = column_index(name);
        std::vector<double> out;
        out.reserve(rows_.size());
        for (const auto& r : rows_) out.push_back(as_double(r[k]));
        return out;
    }

    const Cell& at(std::size_t row, const std::string& name) const { return rows_.at(row).at(column_index(name)); }

    Json& metadata() noexcept { return metadata_; }
    const Json& metadata() const noexcept { return metadata_; }

    void set_diagnostic(const std::string& name, bool ok) { diagnostics_[name] = ok; }
    const std::map<std::string, bool>& diagnostics() const noexcept { return diagnostics_; }
    bool diagnostics_pass() const {
        for (const auto& [_, ok] : diagnostics_)
            if (!ok) return false;
        return true;
    }

    Json full_metadata() const {
        Json meta = metadata_;
        meta["diagnostics"] = diagnostics_;
        meta["diagnostics_pass"] = diagnostics_pass();
        return meta;
    }

    void write_csv(std::ostream& os) const {
        std::istringstream header(full_metadata().dump(2));
        for (std::string line; std::getline(header, line);) os << "# " << line << '\n';
        for (std::size_t i = 0; i < columns_.size(); ++i) os << (i ? "," : "") << columns_[i].name;
        os << '\n';
        for (const auto& row : rows_) {
            for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << format_cell(row[i]);
            os << '\n';
        }
    }

    std::string to_csv() const {
        std::ostringstream os;
        write_csv(os);
        return os.str();
    }

    Json to_json() const {
        Json j;
        j["metadata"] = full_metadata();
        Json cols = Json::array();
        for (const auto& c : columns_) cols.push_back(c.name);
        j["columns"] = cols;
        Json rows = Json::array();
        for (const auto& row : rows_) {
            Json r = Json::array();
            for (const auto& c : row) {
                if (const auto* d = std::get_if<double>(&c))
                    r.push_back(std::isfinite(*d) ? Json(*d) : Json(nullptr));
                else if (const auto* i = std::get_if<long long>(&c))
                    r.push_back(*i);
                else
                    r.push_back(std::get<std::string>(c));
            }
            rows.push_back(std::move(r));
        }
        j["rows"] = rows;
        return j;
    }

    /// 17 significant digits, scientific notation.
    static std::string format_double(double v) {
        if (std::isnan(v)) return "nan";
        if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.16e", v);
        return buf;
    }

    static std::string format_cell(const Cell& c) {
        if (const auto* d = std::get_if<double>(&c)) return format_double(*d);
        if (const auto* i = std::get_if<long long>(&c)) return std::to_string(*i);
        const auto& s = std::get<std::string>(c);
        if (s.find_first_of(",\"\n") == std::string::npos) return s;
        std::string out = "\"";
        for (char ch : s) {
            if (ch == '"') out += '"';
            out += ch;
        }
        return out + "\"";
    }

private:
    std::vector<Column> columns_;
    std::vector<std::vector<Cell>> rows_;
    Json metadata_ = Json::object();
    std::map<std::string, bool> diagnostics_;
};

} // namespace usqed
