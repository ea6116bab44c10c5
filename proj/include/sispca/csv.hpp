#pragma once

#include "sispca/common.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace sispca::io {

/// Parsed delimited table: header (possibly synthesized) plus string cells.
struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    Index column_index(const std::string& name) const {
        for (std::size_t c = 0; c < header.size(); ++c)
            if (header[c] == name) return static_cast<Index>(c);
        throw ConfigError("column '" + name + "' not found in table");
    }
    bool has_column(const std::string& name) const {
        for (const auto& h : header)
            if (h == name) return true;
        return false;
    }
};

inline Table read_table(const std::string& path, char delimiter = ',', bool has_header = true) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open '" + path + "'");
    Table table;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::string cell;
        std::stringstream ss(line);
        while (std::getline(ss, cell, delimiter)) cells.push_back(cell);
        if (!line.empty() && line.back() == delimiter) cells.emplace_back();
        if (first) {
            first = false;
            if (has_header) {
                table.header = std::move(cells);
                continue;
            }
            table.header.resize(cells.size());
            for (std::size_t c = 0; c < cells.size(); ++c)
                table.header[c] = "c" + std::to_string(c);
        }
        if (cells.size() != table.header.size())
            throw ConfigError("'" + path + "' row " + std::to_string(table.rows.size() + 1) +
                              " has " + std::to_string(cells.size()) + " cells, expected " +
                              std::to_string(table.header.size()));
        table.rows.push_back(std::move(cells));
    }
    return table;
}

/// Parses the named columns as doubles, reporting every offending cell.
inline Matrix numeric_columns(const Table& table, const std::vector<std::string>& names,
                              const std::string& context = "") {
    std::vector<Index> cols;
    cols.reserve(names.size());
    for (const auto& name : names) cols.push_back(table.column_index(name));
    Matrix out(static_cast<Index>(table.rows.size()), static_cast<Index>(cols.size()));
    std::string bad;
    int bad_count = 0;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        for (std::size_t c = 0; c < cols.size(); ++c) {
            const std::string& cell = table.rows[r][static_cast<std::size_t>(cols[c])];
            const char* begin = cell.data();
            const char* end = begin + cell.size();
            double value = 0.0;
            const auto res = std::from_chars(begin, end, value);
            const bool ok = res.ec == std::errc{} && res.ptr == end && !cell.empty();
            if (!ok || std::isnan(value)) {
                if (bad_count < 8)
                    bad += "\n  row " + std::to_string(r + 1) + ", column '" + names[c] + "': '" +
                           cell + "'";
                ++bad_count;
            } else {
                out(static_cast<Index>(r), static_cast<Index>(c)) = value;
            }
        }
    }
    if (bad_count > 0)
        throw ConfigError("non-numeric or missing cells" +
                          (context.empty() ? "" : " in " + context) + " (" +
                          std::to_string(bad_count) + " total):" + bad);
    return out;
}

inline std::vector<std::string> string_column(const Table& table, const std::string& name) {
    const Index c = table.column_index(name);
    std::vector<std::string> out;
    out.reserve(table.rows.size());
    for (const auto& row : table.rows) out.push_back(row[static_cast<std::size_t>(c)]);
    return out;
}

/// Shortest decimal that round-trips the double exactly.
inline std::string format_double(double value) {
    char buf[64];
    const int len = std::snprintf(buf, sizeof(buf), "%.17g", value);
    return std::string(buf, static_cast<std::size_t>(len));
}

/// Writes a matrix as comma-separated UTF-8 with LF line endings and a header
/// row; values serialize at 17 significant digits so re-parsing is exact.
inline void write_matrix_csv(const std::string& path, const Matrix& values,
                             const std::vector<std::string>& header) {
    if (static_cast<Index>(header.size()) != values.cols())
        throw DimensionError("write_matrix_csv: header size mismatch");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write '" + path + "'");
    for (std::size_t c = 0; c < header.size(); ++c)
        out << (c ? "," : "") << header[c];
    out << "\n";
    for (Index r = 0; r < values.rows(); ++r) {
        for (Index c = 0; c < values.cols(); ++c)
            out << (c ? "," : "") << format_double(values(r, c));
        out << "\n";
    }
}

inline Matrix read_matrix_csv(const std::string& path) {
    const Table table = read_table(path);
    return numeric_columns(table, table.header, path);
}

}  // namespace sispca::io
