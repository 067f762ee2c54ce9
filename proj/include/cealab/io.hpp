#pragma once

// Text formats shared by the CLI and the test suites.
//
// All data files are comma-separated with one header row naming the columns.
// Doubles are written with std::to_chars (shortest round-trip form), so a
// rerun with the same recipe and seed produces byte-identical files and a
// reload restores exact values. Timestamps appear only in the metadata
// sidecar, never in data files.
//
// Recipe files are `key = value` lines with `#` comments.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "cealab/errors.hpp"
#include "cealab/pem.hpp"

namespace cealab::io {

inline std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s) {
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw InputError("not a number: \"" + std::string(s) + "\"");
    return v;
}

inline std::uint64_t parse_u64(std::string_view s) {
    std::uint64_t v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw InputError("not a non-negative integer: \"" + std::string(s) + "\"");
    return v;
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

class CsvWriter {
  public:
    CsvWriter(std::ostream& out, const std::vector<std::string>& header) : out_(out) {
        write_row(header);
    }

    void row(const std::vector<std::string>& cells) { write_row(cells); }

  private:
    void write_row(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i)
                out_ << ',';
            out_ << cells[i];
        }
        out_ << '\n';
    }

    std::ostream& out_;
};

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::size_t column(const std::string& name) const {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name)
                return i;
        throw InputError("missing column \"" + name + "\"");
    }
};

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    for (char c : line) {
        if (c == ',') {
            cells.push_back(std::move(cell));
            cell.clear();
        } else if (c != '\r') {
            cell.push_back(c);
        }
    }
    cells.push_back(std::move(cell));
    return cells;
}

inline CsvTable read_csv(std::istream& in) {
    CsvTable table;
    std::string line;
    if (!std::getline(in, line))
        throw InputError("empty file, expected a CSV header row");
    table.header = split_csv_line(line);
    while (std::getline(in, line)) {
        if (line.empty())
            continue;
        auto cells = split_csv_line(line);
        if (cells.size() != table.header.size())
            throw InputError("CSV row has " + std::to_string(cells.size()) +
                             " cells, header names " + std::to_string(table.header.size()));
        table.rows.push_back(std::move(cells));
    }
    return table;
}

inline CsvTable read_csv_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw InputError("cannot read " + path.string());
    try {
        return read_csv(in);
    } catch (const InputError& e) {
        throw InputError(path.string() + ": " + e.what());
    }
}

// ---------------------------------------------------------------------------
// Recipes and metadata sidecars
// ---------------------------------------------------------------------------

using KeyValues = std::map<std::string, std::string>;

inline std::string trim(std::string_view s) {
    const auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string_view::npos)
        return {};
    const auto end = s.find_last_not_of(" \t\r");
    return std::string(s.substr(begin, end - begin + 1));
}

inline KeyValues read_recipe(std::istream& in) {
    KeyValues kv;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos)
            line.erase(hash);
        const std::string trimmed = trim(line);
        if (trimmed.empty())
            continue;
        const auto eq = trimmed.find('=');
        if (eq == std::string::npos)
            throw InputError("recipe line " + std::to_string(lineno) +
                             ": expected key = value, got \"" + trimmed + "\"");
        const std::string key = trim(trimmed.substr(0, eq));
        const std::string value = trim(trimmed.substr(eq + 1));
        if (key.empty())
            throw InputError("recipe line " + std::to_string(lineno) + ": empty key");
        if (kv.contains(key))
            throw InputError("recipe line " + std::to_string(lineno) + ": duplicate key \"" + key +
                             "\"");
        kv[key] = value;
    }
    return kv;
}

inline KeyValues read_recipe_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw InputError("cannot read recipe " + path.string());
    return read_recipe(in);
}

/// Sidecar with the effective settings of a command, sorted by key. The
/// timestamp lives here so the data files stay byte-identical across reruns.
inline void write_metadata(const std::filesystem::path& path, const KeyValues& entries,
                           std::string_view timestamp) {
    std::ofstream out(path);
    if (!out)
        throw InputError("cannot write " + path.string());
    for (const auto& [key, value] : entries) // std::map iterates sorted
        out << key << " = " << value << '\n';
    out << "generated_at = " << timestamp << '\n';
}

// ---------------------------------------------------------------------------
// Sigma table files: beta, T, sigma00, sigma01, sigma11 (+ provenance)
// ---------------------------------------------------------------------------

inline void write_sigma_table(const SigmaTable& table, std::ostream& out) {
    CsvWriter csv(out, {"beta", "T", "sigma00", "sigma01", "sigma11", "replicates", "lambda"});
    for (const auto& row : table.rows()) {
        const auto s = row.sigma();
        csv.row({format_double(row.beta), std::to_string(row.horizon), format_double(s[0]),
                 format_double(s[1]), format_double(s[2]), std::to_string(row.replicates),
                 std::to_string(row.lambda)});
    }
}

inline SigmaTable read_sigma_table(std::istream& in) {
    const CsvTable csv = read_csv(in);
    const auto beta = csv.column("beta");
    const auto horizon = csv.column("T");
    const auto s00 = csv.column("sigma00");
    const auto s01 = csv.column("sigma01");
    const auto s11 = csv.column("sigma11");
    const auto reps = csv.column("replicates");
    const auto lambda = csv.column("lambda");
    std::vector<SigmaRow> rows;
    rows.reserve(csv.rows.size());
    for (const auto& r : csv.rows) {
        SigmaRow row;
        row.beta = parse_double(r[beta]);
        row.horizon = static_cast<std::uint32_t>(parse_u64(r[horizon]));
        row.replicates = static_cast<std::uint32_t>(parse_u64(r[reps]));
        row.lambda = static_cast<std::uint32_t>(parse_u64(r[lambda]));
        // stored as replicate averages; restore summed totals
        for (std::size_t k = 0; k < 3; ++k) {
            const double avg = parse_double(r[k == 0 ? s00 : (k == 1 ? s01 : s11)]);
            row.totals[k] = static_cast<std::uint64_t>(std::llround(avg * row.replicates));
        }
        rows.push_back(row);
    }
    return SigmaTable(std::move(rows));
}

inline SigmaTable read_sigma_table_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw InputError("cannot read sigma table " + path.string());
    try {
        return read_sigma_table(in);
    } catch (const InputError& e) {
        throw InputError(path.string() + ": " + e.what());
    }
}

} // namespace cealab::io
