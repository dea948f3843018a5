#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace osmee {

// Parse or format failure; `line` is 1-based (0 when the error is not tied
// to a specific line, e.g. a missing column).
struct CsvError : std::runtime_error {
    long line;
    CsvError(long line_, const std::string& msg) : std::runtime_error(msg), line(line_) {}
};

// Numeric CSV with a mandatory header row. No quoting rules: this reader is
// for plain numeric tables (y,w data files and our own outputs).
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;

    std::size_t n_rows() const { return rows.size(); }
    bool has_column(const std::string& name) const;
    // Throws CsvError naming the column when absent.
    std::vector<double> column(const std::string& name) const;
};

CsvTable read_csv(const std::string& path);

// Shortest decimal string that round-trips to the same double. Used for all
// numeric file output so results are byte-comparable across runs.
std::string format_double(double v);

// Join cells with commas and write lines; convenience for small writers.
std::string join_row(const std::vector<std::string>& cells);

} // namespace osmee
