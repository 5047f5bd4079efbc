#pragma once

#include "cfhet/dataset.hpp"

#include <stdexcept>
#include <string>
#include <vector>

namespace cfhet::cli {

/// Malformed input file; carries a 1-based data row (0 for the header) and a column name.
class DataError : public std::runtime_error {
public:
    DataError(const std::string& what, std::size_t row = 0, std::string column = {});
    std::size_t row() const noexcept { return row_; }
    const std::string& column() const noexcept { return column_; }

private:
    std::size_t row_;
    std::string column_;
};

/// Bad flags or column roles.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct NumericColumns {
    std::vector<std::string> names;
    MatrixXd values;  // rows x names.size(), complete cases only
    std::size_t rows_read = 0;
    std::size_t rows_dropped = 0;
};

/// Splits one CSV record. Double-quoted fields may contain commas and "" escapes.
std::vector<std::string> split_csv_line(const std::string& line, std::size_t row);

/// Parses a numeric cell ('.' decimal, scientific notation allowed). Returns
/// nullopt for a missing value: empty, NA, NaN, nan or null.
std::optional<double> parse_cell(std::string_view cell, std::size_t row, const std::string& column);

/// Reads the requested columns. Rows with a missing value in any requested
/// column are dropped and counted; other columns are never parsed.
NumericColumns read_csv_columns(const std::string& path, const std::vector<std::string>& columns);

struct ColumnRoles {
    std::string y;
    std::string d;
    std::vector<std::string> x;
    std::vector<std::string> z;
};

struct LoadedData {
    Dataset data;
    std::size_t rows_read = 0;
    std::size_t rows_dropped = 0;
    bool constant_added = false;
};

/// Builds a Dataset from a CSV file. A column of ones named "const" is prepended to X
/// when none of the requested X columns is constant.
LoadedData load_dataset(const std::string& path, const ColumnRoles& roles);

/// Writes y, d, X and Z with round-trip precision.
void write_dataset_csv(const Dataset& data, const std::string& path);

}  // namespace cfhet::cli
