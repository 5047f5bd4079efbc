#include "csv_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <unordered_map>

namespace cfhet::cli {

namespace {

std::string locate(std::size_t row, const std::string& column) {
    std::string where = row == 0 ? "header" : "row " + std::to_string(row);
    if (!column.empty()) where += ", column '" + column + "'";
    return where;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
    return s;
}

}  // namespace

DataError::DataError(const std::string& what, std::size_t row, std::string column)
    : std::runtime_error(locate(row, column) + ": " + what), row_(row), column_(std::move(column)) {}

std::vector<std::string> split_csv_line(const std::string& line, std::size_t row) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    bool was_quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur += c;
            }
        } else if (c == '"') {
            if (!trim(cur).empty() || was_quoted) {
                throw DataError("stray quote inside field " + std::to_string(fields.size() + 1), row);
            }
            cur.clear();
            quoted = was_quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(cur));
            cur.clear();
            was_quoted = false;
        } else {
            cur += c;
        }
    }
    if (quoted) throw DataError("unterminated quoted field", row);
    fields.push_back(std::move(cur));
    return fields;
}

std::optional<double> parse_cell(std::string_view cell, std::size_t row, const std::string& column) {
    cell = trim(cell);
    if (cell.empty() || cell == "NA" || cell == "NaN" || cell == "nan" || cell == "null") return std::nullopt;
    if (cell.front() == '+') cell.remove_prefix(1);
    double value = 0.0;
    const auto [end, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
    if (ec != std::errc() || end != cell.data() + cell.size()) {
        throw DataError("cannot parse '" + std::string(cell) + "' as a number", row, column);
    }
    if (!std::isfinite(value)) throw DataError("non-finite value '" + std::string(cell) + "'", row, column);
    return value;
}

NumericColumns read_csv_columns(const std::string& path, const std::vector<std::string>& columns) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open CSV file '" + path + "'");

    std::string line;
    if (!std::getline(in, line)) throw DataError("file is empty; a header row is required");
    if (line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::vector<std::string> header = split_csv_line(line, 0);

    std::unordered_map<std::string, std::size_t> position;
    for (std::size_t j = 0; j < header.size(); ++j) {
        const std::string name(trim(header[j]));
        if (name.empty()) throw DataError("empty column name at position " + std::to_string(j + 1));
        if (!position.emplace(name, j).second) throw DataError("duplicate column name", 0, name);
    }
    std::vector<std::size_t> wanted;
    for (const auto& name : columns) {
        const auto it = position.find(name);
        if (it == position.end()) throw ConfigError("column '" + name + "' not found in CSV header of '" + path + "'");
        wanted.push_back(it->second);
    }

    NumericColumns out;
    out.names = columns;
    std::vector<double> flat;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        const auto fields = split_csv_line(line, row);
        if (fields.size() != header.size()) {
            throw DataError("expected " + std::to_string(header.size()) + " fields, found " +
                                std::to_string(fields.size()),
                            row);
        }
        ++out.rows_read;
        std::vector<double> values;
        bool missing = false;
        for (std::size_t k = 0; k < wanted.size(); ++k) {
            const auto v = parse_cell(fields[wanted[k]], row, columns[k]);
            if (!v) {
                missing = true;
                break;
            }
            values.push_back(*v);
        }
        if (missing) {
            ++out.rows_dropped;
            continue;
        }
        flat.insert(flat.end(), values.begin(), values.end());
    }
    const auto kept = static_cast<Eigen::Index>(out.rows_read - out.rows_dropped);
    out.values.resize(kept, static_cast<Eigen::Index>(columns.size()));
    for (Eigen::Index i = 0; i < kept; ++i) {
        for (Eigen::Index j = 0; j < out.values.cols(); ++j) {
            out.values(i, j) = flat[static_cast<std::size_t>(i * out.values.cols() + j)];
        }
    }
    return out;
}

LoadedData load_dataset(const std::string& path, const ColumnRoles& roles) {
    if (roles.y.empty()) throw ConfigError("--y is required");
    if (roles.d.empty()) throw ConfigError("--d is required");
    if (roles.z.empty()) throw ConfigError("--z needs at least one instrument column");
    std::vector<std::string> all{roles.y, roles.d};
    all.insert(all.end(), roles.x.begin(), roles.x.end());
    all.insert(all.end(), roles.z.begin(), roles.z.end());
    std::set<std::string> seen;
    for (const auto& name : all) {
        if (!seen.insert(name).second) throw ConfigError("column '" + name + "' is assigned to more than one role");
    }

    const NumericColumns cols = read_csv_columns(path, all);
    const Eigen::Index n = cols.values.rows();
    if (n == 0) throw DataError("no complete rows remain after dropping missing values");
    const auto px = static_cast<Eigen::Index>(roles.x.size());
    const auto pz = static_cast<Eigen::Index>(roles.z.size());

    MatrixXd x = cols.values.middleCols(2, px);
    std::vector<std::string> x_labels = roles.x;
    bool has_constant = false;
    for (Eigen::Index j = 0; j < px; ++j) {
        if (x(0, j) != 0.0 && (x.col(j).array() == x(0, j)).all()) has_constant = true;
    }
    if (!has_constant) {
        std::string name = "const";
        while (seen.count(name)) name = "_" + name;
        MatrixXd with_const(n, px + 1);
        with_const << VectorXd::Ones(n), x;
        x = std::move(with_const);
        x_labels.insert(x_labels.begin(), name);
    }

    LoadedData out{Dataset(cols.values.col(0), cols.values.col(1), std::move(x), std::move(x_labels),
                           cols.values.middleCols(2 + px, pz), roles.z, roles.y, roles.d),
                   cols.rows_read, cols.rows_dropped, !has_constant};
    return out;
}

void write_dataset_csv(const Dataset& data, const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) throw ConfigError("cannot write '" + path + "'");
    std::vector<std::string> names{data.y_label(), data.d_label()};
    names.insert(names.end(), data.x_labels().begin(), data.x_labels().end());
    names.insert(names.end(), data.z_labels().begin(), data.z_labels().end());
    for (std::size_t j = 0; j < names.size(); ++j) std::fprintf(f, "%s%s", j ? "," : "", names[j].c_str());
    std::fputc('\n', f);
    for (Eigen::Index i = 0; i < data.n(); ++i) {
        std::fprintf(f, "%.17g,%.17g", data.y()(i), data.d()(i));
        for (Eigen::Index j = 0; j < data.p_x(); ++j) std::fprintf(f, ",%.17g", data.x()(i, j));
        for (Eigen::Index j = 0; j < data.p_z(); ++j) std::fprintf(f, ",%.17g", data.z()(i, j));
        std::fputc('\n', f);
    }
    if (std::fclose(f) != 0) throw ConfigError("error while writing '" + path + "'");
}

}  // namespace cfhet::cli
