#include "gm/csv.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "gm/errors.hpp"

namespace gm {
namespace {

std::string trimmed(const std::string& cell) {
    const auto begin = cell.find_first_not_of(" \t\r");
    if (begin == std::string::npos) return "";
    const auto end = cell.find_last_not_of(" \t\r");
    return cell.substr(begin, end - begin + 1);
}

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        cells.push_back(trimmed(line.substr(start, comma - start)));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return cells;
}

bool parse_cell(const std::string& cell, double& out) {
    if (cell.empty()) return false;
    const char* first = cell.data();
    const char* last = first + cell.size();
    const auto result = std::from_chars(first, last, out);
    return result.ec == std::errc() && result.ptr == last;
}

}  // namespace

std::string format_number(double value) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", value);
    return buf;
}

CsvTable read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);

    std::vector<std::vector<double>> rows;
    CsvTable table;
    std::string line;
    int line_number = 0;
    std::size_t width = 0;
    while (std::getline(in, line)) {
        ++line_number;
        if (line.empty() && rows.empty() && table.header.empty()) continue;
        const std::vector<std::string> cells = split_line(line);
        if (cells.size() == 1 && cells[0].empty()) continue;  // blank line

        std::vector<double> row(cells.size());
        bool numeric = true;
        for (std::size_t j = 0; j < cells.size(); ++j)
            if (!parse_cell(cells[j], row[j])) {
                numeric = false;
                if (line_number > 1 || !rows.empty() || !table.header.empty())
                    throw ParseError(path + " line " + std::to_string(line_number) +
                                     ": non-numeric cell '" + cells[j] + "'");
                break;
            }
        if (!numeric) {
            table.header = cells;
            width = cells.size();
            continue;
        }
        if (width == 0) width = cells.size();
        if (cells.size() != width)
            throw ParseError(path + " line " + std::to_string(line_number) +
                             ": expected " + std::to_string(width) + " cells, found " +
                             std::to_string(cells.size()));
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw ParseError(path + ": no data rows");

    table.values.resize(static_cast<Eigen::Index>(rows.size()),
                        static_cast<Eigen::Index>(width));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < width; ++j)
            table.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                rows[i][j];
    return table;
}

Matrix read_matrix_csv(const std::string& path) { return read_csv(path).values; }

Vector read_vector_csv(const std::string& path) {
    const CsvTable table = read_csv(path);
    if (table.values.cols() != 1)
        throw ParseError(path + ": expected a single column, found " +
                         std::to_string(table.values.cols()));
    return table.values.col(0);
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const Matrix& values) {
    if (!header.empty() &&
        static_cast<Eigen::Index>(header.size()) != values.cols())
        throw InvalidArgumentError("header length does not match column count");
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    if (!header.empty()) {
        for (std::size_t j = 0; j < header.size(); ++j)
            out << (j ? "," : "") << header[j];
        out << '\n';
    }
    for (Eigen::Index i = 0; i < values.rows(); ++i) {
        for (Eigen::Index j = 0; j < values.cols(); ++j)
            out << (j ? "," : "") << format_number(values(i, j));
        out << '\n';
    }
    if (!out) throw IoError("write failed for " + path);
}

namespace {

RegressionProblem finish_problem(RegressionProblem problem, bool standardize_inputs) {
    if (problem.design.rows() <= 1)
        throw ParseError("need more than one observation, found " +
                         std::to_string(problem.design.rows()));
    return standardize_inputs ? standardize(problem) : problem;
}

}  // namespace

RegressionProblem ingest_csv(const std::string& design_path,
                             const std::string& response_path,
                             bool standardize_inputs) {
    RegressionProblem problem;
    problem.design = read_matrix_csv(design_path);
    problem.response = read_vector_csv(response_path);
    if (problem.response.size() != problem.design.rows())
        throw ParseError(response_path + ": " + std::to_string(problem.response.size()) +
                         " responses for " + std::to_string(problem.design.rows()) +
                         " design rows");
    return finish_problem(std::move(problem), standardize_inputs);
}

RegressionProblem ingest_csv_combined(const std::string& path,
                                      const std::string& target,
                                      bool standardize_inputs) {
    const CsvTable table = read_csv(path);
    Eigen::Index target_col = -1;
    for (std::size_t j = 0; j < table.header.size(); ++j)
        if (table.header[j] == target) target_col = static_cast<Eigen::Index>(j);
    if (target_col < 0) {
        double parsed = 0.0;
        if (parse_cell(target, parsed) && parsed == static_cast<Eigen::Index>(parsed) &&
            parsed >= 0 && parsed < table.values.cols())
            target_col = static_cast<Eigen::Index>(parsed);
    }
    if (target_col < 0)
        throw InvalidArgumentError("target column '" + target + "' not found in " + path);

    RegressionProblem problem;
    problem.response = table.values.col(target_col);
    problem.design.resize(table.values.rows(), table.values.cols() - 1);
    Eigen::Index out_col = 0;
    for (Eigen::Index j = 0; j < table.values.cols(); ++j)
        if (j != target_col) problem.design.col(out_col++) = table.values.col(j);
    return finish_problem(std::move(problem), standardize_inputs);
}

}  // namespace gm
