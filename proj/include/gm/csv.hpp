#pragma once

#include <string>
#include <vector>

#include "gm/linalg.hpp"

namespace gm {

// Rectangular numeric CSV contents. `header` is empty when the file starts
// directly with data; a first row containing any non-numeric cell is treated
// as the header.
struct CsvTable {
    std::vector<std::string> header;
    Matrix values;
};

CsvTable read_csv(const std::string& path);
Matrix read_matrix_csv(const std::string& path);
Vector read_vector_csv(const std::string& path);

// Shortest decimal form that parses back to the same double (17 significant
// digits); shared by every CSV emitter so round-trips are bitwise.
std::string format_number(double value);

// Writes values with enough digits that re-reading reproduces them bitwise.
// `header` may be empty; otherwise its length must match the column count.
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const Matrix& values);

// Loads a design/response pair into a RegressionProblem. The response file
// must hold a single column with one row per design row.
RegressionProblem ingest_csv(const std::string& design_path,
                             const std::string& response_path,
                             bool standardize_inputs = true);

// Single-file variant: `target` names the response column, either by header
// name or as a 0-based column index; the remaining columns form the design.
RegressionProblem ingest_csv_combined(const std::string& path,
                                      const std::string& target,
                                      bool standardize_inputs = true);

}  // namespace gm
