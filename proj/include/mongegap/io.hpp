#pragma once

#include <string>
#include <vector>

#include "mongegap/types.hpp"

namespace mongegap {

// Shortest round-trip decimal form, independent of the global locale.
std::string format_double(double value);

// Writes content to `path` via a temporary file in the same directory
// followed by a rename, so readers never observe a partial file.
void atomic_write_text(const std::string& path, const std::string& content);

// One row per line, comma separated; the header is written first when given.
void write_matrix_csv(const std::string& path, const Matrix& values,
                      const std::vector<std::string>& header = {});

// Reads a numeric CSV written by write_matrix_csv (an optional non-numeric
// first line is skipped). All rows must have the same width.
Matrix read_matrix_csv(const std::string& path);

}  // namespace mongegap
