#include "mongegap/io.hpp"

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <system_error>

namespace mongegap {

std::string format_double(double value) {
  char buffer[64];
  auto result = std::to_chars(buffer, buffer + sizeof(buffer), value);
  if (result.ec != std::errc()) throw std::runtime_error("format_double: conversion failed");
  return std::string(buffer, result.ptr);
}

void atomic_write_text(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("atomic_write_text: cannot open " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw std::runtime_error("atomic_write_text: short write to " + tmp.string());
  }
  fs::rename(tmp, target);
}

void write_matrix_csv(const std::string& path, const Matrix& values,
                      const std::vector<std::string>& header) {
  std::string out;
  if (!header.empty()) {
    if (static_cast<Index>(header.size()) != values.cols())
      throw std::invalid_argument("write_matrix_csv: header width mismatch");
    for (std::size_t k = 0; k < header.size(); ++k) {
      if (k) out += ',';
      out += header[k];
    }
    out += '\n';
  }
  for (Index i = 0; i < values.rows(); ++i) {
    for (Index j = 0; j < values.cols(); ++j) {
      if (j) out += ',';
      out += format_double(values(i, j));
    }
    out += '\n';
  }
  atomic_write_text(path, out);
}

namespace {

bool parse_row(const std::string& line, std::vector<double>& row) {
  row.clear();
  const char* ptr = line.data();
  const char* end = line.data() + line.size();
  while (ptr < end) {
    double value = 0;
    auto result = std::from_chars(ptr, end, value);
    if (result.ec != std::errc()) return false;
    row.push_back(value);
    ptr = result.ptr;
    if (ptr < end) {
      if (*ptr != ',') return false;
      ++ptr;
    }
  }
  return !row.empty();
}

}  // namespace

Matrix read_matrix_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_matrix_csv: cannot open " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<double> row;
    if (!parse_row(line, row)) {
      if (first) {
        first = false;
        continue;  // header line
      }
      throw std::runtime_error("read_matrix_csv: malformed line in " + path);
    }
    first = false;
    if (!rows.empty() && rows.front().size() != row.size())
      throw std::runtime_error("read_matrix_csv: ragged rows in " + path);
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::runtime_error("read_matrix_csv: no data in " + path);
  Matrix values(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  for (Index i = 0; i < values.rows(); ++i)
    for (Index j = 0; j < values.cols(); ++j)
      values(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  return values;
}

}  // namespace mongegap
