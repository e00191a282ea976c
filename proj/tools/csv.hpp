#pragma once

#include <string>
#include <vector>

#include "tsiv/core_model.hpp"

namespace tsiv::cli {

// Comma-separated table with a mandatory header row. Fields may be wrapped in
// double quotes; embedded commas inside quotes are not supported.
struct CsvTable {
  std::string path;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  // Throws Error(InvalidInput) naming the file when the column is absent.
  std::size_t column(const std::string& name) const;
  double number(std::size_t row, std::size_t col) const;
  Vector numeric_column(std::size_t col) const;
  Matrix numeric_columns(std::size_t first, std::size_t count) const;
};

CsvTable read_csv(const std::string& path);

// Shortest text that parses back to the same double.
std::string format_double(double v);

void write_text(const std::string& path, const std::string& content);

}  // namespace tsiv::cli
