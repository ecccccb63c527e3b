#pragma once

// Plain-text containers: dense matrices with a small header, and CSV files
// with 17 significant digits.

#include <map>
#include <string>
#include <vector>

#include "symmor/numerics.hpp"

namespace symmor {

// Header: "symmor-matrix 1", optional "key value" lines, "shape <rows> <cols>",
// a blank line, then entries column by column, one per line.
void write_matrix(const std::string& path, const Matrix& m, const std::map<std::string, std::string>& meta = {});
Matrix read_matrix(const std::string& path, std::map<std::string, std::string>* meta = nullptr);

std::vector<Vector> columns_of(const Matrix& m);
Matrix stack_columns(const std::vector<Vector>& cols);

class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& header);
  void row(const std::vector<std::string>& cells);
  void close();

 private:
  std::string path_;
  std::size_t width_;
  std::string buffer_;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::size_t column(const std::string& name) const;
};

CsvTable read_csv(const std::string& path);

void ensure_directory(const std::string& path);
bool file_exists(const std::string& path);

}  // namespace symmor
