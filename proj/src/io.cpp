#include "symmor/io.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

namespace symmor {

void write_matrix(const std::string& path, const Matrix& m, const std::map<std::string, std::string>& meta) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("write_matrix: cannot open " + path);
  os << "symmor-matrix 1\n";
  for (const auto& [k, v] : meta) {
    if (k.empty() || k.find_first_of(" \n") != std::string::npos || v.find('\n') != std::string::npos || k == "shape") {
      throw std::invalid_argument("write_matrix: invalid metadata key '" + k + "'");
    }
    os << k << " " << v << "\n";
  }
  os << "shape " << m.rows() << " " << m.cols() << "\n\n";
  for (Index j = 0; j < m.cols(); ++j) {
    for (Index i = 0; i < m.rows(); ++i) os << format_real(m(i, j)) << "\n";
  }
  if (!os) throw std::runtime_error("write_matrix: write failed for " + path);
}

Matrix read_matrix(const std::string& path, std::map<std::string, std::string>* meta) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ParseError("read_matrix: cannot open " + path);
  std::string line;
  if (!std::getline(is, line) || line != "symmor-matrix 1") throw ParseError(path + ": missing matrix magic line");
  long long rows = -1, cols = -1;
  while (std::getline(is, line) && !line.empty()) {
    const auto sp = line.find(' ');
    if (sp == std::string::npos) throw ParseError(path + ": malformed header line '" + line + "'");
    const std::string key = line.substr(0, sp);
    const std::string val = line.substr(sp + 1);
    if (key == "shape") {
      std::istringstream ss(val);
      if (!(ss >> rows >> cols) || rows < 0 || cols < 0) throw ParseError(path + ": malformed shape");
    } else if (meta) {
      (*meta)[key] = val;
    }
  }
  if (rows < 0) throw ParseError(path + ": missing shape");
  Matrix m(rows, cols);
  for (Index j = 0; j < cols; ++j) {
    for (Index i = 0; i < rows; ++i) {
      if (!std::getline(is, line)) throw ParseError(path + ": truncated matrix data");
      try {
        std::size_t used = 0;
        m(i, j) = std::stod(line, &used);
        if (used != line.size()) throw ParseError("");
      } catch (const std::exception&) {
        throw ParseError(path + ": bad value '" + line + "'");
      }
    }
  }
  return m;
}

std::vector<Vector> columns_of(const Matrix& m) {
  std::vector<Vector> out;
  out.reserve(m.cols());
  for (Index j = 0; j < m.cols(); ++j) out.emplace_back(m.col(j));
  return out;
}

Matrix stack_columns(const std::vector<Vector>& cols) {
  if (cols.empty()) return Matrix();
  Matrix m(cols.front().size(), static_cast<Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) {
    if (cols[j].size() != m.rows()) throw DimensionError("stack_columns: inconsistent lengths");
    m.col(static_cast<Index>(j)) = cols[j];
  }
  return m;
}

namespace {

std::string join_row(const std::vector<std::string>& cells) {
  std::string out;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (cells[i].find_first_of(",\"\n") != std::string::npos) {
      throw std::invalid_argument("CsvWriter: cell needs quoting: '" + cells[i] + "'");
    }
    if (i) out += ',';
    out += cells[i];
  }
  out += '\n';
  return out;
}

std::vector<std::string> split_row(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

CsvWriter::CsvWriter(const std::string& path, const std::vector<std::string>& header)
    : path_(path), width_(header.size()), buffer_(join_row(header)) {}

void CsvWriter::row(const std::vector<std::string>& cells) {
  if (cells.size() != width_) throw std::invalid_argument("CsvWriter: row width mismatch in " + path_);
  buffer_ += join_row(cells);
}

void CsvWriter::close() {
  std::ofstream os(path_, std::ios::binary);
  if (!os) throw std::runtime_error("CsvWriter: cannot open " + path_);
  os << buffer_;
  if (!os) throw std::runtime_error("CsvWriter: write failed for " + path_);
}

std::size_t CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  throw ParseError("csv: missing column '" + name + "'");
}

CsvTable read_csv(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ParseError("read_csv: cannot open " + path);
  CsvTable t;
  std::string line;
  if (!std::getline(is, line)) throw ParseError(path + ": empty csv");
  t.header = split_row(line);
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    auto cells = split_row(line);
    if (cells.size() != t.header.size()) throw ParseError(path + ": row width mismatch");
    t.rows.push_back(std::move(cells));
  }
  return t;
}

void ensure_directory(const std::string& path) { std::filesystem::create_directories(path); }

bool file_exists(const std::string& path) { return std::filesystem::exists(path); }

}  // namespace symmor
