#include "io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace gd {

std::string format_g17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

CsvWriter::CsvWriter(std::vector<std::string> columns) : ncols_(columns.size()) {
  for (size_t i = 0; i < columns.size(); ++i) {
    if (i) buf_ += ',';
    buf_ += columns[i];
  }
  buf_ += '\n';
}

void CsvWriter::row(const std::vector<double>& values) {
  require(values.size() == ncols_, ErrorCode::io, "CSV row width mismatch");
  for (size_t i = 0; i < values.size(); ++i) {
    if (i) buf_ += ',';
    buf_ += format_g17(values[i]);
  }
  buf_ += '\n';
}

void CsvWriter::raw_row(const std::vector<std::string>& cells) {
  require(cells.size() == ncols_, ErrorCode::io, "CSV row width mismatch");
  for (size_t i = 0; i < cells.size(); ++i) {
    if (i) buf_ += ',';
    buf_ += cells[i];
  }
  buf_ += '\n';
}

void CsvWriter::save(const std::string& path) const { write_text_file(path, buf_); }

void write_text_file(const std::string& path, const std::string& content) {
  std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream f(path, std::ios::binary);
  require(f.good(), ErrorCode::io, "cannot open for writing: " + path);
  f << content;
}

std::string read_text_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  require(f.good(), ErrorCode::io, "cannot open for reading: " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace gd
