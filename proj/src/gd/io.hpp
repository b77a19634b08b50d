#pragma once

#include <string>
#include <vector>

#include "grid.hpp"

namespace gd {

// CSV writers with frozen formatting: 17 significant digits, '.' decimal,
// comma separator, '\n' line endings, so identical runs are byte-identical.
std::string format_g17(double x);

struct CsvWriter {
  explicit CsvWriter(std::vector<std::string> columns);
  void row(const std::vector<double>& values);
  void raw_row(const std::vector<std::string>& cells);
  void save(const std::string& path) const;
  const std::string& text() const { return buf_; }

 private:
  size_t ncols_;
  std::string buf_;
};

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

}  // namespace gd
