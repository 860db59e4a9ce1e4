#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <variant>
#include <vector>

namespace ctstep {

/// One CSV cell: verbatim string or a double formatted with 17 significant digits.
using CsvCell = std::variant<std::string, double, long long>;

/// Comma-separated writer with '#' comment header lines (key=value) followed
/// by a column-name row.  Numeric cells are written with fmt17 so identical
/// runs produce byte-identical files.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& file,
            const std::vector<std::pair<std::string, std::string>>& header_comments,
            const std::vector<std::string>& columns);

  void row(const std::vector<CsvCell>& cells);

  /// Extra '#' comment line mid-file (e.g. blow-up warnings).
  void comment(const std::string& text);

 private:
  std::ofstream out_;
  size_t n_columns_;
};

/// RFC-4180-style field quoting (only when the cell needs it).
std::string csv_escape(const std::string& field);

} // namespace ctstep
