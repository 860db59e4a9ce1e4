#include "ctstep/csv.hpp"

#include <cstdio>

#include "ctstep/common.hpp"
#include "ctstep/errors.hpp"

namespace ctstep {

std::string fmt17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

CsvWriter::CsvWriter(const std::filesystem::path& file,
                     const std::vector<std::pair<std::string, std::string>>& header_comments,
                     const std::vector<std::string>& columns)
    : n_columns_(columns.size()) {
  std::filesystem::create_directories(file.parent_path().empty() ? "." : file.parent_path());
  out_.open(file);
  if (!out_) throw ArgumentError("cannot open '" + file.string() + "' for writing");
  for (const auto& [k, v] : header_comments) out_ << "# " << k << "=" << v << "\n";
  for (size_t i = 0; i < columns.size(); ++i) {
    if (i) out_ << ",";
    out_ << csv_escape(columns[i]);
  }
  out_ << "\n";
}

void CsvWriter::row(const std::vector<CsvCell>& cells) {
  if (cells.size() != n_columns_) throw ArgumentError("csv row width mismatch");
  for (size_t i = 0; i < cells.size(); ++i) {
    if (i) out_ << ",";
    if (std::holds_alternative<double>(cells[i])) {
      out_ << fmt17(std::get<double>(cells[i]));
    } else if (std::holds_alternative<long long>(cells[i])) {
      out_ << std::get<long long>(cells[i]);
    } else {
      out_ << csv_escape(std::get<std::string>(cells[i]));
    }
  }
  out_ << "\n";
}

void CsvWriter::comment(const std::string& text) { out_ << "# " << text << "\n"; }

} // namespace ctstep
