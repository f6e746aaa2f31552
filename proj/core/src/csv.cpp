#include "levyest/csv.hpp"

#include <cstdio>
#include <sstream>

#include "levyest/errors.hpp"

namespace levyest {

CsvWriter::CsvWriter(const std::string& path, const std::string& schema)
    : out_(path) {
  if (!out_) throw error("cannot open '" + path + "' for writing");
  out_ << "# levyest-csv/1 " << schema << "\n";
}

void CsvWriter::comment(const std::string& line) { out_ << "# " << line << "\n"; }

void CsvWriter::header(const std::vector<std::string>& columns) {
  for (std::size_t i = 0; i < columns.size(); ++i)
    out_ << (i ? "," : "") << columns[i];
  out_ << "\n";
}

void CsvWriter::row(const std::vector<std::string>& cells) {
  for (std::size_t i = 0; i < cells.size(); ++i)
    out_ << (i ? "," : "") << cells[i];
  out_ << "\n";
}

void CsvWriter::flush() { out_.flush(); }

std::string CsvWriter::num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string CsvWriter::num(long long v) { return std::to_string(v); }
std::string CsvWriter::num(std::size_t v) { return std::to_string(v); }

std::vector<std::string> csv_split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  return out;
}

}  // namespace levyest
