#pragma once

#include <fstream>
#include <string>
#include <vector>

namespace levyest {

// Minimal CSV writer.  Every file starts with one or more '#' comment lines,
// the first of which carries the schema name and version, e.g.
//   # levyest-csv/1 trajectory
// followed by a plain header row.  Numbers are written with enough digits to
// round-trip doubles exactly, which keeps fixed-seed runs byte-identical.

class CsvWriter {
public:
  CsvWriter(const std::string& path, const std::string& schema);

  void comment(const std::string& line);
  void header(const std::vector<std::string>& columns);
  void row(const std::vector<std::string>& cells);
  void flush();

  static std::string num(double v);
  static std::string num(long long v);
  static std::string num(std::size_t v);

private:
  std::ofstream out_;
};

/// Splits one CSV line; no quoting support (none of our fields need it).
std::vector<std::string> csv_split(const std::string& line);

}  // namespace levyest
