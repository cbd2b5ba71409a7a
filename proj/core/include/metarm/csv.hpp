#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace metarm {

// Shortest decimal form that parses back to the same bits.
std::string format_double(double v);

// Header-first CSV with numeric cells; every row must match the header arity.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, std::vector<std::string> header);

  void write_row(const std::vector<std::string>& cells);

 private:
  std::ofstream out_;
  std::filesystem::path path_;
  std::size_t columns_;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column(const std::string& name) const;  // -1 when absent
};

CsvTable read_csv(const std::filesystem::path& path);

}  // namespace metarm
