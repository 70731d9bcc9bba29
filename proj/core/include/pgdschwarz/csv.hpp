#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace pgdschwarz {

// RFC-4180 quoting: fields with commas, quotes or line breaks are quoted, quotes doubled.
std::string csv_escape(const std::string& field);
// Round-trip decimal representation.
std::string csv_number(double v);

class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header);
  void row(const std::vector<std::string>& fields);

 private:
  std::ofstream out_;
  std::size_t columns_;
};

using CsvTable = std::vector<std::vector<std::string>>;
CsvTable read_csv(const std::filesystem::path& path);
CsvTable parse_csv(const std::string& text);

}  // namespace pgdschwarz
