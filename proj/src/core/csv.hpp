#pragma once

#include <string>
#include <unordered_map>
#include <vector>

namespace supaudit {

// Minimal RFC 4180 table: first record is the header; quoted fields may
// contain commas, quotes, and newlines.
class CsvTable {
 public:
  CsvTable(std::vector<std::string> header, std::vector<std::vector<std::string>> rows);

  bool has_column(const std::string& name) const;
  std::size_t row_count() const { return rows_.size(); }
  const std::string& cell(std::size_t row, const std::string& column) const;
  const std::vector<std::string>& header() const { return header_; }

 private:
  std::vector<std::string> header_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<std::vector<std::string>> rows_;
};

CsvTable read_csv(const std::string& path);
CsvTable parse_csv(const std::string& contents, const std::string& origin);

// Quotes a field iff it contains a comma, quote, or newline.
std::string csv_escape(const std::string& field);

}  // namespace supaudit
