#include "core/csv.hpp"

#include "core/error.hpp"
#include "core/textutil.hpp"

namespace supaudit {

CsvTable::CsvTable(std::vector<std::string> header,
                   std::vector<std::vector<std::string>> rows)
    : header_(std::move(header)), rows_(std::move(rows)) {
  for (std::size_t i = 0; i < header_.size(); ++i) index_[header_[i]] = i;
}

bool CsvTable::has_column(const std::string& name) const {
  return index_.count(name) != 0;
}

const std::string& CsvTable::cell(std::size_t row, const std::string& column) const {
  auto it = index_.find(column);
  if (it == index_.end()) throw Error(ErrorKind::parse, "no such CSV column: " + column);
  return rows_.at(row).at(it->second);
}

CsvTable parse_csv(const std::string& contents, const std::string& origin) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;

  auto end_field = [&] {
    record.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_record = [&] {
    end_field();
    records.push_back(std::move(record));
    record.clear();
  };

  for (std::size_t i = 0; i < contents.size(); ++i) {
    char c = contents[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < contents.size() && contents[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        if (!field_started && field.empty()) {
          in_quotes = true;
          field_started = true;
        } else {
          field.push_back(c);
        }
        break;
      case ',':
        end_field();
        break;
      case '\r':
        break;
      case '\n':
        end_record();
        break;
      default:
        field.push_back(c);
        field_started = true;
        break;
    }
  }
  if (in_quotes) throw Error(ErrorKind::parse, origin + ": unterminated quoted field");
  if (field_started || !field.empty() || !record.empty()) end_record();

  if (records.empty()) throw Error(ErrorKind::parse, origin + ": empty CSV");
  std::vector<std::string> header = std::move(records.front());
  std::vector<std::vector<std::string>> rows(records.begin() + 1, records.end());
  // Drop fully-empty trailing records.
  while (!rows.empty() && rows.back().size() == 1 && rows.back().front().empty()) {
    rows.pop_back();
  }
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != header.size()) {
      throw Error(ErrorKind::parse, origin + ": row " + std::to_string(r + 2) + " has " +
                                        std::to_string(rows[r].size()) + " fields, expected " +
                                        std::to_string(header.size()));
    }
  }
  return CsvTable(std::move(header), std::move(rows));
}

CsvTable read_csv(const std::string& path) {
  return parse_csv(read_file(path), path);
}

std::string csv_escape(const std::string& field) {
  bool needs_quotes = false;
  for (char c : field) {
    if (c == ',' || c == '"' || c == '\n' || c == '\r') {
      needs_quotes = true;
      break;
    }
  }
  if (!needs_quotes) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out.push_back('"');
  return out;
}

}  // namespace supaudit
