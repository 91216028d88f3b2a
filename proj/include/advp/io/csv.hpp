#ifndef ADVP_IO_CSV_HPP
#define ADVP_IO_CSV_HPP

// Minimal RFC 4180 reader/writer: comma separated, CRLF or LF line ends, fields
// quoted when they contain a comma, quote, CR or LF; quotes doubled inside quotes.

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "advp/errors.hpp"

namespace advp::io {

using CsvRow = std::vector<std::string>;

inline std::string csv_escape(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

inline std::string csv_line(const CsvRow& row) {
  std::string out;
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (i) out += ',';
    out += csv_escape(row[i]);
  }
  out += "\r\n";
  return out;
}

inline std::vector<CsvRow> parse_csv(std::string_view text) {
  std::vector<CsvRow> rows;
  CsvRow row;
  std::string field;
  bool quoted = false, field_started = false;
  std::size_t i = 0;
  auto end_field = [&] {
    row.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_row = [&] {
    end_field();
    rows.push_back(std::move(row));
    row.clear();
  };
  while (i < text.size()) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
      ++i;
      continue;
    }
    if (c == '"') {
      if (field_started) throw ParseError("unexpected quote inside an unquoted CSV field", i);
      quoted = true;
      field_started = true;
    } else if (c == ',') {
      end_field();
    } else if (c == '\r' || c == '\n') {
      end_row();
      if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
    } else {
      field += c;
      field_started = true;
    }
    ++i;
  }
  if (quoted) throw ParseError("unterminated quoted CSV field", text.size());
  if (field_started || !row.empty()) end_row();
  return rows;
}

}  // namespace advp::io

#endif  // ADVP_IO_CSV_HPP
