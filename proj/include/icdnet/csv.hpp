// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "icdnet/error.hpp"

namespace icdnet {

/// RFC 4180 reader: quoted fields may hold commas, doubled quotes and
/// newlines. Returns one vector of fields per record. Blank lines are
/// skipped. `line_of` receives the 1-based starting line of each record.
inline std::vector<std::vector<std::string>> parse_csv(std::string_view text,
                                                       std::vector<std::size_t>* line_of = nullptr) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> fields;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  std::size_t line = 1, record_line = 1;

  auto end_record = [&] {
    if (field_started || !fields.empty()) {
      fields.push_back(std::move(field));
      records.push_back(std::move(fields));
      if (line_of) line_of->push_back(record_line);
    }
    fields.clear();
    field.clear();
    field_started = false;
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line;
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        if (!field.empty()) throw ParseError("csv line " + std::to_string(line) + ": stray quote");
        in_quotes = true;
        field_started = true;
        break;
      case ',':
        fields.push_back(std::move(field));
        field.clear();
        field_started = true;
        break;
      case '\r':
        break;
      case '\n':
        end_record();
        ++line;
        record_line = line;
        break;
      default:
        if (!field_started && fields.empty() && field.empty()) record_line = line;
        field.push_back(c);
        field_started = true;
    }
  }
  if (in_quotes) throw ParseError("csv line " + std::to_string(record_line) + ": unterminated quoted field");
  end_record();
  return records;
}

/// Quotes a field when it contains a comma, quote or newline.
inline std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

}  // namespace icdnet
