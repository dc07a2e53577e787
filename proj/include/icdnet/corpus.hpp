// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "icdnet/csv.hpp"
#include "icdnet/error.hpp"
#include "icdnet/icd.hpp"
#include "icdnet/text.hpp"

// Corpus files hold one JSON object per line:
//   {"note_id": "...", "text": "...", "codes": ["4280", "401.9"]}
// The CSV adapter reads a header `note_id,text,codes` with codes joined
// by ';'.

namespace icdnet {

namespace detail {

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error("file not found: " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

inline void check_unique_ids(const std::vector<RawNote>& notes, const std::vector<std::size_t>& lines,
                             const std::string& origin) {
  std::set<std::string> ids;
  for (std::size_t i = 0; i < notes.size(); ++i) {
    if (!ids.insert(notes[i].note_id).second) {
      throw ValidationError(origin + " line " + std::to_string(lines[i]) + ": duplicate note_id '" +
                            notes[i].note_id + "'");
    }
  }
}

}  // namespace detail

inline std::vector<RawNote> parse_corpus_jsonl(const std::string& text, const std::string& origin = "corpus") {
  std::vector<RawNote> notes;
  std::vector<std::size_t> lines;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto where = [&] { return origin + " line " + std::to_string(lineno); };
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error&) {
      throw ParseError(where() + ": not valid JSON");
    }
    if (!j.is_object() || !j.contains("note_id") || !j.contains("text") || !j.contains("codes") ||
        !j["note_id"].is_string() || !j["text"].is_string() || !j["codes"].is_array()) {
      throw ParseError(where() + ": expected {note_id: string, text: string, codes: [string]}");
    }
    RawNote n;
    n.note_id = j["note_id"].get<std::string>();
    if (n.note_id.empty()) throw ParseError(where() + ": empty note_id");
    n.text = j["text"].get<std::string>();
    for (const auto& c : j["codes"]) {
      if (!c.is_string()) throw ParseError(where() + ": codes must be strings");
      n.codes.push_back(c.get<std::string>());
    }
    notes.push_back(std::move(n));
    lines.push_back(lineno);
  }
  detail::check_unique_ids(notes, lines, origin);
  return notes;
}

inline std::vector<RawNote> parse_corpus_csv(const std::string& text, const std::string& origin = "corpus") {
  std::vector<std::size_t> lines;
  auto rows = parse_csv(text, &lines);
  if (rows.empty()) return {};
  if (rows[0] != std::vector<std::string>{"note_id", "text", "codes"}) {
    throw ParseError(origin + ": expected CSV header note_id,text,codes");
  }
  std::vector<RawNote> notes;
  std::vector<std::size_t> note_lines;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    if (rows[r].size() != 3) {
      throw ParseError(origin + " line " + std::to_string(lines[r]) + ": expected 3 fields, got " +
                       std::to_string(rows[r].size()));
    }
    RawNote n{rows[r][0], rows[r][1], {}};
    if (n.note_id.empty()) throw ParseError(origin + " line " + std::to_string(lines[r]) + ": empty note_id");
    std::string_view codes = rows[r][2];
    while (!codes.empty()) {
      auto semi = codes.find(';');
      std::string_view c = codes.substr(0, semi);
      if (!c.empty()) n.codes.emplace_back(c);
      if (semi == std::string_view::npos) break;
      codes.remove_prefix(semi + 1);
    }
    notes.push_back(std::move(n));
    note_lines.push_back(lines[r]);
  }
  detail::check_unique_ids(notes, note_lines, origin);
  return notes;
}

/// Reads a corpus, choosing the CSV adapter for files ending in ".csv".
inline std::vector<RawNote> read_corpus(const std::filesystem::path& path) {
  std::string text = detail::read_file(path);
  if (path.extension() == ".csv") return parse_corpus_csv(text, path.string());
  return parse_corpus_jsonl(text, path.string());
}

inline std::string corpus_to_jsonl(const std::vector<RawNote>& notes) {
  std::string out;
  for (const auto& n : notes) {
    nlohmann::json j;
    j["note_id"] = n.note_id;
    j["text"] = n.text;
    j["codes"] = n.codes;
    out += j.dump() + "\n";
  }
  return out;
}

inline void write_text_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error("cannot open " + path.string() + " for writing");
  f << content;
  if (!f) throw Error("failed writing " + path.string());
}

/// Codes of every note, parsed. Malformed codes fail with the note id.
inline std::vector<std::vector<IcdCode>> parse_corpus_codes(const std::vector<RawNote>& notes) {
  std::vector<std::vector<IcdCode>> out;
  out.reserve(notes.size());
  for (const auto& n : notes) {
    std::vector<IcdCode> codes;
    for (const auto& c : n.codes) {
      try {
        codes.push_back(parse_code(c));
      } catch (const ParseError& e) {
        throw ParseError("note " + n.note_id + ": " + e.what());
      }
    }
    out.push_back(std::move(codes));
  }
  return out;
}

}  // namespace icdnet
