// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <compare>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "icdnet/csv.hpp"
#include "icdnet/error.hpp"

namespace icdnet {

enum class CodeKind { Numeric, V, E };

/// ICD-9 code in canonical form: 3-digit root (2 digits for V codes),
/// optional subdivision digits after a dot.
struct IcdCode {
  CodeKind kind = CodeKind::Numeric;
  int root = 0;
  std::string subdivision;

  std::string str() const {
    char buf[8];
    switch (kind) {
      case CodeKind::Numeric: std::snprintf(buf, sizeof buf, "%03d", root); break;
      case CodeKind::V: std::snprintf(buf, sizeof buf, "V%02d", root); break;
      case CodeKind::E: std::snprintf(buf, sizeof buf, "E%03d", root); break;
    }
    std::string s(buf);
    if (!subdivision.empty()) s += "." + subdivision;
    return s;
  }

  friend bool operator==(const IcdCode& a, const IcdCode& b) = default;
  friend std::strong_ordering operator<=>(const IcdCode& a, const IcdCode& b) { return a.str() <=> b.str(); }
};

/// Accepts dotted ("428.0", "V30.00", "E812.0") and undotted MIMIC style
/// ("4280", "V3000", "E8120") codes.
inline IcdCode parse_code(std::string_view raw) {
  auto fail = [&](const char* why) -> IcdCode {
    throw ParseError("malformed ICD-9 code '" + std::string(raw) + "': " + why);
  };
  std::string_view s = raw;
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  if (s.empty()) return fail("empty");

  IcdCode code;
  std::size_t root_digits = 3, max_sub = 2;
  if (s.front() == 'V' || s.front() == 'v') {
    code.kind = CodeKind::V;
    root_digits = 2;
    s.remove_prefix(1);
  } else if (s.front() == 'E' || s.front() == 'e') {
    code.kind = CodeKind::E;
    max_sub = 1;
    s.remove_prefix(1);
  }

  std::string_view root, sub;
  if (auto dot = s.find('.'); dot != std::string_view::npos) {
    root = s.substr(0, dot);
    sub = s.substr(dot + 1);
    if (sub.empty()) return fail("empty subdivision after '.'");
  } else {
    if (s.size() < root_digits) return fail("root too short");
    root = s.substr(0, root_digits);
    sub = s.substr(root_digits);
  }
  if (root.size() != root_digits) return fail("wrong root width");
  if (sub.size() > max_sub) return fail("subdivision too long");
  auto all_digits = [](std::string_view v) {
    return std::all_of(v.begin(), v.end(), [](char c) { return c >= '0' && c <= '9'; });
  };
  if (!all_digits(root) || !all_digits(sub)) return fail("non-digit character");
  code.root = std::stoi(std::string(root));
  if (code.kind == CodeKind::Numeric && code.root == 0) return fail("numeric root must be in 001-999");
  if (code.kind == CodeKind::V && code.root == 0) return fail("V root must be in V01-V99");
  code.subdivision = std::string(sub);
  return code;
}

struct Chapter {
  int id = 0;
  int lo = 0;
  int hi = 0;
  std::string name;

  /// Class label used in label spaces and predictions, e.g. "390-459".
  std::string label() const {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%03d-%03d", lo, hi);
    return buf;
  }
  friend bool operator==(const Chapter&, const Chapter&) = default;
};

/// The level-1 chapters of the numeric ICD-9 tree: 17 disjoint inclusive
/// root ranges covering 001-999 in order.
class ChapterTable {
 public:
  static constexpr std::size_t kChapterCount = 17;

  explicit ChapterTable(std::vector<Chapter> chapters) : chapters_(std::move(chapters)) { validate(); }

  static ChapterTable from_csv(std::string_view text, const std::string& origin = "chapter table") {
    std::vector<std::size_t> lines;
    auto rows = parse_csv(text, &lines);
    if (rows.empty() || rows[0] != std::vector<std::string>{"chapter_id", "lo", "hi", "name"}) {
      throw ParseError(origin + ": expected header chapter_id,lo,hi,name");
    }
    std::vector<Chapter> chapters;
    for (std::size_t r = 1; r < rows.size(); ++r) {
      const auto& f = rows[r];
      if (f.size() != 4) throw ParseError(origin + " line " + std::to_string(lines[r]) + ": expected 4 fields");
      try {
        chapters.push_back({std::stoi(f[0]), std::stoi(f[1]), std::stoi(f[2]), f[3]});
      } catch (const std::logic_error&) {
        throw ParseError(origin + " line " + std::to_string(lines[r]) + ": non-numeric field");
      }
    }
    return ChapterTable(std::move(chapters));
  }

  static ChapterTable load(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw Error("chapter table not found: " + path.string());
    std::stringstream ss;
    ss << f.rdbuf();
    return from_csv(ss.str(), path.string());
  }

  std::string to_csv() const {
    std::string out = "chapter_id,lo,hi,name\n";
    for (const auto& c : chapters_)
      out += std::to_string(c.id) + "," + std::to_string(c.lo) + "," + std::to_string(c.hi) + "," + csv_field(c.name) + "\n";
    return out;
  }

  const std::vector<Chapter>& chapters() const { return chapters_; }

  /// Chapter whose range contains a numeric root.
  const Chapter* find(int root) const {
    for (const auto& c : chapters_)
      if (root >= c.lo && root <= c.hi) return &c;
    return nullptr;
  }

 private:
  void validate() const {
    if (chapters_.size() != kChapterCount) {
      throw ValidationError("chapter table must have 17 entries, got " + std::to_string(chapters_.size()));
    }
    int expect_lo = 1;
    for (std::size_t i = 0; i < chapters_.size(); ++i) {
      const Chapter& c = chapters_[i];
      if (c.id != static_cast<int>(i) + 1) throw ValidationError("chapter ids must be 1..17 in order");
      if (c.lo > c.hi) throw ValidationError("chapter " + std::to_string(c.id) + " has an empty range");
      if (c.lo != expect_lo) {
        throw ValidationError("chapter " + std::to_string(c.id) + " starts at " + std::to_string(c.lo) +
                              ", expected " + std::to_string(expect_lo) + " (gap or overlap)");
      }
      expect_lo = c.hi + 1;
    }
    if (expect_lo != 1000) throw ValidationError("chapter table must end at 999");
  }

  std::vector<Chapter> chapters_;
};

/// The standard ICD-9-CM chapter table, identical to data/icd9_chapters.csv.
inline constexpr std::string_view kStandardChaptersCsv = R"csv(chapter_id,lo,hi,name
1,1,139,Infectious and parasitic diseases
2,140,239,Neoplasms
3,240,279,"Endocrine, nutritional and metabolic diseases, and immunity disorders"
4,280,289,Diseases of the blood and blood-forming organs
5,290,319,Mental disorders
6,320,389,Diseases of the nervous system and sense organs
7,390,459,Diseases of the circulatory system
8,460,519,Diseases of the respiratory system
9,520,579,Diseases of the digestive system
10,580,629,Diseases of the genitourinary system
11,630,679,"Complications of pregnancy, childbirth, and the puerperium"
12,680,709,Diseases of the skin and subcutaneous tissue
13,710,739,Diseases of the musculoskeletal system and connective tissue
14,740,759,Congenital anomalies
15,760,779,Certain conditions originating in the perinatal period
16,780,799,"Symptoms, signs, and ill-defined conditions"
17,800,999,Injury and poisoning
)csv";

inline const ChapterTable& standard_chapter_table() {
  static const ChapterTable table = ChapterTable::from_csv(kStandardChaptersCsv, "builtin chapter table");
  return table;
}

/// Roots excluded from the level-1 space by default.
inline const std::set<int>& default_excluded_roots() {
  static const std::set<int> roots{798};
  return roots;
}

/// Chapter id of a numeric code, or nothing for V/E codes and excluded roots.
inline std::optional<int> chapter_of(const IcdCode& code, const ChapterTable& table,
                                     const std::set<int>& excluded_roots = default_excluded_roots()) {
  if (code.kind != CodeKind::Numeric) return std::nullopt;
  if (excluded_roots.contains(code.root)) return std::nullopt;
  const Chapter* c = table.find(code.root);
  if (!c) return std::nullopt;
  return c->id;
}

enum class LabelMode { Level1Chapters, TopKCodes };

inline std::string to_string(LabelMode m) { return m == LabelMode::Level1Chapters ? "level1" : "topk"; }

inline LabelMode parse_label_mode(std::string_view s) {
  if (s == "level1") return LabelMode::Level1Chapters;
  if (s == "topk") return LabelMode::TopKCodes;
  throw ConfigError("label mode must be 'level1' or 'topk', got '" + std::string(s) + "'");
}

using LabelVector = std::vector<std::uint8_t>;

/// The class universe: either the 17 chapters or K specific codes.
class LabelSpace {
 public:
  static LabelSpace level1(ChapterTable table, std::set<int> excluded_roots = default_excluded_roots()) {
    LabelSpace s(LabelMode::Level1Chapters);
    for (const auto& c : table.chapters()) s.add_class(c.label());
    s.table_ = std::move(table);
    s.excluded_ = std::move(excluded_roots);
    return s;
  }

  static LabelSpace top_k(const std::vector<IcdCode>& codes) {
    LabelSpace s(LabelMode::TopKCodes);
    for (const auto& c : codes) s.add_class(c.str());
    return s;
  }

  LabelMode mode() const { return mode_; }
  std::size_t size() const { return classes_.size(); }
  const std::vector<std::string>& classes() const { return classes_; }
  const std::optional<ChapterTable>& table() const { return table_; }
  const std::set<int>& excluded_roots() const { return excluded_; }

  /// Class index of a code, or nothing when the code is outside the space.
  std::optional<std::size_t> index_of(const IcdCode& code) const {
    if (mode_ == LabelMode::Level1Chapters) {
      auto ch = chapter_of(code, *table_, excluded_);
      if (!ch) return std::nullopt;
      return static_cast<std::size_t>(*ch - 1);
    }
    auto it = index_.find(code.str());
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  friend bool operator==(const LabelSpace& a, const LabelSpace& b) {
    return a.mode_ == b.mode_ && a.classes_ == b.classes_ && a.excluded_ == b.excluded_ &&
           a.table_.has_value() == b.table_.has_value() &&
           (!a.table_ || a.table_->chapters() == b.table_->chapters());
  }

 private:
  explicit LabelSpace(LabelMode m) : mode_(m) {}

  void add_class(std::string name) {
    index_.emplace(name, classes_.size());
    classes_.push_back(std::move(name));
  }

  LabelMode mode_;
  std::vector<std::string> classes_;
  std::unordered_map<std::string, std::size_t> index_;
  std::optional<ChapterTable> table_;
  std::set<int> excluded_;
};

/// The k codes attached to the most notes; ties by canonical code order.
inline LabelSpace top_k_codes(const std::vector<std::vector<IcdCode>>& corpus_codes, std::size_t k) {
  if (k < 1) throw ConfigError("top-k needs k >= 1");
  std::map<std::string, std::pair<std::size_t, IcdCode>> counts;
  for (const auto& codes : corpus_codes) {
    std::set<std::string> seen;
    for (const auto& c : codes) {
      std::string key = c.str();
      if (!seen.insert(key).second) continue;
      auto [it, inserted] = counts.try_emplace(key, 0, c);
      ++it->second.first;
    }
  }
  if (counts.size() < k) {
    throw ValidationError("top-k: only " + std::to_string(counts.size()) + " distinct codes, need " +
                          std::to_string(k));
  }
  std::vector<std::pair<std::size_t, IcdCode>> ranked;
  for (auto& [key, v] : counts) ranked.push_back(v);  // already in canonical order
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  std::vector<IcdCode> chosen;
  for (std::size_t i = 0; i < k; ++i) chosen.push_back(ranked[i].second);
  return LabelSpace::top_k(chosen);
}

/// Multi-hot vector; duplicates collapse and out-of-space codes drop.
inline LabelVector encode_labels(const std::vector<IcdCode>& codes, const LabelSpace& space) {
  LabelVector v(space.size(), 0);
  for (const auto& c : codes)
    if (auto idx = space.index_of(c)) v[*idx] = 1;
  return v;
}

struct PenetrationRow {
  std::string label;
  std::size_t count = 0;
  double fraction = 0.0;
};

/// Per-class share of notes carrying the class. Fractions can sum past 1.
inline std::vector<PenetrationRow> penetration_report(const std::vector<LabelVector>& labels,
                                                      const LabelSpace& space) {
  if (labels.empty()) throw ValidationError("penetration report needs a non-empty corpus");
  std::vector<PenetrationRow> rows;
  for (std::size_t c = 0; c < space.size(); ++c) {
    std::size_t n = 0;
    for (const auto& v : labels) {
      if (v.size() != space.size()) throw DimensionError("label vector width differs from label space");
      n += v[c];
    }
    rows.push_back({space.classes()[c], n, static_cast<double>(n) / static_cast<double>(labels.size())});
  }
  return rows;
}

inline std::string penetration_csv(const std::vector<PenetrationRow>& rows) {
  std::string out = "class,count,fraction\n";
  char buf[32];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%.6f", r.fraction);
    out += csv_field(r.label) + "," + std::to_string(r.count) + "," + buf + "\n";
  }
  return out;
}

}  // namespace icdnet
