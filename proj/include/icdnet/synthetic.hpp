// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include "icdnet/error.hpp"
#include "icdnet/icd.hpp"
#include "icdnet/rng.hpp"
#include "icdnet/text.hpp"

// Synthetic discharge-note corpus with planted signal. Class c stands for
// ICD-9 chapter c+1: every note labeled with c contains each of the class's
// keywords at least once, and its codes are drawn from that chapter's range.
// Filler words and noise words never coincide with keywords, so the label
// set is recoverable from the tokens by construction.

namespace icdnet {

struct SyntheticSpec {
  std::size_t num_notes = 1000;
  std::size_t num_classes = 8;
  std::size_t keywords_per_class = 1;
  std::size_t min_length = 40;
  std::size_t max_length = 120;
  /// P(label count = 1), P(= 2), ...; normalized on use.
  std::vector<double> cardinality = {0.5, 0.3, 0.2};
  /// Fraction of non-keyword tokens drawn from the noise lexicon instead of
  /// the filler lexicon.
  double noise_fraction = 0.3;
  std::size_t codes_per_class = 2;
  std::uint64_t seed = 0;

  void validate() const {
    if (num_notes < 1) throw ConfigError("num_notes must be >= 1");
    if (num_classes < 1 || num_classes > ChapterTable::kChapterCount)
      throw ConfigError("num_classes must be in [1,17] (one class per level-1 chapter)");
    if (keywords_per_class < 1) throw ConfigError("keywords_per_class must be >= 1");
    if (min_length < 1 || min_length > max_length) throw ConfigError("need 1 <= min_length <= max_length");
    if (cardinality.empty()) throw ConfigError("cardinality distribution is empty");
    double total = 0.0;
    for (double p : cardinality) {
      if (p < 0.0) throw ConfigError("cardinality probabilities must be >= 0");
      total += p;
    }
    if (!(total > 0.0)) throw ConfigError("cardinality distribution sums to 0");
    if (cardinality.size() > num_classes) throw ConfigError("label cardinality exceeds num_classes");
    if (min_length < cardinality.size() * keywords_per_class)
      throw ConfigError("min_length too small to plant every keyword");
    if (!(noise_fraction >= 0.0 && noise_fraction <= 1.0)) throw ConfigError("noise_fraction must be in [0,1]");
    if (codes_per_class < 1) throw ConfigError("codes_per_class must be >= 1");
  }
};

namespace detail {

inline const std::array<const char*, 17>& chapter_keywords() {
  static const std::array<const char*, 17> words{
      "sepsis",      "carcinoma",  "diabetes",     "anemia",     "depression", "seizure",
      "hypertension", "pneumonia", "cirrhosis",    "nephropathy", "preeclampsia", "cellulitis",
      "arthritis",   "anomaly",    "prematurity",  "syncope",    "fracture"};
  return words;
}

inline const std::vector<std::string>& filler_words() {
  static const std::vector<std::string> words{
      "patient", "was",      "admitted", "with",     "history", "of",       "the",      "and",
      "noted",   "on",       "exam",     "given",    "stable",  "discharged", "home",   "follow",
      "up",      "clinic",   "daily",    "mg",       "po",      "bid",      "labs",     "within",
      "normal",  "limits",   "pain",     "denies",   "fever",   "chills",   "vitals",   "bp",
      "hr",      "rr",       "afebrile", "alert",    "oriented", "plan",    "continue", "medications",
      "seen",    "by",       "team",     "in",       "room",    "without",  "acute",    "distress",
      "family",  "at",       "bedside",  "tolerated", "diet",   "ambulating", "review", "systems"};
  return words;
}

/// Lowercase letter string of length 6-9 starting with 'q'.
inline std::string pseudo_word(Rng& rng) {
  std::string w = "q";
  std::size_t len = 5 + rng.below(4);
  for (std::size_t i = 0; i < len; ++i) w.push_back(static_cast<char>('a' + rng.below(26)));
  return w;
}

inline std::string undotted(const IcdCode& c) {
  std::string s = c.str();
  s.erase(std::remove(s.begin(), s.end(), '.'), s.end());
  return s;
}

}  // namespace detail

struct SyntheticCorpus {
  std::vector<RawNote> notes;
  std::vector<std::vector<std::string>> class_keywords;
  std::vector<std::vector<std::string>> class_codes;   // canonical form
  std::vector<std::size_t> labels_per_note;            // label cardinality of each note
  std::vector<std::vector<std::size_t>> note_classes;  // planted classes of each note
};

inline SyntheticCorpus generate_synthetic(const SyntheticSpec& spec, const ChapterTable& table,
                                          const std::set<int>& excluded_roots = default_excluded_roots()) {
  spec.validate();
  Rng rng = Rng::stream(spec.seed, "synthesis");
  SyntheticCorpus out;

  std::set<std::string> reserved(detail::filler_words().begin(), detail::filler_words().end());
  for (std::size_t c = 0; c < spec.num_classes; ++c) {
    std::vector<std::string> kws{detail::chapter_keywords()[c]};
    reserved.insert(kws[0]);
    while (kws.size() < spec.keywords_per_class) {
      std::string w = detail::pseudo_word(rng);
      if (reserved.insert(w).second) kws.push_back(w);
    }
    out.class_keywords.push_back(std::move(kws));
  }
  std::vector<std::string> noise;
  while (noise.size() < 500) {
    std::string w = detail::pseudo_word(rng);
    if (reserved.insert(w).second) noise.push_back(w);
  }

  for (std::size_t c = 0; c < spec.num_classes; ++c) {
    const Chapter& ch = table.chapters()[c];
    std::set<std::string> codes;
    std::size_t span = static_cast<std::size_t>(ch.hi - ch.lo + 1);
    while (codes.size() < spec.codes_per_class) {
      IcdCode code;
      code.root = ch.lo + static_cast<int>(rng.below(span));
      if (excluded_roots.contains(code.root)) continue;
      if (rng.bernoulli(0.7)) code.subdivision = std::to_string(rng.below(10));
      codes.insert(code.str());
    }
    out.class_codes.emplace_back(codes.begin(), codes.end());
  }

  double total = std::accumulate(spec.cardinality.begin(), spec.cardinality.end(), 0.0);
  std::vector<std::size_t> classes(spec.num_classes);
  for (std::size_t n = 0; n < spec.num_notes; ++n) {
    double u = rng.uniform() * total;
    std::size_t k = 1;
    for (double acc = spec.cardinality[0]; u >= acc && k < spec.cardinality.size(); acc += spec.cardinality[k], ++k) {
    }
    std::iota(classes.begin(), classes.end(), std::size_t{0});
    for (std::size_t i = 0; i < k; ++i) std::swap(classes[i], classes[i + rng.below(spec.num_classes - i)]);
    std::vector<std::size_t> chosen(classes.begin(), classes.begin() + static_cast<std::ptrdiff_t>(k));
    std::sort(chosen.begin(), chosen.end());

    const std::size_t len = spec.min_length + rng.below(spec.max_length - spec.min_length + 1);
    std::vector<std::string> body(len);
    for (auto& w : body) {
      if (rng.bernoulli(spec.noise_fraction)) w = noise[rng.below(noise.size())];
      else w = detail::filler_words()[rng.below(detail::filler_words().size())];
    }
    std::vector<std::size_t> positions(len);
    std::iota(positions.begin(), positions.end(), std::size_t{0});
    std::size_t next = 0;
    for (std::size_t c : chosen) {
      for (const auto& kw : out.class_keywords[c]) {
        std::size_t j = next + rng.below(len - next);
        std::swap(positions[next], positions[j]);
        body[positions[next++]] = kw;
      }
    }

    std::string text;
    std::size_t since_stop = 0, sentence_len = 6 + rng.below(10);
    for (std::size_t i = 0; i < len; ++i) {
      std::string w = body[i];
      if (since_stop == 0 && !w.empty()) w[0] = static_cast<char>(w[0] - 'a' + 'A');
      if (!text.empty()) text += ' ';
      text += w;
      if (++since_stop == sentence_len && i + 1 < len) {
        text += rng.bernoulli(0.2) ? ".\n" : ".";
        since_stop = 0;
        sentence_len = 6 + rng.below(10);
      } else if (rng.bernoulli(0.03)) {
        text += " " + std::to_string(10 + rng.below(190));
      }
    }
    text += ".";

    RawNote note;
    char id[32];
    std::snprintf(id, sizeof id, "syn%06zu", n);
    note.note_id = id;
    note.text = std::move(text);
    for (std::size_t c : chosen) {
      const auto& pool = out.class_codes[c];
      note.codes.push_back(detail::undotted(parse_code(pool[rng.below(pool.size())])));
    }
    out.notes.push_back(std::move(note));
    out.labels_per_note.push_back(k);
    out.note_classes.push_back(std::move(chosen));
  }
  return out;
}

}  // namespace icdnet
