// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cctype>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "icdnet/error.hpp"

namespace icdnet {

inline constexpr std::string_view kNumToken = "<num>";
inline constexpr std::string_view kPadToken = "<pad>";
inline constexpr std::string_view kUnkToken = "<unk>";

struct RawNote {
  std::string note_id;
  std::string text;
  std::vector<std::string> codes;
};

/// Half-open token range [begin, end).
struct Span {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::size_t size() const { return end - begin; }
  friend bool operator==(const Span&, const Span&) = default;
};

struct TokenizedNote {
  std::string note_id;
  std::vector<std::string> tokens;
  std::vector<Span> sentence_spans;
  std::vector<std::string> codes;
};

namespace detail {

inline bool is_lower(char c) { return c >= 'a' && c <= 'z'; }
inline bool is_digit(char c) { return c >= '0' && c <= '9'; }
inline char ascii_lower(char c) { return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c; }

}  // namespace detail

/// Lowercases, keeps only [a-z0-9 .,'/-], splits contractions at the
/// apostrophe ("patient's" -> "patient 's"), makes . , / - and stray
/// apostrophes standalone tokens, and replaces every digit run (with
/// optional internal '.') by <num>. Tokens are joined by single spaces;
/// line breaks in the input survive as single '\n' separators so sentence
/// splitting can see them. The output is a fixed point of the function.
inline std::string normalize_text(std::string_view text) {
  std::string s;
  s.reserve(text.size());
  for (char c : text) s.push_back(detail::ascii_lower(c));

  std::string out;
  out.reserve(s.size() + s.size() / 4);
  bool pending_break = false;
  auto emit = [&](std::string_view tok) {
    if (!out.empty()) out.push_back(pending_break ? '\n' : ' ');
    pending_break = false;
    out.append(tok);
  };

  std::size_t i = 0;
  const std::size_t n = s.size();
  while (i < n) {
    char c = s[i];
    if (c == '<' && s.compare(i, kNumToken.size(), kNumToken) == 0) {
      emit(kNumToken);
      i += kNumToken.size();
    } else if (detail::is_digit(c)) {
      ++i;
      while (i < n) {
        if (detail::is_digit(s[i])) {
          ++i;
        } else if (s[i] == '.' && i + 1 < n && detail::is_digit(s[i + 1])) {
          i += 2;
        } else {
          break;
        }
      }
      emit(kNumToken);
    } else if (detail::is_lower(c)) {
      std::size_t start = i;
      while (i < n && detail::is_lower(s[i])) ++i;
      emit(std::string_view(s).substr(start, i - start));
    } else if (c == '\'') {
      if (i + 1 < n && detail::is_lower(s[i + 1])) {
        std::size_t start = i++;
        while (i < n && detail::is_lower(s[i])) ++i;
        emit(std::string_view(s).substr(start, i - start));
      } else {
        emit("'");
        ++i;
      }
    } else if (c == '.' || c == ',' || c == '/' || c == '-') {
      emit(std::string_view(&s[i], 1));
      ++i;
    } else {
      if (c == '\n' && !out.empty()) pending_break = true;
      ++i;
    }
  }
  return out;
}

/// Whitespace split of normalized text.
inline std::vector<std::string> tokenize(std::string_view normalized) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < normalized.size()) {
    while (i < normalized.size() && std::isspace(static_cast<unsigned char>(normalized[i]))) ++i;
    std::size_t start = i;
    while (i < normalized.size() && !std::isspace(static_cast<unsigned char>(normalized[i]))) ++i;
    if (i > start) tokens.emplace_back(normalized.substr(start, i - start));
  }
  return tokens;
}

/// Token counts at which a newline occurred in normalized text: a value b
/// means a line ended right after token b-1.
inline std::vector<std::size_t> line_breaks(std::string_view normalized) {
  std::vector<std::size_t> breaks;
  std::size_t count = 0;
  bool in_token = false;
  for (char c : normalized) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (in_token) ++count;
      in_token = false;
      if (c == '\n' && count > 0 && (breaks.empty() || breaks.back() != count)) breaks.push_back(count);
    } else {
      in_token = true;
    }
  }
  return breaks;
}

inline constexpr std::size_t kDefaultMaxSentenceLen = 50;

/// Sentence boundaries after every "." token and at every recorded line
/// break; sentences longer than `max_sentence_len` are cut greedily.
inline std::vector<Span> split_sentences(const std::vector<std::string>& tokens,
                                         const std::vector<std::size_t>& breaks = {},
                                         std::size_t max_sentence_len = kDefaultMaxSentenceLen) {
  if (max_sentence_len == 0) throw ConfigError("max_sentence_len must be >= 1");
  std::vector<Span> spans;
  std::size_t start = 0;
  std::size_t next_break = 0;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    bool cut = tokens[i] == ".";
    while (next_break < breaks.size() && breaks[next_break] < i + 1) ++next_break;
    if (next_break < breaks.size() && breaks[next_break] == i + 1) cut = true;
    if (i + 1 - start == max_sentence_len) cut = true;
    if (cut || i + 1 == tokens.size()) {
      spans.push_back({start, i + 1});
      start = i + 1;
    }
  }
  return spans;
}

inline TokenizedNote tokenize_note(const RawNote& note,
                                   std::size_t max_sentence_len = kDefaultMaxSentenceLen) {
  std::string norm = normalize_text(note.text);
  TokenizedNote out;
  out.note_id = note.note_id;
  out.tokens = tokenize(norm);
  out.sentence_spans = split_sentences(out.tokens, line_breaks(norm), max_sentence_len);
  out.codes = note.codes;
  return out;
}

/// Token <-> id map with reserved ids 0=PAD, 1=UNK, 2=NUM.
class Vocabulary {
 public:
  static constexpr std::int32_t kPad = 0;
  static constexpr std::int32_t kUnk = 1;
  static constexpr std::int32_t kNum = 2;
  static constexpr std::size_t kReserved = 3;

  Vocabulary() {
    for (auto t : {kPadToken, kUnkToken, kNumToken}) push(std::string(t));
  }

  /// Builds from tokens listed in id order after the reserved entries.
  static Vocabulary from_tokens(const std::vector<std::string>& tokens, std::size_t min_frequency = 1) {
    Vocabulary v;
    v.min_frequency_ = min_frequency;
    for (const auto& t : tokens) {
      if (v.index_.contains(t)) throw ValidationError("duplicate vocabulary token: " + t);
      v.push(t);
    }
    return v;
  }

  std::size_t size() const { return tokens_.size(); }
  std::size_t min_frequency() const { return min_frequency_; }

  std::int32_t id(const std::string& token) const {
    auto it = index_.find(token);
    return it == index_.end() ? kUnk : it->second;
  }

  bool contains(const std::string& token) const { return index_.contains(token); }

  const std::string& token(std::int32_t id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size())
      throw IndexError("token id " + std::to_string(id) + " outside vocabulary");
    return tokens_[static_cast<std::size_t>(id)];
  }

  const std::vector<std::string>& tokens() const { return tokens_; }

  /// One token per line, in id order, reserved entries included.
  void save(const std::filesystem::path& path) const {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw Error("cannot write " + path.string());
    for (const auto& t : tokens_) f << t << '\n';
  }

  static Vocabulary load(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw Error("vocabulary not found: " + path.string());
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(f, line)) lines.push_back(line);
    if (lines.size() < kReserved || lines[0] != kPadToken || lines[1] != kUnkToken || lines[2] != kNumToken) {
      throw ParseError(path.string() + ": missing reserved vocabulary entries");
    }
    return from_tokens(std::vector<std::string>(lines.begin() + kReserved, lines.end()));
  }

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) { return a.tokens_ == b.tokens_; }

 private:
  void push(std::string t) {
    index_.emplace(t, static_cast<std::int32_t>(tokens_.size()));
    tokens_.push_back(std::move(t));
  }

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::int32_t> index_;
  std::size_t min_frequency_ = 1;
};

/// Tokens with corpus frequency >= min_frequency, ordered by frequency
/// descending then token ascending.
inline Vocabulary build_vocab(const std::vector<TokenizedNote>& corpus, std::size_t min_frequency = 1) {
  if (min_frequency < 1) throw ConfigError("min_frequency must be >= 1");
  if (corpus.empty()) throw ValidationError("cannot build a vocabulary from an empty corpus");
  std::map<std::string, std::size_t> counts;
  for (const auto& note : corpus)
    for (const auto& t : note.tokens) ++counts[t];
  std::vector<std::pair<std::string, std::size_t>> kept;
  for (auto& [tok, c] : counts) {
    if (c < min_frequency || tok == kPadToken || tok == kUnkToken || tok == kNumToken) continue;
    kept.emplace_back(tok, c);
  }
  std::stable_sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> order;
  order.reserve(kept.size());
  for (auto& [tok, c] : kept) order.push_back(tok);
  return Vocabulary::from_tokens(order, min_frequency);
}

enum class Truncation { KeepHead, KeepTail };

struct EncodedNote {
  std::string note_id;
  std::vector<std::int32_t> ids;
  std::size_t true_length = 0;
  std::vector<Span> sentence_spans;
  std::vector<std::string> codes;
};

/// Maps tokens to ids, truncates to max_len and right-pads with PAD.
inline EncodedNote encode_pad(const TokenizedNote& note, const Vocabulary& vocab, std::size_t max_len,
                              Truncation trunc = Truncation::KeepHead) {
  if (max_len < 1) throw ConfigError("max_len must be >= 1");
  EncodedNote out;
  out.note_id = note.note_id;
  out.codes = note.codes;
  const std::size_t n = note.tokens.size();
  const std::size_t kept = std::min(n, max_len);
  const std::size_t offset = (trunc == Truncation::KeepTail && n > max_len) ? n - max_len : 0;
  out.ids.assign(max_len, Vocabulary::kPad);
  for (std::size_t i = 0; i < kept; ++i) out.ids[i] = vocab.id(note.tokens[offset + i]);
  out.true_length = kept;
  for (const Span& s : note.sentence_spans) {
    if (s.end <= offset || s.begin >= offset + kept) continue;
    std::size_t b = std::max(s.begin, offset) - offset;
    std::size_t e = std::min(s.end, offset + kept) - offset;
    out.sentence_spans.push_back({b, e});
  }
  return out;
}

inline std::vector<std::string> decode(const EncodedNote& note, const Vocabulary& vocab) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < note.true_length; ++i) out.push_back(vocab.token(note.ids[i]));
  return out;
}

struct LengthStats {
  std::size_t count = 0;
  double mean = 0.0;
  std::size_t max_length = 0;
  std::size_t bucket_width = 1;
  std::map<std::size_t, std::size_t> buckets;  // bucket lower bound -> notes

  std::string to_csv() const {
    std::ostringstream os;
    os << "length_bucket,count\n";
    for (const auto& [b, c] : buckets) os << b << ',' << c << '\n';
    return os.str();
  }
};

inline LengthStats length_stats(const std::vector<std::size_t>& lengths, std::size_t bucket_width = 1) {
  if (lengths.empty()) throw ValidationError("length statistics need a non-empty corpus");
  if (bucket_width == 0) throw ConfigError("bucket width must be >= 1");
  LengthStats st;
  st.count = lengths.size();
  st.bucket_width = bucket_width;
  double total = 0.0;
  for (std::size_t len : lengths) {
    total += static_cast<double>(len);
    st.max_length = std::max(st.max_length, len);
    ++st.buckets[len / bucket_width * bucket_width];
  }
  st.mean = total / static_cast<double>(lengths.size());
  return st;
}

/// Distribution of note lengths in tokens, before truncation.
inline LengthStats corpus_length_stats(const std::vector<TokenizedNote>& corpus, std::size_t bucket_width = 1) {
  std::vector<std::size_t> lengths;
  lengths.reserve(corpus.size());
  for (const auto& n : corpus) lengths.push_back(n.tokens.size());
  return length_stats(lengths, bucket_width);
}

}  // namespace icdnet
