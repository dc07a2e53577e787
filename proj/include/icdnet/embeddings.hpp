// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <charconv>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "icdnet/autodiff.hpp"
#include "icdnet/error.hpp"
#include "icdnet/text.hpp"

namespace icdnet {

struct PretrainedLoadReport {
  std::size_t hits = 0;     // vocabulary rows overwritten
  std::size_t misses = 0;   // vocabulary rows left at their initial values
  std::size_t unused = 0;   // file entries outside the vocabulary
};

/// Overwrites embedding rows from a word-vector text file with lines
/// `token v1 ... vd`. Hits + misses always equals the vocabulary size; the
/// PAD row is never overwritten. The first occurrence of a token wins.
inline PretrainedLoadReport load_pretrained_vectors(std::istream& in, const Vocabulary& vocab, Parameter& embedding,
                                                    const std::string& origin = "vector file") {
  Tensor& E = embedding.value;
  const std::size_t d = E.cols();
  if (E.rows() != vocab.size()) {
    throw DimensionError("embedding has " + std::to_string(E.rows()) + " rows, vocabulary has " +
                         std::to_string(vocab.size()));
  }
  PretrainedLoadReport report;
  std::vector<bool> filled(vocab.size(), false);
  std::unordered_set<std::string> seen;
  std::vector<double> vec;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::string_view rest(line);
    auto skip_ws = [&] {
      while (!rest.empty() && (rest.front() == ' ' || rest.front() == '\t')) rest.remove_prefix(1);
    };
    skip_ws();
    auto tok_end = rest.find_first_of(" \t");
    if (tok_end == std::string_view::npos) {
      throw ParseError(origin + " line " + std::to_string(lineno) + ": token without a vector");
    }
    std::string token(rest.substr(0, tok_end));
    rest.remove_prefix(tok_end);
    vec.clear();
    for (skip_ws(); !rest.empty(); skip_ws()) {
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(rest.data(), rest.data() + rest.size(), v);
      if (ec != std::errc() || (ptr != rest.data() + rest.size() && *ptr != ' ' && *ptr != '\t')) {
        throw ParseError(origin + " line " + std::to_string(lineno) + ": malformed number");
      }
      vec.push_back(v);
      rest.remove_prefix(static_cast<std::size_t>(ptr - rest.data()));
    }
    if (vec.size() != d) {
      throw DimensionError(origin + " line " + std::to_string(lineno) + ": vector width " +
                           std::to_string(vec.size()) + " does not match embedding dimension " + std::to_string(d));
    }
    if (!seen.insert(token).second) continue;
    if (!vocab.contains(token)) {
      ++report.unused;
      continue;
    }
    auto id = static_cast<std::size_t>(vocab.id(token));
    if (id == static_cast<std::size_t>(Vocabulary::kPad)) continue;
    std::copy(vec.begin(), vec.end(), E.values().begin() + static_cast<std::ptrdiff_t>(id * d));
    filled[id] = true;
  }
  for (bool f : filled) (f ? report.hits : report.misses)++;
  return report;
}

inline PretrainedLoadReport load_pretrained_vectors(const std::filesystem::path& path, const Vocabulary& vocab,
                                                    Parameter& embedding) {
  std::ifstream f(path);
  if (!f) throw Error("vector file not found: " + path.string());
  return load_pretrained_vectors(f, vocab, embedding, path.string());
}

}  // namespace icdnet
