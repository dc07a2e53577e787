// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "icdnet/error.hpp"
#include "icdnet/tensor.hpp"

namespace icdnet {

/// Row-major N x C matrix of 0/1 cells.
struct BinaryMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::uint8_t> cells;

  BinaryMatrix() = default;
  BinaryMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), cells(r * c, 0) {}

  std::uint8_t at(std::size_t r, std::size_t c) const { return cells[r * cols + c]; }
  std::uint8_t& at(std::size_t r, std::size_t c) { return cells[r * cols + c]; }

  static BinaryMatrix from_rows(const std::vector<std::vector<std::uint8_t>>& rows) {
    BinaryMatrix m(rows.size(), rows.empty() ? 0 : rows[0].size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (rows[r].size() != m.cols) throw DimensionError("ragged label rows");
      for (std::size_t c = 0; c < m.cols; ++c) m.at(r, c) = rows[r][c] ? 1 : 0;
    }
    return m;
  }

  friend bool operator==(const BinaryMatrix&, const BinaryMatrix&) = default;
};

struct ClassCounts {
  std::size_t tp = 0, fp = 0, fn = 0;
  friend bool operator==(const ClassCounts&, const ClassCounts&) = default;
};

struct MetricsReport {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t tp = 0, fp = 0, fn = 0;
  std::vector<ClassCounts> per_class;
  double threshold = 0.5;
  std::string partition;
};

/// F1 from pooled counts. A ratio with a zero denominator is 0, and F1 is 0
/// when precision + recall is 0.
inline void fill_scores(MetricsReport& r) {
  r.precision = (r.tp + r.fp) ? static_cast<double>(r.tp) / static_cast<double>(r.tp + r.fp) : 0.0;
  r.recall = (r.tp + r.fn) ? static_cast<double>(r.tp) / static_cast<double>(r.tp + r.fn) : 0.0;
  r.f1 = (r.precision + r.recall) > 0.0 ? 2.0 * r.precision * r.recall / (r.precision + r.recall) : 0.0;
}

/// Micro-averaged precision, recall and F1: TP/FP/FN pooled over every
/// note-class cell.
inline MetricsReport micro_f1(const BinaryMatrix& pred, const BinaryMatrix& truth) {
  if (pred.rows != truth.rows || pred.cols != truth.cols) {
    throw DimensionError("micro_f1: prediction " + std::to_string(pred.rows) + "x" + std::to_string(pred.cols) +
                         " vs truth " + std::to_string(truth.rows) + "x" + std::to_string(truth.cols));
  }
  MetricsReport r;
  r.per_class.assign(pred.cols, {});
  for (std::size_t i = 0; i < pred.rows; ++i) {
    for (std::size_t c = 0; c < pred.cols; ++c) {
      const bool p = pred.at(i, c), t = truth.at(i, c);
      if (p && t) ++r.per_class[c].tp;
      else if (p) ++r.per_class[c].fp;
      else if (t) ++r.per_class[c].fn;
    }
  }
  for (const auto& c : r.per_class) {
    r.tp += c.tp;
    r.fp += c.fp;
    r.fn += c.fn;
  }
  fill_scores(r);
  return r;
}

/// Cells with score >= tau become 1.
inline BinaryMatrix binarize(const Tensor& scores, double tau) {
  BinaryMatrix m(scores.rows(), scores.cols());
  for (std::size_t i = 0; i < scores.size(); ++i) m.cells[i] = scores[i] >= tau ? 1 : 0;
  return m;
}

inline constexpr std::size_t kThresholdGridSize = 99;

/// Candidate thresholds 0.01, 0.02, ..., 0.99.
inline std::vector<double> threshold_grid() {
  std::vector<double> g;
  for (std::size_t k = 1; k <= kThresholdGridSize; ++k) g.push_back(static_cast<double>(k) / 100.0);
  return g;
}

struct Threshold {
  double tau = 0.5;
};

/// Grid threshold maximizing micro-F1; the smallest tau wins ties. F1
/// values are compared exactly as the fractions 2TP / (2TP + FP + FN).
inline Threshold calibrate_threshold(const Tensor& scores, const BinaryMatrix& labels) {
  if (scores.rows() != labels.rows || scores.cols() != labels.cols || scores.size() != labels.cells.size()) {
    throw DimensionError("calibrate_threshold: scores and labels differ in shape");
  }
  if (labels.rows == 0) throw ValidationError("calibrate_threshold: no rows");
  Threshold best{0.01};
  std::uint64_t best_num = 0, best_den = 1;  // F1 = num / den
  for (double tau : threshold_grid()) {
    std::uint64_t tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
      const bool p = scores[i] >= tau, t = labels.cells[i] != 0;
      tp += p && t;
      fp += p && !t;
      fn += !p && t;
    }
    const std::uint64_t num = 2 * tp, den = 2 * tp + fp + fn;
    if (den == 0 || num == 0) continue;
    if (num * best_den > best_num * den) {
      best_num = num;
      best_den = den;
      best.tau = tau;
    }
  }
  return best;
}

}  // namespace icdnet
