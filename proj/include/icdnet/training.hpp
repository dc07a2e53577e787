// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <functional>
#include <cmath>
#include <cstdio>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "icdnet/autodiff.hpp"
#include "icdnet/error.hpp"
#include "icdnet/icd.hpp"
#include "icdnet/metrics.hpp"
#include "icdnet/models.hpp"
#include "icdnet/ops.hpp"
#include "icdnet/optim.hpp"
#include "icdnet/rng.hpp"
#include "icdnet/text.hpp"

namespace icdnet {

struct Example {
  EncodedNote note;
  LabelVector labels;
};

using Dataset = std::vector<Example>;

struct SplitSpec {
  double train = 0.70;
  double val = 0.15;
  double test = 0.15;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(train > 0 && val > 0 && test > 0)) throw ConfigError("split fractions must all be positive");
    if (std::abs(train + val + test - 1.0) > 1e-9) throw ConfigError("split fractions must sum to 1");
  }
};

template <typename T>
struct Splits {
  std::vector<T> train, val, test;
};

/// Partition sizes: floor of each fraction, remainder to test, and every
/// partition kept non-empty by borrowing from train.
inline std::array<std::size_t, 3> split_sizes(std::size_t n, const SplitSpec& spec) {
  spec.validate();
  if (n < 3) throw ValidationError("split needs at least 3 records, got " + std::to_string(n));
  auto nt = static_cast<std::size_t>(std::floor(spec.train * static_cast<double>(n) + 1e-9));
  auto nv = static_cast<std::size_t>(std::floor(spec.val * static_cast<double>(n) + 1e-9));
  nt = std::min(nt, n);
  nv = std::min(nv, n - nt);
  std::size_t ns = n - nt - nv;
  if (nv == 0) { nv = 1; --nt; }
  if (ns == 0) { ns = 1; --nt; }
  if (nt == 0) throw ValidationError("split leaves the training partition empty");
  return {nt, nv, ns};
}

/// Seeded shuffle, then contiguous cuts.
template <typename T>
Splits<T> split_dataset(const std::vector<T>& corpus, const SplitSpec& spec) {
  auto [nt, nv, ns] = split_sizes(corpus.size(), spec);
  std::vector<std::size_t> order(corpus.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng = Rng::stream(spec.seed, "split");
  rng.shuffle(std::span<std::size_t>(order));
  Splits<T> out;
  for (std::size_t i = 0; i < order.size(); ++i) {
    auto& dst = i < nt ? out.train : (i < nt + nv ? out.val : out.test);
    dst.push_back(corpus[order[i]]);
  }
  return out;
}

struct TrainConfig {
  std::size_t epochs = 5;
  std::size_t batch_size = 32;
  double learning_rate = 0.001;
  std::uint64_t seed = 0;
  std::optional<std::size_t> patience;   // stop after this many epochs without a new best
  std::optional<std::size_t> max_steps;  // cap on optimizer steps
  bool fixed_epochs = false;             // keep final parameters instead of the best epoch
  std::function<void(Model&)> after_init;  // e.g. pretrained embeddings; runs once after random init

  void validate() const {
    if (epochs < 1) throw ConfigError("epochs must be >= 1");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
  }
};

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;  // mean cross-entropy per cell over the epoch, L2 excluded
  double val_f1 = 0.0;      // micro-F1 at threshold 0.5
  friend bool operator==(const EpochRecord&, const EpochRecord&) = default;
};

struct TrainResult {
  std::vector<EpochRecord> history;
  std::size_t best_epoch = 0;
  std::size_t steps = 0;
};

inline std::string history_csv(const std::vector<EpochRecord>& history) {
  std::ostringstream os;
  os << "epoch,train_loss,val_f1\n";
  char buf[96];
  for (const auto& r : history) {
    std::snprintf(buf, sizeof buf, "%zu,%.8f,%.6f\n", r.epoch, r.train_loss, r.val_f1);
    os << buf;
  }
  return os.str();
}

inline Tensor targets_of(const LabelVector& labels) {
  Tensor t({1, labels.size()});
  for (std::size_t c = 0; c < labels.size(); ++c) t[c] = labels[c];
  return t;
}

inline BinaryMatrix label_matrix(const Dataset& data, std::size_t num_classes) {
  BinaryMatrix m(data.size(), num_classes);
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (data[i].labels.size() != num_classes) throw DimensionError("label width differs from class count");
    for (std::size_t c = 0; c < num_classes; ++c) m.at(i, c) = data[i].labels[c];
  }
  return m;
}

/// Inference-mode probabilities, one row per note.
inline Tensor score_matrix(Model& model, const Dataset& data) {
  const std::size_t C = model.config().num_classes;
  if (data.empty()) throw ValidationError("cannot score an empty dataset");
  Tensor s({data.size(), C});
  for (std::size_t i = 0; i < data.size(); ++i) {
    auto row = model.scores(data[i].note);
    std::copy(row.begin(), row.end(), s.values().begin() + static_cast<std::ptrdiff_t>(i * C));
  }
  return s;
}

/// Scores at sigmoid(logits), binarized at tau, pooled into micro-F1.
inline MetricsReport evaluate(Model& model, Threshold tau, const Dataset& data, const std::string& partition) {
  Tensor s = score_matrix(model, data);
  MetricsReport r = micro_f1(binarize(s, tau.tau), label_matrix(data, model.config().num_classes));
  r.threshold = tau.tau;
  r.partition = partition;
  return r;
}

/// Minimizes mean per-cell cross-entropy plus the L2 penalty with Adam over
/// seeded mini-batches. The model is initialized from the "init" stream of
/// the seed. On return the model holds the parameters of the best
/// validation epoch (or the final ones in fixed-epoch mode).
inline TrainResult train(Model& model, const Dataset& train_set, const Dataset& val_set, const TrainConfig& cfg) {
  cfg.validate();
  const std::size_t C = model.config().num_classes;
  for (const Dataset* ds : {&train_set, &val_set})
    for (const auto& ex : *ds)
      if (ex.labels.size() != C) throw ValidationError("label space width differs from model class count");
  if (train_set.empty()) throw ValidationError("training set is empty");

  TrainResult result;
  if (!model.is_neural()) {
    std::vector<LabelVector> labels;
    for (const auto& ex : train_set) labels.push_back(ex.labels);
    set_baseline(model, baseline_fit_predict(labels, C));
    return result;
  }

  Rng init_rng = Rng::stream(cfg.seed, "init");
  Rng shuffle_rng = Rng::stream(cfg.seed, "shuffle");
  Rng dropout_rng = Rng::stream(cfg.seed, "dropout");
  model.initialize(init_rng);
  if (cfg.after_init) cfg.after_init(model);
  ParameterSet& params = model.params();
  Adam adam(params, AdamConfig{.learning_rate = cfg.learning_rate});
  const double lambda = model.config().l2_lambda;

  std::optional<ParameterSet> best;
  double best_f1 = -1.0;
  std::size_t since_best = 0;
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    if (cfg.max_steps && result.steps >= *cfg.max_steps) break;
    shuffle_rng.shuffle(std::span<std::size_t>(order));
    double epoch_loss = 0.0;
    std::size_t seen = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      if (cfg.max_steps && result.steps >= *cfg.max_steps) break;
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      const double norm = 1.0 / static_cast<double>((end - start) * C);
      params.zero_grad();
      double batch_loss = 0.0;
      for (std::size_t i = start; i < end; ++i) {
        const Example& ex = train_set[order[i]];
        Graph g;
        ForwardResult fr = model.forward(g, ex.note, Mode::Train, &dropout_rng);
        Var loss = scale(sigmoid_cross_entropy_sum(fr.logits, targets_of(ex.labels)), norm);
        g.backward(loss);
        batch_loss += loss.value()[0];
      }
      if (!std::isfinite(batch_loss)) {
        throw TrainingDiverged("loss became non-finite at epoch " + std::to_string(epoch) + ", step " +
                               std::to_string(result.steps + 1));
      }
      if (lambda > 0.0) {
        for (auto& p : params.all()) {
          if (!p.decay) continue;
          for (std::size_t i = 0; i < p.value.size(); ++i) p.grad[i] += 2.0 * lambda * p.value[i];
        }
      }
      adam.step(params);
      ++result.steps;
      epoch_loss += batch_loss * static_cast<double>(end - start);
      seen += end - start;
    }
    if (seen == 0) break;
    EpochRecord rec{epoch, epoch_loss / static_cast<double>(seen), 0.0};
    if (!std::isfinite(rec.train_loss)) throw TrainingDiverged("training loss is not finite at epoch " + std::to_string(epoch));
    if (!val_set.empty()) rec.val_f1 = evaluate(model, Threshold{0.5}, val_set, "validation").f1;
    result.history.push_back(rec);

    if (!val_set.empty() && rec.val_f1 > best_f1) {
      best_f1 = rec.val_f1;
      result.best_epoch = epoch;
      since_best = 0;
      if (!cfg.fixed_epochs) best = params;
    } else {
      ++since_best;
      if (cfg.patience && since_best >= *cfg.patience) break;
    }
  }
  if (best && !cfg.fixed_epochs) {
    params = *best;
  } else if (!result.history.empty()) {
    result.best_epoch = result.history.back().epoch;
  }
  params.zero_grad();
  return result;
}

}  // namespace icdnet
