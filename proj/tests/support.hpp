// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <unistd.h>

#include "icdnet/autodiff.hpp"
#include "icdnet/corpus.hpp"
#include "icdnet/models.hpp"
#include "icdnet/ops.hpp"
#include "icdnet/rng.hpp"

namespace icdnet::testing {

inline std::filesystem::path fixture(const std::string& name) {
  return std::filesystem::path(ICDNET_FIXTURE_DIR) / name;
}

inline std::filesystem::path data_file(const std::string& name) {
  return std::filesystem::path(ICDNET_DATA_DIR) / name;
}

/// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("icdnet_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline double relative_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), 1e-6});
}

struct GradCheckResult {
  double worst = 0.0;
  std::string where;
  std::size_t checked = 0;
};

using LeafFn = std::function<Var(Graph&, const std::vector<Var>&)>;

/// Compares backprop gradients of a scalar function of leaf tensors with
/// central differences.
inline GradCheckResult check_leaf_gradients(std::vector<Tensor> inputs, const LeafFn& f, double h = 1e-5) {
  std::vector<Tensor> analytic;
  {
    Graph g;
    std::vector<Var> leaves;
    for (const auto& t : inputs) leaves.push_back(g.leaf(t));
    Var out = f(g, leaves);
    g.backward(out);
    for (const auto& v : leaves) analytic.push_back(g.has_grad(v.id()) ? v.grad() : Tensor(v.shape()));
  }
  auto eval = [&]() {
    Graph g(false);
    std::vector<Var> leaves;
    for (const auto& t : inputs) leaves.push_back(g.constant(t));
    return f(g, leaves).value()[0];
  };
  GradCheckResult r;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    for (std::size_t i = 0; i < inputs[k].size(); ++i) {
      const double orig = inputs[k][i];
      inputs[k][i] = orig + h;
      const double up = eval();
      inputs[k][i] = orig - h;
      const double down = eval();
      inputs[k][i] = orig;
      const double err = relative_error(analytic[k][i], (up - down) / (2.0 * h));
      ++r.checked;
      if (err > r.worst) {
        r.worst = err;
        r.where = "input " + std::to_string(k) + "[" + std::to_string(i) + "]";
      }
    }
  }
  return r;
}

/// Full-model check: loss = sum cross-entropy of one note (plus the L2 term),
/// in training mode with a dropout mask replayed from a fixed seed.
inline GradCheckResult check_model_gradients(Model& model, const EncodedNote& note, const Tensor& targets,
                                             std::uint64_t dropout_seed, double h = 1e-5) {
  const double lambda = model.config().l2_lambda;
  auto loss_of = [&](Graph& g) {
    Rng rng(dropout_seed);
    ForwardResult fr = model.forward(g, note, Mode::Train, &rng);
    Var loss = sigmoid_cross_entropy_sum(fr.logits, targets);
    if (lambda > 0.0) loss = add(loss, l2_penalty(g, model.params(), lambda));
    return loss;
  };
  model.params().zero_grad();
  {
    Graph g;
    g.backward(loss_of(g));
  }
  GradCheckResult r;
  for (auto& p : model.params().all()) {
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double orig = p.value[i];
      Graph g1(false), g2(false);
      p.value[i] = orig + h;
      const double up = loss_of(g1).value()[0];
      p.value[i] = orig - h;
      const double down = loss_of(g2).value()[0];
      p.value[i] = orig;
      const double err = relative_error(p.grad[i], (up - down) / (2.0 * h));
      ++r.checked;
      if (err > r.worst) {
        r.worst = err;
        r.where = p.name + "[" + std::to_string(i) + "]";
      }
    }
  }
  model.params().zero_grad();
  return r;
}

inline Tensor random_tensor(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor t(std::move(shape));
  for (double& v : t.values()) v = rng.uniform(lo, hi);
  return t;
}

/// Every parameter, biases included, uniform in +-init_scale, with the PAD
/// embedding row kept at zero. Zero biases put all-PAD convolution windows
/// exactly on the ReLU kink, where a central difference is meaningless.
inline void randomize_parameters(Model& m, Rng& rng) {
  const double s = m.config().init_scale;
  for (auto& p : m.params().all())
    for (double& v : p.value.values()) v = rng.uniform(-s, s);
  if (m.params().contains("embedding")) {
    auto& E = m.param("embedding").value;
    std::fill_n(E.values().begin(), E.cols(), 0.0);
  }
}

/// Miniature configuration used by the full-model gradient checks.
inline ModelConfig miniature_config(Variant v) {
  ModelConfig c;
  c.variant = v;
  c.vocab_size = 24;
  c.embedding_dim = 8;
  c.cnn_window_sizes = {2, 3};
  c.cnn_filters_per_window = 8;
  c.lstm_hidden_dim = 8;
  c.attention_dim = 8;
  c.num_classes = 5;
  c.max_len = 30;
  c.max_sentence_len = 10;
  c.dropout_rate = 0.25;
  c.l2_lambda = 1e-3;
  c.init_scale = 0.5;
  return c;
}

/// Random note of `length` real tokens padded to max_len, with sentence
/// spans every few tokens.
inline EncodedNote random_note(const ModelConfig& c, std::size_t length, Rng& rng) {
  EncodedNote n;
  n.note_id = "n";
  n.ids.assign(c.max_len, Vocabulary::kPad);
  for (std::size_t i = 0; i < length; ++i) n.ids[i] = static_cast<std::int32_t>(1 + rng.below(c.vocab_size - 1));
  n.true_length = length;
  for (std::size_t b = 0; b < length;) {
    std::size_t e = std::min(length, b + 3 + rng.below(6));
    n.sentence_spans.push_back({b, e});
    b = e;
  }
  return n;
}

inline Tensor random_targets(std::size_t C, Rng& rng) {
  Tensor y({1, C});
  for (std::size_t c = 0; c < C; ++c) y[c] = rng.bernoulli(0.4) ? 1.0 : 0.0;
  return y;
}

}  // namespace icdnet::testing
