// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <charconv>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "icdnet/autodiff.hpp"
#include "icdnet/error.hpp"
#include "icdnet/icd.hpp"
#include "icdnet/ops.hpp"
#include "icdnet/rng.hpp"
#include "icdnet/text.hpp"

namespace icdnet {

enum class Variant { Baseline, Cnn, CnnAttention, Lstm, LstmAttention, HierAttention };

inline constexpr Variant kNeuralVariants[] = {Variant::Cnn, Variant::CnnAttention, Variant::Lstm,
                                              Variant::LstmAttention, Variant::HierAttention};

inline std::string to_string(Variant v) {
  switch (v) {
    case Variant::Baseline: return "baseline";
    case Variant::Cnn: return "cnn";
    case Variant::CnnAttention: return "cnn_attention";
    case Variant::Lstm: return "lstm";
    case Variant::LstmAttention: return "lstm_attention";
    case Variant::HierAttention: return "han";
  }
  return "?";
}

inline Variant parse_variant(std::string_view s) {
  for (Variant v : {Variant::Baseline, Variant::Cnn, Variant::CnnAttention, Variant::Lstm, Variant::LstmAttention,
                    Variant::HierAttention}) {
    if (s == to_string(v)) return v;
  }
  throw ConfigError("unknown model variant '" + std::string(s) +
                    "' (expected baseline, cnn, cnn_attention, lstm, lstm_attention or han)");
}

enum class RnnCell { Lstm, Gru };

struct ModelConfig {
  Variant variant = Variant::Cnn;
  std::size_t vocab_size = 0;
  std::size_t embedding_dim = 100;
  std::vector<std::size_t> cnn_window_sizes{2, 3, 4, 5};
  std::size_t cnn_filters_per_window = 100;
  std::size_t lstm_hidden_dim = 128;
  std::size_t attention_dim = 64;
  RnnCell rnn_cell = RnnCell::Lstm;
  std::size_t num_classes = 17;
  double dropout_rate = 0.5;
  double l2_lambda = 1e-5;
  std::size_t max_len = 5000;
  std::size_t max_sentences = 100;
  std::size_t max_sentence_len = 50;
  double init_scale = 0.05;

  void validate() const {
    auto positive = [](std::size_t v, const char* name) {
      if (v < 1) throw ConfigError(std::string(name) + " must be >= 1");
    };
    positive(num_classes, "num_classes");
    positive(max_len, "max_len");
    if (variant == Variant::Baseline) return;
    positive(vocab_size, "vocab_size");
    positive(embedding_dim, "embedding_dim");
    if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) throw ConfigError("dropout_rate must be in [0,1)");
    if (l2_lambda < 0.0) throw ConfigError("l2_lambda must be >= 0");
    if (!(init_scale > 0.0)) throw ConfigError("init_scale must be > 0");
    if (variant == Variant::Cnn || variant == Variant::CnnAttention) {
      if (cnn_window_sizes.empty()) throw ConfigError("cnn_window_sizes must not be empty");
      if (std::set<std::size_t>(cnn_window_sizes.begin(), cnn_window_sizes.end()).size() != cnn_window_sizes.size())
        throw ConfigError("cnn_window_sizes must not repeat");
      positive(cnn_filters_per_window, "cnn_filters_per_window");
      for (std::size_t k : cnn_window_sizes) {
        positive(k, "cnn window size");
        if (k > max_len) throw ConfigError("cnn window " + std::to_string(k) + " exceeds max_len");
      }
    } else {
      positive(lstm_hidden_dim, "lstm_hidden_dim");
    }
    if (variant == Variant::CnnAttention || variant == Variant::LstmAttention || variant == Variant::HierAttention)
      positive(attention_dim, "attention_dim");
    if (variant == Variant::HierAttention) {
      positive(max_sentences, "max_sentences");
      positive(max_sentence_len, "max_sentence_len");
    }
  }

  nlohmann::json to_json() const {
    return {{"variant", to_string(variant)},
            {"vocab_size", vocab_size},
            {"embedding_dim", embedding_dim},
            {"cnn_window_sizes", cnn_window_sizes},
            {"cnn_filters_per_window", cnn_filters_per_window},
            {"lstm_hidden_dim", lstm_hidden_dim},
            {"attention_dim", attention_dim},
            {"rnn_cell", rnn_cell == RnnCell::Lstm ? "lstm" : "gru"},
            {"num_classes", num_classes},
            {"dropout_rate", dropout_rate},
            {"l2_lambda", l2_lambda},
            {"max_len", max_len},
            {"max_sentences", max_sentences},
            {"max_sentence_len", max_sentence_len},
            {"init_scale", init_scale}};
  }

  /// Overlays the keys present in `j`; unknown keys are rejected.
  void apply_json(const nlohmann::json& j) {
    static const std::set<std::string> known{
        "variant", "vocab_size", "embedding_dim", "cnn_window_sizes", "cnn_filters_per_window",
        "lstm_hidden_dim", "attention_dim", "rnn_cell", "num_classes", "dropout_rate", "l2_lambda",
        "max_len", "max_sentences", "max_sentence_len", "init_scale"};
    if (!j.is_object()) throw ConfigError("model config must be a JSON object");
    try {
      for (const auto& [key, val] : j.items()) {
        if (!known.contains(key)) throw ConfigError("unknown model config key '" + key + "'");
        if (key == "variant") variant = parse_variant(val.get<std::string>());
        else if (key == "vocab_size") vocab_size = val.get<std::size_t>();
        else if (key == "embedding_dim") embedding_dim = val.get<std::size_t>();
        else if (key == "cnn_window_sizes") cnn_window_sizes = val.get<std::vector<std::size_t>>();
        else if (key == "cnn_filters_per_window") cnn_filters_per_window = val.get<std::size_t>();
        else if (key == "lstm_hidden_dim") lstm_hidden_dim = val.get<std::size_t>();
        else if (key == "attention_dim") attention_dim = val.get<std::size_t>();
        else if (key == "rnn_cell") {
          auto s = val.get<std::string>();
          if (s != "lstm" && s != "gru") throw ConfigError("rnn_cell must be 'lstm' or 'gru'");
          rnn_cell = s == "lstm" ? RnnCell::Lstm : RnnCell::Gru;
        } else if (key == "num_classes") num_classes = val.get<std::size_t>();
        else if (key == "dropout_rate") dropout_rate = val.get<double>();
        else if (key == "l2_lambda") l2_lambda = val.get<double>();
        else if (key == "max_len") max_len = val.get<std::size_t>();
        else if (key == "max_sentences") max_sentences = val.get<std::size_t>();
        else if (key == "max_sentence_len") max_sentence_len = val.get<std::size_t>();
        else if (key == "init_scale") init_scale = val.get<double>();
      }
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(std::string("model config: ") + e.what());
    }
  }

  static ModelConfig from_json(const nlohmann::json& j) {
    ModelConfig c;
    c.apply_json(j);
    return c;
  }

  /// FNV-1a of the canonical (key-sorted) JSON form.
  std::uint64_t hash() const { return fnv1a64(to_json().dump()); }
};

/// Parameters of a feed-forward attention scorer: e_t = v . tanh(W h_t + b).
struct AttentionVars {
  Var W, b, v;
};

struct AttentionOutput {
  Var context;  // [1 x d_in]
  Var weights;  // [1 x T], zero at masked positions
};

/// Attention pooling over the rows of H [T x d_in]; rows at or beyond
/// `valid` are masked out of the softmax.
inline AttentionOutput attention_pool(const Var& H, const AttentionVars& p, std::size_t valid) {
  const std::size_t T = H.value().rows();
  if (valid == 0) throw ValidationError("attention_pool: no valid positions");
  if (valid > T) throw IndexError("attention_pool: valid length exceeds sequence length");
  const std::size_t att = p.W.value().cols();
  if (p.W.value().rows() != H.value().cols() || p.v.value().size() != att || p.b.value().size() != att) {
    throw DimensionError("attention_pool: parameter shapes do not match input width " +
                         std::to_string(H.value().cols()));
  }
  Var u = tanh(add_bias(matmul(H, p.W), p.b));
  Var scores = reshape(matmul(u, reshape(p.v, {att, 1})), {1, T});
  Var weights = masked_softmax_rows(scores, valid);
  return {matmul(weights, H), weights};
}

enum class Mode { Train, Infer };

struct ForwardResult {
  Var logits;                   // [1 x C]
  std::vector<Var> attention;   // one weight row per attention site evaluation
};

class Model;
ForwardResult cnn_forward(Graph& g, Model& m, const EncodedNote& note, Mode mode, Rng* rng);
ForwardResult cnn_attention_forward(Graph& g, Model& m, const EncodedNote& note, Mode mode, Rng* rng);
ForwardResult lstm_forward(Graph& g, Model& m, const EncodedNote& note, Mode mode, Rng* rng);
ForwardResult lstm_attention_forward(Graph& g, Model& m, const EncodedNote& note, Mode mode, Rng* rng);
ForwardResult han_forward(Graph& g, Model& m, const EncodedNote& note, Mode mode, Rng* rng);

/// One classifier: configuration plus its parameter set. Every neural
/// variant maps an encoded note to C logits.
class Model {
 public:
  explicit Model(ModelConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    build();
  }

  const ModelConfig& config() const { return cfg_; }
  ParameterSet& params() { return params_; }
  const ParameterSet& params() const { return params_; }
  Parameter& param(std::string_view name) { return params_[name]; }

  bool is_neural() const { return cfg_.variant != Variant::Baseline; }

  /// Scalar count of everything but the embedding matrix.
  std::size_t parameter_count_without_embedding() const {
    std::size_t n = 0;
    for (const auto& p : params_.all())
      if (p.name != "embedding") n += p.value.size();
    return n;
  }

  /// Uniform(-init_scale, init_scale) weights, zero biases, +1 on the LSTM
  /// forget-gate bias, and a zero PAD embedding row.
  void initialize(Rng& rng) {
    const double s = cfg_.init_scale;
    for (auto& p : params_.all()) {
      if (p.name == "baseline.scores") continue;
      if (is_bias(p.name)) {
        p.value.fill(0.0);
      } else {
        for (double& v : p.value.values()) v = rng.uniform(-s, s);
      }
    }
    if (params_.contains("embedding")) {
      auto& E = params_["embedding"].value;
      std::fill_n(E.values().begin(), E.cols(), 0.0);
    }
    if (cfg_.rnn_cell == RnnCell::Lstm) {
      const std::size_t H = cfg_.lstm_hidden_dim;
      for (const char* prefix : {"rnn", "word", "sent"}) {
        std::string name = std::string(prefix) + ".b";
        if (!params_.contains(name)) continue;
        auto& b = params_[name].value;
        for (std::size_t i = H; i < 2 * H; ++i) b[i] = 1.0;
      }
    }
  }

  ForwardResult forward(Graph& g, const EncodedNote& note, Mode mode, Rng* dropout_rng = nullptr) {
    if (note.ids.size() != cfg_.max_len) {
      throw DimensionError("note " + note.note_id + " has " + std::to_string(note.ids.size()) +
                           " ids, model expects max_len " + std::to_string(cfg_.max_len));
    }
    if (mode == Mode::Train && cfg_.dropout_rate > 0.0 && !dropout_rng) {
      throw Error("training-mode forward needs a dropout stream");
    }
    switch (cfg_.variant) {
      case Variant::Cnn: return cnn_forward(g, *this, note, mode, dropout_rng);
      case Variant::CnnAttention: return cnn_attention_forward(g, *this, note, mode, dropout_rng);
      case Variant::Lstm: return lstm_forward(g, *this, note, mode, dropout_rng);
      case Variant::LstmAttention: return lstm_attention_forward(g, *this, note, mode, dropout_rng);
      case Variant::HierAttention: {
        if (note.sentence_spans.empty()) {
          // An empty note is read as one PAD-token sentence.
          EncodedNote padded = note;
          padded.sentence_spans = {{0, 1}};
          return han_forward(g, *this, padded, mode, dropout_rng);
        }
        return han_forward(g, *this, note, mode, dropout_rng);
      }
      case Variant::Baseline: break;
    }
    throw Error("the baseline predictor has no forward graph");
  }

  /// Per-class probabilities in inference mode.
  std::vector<double> scores(const EncodedNote& note) {
    if (!is_neural()) {
      const auto& s = params_["baseline.scores"].value.values();
      return {s.begin(), s.end()};
    }
    Graph g(false);
    ForwardResult r = forward(g, note, Mode::Infer);
    std::vector<double> out(r.logits.value().values());
    for (double& v : out) v = detail::sigmoid(v);
    return out;
  }

  // Graph-level helpers shared by the variant forwards.
  Var embedded(Graph& g, const EncodedNote& note, std::size_t length) {
    return embed(std::span<const std::int32_t>(note.ids.data(), length), g.param(params_["embedding"]));
  }

  AttentionVars attention_vars(Graph& g, const std::string& prefix) {
    return {g.param(params_[prefix + ".W"]), g.param(params_[prefix + ".b"]), g.param(params_[prefix + ".v"])};
  }

  Var output_layer(Graph& g, const Var& features, Mode mode, Rng* rng) {
    Var x = dropout(features, cfg_.dropout_rate, *rng_or_dummy(rng), mode == Mode::Train);
    return add_bias(matmul(x, g.param(params_["out.W"])), g.param(params_["out.b"]));
  }

  /// Hidden states [1 x H] of the recurrent layer `prefix` over the rows of X.
  std::vector<Var> run_rnn(Graph& g, const std::string& prefix, const Var& X) {
    const std::size_t H = cfg_.lstm_hidden_dim;
    const std::size_t L = X.value().rows();
    Var Wh = g.param(params_[prefix + ".Wh"]);
    std::vector<Var> hs;
    hs.reserve(L);
    Var h = g.constant(Tensor({1, H}));
    if (cfg_.rnn_cell == RnnCell::Lstm) {
      Var pre_x = add_bias(matmul(X, g.param(params_[prefix + ".Wx"])), g.param(params_[prefix + ".b"]));
      Var c = g.constant(Tensor({1, H}));
      for (std::size_t t = 0; t < L; ++t) {
        Var pre = add(row(pre_x, t), matmul(h, Wh));
        Var i = sigmoid(slice_cols(pre, 0, H));
        Var f = sigmoid(slice_cols(pre, H, 2 * H));
        Var cand = tanh(slice_cols(pre, 2 * H, 3 * H));
        Var o = sigmoid(slice_cols(pre, 3 * H, 4 * H));
        c = add(mul(f, c), mul(i, cand));
        h = mul(o, tanh(c));
        hs.push_back(h);
      }
    } else {
      Var pre_x = add_bias(matmul(X, g.param(params_[prefix + ".Wx"])), g.param(params_[prefix + ".bx"]));
      Var bh = g.param(params_[prefix + ".bh"]);
      for (std::size_t t = 0; t < L; ++t) {
        Var xt = row(pre_x, t);
        Var ht = add_bias(matmul(h, Wh), bh);
        Var r = sigmoid(add(slice_cols(xt, 0, H), slice_cols(ht, 0, H)));
        Var z = sigmoid(add(slice_cols(xt, H, 2 * H), slice_cols(ht, H, 2 * H)));
        Var n = tanh(add(slice_cols(xt, 2 * H, 3 * H), mul(r, slice_cols(ht, 2 * H, 3 * H))));
        h = add(n, mul(z, sub(h, n)));
        hs.push_back(h);
      }
    }
    return hs;
  }

 private:
  static bool is_bias(const std::string& name) {
    auto dot = name.rfind('.');
    std::string leaf = dot == std::string::npos ? name : name.substr(dot + 1);
    return leaf == "b" || leaf == "bx" || leaf == "bh";
  }

  Rng* rng_or_dummy(Rng* rng) { return rng ? rng : &dummy_rng_; }

  void add_rnn(const std::string& prefix, std::size_t in) {
    const std::size_t H = cfg_.lstm_hidden_dim;
    const std::size_t gates = cfg_.rnn_cell == RnnCell::Lstm ? 4 : 3;
    params_.add(prefix + ".Wx", Tensor({in, gates * H}), true);
    params_.add(prefix + ".Wh", Tensor({H, gates * H}), true);
    if (cfg_.rnn_cell == RnnCell::Lstm) {
      params_.add(prefix + ".b", Tensor({gates * H}), false);
    } else {
      params_.add(prefix + ".bx", Tensor({gates * H}), false);
      params_.add(prefix + ".bh", Tensor({gates * H}), false);
    }
  }

  void add_attention(const std::string& prefix, std::size_t in) {
    const std::size_t A = cfg_.attention_dim;
    params_.add(prefix + ".W", Tensor({in, A}), true);
    params_.add(prefix + ".b", Tensor({A}), false);
    params_.add(prefix + ".v", Tensor({A}), true);
  }

  void build() {
    const std::size_t C = cfg_.num_classes;
    if (cfg_.variant == Variant::Baseline) {
      params_.add("baseline.scores", Tensor({C}), false);
      return;
    }
    const std::size_t d = cfg_.embedding_dim;
    params_.add("embedding", Tensor({cfg_.vocab_size, d}), false);
    std::size_t features = cfg_.lstm_hidden_dim;
    switch (cfg_.variant) {
      case Variant::Cnn:
      case Variant::CnnAttention: {
        const std::size_t F = cfg_.cnn_filters_per_window;
        for (std::size_t k : cfg_.cnn_window_sizes) {
          std::string p = "conv" + std::to_string(k);
          params_.add(p + ".W", Tensor({k * d, F}), true);
          params_.add(p + ".b", Tensor({F}), false);
          if (cfg_.variant == Variant::CnnAttention) add_attention("att" + std::to_string(k), F);
        }
        features = F * cfg_.cnn_window_sizes.size();
        break;
      }
      case Variant::Lstm: add_rnn("rnn", d); break;
      case Variant::LstmAttention:
        add_rnn("rnn", d);
        add_attention("att", cfg_.lstm_hidden_dim);
        break;
      case Variant::HierAttention:
        add_rnn("word", d);
        add_attention("word_att", cfg_.lstm_hidden_dim);
        add_rnn("sent", cfg_.lstm_hidden_dim);
        add_attention("sent_att", cfg_.lstm_hidden_dim);
        break;
      case Variant::Baseline: break;
    }
    params_.add("out.W", Tensor({features, C}), true);
    params_.add("out.b", Tensor({C}), false);
  }

  ModelConfig cfg_;
  ParameterSet params_;
  Rng dummy_rng_{0};
};

namespace detail {

/// Number of leading positions carrying at least one real token, never 0.
inline std::size_t valid_steps(const EncodedNote& note, std::size_t positions) {
  return std::min(std::max<std::size_t>(note.true_length, 1), positions);
}

inline void check_window_fit(const ModelConfig& cfg, std::size_t T) {
  for (std::size_t k : cfg.cnn_window_sizes) {
    if (T < k) throw DimensionError("sequence too short: length " + std::to_string(T) + " < window " + std::to_string(k));
  }
}

}  // namespace detail

/// embed -> per window: conv, relu, max over time -> concat -> dropout -> dense.
inline ForwardResult cnn_forward(Graph& g, Model& m, const EncodedNote& note, Mode mode, Rng* rng) {
  const auto& cfg = m.config();
  detail::check_window_fit(cfg, note.ids.size());
  Var X = m.embedded(g, note, note.ids.size());
  std::vector<Var> pooled;
  for (std::size_t k : cfg.cnn_window_sizes) {
    std::string p = "conv" + std::to_string(k);
    Var a = relu(conv1d_windows(X, g.param(m.param(p + ".W")), g.param(m.param(p + ".b")), k));
    pooled.push_back(reshape(max_over_time(a), {1, cfg.cnn_filters_per_window}));
  }
  return {m.output_layer(g, concat_cols(pooled), mode, rng), {}};
}

/// As cnn_forward with each max-pool replaced by attention pooling over the
/// windows that start inside the note.
inline ForwardResult cnn_attention_forward(Graph& g, Model& m, const EncodedNote& note, Mode mode, Rng* rng) {
  const auto& cfg = m.config();
  detail::check_window_fit(cfg, note.ids.size());
  Var X = m.embedded(g, note, note.ids.size());
  ForwardResult out;
  std::vector<Var> pooled;
  for (std::size_t k : cfg.cnn_window_sizes) {
    std::string p = "conv" + std::to_string(k);
    Var a = relu(conv1d_windows(X, g.param(m.param(p + ".W")), g.param(m.param(p + ".b")), k));
    std::size_t valid = detail::valid_steps(note, a.value().rows());
    AttentionOutput att = attention_pool(a, m.attention_vars(g, "att" + std::to_string(k)), valid);
    pooled.push_back(att.context);
    out.attention.push_back(att.weights);
  }
  out.logits = m.output_layer(g, concat_cols(pooled), mode, rng);
  return out;
}

/// Single-layer recurrent encoder; the state at the last real token feeds
/// the classifier.
inline ForwardResult lstm_forward(Graph& g, Model& m, const EncodedNote& note, Mode mode, Rng* rng) {
  std::size_t L = detail::valid_steps(note, note.ids.size());
  auto hs = m.run_rnn(g, "rnn", m.embedded(g, note, L));
  return {m.output_layer(g, hs.back(), mode, rng), {}};
}

inline ForwardResult lstm_attention_forward(Graph& g, Model& m, const EncodedNote& note, Mode mode, Rng* rng) {
  std::size_t L = detail::valid_steps(note, note.ids.size());
  auto hs = m.run_rnn(g, "rnn", m.embedded(g, note, L));
  AttentionOutput att = attention_pool(stack_rows(hs), m.attention_vars(g, "att"), L);
  return {m.output_layer(g, att.context, mode, rng), {att.weights}};
}

/// Word-level recurrent encoder and attention per sentence, then a
/// sentence-level recurrent encoder and attention over sentence vectors.
inline ForwardResult han_forward(Graph& g, Model& m, const EncodedNote& note, Mode mode, Rng* rng) {
  const auto& cfg = m.config();
  std::vector<Span> spans;
  for (const Span& s : note.sentence_spans) {
    if (spans.size() == cfg.max_sentences) break;
    if (s.begin >= s.end || s.end > note.ids.size()) {
      if (s.begin >= s.end) continue;
      throw IndexError("sentence span exceeds note length");
    }
    spans.push_back({s.begin, std::min(s.end, s.begin + cfg.max_sentence_len)});
  }
  if (spans.empty()) throw ValidationError("hierarchical model: note " + note.note_id + " has no sentences");

  std::size_t L = 0;
  for (const Span& s : spans) L = std::max(L, s.end);
  Var X = m.embedded(g, note, L);
  ForwardResult out;
  AttentionVars word_att = m.attention_vars(g, "word_att");
  std::vector<Var> sentence_vecs;
  for (const Span& s : spans) {
    auto hs = m.run_rnn(g, "word", slice_rows(X, s.begin, s.end));
    AttentionOutput a = attention_pool(stack_rows(hs), word_att, hs.size());
    sentence_vecs.push_back(a.context);
    out.attention.push_back(a.weights);
  }
  auto doc_states = m.run_rnn(g, "sent", stack_rows(sentence_vecs));
  AttentionOutput doc = attention_pool(stack_rows(doc_states), m.attention_vars(g, "sent_att"), doc_states.size());
  out.attention.push_back(doc.weights);
  out.logits = m.output_layer(g, doc.context, mode, rng);
  return out;
}

/// Constant predictor marking the min(4, C) most frequent training classes
/// (ties by lower index).
inline LabelVector baseline_fit_predict(const std::vector<LabelVector>& train_labels, std::size_t num_classes,
                                        std::size_t top = 4) {
  if (train_labels.empty()) throw ValidationError("baseline needs at least one training label vector");
  std::vector<std::size_t> freq(num_classes, 0);
  for (const auto& v : train_labels) {
    if (v.size() != num_classes) throw DimensionError("baseline: label vector width differs from class count");
    for (std::size_t c = 0; c < num_classes; ++c) freq[c] += v[c];
  }
  std::vector<std::size_t> order(num_classes);
  for (std::size_t c = 0; c < num_classes; ++c) order[c] = c;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return freq[a] > freq[b]; });
  LabelVector out(num_classes, 0);
  for (std::size_t i = 0; i < std::min(top, num_classes); ++i) out[order[i]] = 1;
  return out;
}

/// Stores a fitted baseline vector as the model's constant scores.
inline void set_baseline(Model& m, const LabelVector& v) {
  auto& s = m.param("baseline.scores").value;
  if (v.size() != s.size()) throw DimensionError("baseline vector width differs from class count");
  for (std::size_t c = 0; c < v.size(); ++c) s[c] = v[c];
}

}  // namespace icdnet
