// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "icdnet/corpus.hpp"
#include "icdnet/error.hpp"
#include "icdnet/icd.hpp"
#include "icdnet/metrics.hpp"
#include "icdnet/models.hpp"
#include "icdnet/rng.hpp"
#include "icdnet/text.hpp"
#include "icdnet/training.hpp"

// Manifest schema (JSON object, unknown keys rejected):
//
//   data              corpus path, relative to the manifest file   required
//   variants          list of variant names                         required
//   label_mode        "level1" | "topk"                             "level1"
//   top_k             class count in topk mode                      10
//   max_records       seeded random sample cap                      all records
//   epochs            training epochs                               5
//   seed              master seed                                   0
//   chapters          chapter table CSV                             built-in table
//   excluded_roots    numeric roots left out of level1              [798]
//   max_len           tokens kept per note                          200
//   min_frequency     vocabulary cutoff                             1
//   max_sentence_len  sentence cap in tokens                        50
//   batch_size                                                      32
//   learning_rate                                                   0.001
//   fixed_epochs      keep final rather than best-epoch parameters  false
//   patience          early-stop patience in epochs                 none
//   split             {"train":..,"val":..,"test":..}               0.7/0.15/0.15
//   model             ModelConfig overrides (embedding_dim, ...)    {}

namespace icdnet {

struct Manifest {
  std::filesystem::path data;
  std::vector<Variant> variants;
  LabelMode label_mode = LabelMode::Level1Chapters;
  std::size_t top_k = 10;
  std::optional<std::size_t> max_records;
  std::size_t epochs = 5;
  std::uint64_t seed = 0;
  std::optional<std::filesystem::path> chapters;
  std::set<int> excluded_roots = default_excluded_roots();
  std::size_t max_len = 200;
  std::size_t min_frequency = 1;
  std::size_t max_sentence_len = kDefaultMaxSentenceLen;
  std::size_t batch_size = 32;
  double learning_rate = 0.001;
  bool fixed_epochs = false;
  std::optional<std::size_t> patience;
  SplitSpec split;
  nlohmann::json model = nlohmann::json::object();

  void validate() const {
    if (data.empty()) throw ConfigError("manifest: 'data' is required");
    if (variants.empty()) throw ConfigError("manifest: 'variants' must list at least one variant");
    if (label_mode == LabelMode::TopKCodes && top_k < 1) throw ConfigError("manifest: top_k must be >= 1");
    if (max_records && *max_records < 3) throw ConfigError("manifest: max_records must be >= 3");
    if (epochs < 1) throw ConfigError("manifest: epochs must be >= 1");
    if (max_len < 1) throw ConfigError("manifest: max_len must be >= 1");
    if (max_sentence_len < 1) throw ConfigError("manifest: max_sentence_len must be >= 1");
    if (batch_size < 1) throw ConfigError("manifest: batch_size must be >= 1");
    if (!(learning_rate > 0.0)) throw ConfigError("manifest: learning_rate must be > 0");
    split.validate();
    ModelConfig probe;
    probe.apply_json(model);
  }

  /// Relative paths resolve against `base_dir`.
  static Manifest from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {}) {
    static const std::set<std::string> known{
        "data",    "variants", "label_mode",   "top_k",         "max_records",      "epochs",
        "seed",    "chapters", "excluded_roots", "max_len",     "min_frequency",    "max_sentence_len",
        "batch_size", "learning_rate", "fixed_epochs", "patience", "split",          "model"};
    if (!j.is_object()) throw ConfigError("manifest must be a JSON object");
    Manifest m;
    auto resolve = [&](const std::string& p) {
      std::filesystem::path path(p);
      return path.is_relative() && !base_dir.empty() ? base_dir / path : path;
    };
    try {
      for (const auto& [key, val] : j.items()) {
        if (!known.contains(key)) throw ConfigError("manifest: unknown key '" + key + "'");
        if (key == "data") m.data = resolve(val.get<std::string>());
        else if (key == "variants") {
          for (const auto& v : val) m.variants.push_back(parse_variant(v.get<std::string>()));
        } else if (key == "label_mode") m.label_mode = parse_label_mode(val.get<std::string>());
        else if (key == "top_k") m.top_k = val.get<std::size_t>();
        else if (key == "max_records") {
          if (!val.is_null()) m.max_records = val.get<std::size_t>();
        } else if (key == "epochs") m.epochs = val.get<std::size_t>();
        else if (key == "seed") m.seed = val.get<std::uint64_t>();
        else if (key == "chapters") m.chapters = resolve(val.get<std::string>());
        else if (key == "excluded_roots") m.excluded_roots = val.get<std::set<int>>();
        else if (key == "max_len") m.max_len = val.get<std::size_t>();
        else if (key == "min_frequency") m.min_frequency = val.get<std::size_t>();
        else if (key == "max_sentence_len") m.max_sentence_len = val.get<std::size_t>();
        else if (key == "batch_size") m.batch_size = val.get<std::size_t>();
        else if (key == "learning_rate") m.learning_rate = val.get<double>();
        else if (key == "fixed_epochs") m.fixed_epochs = val.get<bool>();
        else if (key == "patience") {
          if (!val.is_null()) m.patience = val.get<std::size_t>();
        } else if (key == "split") {
          for (const auto& [sk, sv] : val.items()) {
            if (sk == "train") m.split.train = sv.get<double>();
            else if (sk == "val") m.split.val = sv.get<double>();
            else if (sk == "test") m.split.test = sv.get<double>();
            else throw ConfigError("manifest: unknown split key '" + sk + "'");
          }
        } else if (key == "model") m.model = val;
      }
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(std::string("manifest: ") + e.what());
    }
    m.validate();
    return m;
  }

  static Manifest load(const std::filesystem::path& path) {
    std::string text = detail::read_file(path);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(path.string() + ": " + e.what());
    }
    return from_json(j, path.parent_path());
  }
};

struct PreparedData {
  LabelSpace space = LabelSpace::level1(standard_chapter_table());
  Vocabulary vocab;
  Dataset train, val, test;
  std::size_t dropped = 0;  // notes with no label inside the space

  std::size_t records() const { return train.size() + val.size() + test.size(); }
};

/// Seeded sample of at most `cap` records, in original file order.
inline std::vector<RawNote> sample_records(const std::vector<RawNote>& notes, std::optional<std::size_t> cap,
                                           std::uint64_t seed) {
  if (!cap || *cap >= notes.size()) return notes;
  std::vector<std::size_t> idx(notes.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  Rng rng = Rng::stream(seed, "sample");
  rng.shuffle(std::span<std::size_t>(idx));
  idx.resize(*cap);
  std::sort(idx.begin(), idx.end());
  std::vector<RawNote> out;
  for (std::size_t i : idx) out.push_back(notes[i]);
  return out;
}

/// Split first; the top-K code list and the vocabulary come from the
/// training partition only.
inline PreparedData prepare_data(const std::vector<RawNote>& corpus, const Manifest& m,
                                 std::ostream* log = nullptr) {
  if (corpus.empty()) throw ValidationError("no records");
  std::vector<RawNote> notes = sample_records(corpus, m.max_records, m.seed);
  SplitSpec spec = m.split;
  spec.seed = m.seed;
  Splits<RawNote> raw = split_dataset(notes, spec);

  PreparedData out;
  if (m.label_mode == LabelMode::Level1Chapters) {
    out.space = LabelSpace::level1(m.chapters ? ChapterTable::load(*m.chapters) : standard_chapter_table(),
                                   m.excluded_roots);
  } else {
    out.space = top_k_codes(parse_corpus_codes(raw.train), m.top_k);
  }

  auto tokenize_part = [&](const std::vector<RawNote>& part, std::vector<LabelVector>& labels) {
    std::vector<TokenizedNote> toks;
    auto codes = parse_corpus_codes(part);
    for (std::size_t i = 0; i < part.size(); ++i) {
      LabelVector y = encode_labels(codes[i], out.space);
      if (std::none_of(y.begin(), y.end(), [](auto b) { return b != 0; })) {
        ++out.dropped;
        continue;
      }
      labels.push_back(std::move(y));
      toks.push_back(tokenize_note(part[i], m.max_sentence_len));
    }
    return toks;
  };
  std::vector<LabelVector> ytr, yva, yte;
  auto ttr = tokenize_part(raw.train, ytr);
  auto tva = tokenize_part(raw.val, yva);
  auto tte = tokenize_part(raw.test, yte);
  if (log && out.dropped) *log << "dropped " << out.dropped << " notes with no label in the class space\n";
  if (ttr.empty() || tva.empty() || tte.empty()) {
    throw ValidationError("a partition is empty after dropping unlabeled notes");
  }

  out.vocab = build_vocab(ttr, m.min_frequency);
  auto encode_part = [&](const std::vector<TokenizedNote>& toks, std::vector<LabelVector>& labels, Dataset& dst) {
    for (std::size_t i = 0; i < toks.size(); ++i)
      dst.push_back({encode_pad(toks[i], out.vocab, m.max_len), std::move(labels[i])});
  };
  encode_part(ttr, ytr, out.train);
  encode_part(tva, yva, out.val);
  encode_part(tte, yte, out.test);
  return out;
}

inline ModelConfig model_config_for(const Manifest& m, Variant v, const PreparedData& d) {
  ModelConfig cfg;
  cfg.apply_json(m.model);
  cfg.variant = v;
  cfg.vocab_size = d.vocab.size();
  cfg.num_classes = d.space.size();
  cfg.max_len = m.max_len;
  cfg.max_sentence_len = m.max_sentence_len;
  cfg.validate();
  return cfg;
}

inline TrainConfig train_config_for(const Manifest& m) {
  TrainConfig t;
  t.epochs = m.epochs;
  t.batch_size = m.batch_size;
  t.learning_rate = m.learning_rate;
  t.seed = m.seed;
  t.patience = m.patience;
  t.fixed_epochs = m.fixed_epochs;
  return t;
}

struct ResultRow {
  Variant variant = Variant::Baseline;
  LabelMode label_mode = LabelMode::Level1Chapters;
  std::size_t records = 0;
  std::size_t epochs = 0;
  std::optional<MetricsReport> metrics;  // empty when the run failed
  std::string error;
};

inline constexpr std::string_view kResultsHeader = "variant,label_mode,records,epochs,threshold,precision,recall,f1";

/// Failed rows carry "nan" in the four metric columns.
inline std::string results_csv(const std::vector<ResultRow>& rows) {
  std::string out(kResultsHeader);
  out += '\n';
  char buf[256];
  for (const auto& r : rows) {
    if (r.metrics) {
      std::snprintf(buf, sizeof buf, "%s,%s,%zu,%zu,%.2f,%.6f,%.6f,%.6f\n", to_string(r.variant).c_str(),
                    to_string(r.label_mode).c_str(), r.records, r.epochs, r.metrics->threshold, r.metrics->precision,
                    r.metrics->recall, r.metrics->f1);
    } else {
      std::snprintf(buf, sizeof buf, "%s,%s,%zu,%zu,nan,nan,nan,nan\n", to_string(r.variant).c_str(),
                    to_string(r.label_mode).c_str(), r.records, r.epochs);
    }
    out += buf;
  }
  return out;
}

struct VariantRun {
  TrainResult train;
  Threshold tau;
  MetricsReport test, val;
};

/// Train, calibrate tau on validation, evaluate both held-out partitions.
inline VariantRun run_variant(Model& model, const PreparedData& d, const TrainConfig& tc) {
  VariantRun r;
  r.train = train(model, d.train, d.val, tc);
  r.tau = calibrate_threshold(score_matrix(model, d.val), label_matrix(d.val, d.space.size()));
  r.test = evaluate(model, r.tau, d.test, "test");
  r.val = evaluate(model, r.tau, d.val, "validation");
  return r;
}

struct ExperimentResult {
  std::vector<ResultRow> test_rows;
  std::vector<ResultRow> val_rows;
  std::vector<std::vector<EpochRecord>> histories;  // one per variant, empty on failure
};

/// Runs every manifest variant on one prepared split. A failing variant
/// yields a failed row; the others still run.
inline ExperimentResult run_experiment(const Manifest& m, const PreparedData& d, std::ostream* log = nullptr) {
  ExperimentResult out;
  const TrainConfig tc = train_config_for(m);
  for (Variant v : m.variants) {
    ResultRow row{v, m.label_mode, d.records(), m.epochs, std::nullopt, {}};
    ResultRow vrow = row;
    std::vector<EpochRecord> hist;
    try {
      Model model(model_config_for(m, v, d));
      VariantRun run = run_variant(model, d, tc);
      row.metrics = run.test;
      vrow.metrics = run.val;
      hist = run.train.history;
      if (log) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "%s: tau=%.2f test_f1=%.4f val_f1=%.4f\n", to_string(v).c_str(),
                      run.tau.tau, run.test.f1, run.val.f1);
        *log << buf;
      }
    } catch (const std::exception& e) {
      row.error = vrow.error = e.what();
      if (log) *log << to_string(v) << ": failed: " << e.what() << "\n";
    }
    out.test_rows.push_back(std::move(row));
    out.val_rows.push_back(std::move(vrow));
    out.histories.push_back(std::move(hist));
  }
  return out;
}

inline ExperimentResult run_experiment(const Manifest& m, std::ostream* log = nullptr) {
  return run_experiment(m, prepare_data(read_corpus(m.data), m, log), log);
}

/// Writes results.csv (test partition), results_validation.csv and one
/// history_<variant>.csv per successful variant.
inline void write_experiment(const std::filesystem::path& dir, const Manifest& m, const ExperimentResult& r) {
  std::filesystem::create_directories(dir);
  write_text_file(dir / "results.csv", results_csv(r.test_rows));
  write_text_file(dir / "results_validation.csv", results_csv(r.val_rows));
  for (std::size_t i = 0; i < m.variants.size(); ++i) {
    if (r.test_rows[i].metrics && m.variants[i] != Variant::Baseline)
      write_text_file(dir / ("history_" + to_string(m.variants[i]) + ".csv"), history_csv(r.histories[i]));
  }
}

}  // namespace icdnet
