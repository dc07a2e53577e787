// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdio>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "icdnet/checkpoint.hpp"
#include "icdnet/corpus.hpp"
#include "icdnet/experiment.hpp"
#include "icdnet/icd.hpp"
#include "icdnet/models.hpp"
#include "icdnet/text.hpp"

// A trained-model directory:
//
//   checkpoint.bin   parameters, tagged with the model config hash
//   config.json      model config, label space, calibrated threshold
//   vocab.txt        vocabulary in id order
//   history.csv      per-epoch loss and validation F1 (neural variants)

namespace icdnet {

inline std::string hash_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

struct RunInfo {
  double threshold = 0.5;
  std::uint64_t seed = 0;
  std::size_t epochs = 0;
  std::size_t records = 0;
};

inline nlohmann::json label_space_json(const LabelSpace& space) {
  nlohmann::json j = {{"label_mode", to_string(space.mode())}, {"classes", space.classes()}};
  if (space.mode() == LabelMode::Level1Chapters) {
    j["chapters"] = space.table()->to_csv();
    j["excluded_roots"] = space.excluded_roots();
  }
  return j;
}

inline LabelSpace label_space_from_json(const nlohmann::json& j) {
  LabelMode mode = parse_label_mode(j.at("label_mode").get<std::string>());
  if (mode == LabelMode::Level1Chapters) {
    return LabelSpace::level1(ChapterTable::from_csv(j.at("chapters").get<std::string>()),
                              j.at("excluded_roots").get<std::set<int>>());
  }
  std::vector<IcdCode> codes;
  for (const auto& c : j.at("classes")) codes.push_back(parse_code(c.get<std::string>()));
  return LabelSpace::top_k(codes);
}

inline void save_run(const std::filesystem::path& dir, const Model& model, const LabelSpace& space,
                     const Vocabulary& vocab, const RunInfo& info) {
  std::filesystem::create_directories(dir);
  const ModelConfig& cfg = model.config();
  save_checkpoint(dir / "checkpoint.bin", {to_string(cfg.variant), cfg.hash(), info.seed}, model.params());
  nlohmann::json j = {{"model", cfg.to_json()},
                      {"config_hash", hash_hex(cfg.hash())},
                      {"labels", label_space_json(space)},
                      {"threshold", info.threshold},
                      {"seed", info.seed},
                      {"epochs", info.epochs},
                      {"records", info.records}};
  write_text_file(dir / "config.json", j.dump(2) + "\n");
  vocab.save(dir / "vocab.txt");
}

struct LoadedRun {
  std::unique_ptr<Model> model;
  LabelSpace space = LabelSpace::level1(standard_chapter_table());
  Vocabulary vocab;
  RunInfo info;
};

/// Rebuilds a trained model. Refuses a checkpoint whose config hash differs
/// from config.json.
inline LoadedRun load_run(const std::filesystem::path& dir) {
  const auto config_path = dir / "config.json";
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(detail::read_file(config_path));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(config_path.string() + ": " + e.what());
  }
  LoadedRun run;
  ModelConfig cfg;
  try {
    cfg = ModelConfig::from_json(j.at("model"));
    run.space = label_space_from_json(j.at("labels"));
    run.info.threshold = j.at("threshold").get<double>();
    run.info.seed = j.at("seed").get<std::uint64_t>();
    run.info.epochs = j.at("epochs").get<std::size_t>();
    run.info.records = j.at("records").get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(config_path.string() + ": " + e.what());
  }
  if (cfg.num_classes != run.space.size()) {
    throw ConfigError(config_path.string() + ": num_classes does not match the label space");
  }
  LoadedCheckpoint ck = load_checkpoint(dir / "checkpoint.bin");
  if (ck.header.config_hash != cfg.hash() || ck.header.variant != to_string(cfg.variant)) {
    throw ValidationError("checkpoint " + (dir / "checkpoint.bin").string() + " was written for config " +
                          hash_hex(ck.header.config_hash) + " (" + ck.header.variant + ") but config.json hashes to " +
                          hash_hex(cfg.hash()) + " (" + to_string(cfg.variant) + "); refusing to load");
  }
  run.vocab = Vocabulary::load(dir / "vocab.txt");
  if (cfg.variant != Variant::Baseline && run.vocab.size() != cfg.vocab_size) {
    throw ConfigError((dir / "vocab.txt").string() + ": vocabulary size does not match the model config");
  }
  run.model = std::make_unique<Model>(cfg);
  restore_parameters(ck, run.model->params());
  return run;
}

/// Encodes notes with a run's vocabulary and label space. Labels outside the
/// space are ignored; notes keep their order.
inline Dataset encode_for_run(const std::vector<RawNote>& notes, const LoadedRun& run) {
  const ModelConfig& cfg = run.model->config();
  auto codes = parse_corpus_codes(notes);
  Dataset out;
  for (std::size_t i = 0; i < notes.size(); ++i) {
    out.push_back({encode_pad(tokenize_note(notes[i], cfg.max_sentence_len), run.vocab, cfg.max_len),
                   encode_labels(codes[i], run.space)});
  }
  return out;
}

}  // namespace icdnet
