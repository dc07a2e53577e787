// SPDX-License-Identifier: Apache-2.0
//
// icdnet: ingest notes, build vocabularies, generate synthetic corpora,
// train, evaluate and predict ICD-9 label sets, and assemble report CSVs.
//
// Exit codes: 0 success, 1 invalid input or flags, 2 runtime failure.
// Diagnostics go to stderr; data goes to files or stdout.
//
// Defaults may come from an INI/TOML file passed as `icdnet --config FILE
// <subcommand> ...`, with one [section] per subcommand. Flags on the command
// line win over the file.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "icdnet/icdnet.hpp"

namespace fs = std::filesystem;
using namespace icdnet;

namespace {

const std::map<std::string, Variant> kVariantNames{
    {"baseline", Variant::Baseline}, {"cnn", Variant::Cnn},   {"cnn_attention", Variant::CnnAttention},
    {"lstm", Variant::Lstm},         {"lstm_attention", Variant::LstmAttention}, {"han", Variant::HierAttention}};

const std::map<std::string, LabelMode> kLabelModes{{"level1", LabelMode::Level1Chapters},
                                                   {"topk", LabelMode::TopKCodes}};

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

nlohmann::json read_json_file(const fs::path& p) {
  try {
    return nlohmann::json::parse(detail::read_file(p));
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(p.string() + ": " + e.what());
  }
}

void require_records(const std::vector<RawNote>& notes) {
  if (notes.empty()) throw ValidationError("no records");
}

// ---------------------------------------------------------------- ingest

struct IngestArgs {
  fs::path input, output;
};

void run_ingest(const IngestArgs& a) {
  auto notes = read_corpus(a.input);
  require_records(notes);
  auto codes = parse_corpus_codes(notes);
  std::size_t total = 0;
  std::set<std::string> distinct;
  for (std::size_t i = 0; i < notes.size(); ++i) {
    notes[i].codes.clear();
    for (const auto& c : codes[i]) {
      notes[i].codes.push_back(c.str());
      distinct.insert(c.str());
      ++total;
    }
  }
  write_text_file(a.output, corpus_to_jsonl(notes));
  std::cout << "notes " << notes.size() << "\ncodes " << total << "\ndistinct_codes " << distinct.size() << "\n";
}

// ---------------------------------------------------------------- stats

struct StatsArgs {
  fs::path input;
  std::size_t max_sentence_len = kDefaultMaxSentenceLen;
};

void run_stats(const StatsArgs& a) {
  auto notes = read_corpus(a.input);
  require_records(notes);
  std::vector<TokenizedNote> toks;
  for (const auto& n : notes) toks.push_back(tokenize_note(n, a.max_sentence_len));
  LengthStats st = corpus_length_stats(toks);
  LabelSpace l1 = LabelSpace::level1(standard_chapter_table());
  std::size_t code_total = 0, unlabeled = 0, chapter_total = 0;
  std::set<std::string> distinct;
  for (const auto& codes : parse_corpus_codes(notes)) {
    code_total += codes.size();
    for (const auto& c : codes) distinct.insert(c.str());
    auto y = encode_labels(codes, l1);
    auto k = static_cast<std::size_t>(std::count(y.begin(), y.end(), 1));
    chapter_total += k;
    unlabeled += k == 0;
  }
  const double n = static_cast<double>(notes.size());
  std::cout << "notes " << notes.size() << "\n"
            << "mean_tokens " << fixed(st.mean, 2) << "\n"
            << "max_tokens " << st.max_length << "\n"
            << "codes " << code_total << "\n"
            << "distinct_codes " << distinct.size() << "\n"
            << "mean_codes_per_note " << fixed(static_cast<double>(code_total) / n, 3) << "\n"
            << "mean_chapters_per_note " << fixed(static_cast<double>(chapter_total) / n, 3) << "\n"
            << "notes_without_chapter " << unlabeled << "\n";
}

// ---------------------------------------------------------------- build-vocab

struct VocabArgs {
  fs::path input, output;
  std::size_t min_frequency = 1;
  std::size_t max_sentence_len = kDefaultMaxSentenceLen;
};

void run_build_vocab(const VocabArgs& a) {
  auto notes = read_corpus(a.input);
  require_records(notes);
  std::vector<TokenizedNote> toks;
  for (const auto& n : notes) toks.push_back(tokenize_note(n, a.max_sentence_len));
  Vocabulary v = build_vocab(toks, a.min_frequency);
  v.save(a.output);
  std::cout << "vocabulary " << v.size() << "\n";
}

// ---------------------------------------------------------------- gen-synthetic

struct SynthArgs {
  fs::path output;
  SyntheticSpec spec;
};

void run_gen_synthetic(const SynthArgs& a) {
  SyntheticCorpus syn = generate_synthetic(a.spec, standard_chapter_table());
  write_text_file(a.output, corpus_to_jsonl(syn.notes));
  std::cout << "notes " << syn.notes.size() << "\n";
  for (std::size_t c = 0; c < syn.class_keywords.size(); ++c) {
    std::cout << "class " << standard_chapter_table().chapters()[c].label() << " keywords";
    for (const auto& k : syn.class_keywords[c]) std::cout << ' ' << k;
    std::cout << "\n";
  }
}

// ---------------------------------------------------------------- train

struct TrainArgs {
  std::optional<fs::path> manifest, input, model_config, vectors, chapters;
  fs::path out;
  std::string variant = "cnn";
  std::string label_mode = "level1";
  std::size_t top_k = 10, epochs = 5, max_len = 200, min_frequency = 1;
  std::size_t max_sentence_len = kDefaultMaxSentenceLen, batch_size = 32;
  std::optional<std::size_t> max_records, patience;
  std::uint64_t seed = 0;
  double learning_rate = 0.001;
  bool fixed_epochs = false;
  std::vector<int> excluded_roots{798};
};

/// Manifest from the file (if any) with explicitly given flags on top.
Manifest manifest_from(const TrainArgs& a, const CLI::App& cmd) {
  Manifest m;
  if (a.manifest) {
    nlohmann::json j = read_json_file(*a.manifest);
    m = Manifest::from_json(j, a.manifest->parent_path());
  }
  auto given = [&](const char* flag) { return cmd.count(flag) > 0; };
  if (a.input) m.data = *a.input;
  if (given("--variant") || !a.manifest) m.variants = {kVariantNames.at(a.variant)};
  if (given("--label-mode") || !a.manifest) m.label_mode = kLabelModes.at(a.label_mode);
  if (given("--top-k") || !a.manifest) m.top_k = a.top_k;
  if (given("--max-records") || !a.manifest) m.max_records = a.max_records;
  if (given("--epochs") || !a.manifest) m.epochs = a.epochs;
  if (given("--seed") || !a.manifest) m.seed = a.seed;
  if (given("--max-len") || !a.manifest) m.max_len = a.max_len;
  if (given("--min-frequency") || !a.manifest) m.min_frequency = a.min_frequency;
  if (given("--max-sentence-len") || !a.manifest) m.max_sentence_len = a.max_sentence_len;
  if (given("--batch-size") || !a.manifest) m.batch_size = a.batch_size;
  if (given("--lr") || !a.manifest) m.learning_rate = a.learning_rate;
  if (given("--patience") || !a.manifest) m.patience = a.patience;
  if (given("--fixed-epochs")) m.fixed_epochs = a.fixed_epochs;
  if (given("--exclude-roots") || !a.manifest) m.excluded_roots = {a.excluded_roots.begin(), a.excluded_roots.end()};
  if (a.chapters) m.chapters = *a.chapters;
  if (a.model_config) m.model = read_json_file(*a.model_config);
  m.validate();
  return m;
}

void run_train(const TrainArgs& a, const CLI::App& cmd) {
  if (!a.manifest && !a.input) throw ConfigError("train needs --input or --manifest");
  const Manifest m = manifest_from(a, cmd);
  auto notes = read_corpus(m.data);
  require_records(notes);
  PreparedData d = prepare_data(notes, m, &std::cerr);
  std::cerr << "records " << d.records() << " (train " << d.train.size() << ", validation " << d.val.size()
            << ", test " << d.test.size() << "), classes " << d.space.size() << ", vocabulary " << d.vocab.size()
            << "\n";

  if (a.manifest && !cmd.count("--variant")) {
    ExperimentResult r = run_experiment(m, d, &std::cerr);
    write_experiment(a.out, m, r);
    bool any_failed = std::any_of(r.test_rows.begin(), r.test_rows.end(), [](const auto& row) { return !row.metrics; });
    if (any_failed) throw Error("one or more variants failed; see results.csv");
    return;
  }

  const Variant v = m.variants.front();
  Model model(model_config_for(m, v, d));
  TrainConfig tc = train_config_for(m);
  if (a.vectors && model.is_neural()) {
    tc.after_init = [&](Model& mdl) {
      PretrainedLoadReport rep = load_pretrained_vectors(*a.vectors, d.vocab, mdl.param("embedding"));
      std::cerr << "pretrained vectors: " << rep.hits << " hits, " << rep.misses << " misses, " << rep.unused
                << " unused\n";
    };
  }
  VariantRun run = run_variant(model, d, tc);
  save_run(a.out, model, d.space, d.vocab, {run.tau.tau, m.seed, m.epochs, d.records()});
  if (model.is_neural()) write_text_file(a.out / "history.csv", history_csv(run.train.history));
  ResultRow test_row{v, m.label_mode, d.records(), m.epochs, run.test, {}};
  ResultRow val_row{v, m.label_mode, d.records(), m.epochs, run.val, {}};
  write_text_file(a.out / "results.csv", results_csv({test_row}));
  write_text_file(a.out / "results_validation.csv", results_csv({val_row}));
  std::cerr << to_string(v) << ": tau " << fixed(run.tau.tau, 2) << ", test F1 " << fixed(run.test.f1, 4)
            << ", validation F1 " << fixed(run.val.f1, 4) << "\n";
}

// ---------------------------------------------------------------- evaluate

struct EvalArgs {
  fs::path run, input, output;
  std::optional<double> threshold;
};

void run_evaluate(const EvalArgs& a) {
  LoadedRun run = load_run(a.run);
  auto notes = read_corpus(a.input);
  require_records(notes);
  Dataset all = encode_for_run(notes, run), kept;
  for (auto& ex : all)
    if (std::count(ex.labels.begin(), ex.labels.end(), 1) > 0) kept.push_back(std::move(ex));
  if (kept.size() < all.size())
    std::cerr << "dropped " << all.size() - kept.size() << " notes with no label in the class space\n";
  if (kept.empty()) throw ValidationError("no note carries a label inside the class space");
  const double tau = a.threshold.value_or(run.info.threshold);
  MetricsReport r = evaluate(*run.model, Threshold{tau}, kept, "evaluation");
  ResultRow row{run.model->config().variant, run.space.mode(), kept.size(), run.info.epochs, r, {}};
  write_text_file(a.output, results_csv({row}));
  std::cerr << "F1 " << fixed(r.f1, 4) << " at tau " << fixed(tau, 2) << "\n";
}

// ---------------------------------------------------------------- predict

struct PredictArgs {
  fs::path run, input, output;
  std::optional<double> threshold;
  bool scores = false;
};

void run_predict(const PredictArgs& a) {
  LoadedRun run = load_run(a.run);
  auto notes = read_corpus(a.input);
  require_records(notes);
  const ModelConfig& cfg = run.model->config();
  const double tau = a.threshold.value_or(run.info.threshold);
  std::string out;
  for (const auto& n : notes) {
    EncodedNote e = encode_pad(tokenize_note(n, cfg.max_sentence_len), run.vocab, cfg.max_len);
    std::vector<double> s = run.model->scores(e);
    nlohmann::json j;
    j["note_id"] = n.note_id;
    j["codes"] = nlohmann::json::array();
    for (std::size_t c = 0; c < s.size(); ++c)
      if (s[c] >= tau) j["codes"].push_back(run.space.classes()[c]);
    if (a.scores) j["scores"] = s;
    out += j.dump() + "\n";
  }
  write_text_file(a.output, out);
}

// ---------------------------------------------------------------- report

struct ReportArgs {
  std::optional<fs::path> results, corpus;
  fs::path out;
  std::string label_mode = "level1";
  std::size_t top_k = 20, bucket_width = 100;
  std::size_t max_sentence_len = kDefaultMaxSentenceLen;
};

/// Data rows of every results.csv below `dir`, in path order. Failed runs
/// (metric columns "nan") are left out.
std::vector<std::string> collect_result_rows(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error("results directory not found: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file() && e.path().filename() == "results.csv") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  std::vector<std::string> rows;
  for (const auto& f : files) {
    std::istringstream in(detail::read_file(f));
    std::string line;
    if (!std::getline(in, line) || line != kResultsHeader) throw ParseError(f.string() + ": unexpected header");
    while (std::getline(in, line))
      if (!line.empty() && line.find(",nan") == std::string::npos) rows.push_back(line);
  }
  return rows;
}

void run_report(const ReportArgs& a) {
  if (!a.results && !a.corpus) throw ConfigError("report needs --results and/or --corpus");
  fs::create_directories(a.out);
  if (a.results) {
    std::string table(kResultsHeader);
    table += '\n';
    for (const auto& row : collect_result_rows(*a.results)) table += row + '\n';
    write_text_file(a.out / "results_table.csv", table);
  }
  if (a.corpus) {
    auto notes = read_corpus(*a.corpus);
    require_records(notes);
    auto codes = parse_corpus_codes(notes);
    LabelSpace space = kLabelModes.at(a.label_mode) == LabelMode::Level1Chapters
                           ? LabelSpace::level1(standard_chapter_table())
                           : top_k_codes(codes, a.top_k);
    std::vector<LabelVector> labels;
    for (const auto& c : codes) labels.push_back(encode_labels(c, space));
    write_text_file(a.out / "penetration.csv", penetration_csv(penetration_report(labels, space)));
    std::vector<TokenizedNote> toks;
    for (const auto& n : notes) toks.push_back(tokenize_note(n, a.max_sentence_len));
    write_text_file(a.out / "length_histogram.csv", corpus_length_stats(toks, a.bucket_width).to_csv());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ICD-9 multi-label classification of discharge notes"};
  app.set_config("--config", "", "INI/TOML file with per-subcommand defaults; command-line flags win");
  app.require_subcommand(1);
  const auto pos_int = CLI::PositiveNumber;
  const auto unit = CLI::Range(0.0, 1.0);

  IngestArgs ingest;
  auto* c_ingest = app.add_subcommand("ingest", "Validate a corpus and write it as canonical JSONL");
  c_ingest->add_option("--input", ingest.input, "Corpus (.jsonl, or .csv with note_id,text,codes)")->required();
  c_ingest->add_option("--output", ingest.output, "Normalized JSONL corpus to write")->required();

  StatsArgs stats;
  auto* c_stats = app.add_subcommand("stats", "Print corpus statistics");
  c_stats->add_option("--input", stats.input, "Corpus file")->required();
  c_stats->add_option("--max-sentence-len", stats.max_sentence_len, "Sentence cap in tokens")->check(pos_int);

  VocabArgs vocab;
  auto* c_vocab = app.add_subcommand("build-vocab", "Build a vocabulary from every note of a corpus");
  c_vocab->add_option("--input", vocab.input, "Corpus file")->required();
  c_vocab->add_option("--output", vocab.output, "Vocabulary file, one token per line")->required();
  c_vocab->add_option("--min-frequency", vocab.min_frequency, "Minimum token count")->check(pos_int);
  c_vocab->add_option("--max-sentence-len", vocab.max_sentence_len, "Sentence cap in tokens")->check(pos_int);

  SynthArgs syn;
  auto* c_syn = app.add_subcommand("gen-synthetic", "Generate a corpus with planted class keywords");
  c_syn->add_option("--output", syn.output, "JSONL corpus to write")->required();
  c_syn->add_option("--notes", syn.spec.num_notes, "Number of notes")->check(pos_int);
  c_syn->add_option("--classes", syn.spec.num_classes, "Number of classes (chapters), at most 17")->check(pos_int);
  c_syn->add_option("--keywords-per-class", syn.spec.keywords_per_class, "Keywords planted per class")->check(pos_int);
  c_syn->add_option("--min-length", syn.spec.min_length, "Shortest note in words")->check(pos_int);
  c_syn->add_option("--max-length", syn.spec.max_length, "Longest note in words")->check(pos_int);
  c_syn->add_option("--cardinality", syn.spec.cardinality, "P(1 label),P(2 labels),... comma separated")
      ->delimiter(',');
  c_syn->add_option("--noise", syn.spec.noise_fraction, "Fraction of non-keyword words drawn from random noise")
      ->check(unit);
  c_syn->add_option("--codes-per-class", syn.spec.codes_per_class, "Distinct codes drawn per class")->check(pos_int);
  c_syn->add_option("--seed", syn.spec.seed, "Master seed");

  TrainArgs tr;
  auto* c_train = app.add_subcommand("train", "Train one model, or every variant of a manifest");
  c_train->add_option("--manifest", tr.manifest, "Experiment manifest (JSON); flags override its fields")
      ->check(CLI::ExistingFile);
  c_train->add_option("--input", tr.input, "Corpus file (overrides the manifest's data path)");
  c_train->add_option("--out", tr.out, "Output directory")->required();
  c_train->add_option("--variant", tr.variant, "Model variant")
      ->check(CLI::IsMember({"baseline", "cnn", "cnn_attention", "lstm", "lstm_attention", "han"}));
  c_train->add_option("--label-mode", tr.label_mode, "level1 (17 chapters) or topk (most frequent codes)")
      ->check(CLI::IsMember({"level1", "topk"}));
  c_train->add_option("--top-k", tr.top_k, "Class count in topk mode")->check(pos_int);
  c_train->add_option("--max-records", tr.max_records, "Seeded random sample cap")->check(CLI::Range(3, 1 << 30));
  c_train->add_option("--epochs", tr.epochs, "Training epochs")->check(pos_int);
  c_train->add_option("--seed", tr.seed, "Master seed for split, init, shuffle and dropout");
  c_train->add_option("--max-len", tr.max_len, "Tokens kept per note")->check(pos_int);
  c_train->add_option("--min-frequency", tr.min_frequency, "Vocabulary cutoff")->check(pos_int);
  c_train->add_option("--max-sentence-len", tr.max_sentence_len, "Sentence cap in tokens")->check(pos_int);
  c_train->add_option("--batch-size", tr.batch_size, "Notes per optimizer step")->check(pos_int);
  c_train->add_option("--lr", tr.learning_rate, "Adam learning rate")->check(CLI::PositiveNumber);
  c_train->add_option("--patience", tr.patience, "Stop after this many epochs without a better validation F1")
      ->check(pos_int);
  c_train->add_flag("--fixed-epochs", tr.fixed_epochs, "Keep the final parameters instead of the best epoch");
  c_train->add_option("--exclude-roots", tr.excluded_roots, "Numeric roots left out of level1 labels")
      ->delimiter(',');
  c_train->add_option("--chapters", tr.chapters, "Chapter table CSV (default: built-in)")->check(CLI::ExistingFile);
  c_train->add_option("--model-config", tr.model_config, "JSON file of model overrides (embedding_dim, ...)")
      ->check(CLI::ExistingFile);
  c_train->add_option("--vectors", tr.vectors, "Pretrained word vectors, `token v1 ... vd` per line")
      ->check(CLI::ExistingFile);

  EvalArgs ev;
  auto* c_eval = app.add_subcommand("evaluate", "Score a labeled corpus with a trained model");
  c_eval->add_option("--run", ev.run, "Directory written by train")->required();
  c_eval->add_option("--input", ev.input, "Labeled corpus")->required();
  c_eval->add_option("--output", ev.output, "Metrics CSV to write")->required();
  c_eval->add_option("--threshold", ev.threshold, "Decision threshold (default: the calibrated one)")->check(unit);

  PredictArgs pr;
  auto* c_pred = app.add_subcommand("predict", "Write predicted label sets as JSONL");
  c_pred->add_option("--run", pr.run, "Directory written by train")->required();
  c_pred->add_option("--input", pr.input, "Corpus (codes may be empty)")->required();
  c_pred->add_option("--output", pr.output, "JSONL predictions to write")->required();
  c_pred->add_option("--threshold", pr.threshold, "Decision threshold (default: the calibrated one)")->check(unit);
  c_pred->add_flag("--scores", pr.scores, "Include per-class probabilities");

  ReportArgs rep;
  auto* c_rep = app.add_subcommand("report", "Assemble results, penetration and length-histogram CSVs");
  c_rep->add_option("--results", rep.results, "Directory searched recursively for results.csv files");
  c_rep->add_option("--corpus", rep.corpus, "Corpus for penetration and length histograms");
  c_rep->add_option("--out", rep.out, "Output directory")->required();
  c_rep->add_option("--label-mode", rep.label_mode, "Classes for the penetration CSV: level1 or topk")
      ->check(CLI::IsMember({"level1", "topk"}));
  c_rep->add_option("--top-k", rep.top_k, "Code count in topk mode")->check(pos_int);
  c_rep->add_option("--bucket-width", rep.bucket_width, "Length histogram bucket width")->check(pos_int);
  c_rep->add_option("--max-sentence-len", rep.max_sentence_len, "Sentence cap in tokens")->check(pos_int);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (*c_ingest) run_ingest(ingest);
    else if (*c_stats) run_stats(stats);
    else if (*c_vocab) run_build_vocab(vocab);
    else if (*c_syn) run_gen_synthetic(syn);
    else if (*c_train) run_train(tr, *c_train);
    else if (*c_eval) run_evaluate(ev);
    else if (*c_pred) run_predict(pr);
    else if (*c_rep) run_report(rep);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
