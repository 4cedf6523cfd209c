#include "commands.hpp"

#include <spdlog/spdlog.h>

#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "slangdef/checkpoint.hpp"
#include "slangdef/errors.hpp"

namespace slangdef::cli {

using ordered_json = nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

std::size_t count_targets(std::span<const Entry> entries) {
  std::set<std::string> targets;
  for (const auto& e : entries) targets.insert(lowercase(e.target));
  return targets.size();
}

std::size_t count_examples(std::span<const Entry> entries) {
  std::size_t n = 0;
  for (const auto& e : entries) n += e.examples.size();
  return n;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
  if (!out) throw DataError("failed writing " + path.string());
}

std::vector<Entry> load_manifest(const Layout& layout, const std::string& split) {
  const fs::path path = layout.manifest(split);
  if (!fs::exists(path)) {
    throw DataError("missing " + path.string() + "; run `slangdef prepare` first");
  }
  return load_corpus(path);
}

Vocabularies load_vocabs(const Layout& layout) {
  for (const auto& p : {layout.word_vocab(), layout.char_vocab()}) {
    if (!fs::exists(p)) throw DataError("missing " + p.string() + "; run `slangdef prepare` first");
  }
  return {Vocabulary::load(layout.word_vocab(), VocabKind::Word),
          Vocabulary::load(layout.char_vocab(), VocabKind::Char)};
}

ModelConfig model_config(const RunConfig& cfg, const Vocabularies& vocabs) {
  ModelConfig mc = sized_config(cfg.model, vocabs).resolved();
  try {
    mc.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  return mc;
}

const Vocabulary* char_vocab_for(const ModelConfig& mc, const Vocabularies& vocabs) {
  return mc.uses_char_vocab() ? &vocabs.chars : nullptr;
}

LoadedCheckpoint load_for_inference(const Layout& layout, const std::optional<fs::path>& checkpoint,
                                    const Vocabularies& vocabs) {
  const fs::path path = checkpoint.value_or(layout.checkpoint("best"));
  if (!fs::exists(path)) throw DataError("checkpoint not found: " + path.string());
  // Peek at the variant first so the single-encoder case skips the char hash.
  const Variant v = load_checkpoint(path).model.config().variant;
  ModelConfig probe;
  probe.variant = v;
  return load_checkpoint(path, vocabs.words, probe.uses_char_vocab() ? &vocabs.chars : nullptr);
}

std::string log_line(const EpochRecord& r) {
  ordered_json j;
  j["epoch"] = r.epoch;
  j["train_loss"] = r.train_loss;
  j["dev_loss"] = r.dev_loss ? ordered_json(*r.dev_loss) : ordered_json(nullptr);
  j["lr"] = r.lr;
  j["seconds"] = r.seconds;
  return j.dump();
}

std::vector<ordered_json> read_log(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("missing training log " + path.string() + "; run `slangdef train` first");
  std::vector<ordered_json> records;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.empty()) continue;
    try {
      records.push_back(ordered_json::parse(line));
      records.back().at("epoch").get<std::size_t>();
    } catch (const nlohmann::json::exception& e) {
      throw DataError(path.string() + ":" + std::to_string(number) + ": bad log record: " + e.what());
    }
  }
  return records;
}

/// Keeps only the records a checkpoint at `epoch` has seen, so a resumed run
/// never shows an epoch twice.
void trim_log(const fs::path& path, std::uint64_t epoch) {
  if (!fs::exists(path)) return;
  std::string kept;
  for (const auto& r : read_log(path)) {
    if (r.at("epoch").get<std::uint64_t>() <= epoch) kept += r.dump() + "\n";
  }
  write_text(path, kept);
}

}  // namespace

PrepareResult cmd_prepare(const RunConfig& cfg, std::ostream& out) {
  cfg.validate();
  LoadReport load_report;
  std::vector<Entry> entries = load_corpus(cfg.corpus, &load_report);
  if (cfg.strict) {
    entries = keep_containing_examples(entries);
    if (entries.empty()) throw DataError("no example in " + cfg.corpus.string() + " contains its target");
  }
  const Split outer = split_entries(entries, cfg.test_fraction, cfg.split_seed());

  // At least one dev target, so the schedule always has held-out data.
  const std::size_t train_targets = count_targets(outer.train);
  if (train_targets < 2) {
    throw DataError("training side has " + std::to_string(train_targets) +
                    " target(s); need at least 2 to carve a dev set");
  }
  const auto n_dev = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::llround(cfg.dev_fraction * static_cast<double>(train_targets))));
  const Split inner = split_entries(outer.train, (static_cast<double>(n_dev) + 0.25) / static_cast<double>(train_targets),
                                    cfg.dev_seed());

  const Vocabularies vocabs = build_vocabularies(inner.train, cfg.vocab);
  const Layout layout{cfg.output_dir};
  fs::create_directories(layout.vocabs());
  fs::create_directories(layout.manifests());
  vocabs.words.save(layout.word_vocab());
  vocabs.chars.save(layout.char_vocab());

  const std::map<std::string, const std::vector<Entry>*> sides = {
      {"train", &inner.train}, {"dev", &inner.test}, {"test", &outer.test}};
  ordered_json summary;
  summary["corpus"] = cfg.corpus.filename().string();
  summary["records"] = load_report.records;
  summary["malformed"] = load_report.malformed;
  summary["strict"] = cfg.strict;
  summary["seed"] = cfg.seed;
  summary["variant"] = std::string(variant_name(cfg.model.variant));
  summary["vocab"] = {{"words", vocabs.words.size()}, {"chars", vocabs.chars.size()}};
  for (const char* name : {"train", "dev", "test"}) {
    const auto& side = *sides.at(name);
    write_corpus(layout.manifest(name), side);
    PairStats stats;
    make_pairs(side, vocabs.words, vocabs.chars, context_kind(cfg.model.variant), cfg.caps, &stats);
    summary["splits"][name] = {{"entries", side.size()},
                               {"targets", count_targets(side)},
                               {"examples", count_examples(side)},
                               {"pairs", stats.produced},
                               {"dropped", stats.dropped},
                               {"truncated", stats.truncated}};
  }
  write_text(layout.summary(), summary.dump(2) + "\n");

  PrepareResult r{inner.train.size(), inner.test.size(), outer.test.size()};
  out << "prepared " << entries.size() << " entries: " << r.train_entries << " train, " << r.dev_entries
      << " dev, " << r.test_entries << " test; vocab " << vocabs.words.size() << " words, "
      << vocabs.chars.size() << " chars -> " << layout.root.string() << "\n";
  return r;
}

TrainState cmd_train(const RunConfig& cfg, bool resume, std::ostream& out) {
  cfg.validate();
  const Layout layout{cfg.output_dir};
  const Vocabularies vocabs = load_vocabs(layout);
  const ModelConfig mc = model_config(cfg, vocabs);
  const ContextKind kind = context_kind(mc.variant);
  const auto train_pairs = make_pairs(load_manifest(layout, "train"), vocabs.words, vocabs.chars, kind, cfg.caps);
  const auto dev_pairs = make_pairs(load_manifest(layout, "dev"), vocabs.words, vocabs.chars, kind, cfg.caps);
  if (train_pairs.empty()) throw DataError("training manifest yields no usable pairs");

  CheckpointMeta meta;
  meta.word_vocab_hash = vocabs.words.content_hash();
  meta.char_vocab_hash = mc.uses_char_vocab() ? vocabs.chars.content_hash() : 0;
  meta.seed = cfg.seed;

  TrainConfig tc = cfg.train;
  tc.seed = cfg.shuffle_seed();

  fs::create_directories(layout.checkpoints());
  fs::create_directories(layout.logs());

  std::optional<TrainProgress> progress;
  std::optional<DualEncoderModel> model;
  if (resume) {
    const fs::path last = layout.checkpoint("last");
    if (!fs::exists(last)) throw DataError("nothing to resume: " + last.string() + " not found");
    LoadedCheckpoint ck = load_checkpoint(last, vocabs.words, char_vocab_for(mc, vocabs));
    if (!(ck.model.config() == mc)) {
      throw DataError("checkpoint " + last.string() + " holds a " + std::string(variant_name(ck.model.config().variant)) +
                      " model with hidden " + std::to_string(ck.model.config().hidden) +
                      ", which does not match the configuration");
    }
    if (ck.meta.seed != cfg.seed) {
      throw DataError("checkpoint was trained with seed " + std::to_string(ck.meta.seed) + ", config says " +
                      std::to_string(cfg.seed));
    }
    progress = ck.meta.progress;
    model.emplace(std::move(ck.model));
    trim_log(layout.train_log(), progress->epoch);
    out << "resuming after epoch " << progress->epoch << " (lr " << progress->lr << ")\n";
  } else {
    model.emplace(DualEncoderModel::random(mc, cfg.init_seed()));
    meta.progress.lr = tc.initial_lr;
    save_checkpoint(layout.checkpoint("init"), *model, meta);
    write_text(layout.train_log(), "");
  }

  const fs::path log_path = layout.train_log();
  auto on_epoch = [&](const DualEncoderModel& m, const TrainState& state, bool improved) {
    // Log first: a crash before the checkpoint lands leaves an extra line,
    // which the next resume trims.
    {
      std::ofstream log(log_path, std::ios::binary | std::ios::app);
      log << log_line(state.history.back()) << '\n';
      if (!log) throw DataError("failed appending to " + log_path.string());
    }
    meta.progress = state.progress;
    save_checkpoint(layout.checkpoint("last"), m, meta);
    if (improved) save_checkpoint(layout.checkpoint("best"), m, meta);
  };

  spdlog::info("training {} model: {} parameters, {} train / {} dev pairs", variant_name(mc.variant),
               parameter_count(model->params()), train_pairs.size(), dev_pairs.size());
  const TrainState state = train(*model, train_pairs, dev_pairs, tc, on_epoch, progress);
  if (!fs::exists(layout.checkpoint("best"))) {
    // Possible only when a resumed run had nothing left to do.
    meta.progress = state.progress;
    save_checkpoint(layout.checkpoint("best"), *model, meta);
  }
  out << "trained to epoch " << state.progress.epoch << ", best dev loss " << state.progress.best_dev_loss
      << (state.stopped_on_min_lr ? " (stopped: learning rate below floor)" : "") << "\n";
  return state;
}

BleuReport cmd_evaluate(const RunConfig& cfg, const std::optional<fs::path>& checkpoint, const std::string& split,
                        std::ostream& out) {
  cfg.validate();
  if (split != "train" && split != "dev" && split != "test") {
    throw UsageError("--split must be train, dev or test, got '" + split + "'");
  }
  const Layout layout{cfg.output_dir};
  const Vocabularies vocabs = load_vocabs(layout);
  const std::vector<Entry> entries = load_manifest(layout, split);
  const LoadedCheckpoint ck = load_for_inference(layout, checkpoint, vocabs);
  const ContextKind kind = context_kind(ck.model.config().variant);

  // make_pairs drops examples with an empty sequence; apply the same rule to
  // keep the text rows aligned with the pairs for the dump.
  struct Row {
    const Entry* entry;
    const std::string* example;
  };
  std::vector<Row> rows;
  for (const auto& e : entries) {
    if (tokenize_chars(e.target).empty() || tokenize_words(e.definition).empty()) continue;
    for (const auto& ex : e.examples) {
      const bool empty = kind == ContextKind::Words ? tokenize_words(ex).empty() : tokenize_chars(ex).empty();
      if (!empty) rows.push_back({&e, &ex});
    }
  }
  const std::vector<SequencePair> pairs = make_pairs(entries, vocabs.words, vocabs.chars, kind, cfg.caps);
  if (rows.size() != pairs.size()) throw std::logic_error("evaluate: text rows out of step with pairs");
  if (pairs.empty()) throw DataError("split '" + split + "' has no usable pairs");

  const auto predictions = predict(ck.model, pairs, cfg.decode);
  const BleuReport report = score(predictions);

  fs::create_directories(layout.reports());
  ordered_json j;
  j["split"] = split;
  j["checkpoint"] = checkpoint.value_or(layout.checkpoint("best")).filename().string();
  j["variant"] = std::string(variant_name(ck.model.config().variant));
  j["pairs"] = pairs.size();
  j["decode"] = {{"mode", cfg.decode.mode == DecodeMode::Beam ? "beam" : "greedy"},
                 {"beam_width", cfg.decode.beam_width},
                 {"max_len", cfg.decode.max_len},
                 {"length_alpha", cfg.decode.length_alpha}};
  j["bleu"] = ordered_json::parse(to_json(report));
  j["exact_match"] = exact_match_rate(predictions);
  const fs::path bleu_path = layout.reports() / ("bleu_" + split + ".json");
  write_text(bleu_path, j.dump(2) + "\n");

  std::ostringstream dump;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    dump << "context:   " << *rows[i].example << "\n"
         << "target:    " << rows[i].entry->target << "\n"
         << "reference: " << rows[i].entry->definition << "\n"
         << "generated: " << join_tokens(vocabs.words.decode(predictions[i].output)) << "\n\n";
  }
  write_text(layout.reports() / ("examples_" + split + ".txt"), dump.str());

  out << fmt::format("{}: B1 {:.2f} B2 {:.2f} BP {:.4f} over {} pairs -> {}\n", split, report.b1, report.b2,
                     report.brevity_penalty, pairs.size(), bleu_path.string());
  return report;
}

std::string cmd_explain(const RunConfig& cfg, const std::optional<fs::path>& checkpoint, const std::string& sentence,
                        const std::string& target) {
  cfg.validate();
  auto blank = [](const std::string& s) { return s.find_first_not_of(" \t\r\n") == std::string::npos; };
  if (blank(sentence)) throw UsageError("--sentence must not be empty");
  if (blank(target)) throw UsageError("--target must not be empty");
  const Layout layout{cfg.output_dir};
  const Vocabularies vocabs = load_vocabs(layout);
  const LoadedCheckpoint ck = load_for_inference(layout, checkpoint, vocabs);
  const SequencePair query = make_query(sentence, target, vocabs.words, vocabs.chars,
                                        context_kind(ck.model.config().variant), cfg.caps);
  if (query.context_ids.empty() || query.target_char_ids.empty()) {
    throw UsageError("sentence and target must contain at least one token");
  }
  return join_tokens(vocabs.words.decode(decode(ck.model, query, cfg.decode)));
}

void cmd_report(const RunConfig& cfg, std::ostream& out) {
  const Layout layout{cfg.output_dir};
  const auto records = read_log(layout.train_log());
  if (records.empty()) {
    out << "no epochs logged yet\n";
    return;
  }
  double best = std::numeric_limits<double>::infinity();
  std::size_t best_epoch = 0;
  for (const auto& r : records) {
    const auto& d = r.at("dev_loss");
    const double monitored = d.is_null() ? r.at("train_loss").get<double>() : d.get<double>();
    if (monitored < best) {
      best = monitored;
      best_epoch = r.at("epoch").get<std::size_t>();
    }
  }
  out << fmt::format("{:>6}  {:>10}  {:>10}  {:>10}  {:>8}\n", "epoch", "train", "dev", "lr", "seconds");
  for (const auto& r : records) {
    const auto epoch = r.at("epoch").get<std::size_t>();
    const auto& d = r.at("dev_loss");
    out << fmt::format("{:>6}  {:>10.5f}  {:>10}  {:>10.4g}  {:>8.2f}{}\n", epoch, r.at("train_loss").get<double>(),
                       d.is_null() ? std::string("-") : fmt::format("{:.5f}", d.get<double>()),
                       r.at("lr").get<double>(), r.at("seconds").get<double>(), epoch == best_epoch ? "  *" : "");
  }
}

}  // namespace slangdef::cli
