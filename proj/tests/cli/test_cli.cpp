#include <gtest/gtest.h>
#include <spdlog/spdlog.h>
#include <unistd.h>

#include <fstream>
#include <set>
#include <sstream>

#include "commands.hpp"
#include "slangdef/checkpoint.hpp"
#include "slangdef/errors.hpp"

namespace slangdef::cli {
namespace {

namespace fs = std::filesystem;

const fs::path kSampleCorpus = fs::path(SLANGDEF_SOURCE_DIR) / "data" / "sample_corpus.jsonl";

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    spdlog::set_level(spdlog::level::warn);
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() /
           ("slangdef_cli_" + std::to_string(::getpid()) + "_" + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  RunConfig config(const std::string& run = "run") const {
    RunConfig c;
    c.corpus = kSampleCorpus;
    c.test_fraction = 0.1;
    c.dev_fraction = 0.1;
    c.vocab.word_min_count = 1;
    c.model.hidden = 8;
    c.train.batch_size = 4;
    c.train.max_epochs = 3;
    c.seed = 3;
    c.output_dir = dir_ / run;
    return c;
  }

  /// Eight entries whose first and last examples land in test and dev, so
  /// the rest can be memorized quickly.
  fs::path tiny_corpus() const {
    const fs::path p = dir_ / "tiny.jsonl";
    std::ofstream out(p);
    const char* rows[][3] = {
        {"yeet", "to throw hard", "he will yeet it"},
        {"salty", "bitter and upset", "she is salty today"},
        {"lit", "very exciting", "that show was lit"},
        {"sus", "suspicious", "that guy is sus"},
        {"bae", "a loved partner", "i miss my bae"},
        {"fam", "close friends", "love you fam"},
        {"cap", "a lie", "that is cap"},
        {"mid", "mediocre", "the food was mid"},
    };
    for (const auto& r : rows) {
      out << R"({"target": ")" << r[0] << R"(", "definition": ")" << r[1] << R"(", "example": ")" << r[2]
          << "\"}\n";
    }
    return p;
  }

  fs::path dir_;
  std::ostringstream sink_;
};

std::set<std::string> targets(const fs::path& manifest) {
  std::set<std::string> out;
  for (const auto& e : load_corpus(manifest)) out.insert(lowercase(e.target));
  return out;
}

bool same_params(const DualEncoderModel& a, const DualEncoderModel& b) {
  const auto na = named_parameters(a.params());
  const auto nb = named_parameters(b.params());
  if (na.size() != nb.size()) return false;
  for (std::size_t i = 0; i < na.size(); ++i) {
    if (na[i].name != nb[i].name || !(*na[i].value == *nb[i].value)) return false;
  }
  return true;
}

TEST_F(CliTest, PrepareWritesDisjointSplitsCoveringTheCorpus) {
  const RunConfig c = config();
  const PrepareResult r = cmd_prepare(c, sink_);
  EXPECT_EQ(r.train_entries + r.dev_entries + r.test_entries, 30u);
  EXPECT_GE(r.dev_entries, 1u);
  EXPECT_GE(r.test_entries, 1u);

  const Layout l{c.output_dir};
  const auto tr = targets(l.manifest("train"));
  const auto dv = targets(l.manifest("dev"));
  const auto te = targets(l.manifest("test"));
  for (const auto& t : dv) EXPECT_FALSE(tr.count(t) || te.count(t)) << t;
  for (const auto& t : te) EXPECT_FALSE(tr.count(t)) << t;
  EXPECT_TRUE(fs::exists(l.word_vocab()));
  EXPECT_TRUE(fs::exists(l.char_vocab()));
  EXPECT_TRUE(fs::exists(l.summary()));
}

TEST_F(CliTest, PrepareIsByteIdenticalAcrossRuns) {
  const RunConfig a = config("a");
  const RunConfig b = config("b");
  cmd_prepare(a, sink_);
  cmd_prepare(b, sink_);
  const Layout la{a.output_dir}, lb{b.output_dir};
  for (const auto& [pa, pb] : {std::pair{la.word_vocab(), lb.word_vocab()}, {la.char_vocab(), lb.char_vocab()},
                               {la.manifest("train"), lb.manifest("train")}, {la.manifest("dev"), lb.manifest("dev")},
                               {la.manifest("test"), lb.manifest("test")}, {la.summary(), lb.summary()}}) {
    EXPECT_EQ(slurp(pa), slurp(pb)) << pa;
  }
}

TEST_F(CliTest, PrepareSeedChangesTheSplit) {
  RunConfig a = config("a");
  RunConfig b = config("b");
  b.seed = a.seed + 1;
  cmd_prepare(a, sink_);
  cmd_prepare(b, sink_);
  EXPECT_NE(slurp(Layout{a.output_dir}.manifest("test")) + slurp(Layout{a.output_dir}.manifest("dev")),
            slurp(Layout{b.output_dir}.manifest("test")) + slurp(Layout{b.output_dir}.manifest("dev")));
}

TEST_F(CliTest, FractionLeavingNoTrainingTargetsIsADataError) {
  RunConfig c = config();
  c.test_fraction = 0.999;
  EXPECT_THROW(cmd_prepare(c, sink_), DataError);
}

TEST_F(CliTest, FractionOutsideUnitIntervalIsAUsageError) {
  RunConfig c = config();
  c.dev_fraction = 1.0;
  EXPECT_THROW(cmd_prepare(c, sink_), UsageError);
}

TEST_F(CliTest, TrainBeforePrepareIsADataError) {
  EXPECT_THROW(cmd_train(config(), false, sink_), DataError);
}

TEST_F(CliTest, ZeroLearningRateLeavesWeightsAtInitialization) {
  RunConfig c = config();
  c.train.initial_lr = 0.0;
  c.train.max_epochs = 2;
  cmd_prepare(c, sink_);
  const TrainState s = cmd_train(c, false, sink_);
  // A zero rate is already below the floor, so one epoch runs and then stops.
  EXPECT_EQ(s.progress.epoch, 1u);
  EXPECT_TRUE(s.stopped_on_min_lr);
  const Layout l{c.output_dir};
  EXPECT_TRUE(same_params(load_checkpoint(l.checkpoint("init")).model, load_checkpoint(l.checkpoint("last")).model));
}

TEST_F(CliTest, ResumeMatchesAnUninterruptedRun) {
  RunConfig straight = config("straight");
  straight.train.max_epochs = 4;
  cmd_prepare(straight, sink_);
  cmd_train(straight, false, sink_);

  RunConfig split = config("split");
  split.train.max_epochs = 2;
  cmd_prepare(split, sink_);
  cmd_train(split, false, sink_);
  split.train.max_epochs = 4;
  const TrainState s = cmd_train(split, true, sink_);
  ASSERT_EQ(s.history.size(), 2u);
  EXPECT_EQ(s.history.front().epoch, 3u);

  const Layout ls{straight.output_dir}, lp{split.output_dir};
  EXPECT_TRUE(same_params(load_checkpoint(ls.checkpoint("last")).model, load_checkpoint(lp.checkpoint("last")).model));
  EXPECT_EQ(load_checkpoint(ls.checkpoint("last")).meta.progress, load_checkpoint(lp.checkpoint("last")).meta.progress);

  std::istringstream log(slurp(lp.train_log()));
  std::string line;
  std::size_t expected = 1;
  while (std::getline(log, line)) {
    EXPECT_NE(line.find("{\"epoch\":" + std::to_string(expected) + ","), std::string::npos) << line;
    ++expected;
  }
  EXPECT_EQ(expected, 5u);
}

TEST_F(CliTest, ResumeDropsLogLinesPastTheCheckpoint) {
  RunConfig c = config();
  c.train.max_epochs = 2;
  cmd_prepare(c, sink_);
  cmd_train(c, false, sink_);
  const Layout l{c.output_dir};
  // A crash between the log append and the checkpoint write would leave this.
  {
    std::ofstream log(l.train_log(), std::ios::app);
    log << R"({"epoch":3,"train_loss":1.0,"dev_loss":null,"lr":0.5,"seconds":0.0})" << '\n';
  }
  c.train.max_epochs = 3;
  cmd_train(c, true, sink_);
  const std::string text = slurp(l.train_log());
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 3);
  EXPECT_EQ(text.find("\"train_loss\":1.0,"), std::string::npos);
}

TEST_F(CliTest, ResumeRejectsADifferentModelShape) {
  RunConfig c = config();
  c.train.max_epochs = 1;
  cmd_prepare(c, sink_);
  cmd_train(c, false, sink_);
  c.model.hidden = 12;
  c.train.max_epochs = 2;
  EXPECT_THROW(cmd_train(c, true, sink_), DataError);
}

TEST_F(CliTest, ResumeWithoutCheckpointIsADataError) {
  const RunConfig c = config();
  cmd_prepare(c, sink_);
  EXPECT_THROW(cmd_train(c, true, sink_), DataError);
}

class TrainedTiny : public CliTest {
 protected:
  void SetUp() override {
    CliTest::SetUp();
    cfg_ = config();
    cfg_.corpus = tiny_corpus();
    cfg_.model.hidden = 16;
    cfg_.train.batch_size = 2;
    cfg_.train.max_epochs = 150;
    cfg_.train.patience = 1000;
    cfg_.train.min_lr = 1e-9;
    cmd_prepare(cfg_, sink_);
    cmd_train(cfg_, false, sink_);
    last_ = Layout{cfg_.output_dir}.checkpoint("last");
  }

  RunConfig cfg_;
  fs::path last_;
};

TEST_F(TrainedTiny, EvaluateOnMemorizedTrainingSplitScoresHigh) {
  const BleuReport r = cmd_evaluate(cfg_, last_, "train", sink_);
  EXPECT_GT(r.b1, 90.0);
  const Layout l{cfg_.output_dir};
  EXPECT_TRUE(fs::exists(l.reports() / "bleu_train.json"));
  const std::string dump = slurp(l.reports() / "examples_train.txt");
  EXPECT_NE(dump.find("generated: "), std::string::npos);
  EXPECT_NE(dump.find("reference: "), std::string::npos);
}

TEST_F(TrainedTiny, EvaluateRejectsUnknownSplit) {
  EXPECT_THROW(cmd_evaluate(cfg_, last_, "holdout", sink_), UsageError);
}

TEST_F(TrainedTiny, ExplainWithBeamOfOneMatchesGreedy) {
  RunConfig beam = cfg_;
  beam.decode.mode = DecodeMode::Beam;
  beam.decode.beam_width = 1;
  for (const auto& [sentence, target] : {std::pair{"he will yeet it", "yeet"}, {"that is cap", "cap"},
                                         {"my new shoes are so lit", "lit"}, {"what a strange day", "strange"}}) {
    EXPECT_EQ(cmd_explain(cfg_, last_, sentence, target), cmd_explain(beam, last_, sentence, target)) << target;
  }
}

TEST_F(TrainedTiny, ExplainReproducesAMemorizedDefinition) {
  EXPECT_EQ(cmd_explain(cfg_, last_, "she is salty today", "salty"), "bitter and upset");
}

TEST_F(TrainedTiny, ExplainToleratesUnseenCharactersAndWords) {
  EXPECT_NO_THROW(cmd_explain(cfg_, last_, "qzx \xc3\xa6\xc3\xb0 wibble", "\xc3\xa6\xc3\xb0"));
}

TEST_F(TrainedTiny, ExplainRejectsEmptyInputs) {
  EXPECT_THROW(cmd_explain(cfg_, last_, "", "yeet"), UsageError);
  EXPECT_THROW(cmd_explain(cfg_, last_, "he will yeet it", "  "), UsageError);
}

TEST_F(TrainedTiny, ExplainWithACorruptCheckpointIsACheckpointError) {
  const fs::path bad = dir_ / "bad.ckpt";
  std::string bytes = slurp(last_);
  bytes[bytes.size() / 2] ^= 0x5a;
  std::ofstream(bad, std::ios::binary) << bytes;
  EXPECT_THROW(cmd_explain(cfg_, bad, "he will yeet it", "yeet"), CheckpointError);
}

TEST_F(TrainedTiny, ReportMarksTheBestEpoch) {
  std::ostringstream out;
  cmd_report(cfg_, out);
  const std::string text = out.str();
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 151);
  EXPECT_EQ(std::count(text.begin(), text.end(), '*'), 1);
}

TEST(RunConfigFile, ReadsValuesAndResolvesPathsAgainstItsDirectory) {
  const fs::path dir = fs::temp_directory_path() / ("slangdef_ini_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  const fs::path ini = dir / "run.ini";
  std::ofstream(ini) << "[data]\ncorpus = corpus.jsonl\ntest_fraction = 0.2\n"
                        "[model]\nvariant = char\nhidden = 12\n"
                        "[decode]\nmode = beam\nbeam_width = 3\n"
                        "[run]\nseed = 9\noutput_dir = out\n";
  const RunConfig c = load_run_config(ini);
  EXPECT_EQ(c.corpus, dir / "corpus.jsonl");
  EXPECT_EQ(c.output_dir, dir / "out");
  EXPECT_DOUBLE_EQ(c.test_fraction, 0.2);
  EXPECT_EQ(c.model.variant, Variant::FullCharLevel);
  EXPECT_EQ(c.model.hidden, 12u);
  EXPECT_EQ(c.decode.mode, DecodeMode::Beam);
  EXPECT_EQ(c.decode.beam_width, 3u);
  EXPECT_EQ(c.seed, 9u);
  fs::remove_all(dir);
}

TEST(RunConfigFile, RejectsUnknownKeysAndBadValues) {
  const fs::path dir = fs::temp_directory_path() / ("slangdef_ini_bad_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  const fs::path ini = dir / "run.ini";
  for (const char* body : {"[data]\ncorpus = x\n[model]\nhiden = 3\n", "[data]\ncorpus = x\n[extra]\na = 1\n",
                           "[data]\ncorpus = x\n[model]\nhidden = many\n", "[model]\nhidden = 3\n",
                           "[data]\ncorpus = x\n[decode]\nmode = sample\n"}) {
    std::ofstream(ini, std::ios::trunc) << body;
    EXPECT_THROW(load_run_config(ini), UsageError) << body;
  }
  EXPECT_THROW(load_run_config(dir / "missing.ini"), UsageError);
  fs::remove_all(dir);
}

TEST(RunConfigOverrides, BeamFlagSwitchesModeAndSubSeedsDiffer) {
  RunConfig c;
  Overrides o;
  o.beam = 5;
  o.seed = 11;
  o.variant = "single";
  apply(c, o);
  EXPECT_EQ(c.decode.mode, DecodeMode::Beam);
  EXPECT_EQ(c.decode.beam_width, 5u);
  EXPECT_EQ(c.model.variant, Variant::SingleEncoder);
  const std::set<std::uint64_t> seeds = {c.split_seed(), c.dev_seed(), c.init_seed(), c.shuffle_seed()};
  EXPECT_EQ(seeds.size(), 4u);
  o.variant = "quad";
  EXPECT_THROW(apply(c, o), UsageError);
}

}  // namespace
}  // namespace slangdef::cli
