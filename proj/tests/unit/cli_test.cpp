// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <sstream>

#include "sentemb/checkpoint.hpp"
#include "sentemb/cli.hpp"
#include "sentemb/datasets.hpp"
#include "sentemb/evaluation.hpp"
#include "sentemb/format.hpp"
#include "test_support.hpp"

namespace sentemb {
namespace {

using testing::read_text;
using testing::TempDir;
using testing::write_text;

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "sentemb");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::size_t count_lines(const std::string& text, const std::string& needle = "") {
  std::size_t n = 0;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) n += line.find(needle) != std::string::npos;
  return n;
}

constexpr const char* kConfig = R"({
  "encoder": {"embed_dim": 16, "hidden_dim": 16, "layers": 1, "heads": 2, "ffn_dim": 32, "max_len": 12, "seed": 4},
  "head": {"kind": "mean"},
  "train": {"seed": 9},
  "data": {"stsb": "train.tsv", "nli": "nli.jsonl"},
  "output": {"checkpoint": "model.ckpt", "log": "loss.jsonl"}
})";

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    save_stsb(dir_ / "train.tsv", synth_sts(40, 20, 1));
    write_text(dir_ / "nli.jsonl",
               R"({"gold_label": "entailment", "sentence1": "w1 w2", "sentence2": "w1"})"
               "\n"
               R"({"gold_label": "contradiction", "sentence1": "w3", "sentence2": "w4 w5"})"
               "\n");
    write_text(dir_ / "run.json", kConfig);
  }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }
  TempDir dir_;
};

TEST_F(CliTest, TrainStsbWritesCheckpointAndTenEpochs) {
  const auto r = invoke({"train", "--config", path("run.json"), "--task", "stsb"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(std::filesystem::exists(dir_ / "model.ckpt"));
  const std::string log = read_text(dir_ / "loss.jsonl");
  EXPECT_EQ(count_lines(log, "mean_loss"), 10u);
  EXPECT_EQ(count_lines(log, "\"step\""), 20u);  // 10 x ceil(40 / 32)
  const auto ckpt = load_checkpoint(dir_ / "model.ckpt");
  EXPECT_EQ(ckpt.train.batch_size, 32u);
  EXPECT_EQ(ckpt.train.seed, 9u);
  EXPECT_DOUBLE_EQ(ckpt.train.base_lr, 2e-5);
}

TEST_F(CliTest, TrainNliThenResumeOnStsb) {
  auto r = invoke({"train", "--config", path("run.json"), "--task", "nli", "--out", path("nli.ckpt"), "--log",
                   path("nli.log")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(count_lines(read_text(dir_ / "nli.log"), "mean_loss"), 1u);
  EXPECT_TRUE(load_checkpoint(dir_ / "nli.ckpt").model.has_classifier());
  r = invoke({"train", "--config", path("run.json"), "--task", "stsb", "--resume", path("nli.ckpt")});
  EXPECT_EQ(r.code, 0) << r.err;
}

TEST_F(CliTest, NliTaskOnScoredDataIsRejected) {
  write_text(dir_ / "run.json", std::string(kConfig).replace(std::string(kConfig).find("nli.jsonl"), 9, "train.tsv"));
  EXPECT_EQ(invoke({"train", "--config", path("run.json"), "--task", "nli"}).code, 2);
}

TEST_F(CliTest, MissingConfigIsRejected) {
  const auto r = invoke({"train", "--config", path("nope.json"), "--task", "stsb"});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("nope.json"), std::string::npos);
}

TEST_F(CliTest, UnknownConfigKeyIsRejectedBeforeTraining) {
  write_text(dir_ / "run.json", R"({"encoder": {"hidden": 16}})");
  EXPECT_EQ(invoke({"train", "--config", path("run.json"), "--task", "stsb"}).code, 2);
  EXPECT_FALSE(std::filesystem::exists(dir_ / "loss.jsonl"));
}

TEST_F(CliTest, MissingDataPathIsRejectedBeforeTraining) {
  std::remove(path("train.tsv").c_str());
  EXPECT_EQ(invoke({"train", "--config", path("run.json"), "--task", "stsb"}).code, 2);
  EXPECT_FALSE(std::filesystem::exists(dir_ / "model.ckpt"));
}

TEST_F(CliTest, DivergenceExitsWithThree) {
  write_text(dir_ / "run.json", std::string(kConfig).replace(std::string(kConfig).find("\"seed\": 9"), 9,
                                                             "\"seed\": 9, \"base_lr\": 1e300"));
  EXPECT_EQ(invoke({"train", "--config", path("run.json"), "--task", "stsb"}).code, 3);
}

// Checkpoint plus gold scores equal to 5 x the checkpoint's own cosine.
void write_perfect_fixture(const TempDir& dir) {
  auto pairs = synth_sts(30, 20, 2);
  std::vector<std::string> sentences;
  for (const auto& p : pairs) {
    sentences.push_back(p.sentence_a);
    sentences.push_back(p.sentence_b);
  }
  const Vocab vocab = Vocab::build(sentences);
  auto enc = testing::tiny_encoder(false, 8);
  enc.vocab_size = vocab.size();
  enc.max_len = 12;
  const SiameseModel model(enc, {PoolingKind::mean, {}});
  const TokenizerOptions tok{12, true};
  save_checkpoint(dir / "m.ckpt", model, vocab, TrainConfig{}, tok);
  const auto cos = predict_similarity(model, vocab, tok, pairs);
  std::vector<SentencePair> gold;
  for (std::size_t i = 0; i < pairs.size(); ++i)
    if (cos[i] >= 0) gold.push_back(SentencePair::scored(pairs[i].sentence_a, pairs[i].sentence_b, 5 * cos[i]));
  ASSERT_GE(gold.size(), 5u);
  save_stsb(dir / "gold.tsv", gold);
}

TEST_F(CliTest, EvalOfPerfectPredictionsPrintsHundred) {
  write_perfect_fixture(dir_);
  const auto r = invoke({"eval", "--ckpt", path("m.ckpt"), "--data", path("gold.tsv"), "--report", path("r.txt")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out, "100.00 (100.00)\n");
  const std::string report = read_text(dir_ / "r.txt");
  EXPECT_NE(report.find("rendered=100.00 (100.00)"), std::string::npos);
}

TEST_F(CliTest, ConstantEmbeddingsExitWithFour) {
  auto enc = testing::tiny_encoder();
  SiameseModel model(enc, {PoolingKind::mean, {}});
  // Final layer norm with gamma 0, beta 1: every token maps to the same vector.
  for (const auto& p : model.parameters()) {
    Tensor t = p.tensor;
    if (p.name == "blocks.1.ffn.norm.gamma")
      for (auto& v : t.data()) v = 0;
    if (p.name == "blocks.1.ffn.norm.beta")
      for (auto& v : t.data()) v = 1;
  }
  std::vector<std::string> words;
  for (int i = 0; i < 20; ++i) words.push_back("w" + std::to_string(i));
  save_checkpoint(dir_ / "c.ckpt", model, Vocab(words), TrainConfig{}, {8, true});
  EXPECT_EQ(invoke({"eval", "--ckpt", path("c.ckpt"), "--data", path("train.tsv")}).code, 4);
}

TEST_F(CliTest, EvalLoadErrorsExitWithTwo) {
  write_text(dir_ / "junk.ckpt", "XXXXjunk");
  EXPECT_EQ(invoke({"eval", "--ckpt", path("junk.ckpt"), "--data", path("train.tsv")}).code, 2);
  EXPECT_EQ(invoke({"eval", "--ckpt", path("none.ckpt"), "--data", path("train.tsv")}).code, 2);
}

TEST_F(CliTest, EmbedIsDeterministicAndSkipsBlankLines) {
  write_perfect_fixture(dir_);
  write_text(dir_ / "in.txt", "w1 w2 w3\n\nw4 w5\nw1 w2 w3\n");
  auto r = invoke({"embed", "--ckpt", path("m.ckpt"), "--input", path("in.txt"), "--output", path("a.tsv")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.err.find("skipped 1"), std::string::npos);
  r = invoke({"embed", "--ckpt", path("m.ckpt"), "--input", path("in.txt"), "--output", path("b.tsv")});
  ASSERT_EQ(r.code, 0);
  const std::string a = read_text(dir_ / "a.tsv");
  EXPECT_EQ(a, read_text(dir_ / "b.tsv"));

  std::vector<std::string> lines;
  std::istringstream in(a);
  for (std::string line; std::getline(in, line);) lines.push_back(line);
  ASSERT_EQ(lines.size(), 3u);
  for (const auto& line : lines) EXPECT_EQ(std::count(line.begin(), line.end(), '\t'), 15);
  EXPECT_EQ(lines[0], lines[2]);
}

TEST_F(CliTest, UsageErrorsExitWithTwo) {
  EXPECT_EQ(invoke({"train", "--task", "stsb"}).code, 2);
  EXPECT_EQ(invoke({"train", "--config", path("run.json"), "--task", "glue"}).code, 2);
  EXPECT_EQ(invoke({"frobnicate"}).code, 2);
  EXPECT_EQ(invoke({"--help"}).code, 0);
}

}  // namespace
}  // namespace sentemb
