// SPDX-License-Identifier: Apache-2.0
#include "sentemb/cli.hpp"

#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "sentemb/checkpoint.hpp"
#include "sentemb/datasets.hpp"
#include "sentemb/errors.hpp"
#include "sentemb/evaluation.hpp"
#include "sentemb/format.hpp"

namespace sentemb::cli {

namespace fs = std::filesystem;

namespace {

Json read_json_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open config " + path.string());
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

fs::path resolve(const fs::path& base, const Json& v, const std::string& key) {
  if (!v.is_string()) throw ConfigError(key + ": expected a path string");
  fs::path p = v.get<std::string>();
  return p.is_relative() ? base / p : p;
}

void require_file(const fs::path& p, const std::string& what) {
  if (!fs::is_regular_file(p)) throw InputError(what + " not found: " + p.string());
}

void require_writable_dir(const fs::path& p, const std::string& what) {
  const fs::path dir = p.has_parent_path() ? p.parent_path() : fs::path(".");
  if (!fs::is_directory(dir)) throw InputError(what + " directory does not exist: " + dir.string());
}

std::vector<std::string> all_sentences(std::span<const SentencePair> pairs) {
  std::vector<std::string> out;
  out.reserve(2 * pairs.size());
  for (const auto& p : pairs) {
    out.push_back(p.sentence_a);
    out.push_back(p.sentence_b);
  }
  return out;
}

struct TrainArgs {
  fs::path config;
  std::string task;
  std::optional<fs::path> resume;
  std::optional<fs::path> out;
  std::optional<fs::path> log;
};

int cmd_train(const TrainArgs& args, std::ostream& out, std::ostream& err) {
  const Task task = args.task == "nli" ? Task::nli : Task::stsb;
  require_file(args.config, "config");
  RunConfig rc = RunConfig::load(args.config);

  const fs::path ckpt_path = args.out ? *args.out : rc.checkpoint_path.value_or(fs::path());
  const fs::path log_path = args.log ? *args.log : rc.log_path.value_or(fs::path());
  if (ckpt_path.empty()) throw ConfigError("no checkpoint output: pass --out or set output.checkpoint");
  if (log_path.empty()) throw ConfigError("no loss log output: pass --log or set output.log");

  const auto& data_path = task == Task::stsb ? rc.stsb_path : rc.nli_path;
  if (!data_path) throw ConfigError(std::string("config has no data.") + (task == Task::stsb ? "stsb" : "nli") + " path");
  require_file(*data_path, "training data");
  if (rc.vocab_path) require_file(*rc.vocab_path, "vocabulary");
  if (args.resume) require_file(*args.resume, "checkpoint to resume");
  require_writable_dir(ckpt_path, "checkpoint");
  require_writable_dir(log_path, "loss log");

  std::vector<SentencePair> pairs;
  if (task == Task::stsb) {
    pairs = load_stsb(*data_path);
  } else {
    NliData nli = load_nli(*data_path);
    if (nli.skipped) err << "skipped " << nli.skipped << " NLI records without a gold label\n";
    pairs = std::move(nli.pairs);
  }
  if (pairs.empty()) throw InputError("no training pairs in " + data_path->string());

  std::optional<Checkpoint> resumed;
  if (args.resume) resumed.emplace(load_checkpoint(*args.resume));

  Vocab vocab;
  TokenizerOptions tok;
  if (resumed) {
    vocab = resumed->vocab;
    tok = resumed->tokenizer;
  } else {
    vocab = rc.vocab_path ? Vocab::load(*rc.vocab_path) : Vocab::build(all_sentences(pairs), 0, rc.lowercase);
    if (rc.encoder.vocab_size == 0) rc.encoder.vocab_size = vocab.size();
    if (vocab.size() > rc.encoder.vocab_size)
      throw ConfigError("vocabulary has " + std::to_string(vocab.size()) + " entries but encoder.vocab_size is " +
                        std::to_string(rc.encoder.vocab_size));
    tok = TokenizerOptions{rc.encoder.max_len, rc.lowercase};
  }

  SiameseModel model = resumed ? resumed->model : SiameseModel(rc.encoder, rc.head);
  TrainConfig cfg = TrainConfig::recipe(task, model.head().config().kind);
  read_json(rc.train_overrides, cfg);
  cfg.validate();

  const auto data = tokenize_pairs(vocab, pairs, tok);
  const Objective objective = task == Task::stsb ? Objective::regression : Objective::classification;
  TrainLog log = train(model, data, objective, cfg);

  save_checkpoint(ckpt_path, model, vocab, cfg, tok);
  log.write(log_path);
  out << "trained " << log.epochs.size() << " epochs, " << log.steps.size() << " steps";
  if (!log.epochs.empty()) out << ", final mean loss " << format_shortest(log.epochs.back().mean_loss);
  out << "\n";
  return kOk;
}

int cmd_eval(const fs::path& ckpt_path, const fs::path& data_path, const std::optional<fs::path>& report_path,
             std::ostream& out) {
  require_file(ckpt_path, "checkpoint");
  require_file(data_path, "evaluation data");
  if (report_path) require_writable_dir(*report_path, "report");
  const Checkpoint ckpt = load_checkpoint(ckpt_path);
  const auto pairs = load_stsb(data_path);
  const EvalReport report = evaluate_sts(ckpt.model, ckpt.vocab, ckpt.tokenizer, pairs);
  if (report_path) report.write(*report_path);
  out << report.rendered() << "\n";
  return kOk;
}

bool blank(const std::string& line) {
  return line.find_first_not_of(" \t\r\f\v") == std::string::npos;
}

int cmd_embed(const fs::path& ckpt_path, const fs::path& input_path, const fs::path& output_path,
              std::ostream& err) {
  require_file(ckpt_path, "checkpoint");
  require_file(input_path, "input");
  require_writable_dir(output_path, "output");
  const Checkpoint ckpt = load_checkpoint(ckpt_path);

  std::ifstream in(input_path, std::ios::binary);
  std::vector<std::string> sentences;
  std::size_t skipped = 0;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (blank(line)) {
      ++skipped;
      continue;
    }
    sentences.push_back(line);
  }
  if (skipped) err << "warning: skipped " << skipped << " empty input lines\n";

  std::ostringstream buf;
  const std::size_t h = ckpt.model.hidden_dim();
  constexpr std::size_t kChunk = 64;
  for (std::size_t start = 0; start < sentences.size(); start += kChunk) {
    const std::size_t count = std::min(kChunk, sentences.size() - start);
    std::vector<std::vector<std::int32_t>> ids;
    for (std::size_t i = start; i < start + count; ++i)
      ids.push_back(encode_sentence(ckpt.vocab, sentences[i], ckpt.tokenizer));
    const Tensor emb = ckpt.model.embed(TokenizedBatch::from_sequences(ids));
    const auto d = emb.data();
    for (std::size_t b = 0; b < count; ++b) {
      for (std::size_t j = 0; j < h; ++j) buf << (j ? "\t" : "") << format_shortest(d[b * h + j]);
      buf << '\n';
    }
  }
  std::ofstream outf(output_path, std::ios::binary | std::ios::trunc);
  if (!outf) throw InputError("cannot write " + output_path.string());
  outf << buf.str();
  return kOk;
}

}  // namespace

RunConfig RunConfig::load(const fs::path& path) {
  const Json j = read_json_file(path);
  if (!j.is_object()) throw ConfigError(path.string() + ": expected a JSON object");
  const fs::path base = path.has_parent_path() ? path.parent_path() : fs::path(".");
  RunConfig rc;
  for (const auto& [key, value] : j.items()) {
    if (key == "encoder") {
      read_json(value, rc.encoder, "encoder");
    } else if (key == "head") {
      read_json(value, rc.head, "head");
    } else if (key == "train") {
      TrainConfig probe;
      read_json(value, probe, "train");  // rejects unknown keys now
      rc.train_overrides = value;
    } else if (key == "data") {
      if (!value.is_object()) throw ConfigError("data: expected an object");
      for (const auto& [k, v] : value.items()) {
        if (k == "stsb") {
          rc.stsb_path = resolve(base, v, "data.stsb");
        } else if (k == "nli") {
          rc.nli_path = resolve(base, v, "data.nli");
        } else if (k == "vocab") {
          rc.vocab_path = resolve(base, v, "data.vocab");
        } else if (k == "lowercase") {
          if (!v.is_boolean()) throw ConfigError("data.lowercase: expected true or false");
          rc.lowercase = v.get<bool>();
        } else {
          throw ConfigError("data: unknown key '" + k + "'");
        }
      }
    } else if (key == "output") {
      if (!value.is_object()) throw ConfigError("output: expected an object");
      for (const auto& [k, v] : value.items()) {
        if (k == "checkpoint") {
          rc.checkpoint_path = resolve(base, v, "output.checkpoint");
        } else if (k == "log") {
          rc.log_path = resolve(base, v, "output.log");
        } else {
          throw ConfigError("output: unknown key '" + k + "'");
        }
      }
    } else {
      throw ConfigError(path.string() + ": unknown section '" + key + "'");
    }
  }
  return rc;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Siamese sentence-embedding toolkit"};
  app.require_subcommand(1);

  TrainArgs targs;
  auto* train_cmd = app.add_subcommand("train", "Fine-tune a siamese model");
  train_cmd->add_option("--config", targs.config, "Run configuration (JSON)")->required();
  train_cmd->add_option("--task", targs.task, "Training recipe")
      ->required()
      ->check(CLI::IsMember({"stsb", "nli"}));
  train_cmd->add_option("--resume", targs.resume, "Checkpoint to continue from");
  train_cmd->add_option("--out", targs.out, "Checkpoint to write");
  train_cmd->add_option("--log", targs.log, "Loss log to write (JSON lines)");

  fs::path eval_ckpt, eval_data;
  std::optional<fs::path> eval_report;
  auto* eval_cmd = app.add_subcommand("eval", "Correlate cosine similarities with gold scores");
  eval_cmd->add_option("--ckpt", eval_ckpt, "Checkpoint")->required();
  eval_cmd->add_option("--data", eval_data, "Scored pairs (STSb TSV)")->required();
  eval_cmd->add_option("--report", eval_report, "Report file to write");

  fs::path embed_ckpt, embed_in, embed_out;
  auto* embed_cmd = app.add_subcommand("embed", "Write one embedding per input sentence");
  embed_cmd->add_option("--ckpt", embed_ckpt, "Checkpoint")->required();
  embed_cmd->add_option("--input", embed_in, "One sentence per line")->required();
  embed_cmd->add_option("--output", embed_out, "Tab-separated vectors")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kBadInput;
  }

  try {
    if (*train_cmd) return cmd_train(targs, out, err);
    if (*eval_cmd) return cmd_eval(eval_ckpt, eval_data, eval_report, out);
    if (*embed_cmd) return cmd_embed(embed_ckpt, embed_in, embed_out, err);
  } catch (const DivergenceError& e) {
    err << "error: " << e.what() << "\n";
    return kDiverged;
  } catch (const UndefinedCorrelationError& e) {
    err << "error: " << e.what() << "\n";
    return kUndefined;
  } catch (const DegenerateInputError& e) {
    err << "error: " << e.what() << "\n";
    return kUndefined;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kBadInput;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kBadInput;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kInternal;
  }
  return kBadInput;
}

}  // namespace sentemb::cli
