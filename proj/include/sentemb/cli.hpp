// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "sentemb/config_json.hpp"

namespace sentemb::cli {

/// Process exit codes.
enum ExitCode : int {
  kOk = 0,
  kInternal = 1,
  kBadInput = 2,   // unreadable or malformed input, invalid config
  kDiverged = 3,   // non-finite training loss
  kUndefined = 4,  // correlation or similarity undefined
};

/// Parsed run configuration file (JSON):
///
///   {
///     "encoder": { EncoderConfig fields; vocab_size 0 derives it from the vocabulary },
///     "head":    { "kind": "cls|mean|max|cnn", "cnn": { "blocks", "kernel" } },
///     "train":   { TrainConfig fields; omitted fields follow the task recipe },
///     "data":    { "stsb", "nli", "vocab", "lowercase" },
///     "output":  { "checkpoint", "log" }
///   }
///
/// Unknown sections or keys are rejected.
struct RunConfig {
  EncoderConfig encoder;
  PoolingConfig head;
  Json train_overrides = Json::object();
  std::optional<std::filesystem::path> stsb_path;
  std::optional<std::filesystem::path> nli_path;
  std::optional<std::filesystem::path> vocab_path;
  bool lowercase = true;
  std::optional<std::filesystem::path> checkpoint_path;
  std::optional<std::filesystem::path> log_path;

  /// Relative paths resolve against the directory holding the config file.
  static RunConfig load(const std::filesystem::path& path);
};

/// Entry point shared by the executable and the tests.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace sentemb::cli
