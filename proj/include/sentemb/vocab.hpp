// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "sentemb/batch.hpp"

SENTEMB_NAMESPACE_BEGIN

/// Word-level vocabulary. Ids 0..3 are [PAD], [CLS], [SEP], [UNK]; words
/// follow densely from id 4. Lookup is total: unknown words map to [UNK].
class Vocab {
 public:
  Vocab();
  /// Words in id order starting at id 4. Duplicates or reserved names are rejected.
  explicit Vocab(std::vector<std::string> words);

  /// One word per line; line i holds id 4 + i.
  static Vocab load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  /// Most frequent words first (ties broken lexicographically), at most
  /// max_words entries (0 = unlimited).
  static Vocab build(std::span<const std::string> sentences, std::size_t max_words = 0, bool lowercase = true);

  std::int32_t id(std::string_view word) const;
  const std::string& token(std::int32_t id) const;
  std::size_t size() const noexcept { return tokens_.size(); }
  /// Words only (ids >= 4), in id order.
  std::vector<std::string> words() const;

  bool operator==(const Vocab& other) const { return tokens_ == other.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::int32_t> index_;
};

/// Lowercases (optionally) and splits on whitespace; every ASCII punctuation
/// character becomes its own word.
std::vector<std::string> normalize_words(std::string_view sentence, bool lowercase = true);

struct TokenizerOptions {
  std::size_t max_len = 64;
  bool lowercase = true;
};

/// [CLS] w1 .. wn [SEP], with words truncated to max_len - 2. Unpadded.
std::vector<std::int32_t> encode_sentence(const Vocab& vocab, std::string_view sentence,
                                          const TokenizerOptions& options);

struct Tokenized {
  std::vector<std::int32_t> ids;
  std::vector<std::uint8_t> mask;
};

/// encode_sentence padded with [PAD] to exactly t_max positions.
Tokenized tokenize(const Vocab& vocab, std::string_view sentence, std::size_t t_max, bool lowercase = true);

SENTEMB_NAMESPACE_END
