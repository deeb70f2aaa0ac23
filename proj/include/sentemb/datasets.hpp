// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "sentemb/pairs.hpp"

SENTEMB_NAMESPACE_BEGIN

/// Reads scored pairs from a tab-separated file. Accepted layouts:
///   genre, file, year, id, score, sentence1, sentence2   (SemEval STSb)
///   score, sentence1, sentence2
/// Blank lines are skipped. Throws FormatError for any other column count and
/// DataError (with the line number) for a score that is not a number in [0, 5].
std::vector<SentencePair> load_stsb(const std::filesystem::path& path);

/// Writes the 3-column layout with shortest round-trip score formatting.
void save_stsb(const std::filesystem::path& path, std::span<const SentencePair> pairs);

struct NliData {
  std::vector<SentencePair> pairs;
  std::size_t skipped = 0;  // records whose gold_label is "-"
};

/// Reads one JSON object per line with gold_label, sentence1 and sentence2
/// (the SNLI / MultiNLI jsonl layout). Records labeled "-" are skipped and
/// counted; any other unknown label is a DataError.
NliData load_nli(const std::filesystem::path& path);

/// Word set of a sentence after normalization.
std::set<std::string> word_set(const std::string& sentence);

/// 5 * |A n B| / |A u B| over the word sets of the two sentences.
double jaccard_score(const std::string& a, const std::string& b);

/// Synthetic similarity corpus: random sentences over words w0..w{vocab_size-1},
/// each pair scored 5 x Jaccard overlap of the two word sets. Deterministic in
/// seed. Requires n_pairs >= 2 and vocab_size >= 16.
std::vector<SentencePair> synth_sts(std::size_t n_pairs, std::size_t vocab_size, std::uint64_t seed);

SENTEMB_NAMESPACE_END
