// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "sentemb/siamese.hpp"
#include "sentemb/vocab.hpp"

SENTEMB_NAMESPACE_BEGIN

/// 1-based ranks; tied values share the mean of the ranks they span.
std::vector<double> rank(std::span<const double> values);

/// Sample Pearson correlation. InputError for mismatched lengths or fewer
/// than two values; UndefinedCorrelationError when either input is constant.
double pearson(std::span<const double> x, std::span<const double> y);

/// Pearson correlation of the average ranks.
double spearman(std::span<const double> x, std::span<const double> y);

struct EvalReport {
  double spearman = 0;
  double pearson = 0;
  std::size_t n_pairs = 0;

  /// "SS.SS (PP.PP)": both coefficients x 100, two decimals, ties to even.
  std::string rendered() const;

  /// key=value lines followed by the rendered string.
  std::string serialize() const;
  void write(const std::filesystem::path& path) const;
};

/// Formats rho x 100 with two decimals, rounding half to even.
std::string render_percent(double rho);

/// Parses "SS.SS (PP.PP)" back to {spearman, pearson} as fractions.
std::pair<double, double> parse_rendered(const std::string& text);

/// Correlates predicted similarities with gold scores.
EvalReport evaluate_predictions(std::span<const double> predicted, std::span<const double> gold);

/// Cosine similarity of every pair's embeddings.
std::vector<double> predict_similarity(const SiameseModel& model, const Vocab& vocab,
                                       const TokenizerOptions& options, std::span<const SentencePair> pairs,
                                       std::size_t batch_size = 64);

/// Scores every pair by cosine similarity and correlates with the gold scores.
/// Needs at least two scored pairs.
EvalReport evaluate_sts(const SiameseModel& model, const Vocab& vocab, const TokenizerOptions& options,
                        std::span<const SentencePair> pairs);

SENTEMB_NAMESPACE_END
