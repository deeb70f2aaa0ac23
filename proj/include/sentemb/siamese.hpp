// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "sentemb/encoder.hpp"
#include "sentemb/pairs.hpp"
#include "sentemb/pooling.hpp"

SENTEMB_NAMESPACE_BEGIN

enum class Objective { regression, classification };

/// Both sides of a pair batch plus their supervision.
struct PairBatch {
  TokenizedBatch left;
  TokenizedBatch right;
  std::vector<Real> targets;         // score / 5, regression only
  std::vector<std::int32_t> labels;  // class ids, classification only
};

/// One encoder and one pooling head applied to both sentences of a pair,
/// with an optional softmax classifier over (u, v, |u - v|).
class SiameseModel {
 public:
  SiameseModel(EncoderConfig encoder, PoolingConfig head, bool with_classifier = false);

  const Encoder& encoder() const noexcept { return encoder_; }
  const PoolingHead& head() const noexcept { return head_; }
  std::size_t hidden_dim() const noexcept { return encoder_.config().hidden_dim; }

  bool has_classifier() const noexcept { return classifier_weight_.defined(); }
  /// Adds a freshly initialized [3H, 3] classifier if none exists.
  void add_classifier();

  /// Sentence embeddings [B,H]. Pair position does not matter: left and
  /// right sentences go through this same call.
  Tensor embed(const TokenizedBatch& batch, const ForwardContext& ctx = {}) const;

  /// Logits [B,3] from concat(u, v, |u - v|); ConfigError without a classifier.
  Tensor classify_pair(Tape* tape, const Tensor& u, const Tensor& v) const;

  /// Encoder, head, then classifier parameters.
  ParamList parameters() const;

 private:
  Encoder encoder_;
  PoolingHead head_;
  Tensor classifier_weight_;
  Tensor classifier_bias_;
};

/// concat(u, v, |u - v|) along the feature axis: [B,H] x [B,H] -> [B,3H].
Tensor pair_features(Tape* tape, const Tensor& u, const Tensor& v);

/// u.v / (|u| |v|) clamped to [-1, 1]; DegenerateInputError on a zero vector.
double cosine_similarity(std::span<const Real> u, std::span<const Real> v);

/// Mean squared error between cos(u, v) and score / 5.
Tensor regression_loss(const SiameseModel& model, const PairBatch& batch, const ForwardContext& ctx = {});

/// Logits [B,3] for a pair batch.
Tensor classify_pair(const SiameseModel& model, const PairBatch& batch, const ForwardContext& ctx = {});

/// Mean of -log softmax(logits)[label]; InputError for labels outside {0,1,2}.
Tensor cross_entropy_loss(Tape* tape, const Tensor& logits, std::span<const std::int32_t> labels);

/// classify_pair followed by cross_entropy_loss.
Tensor classification_loss(const SiameseModel& model, const PairBatch& batch, const ForwardContext& ctx = {});

SENTEMB_NAMESPACE_END
