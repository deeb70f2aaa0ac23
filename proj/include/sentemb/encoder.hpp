// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "sentemb/batch.hpp"
#include "sentemb/tape.hpp"

SENTEMB_NAMESPACE_BEGIN

/// Transformer token-encoder hyperparameters.
///
/// BERT-style: factorized_embedding = false, share_layers = false.
/// ALBERT-style: a V x E token table projected to H, and `num_hidden_groups`
/// distinct block parameter sets shared by contiguous runs of L / g layers.
struct EncoderConfig {
  std::size_t vocab_size = 0;  // V
  std::size_t embed_dim = 0;   // E (== H unless factorized)
  std::size_t hidden_dim = 0;  // H
  std::size_t layers = 0;      // L
  std::size_t heads = 0;       // A
  std::size_t ffn_dim = 0;     // F
  std::size_t max_len = 0;     // T_max
  bool factorized_embedding = false;
  bool share_layers = false;
  std::size_t num_hidden_groups = 1;
  double dropout_rate = 0.0;
  std::uint64_t seed = 0;

  /// Throws ConfigError on any violated invariant.
  void validate() const;

  /// Number of distinct transformer-block parameter sets.
  std::size_t block_sets() const { return share_layers ? num_hidden_groups : layers; }

  /// Parameter set used by layer `layer` (contiguous grouping).
  std::size_t group_of_layer(std::size_t layer) const {
    return share_layers ? layer * num_hidden_groups / layers : layer;
  }

  bool operator==(const EncoderConfig&) const = default;
};

struct ParamCount {
  std::size_t embedding = 0;   // token table
  std::size_t projection = 0;  // E -> H projection (factorized only)
  std::size_t blocks = 0;      // all distinct transformer-block sets
  std::size_t other = 0;       // position, segment and embedding layer norm
  std::size_t total = 0;
};

/// Closed-form parameter count for a valid config.
ParamCount param_count(const EncoderConfig& config);

/// Per-forward state: the tape to record on (null for inference) and the
/// dropout generator (null disables dropout).
struct ForwardContext {
  Tape* tape = nullptr;
  std::mt19937_64* rng = nullptr;
};

struct BlockParams {
  Tensor wq, bq, wk, wv, bv, wo, bo;  // key bias omitted: softmax cancels it
  Tensor ln1_gamma, ln1_beta;
  Tensor w1, b1, w2, b2;
  Tensor ln2_gamma, ln2_beta;
};

/// Post-layer-norm transformer encoder with learned positions.
class Encoder {
 public:
  /// Builds and initializes parameters: weights from a normal(0, 0.02)
  /// truncated at two standard deviations, biases and betas zero, gammas one.
  explicit Encoder(EncoderConfig config);

  const EncoderConfig& config() const noexcept { return config_; }

  /// Contextual token embeddings [B,T,H]. Position 0 is the [CLS] slot.
  Tensor encode(const TokenizedBatch& batch, const ForwardContext& ctx = {}) const;

  /// Every materialized parameter exactly once, in a fixed order.
  ParamList parameters() const;

  std::size_t num_block_sets() const noexcept { return blocks_.size(); }

 private:
  Tensor attention(const Tensor& x, const BlockParams& p, const Mask& mask, const ForwardContext& ctx) const;

  EncoderConfig config_;
  Tensor token_table_;
  Tensor projection_;
  Tensor position_table_;
  Tensor segment_table_;
  Tensor emb_ln_gamma_, emb_ln_beta_;
  std::vector<BlockParams> blocks_;
};

inline Encoder build_encoder(const EncoderConfig& config) { return Encoder(config); }

/// normal(0, stddev) truncated to +-2 stddev by rejection.
Tensor truncated_normal(Shape shape, double stddev, std::mt19937_64& rng);

SENTEMB_NAMESPACE_END
