// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sentemb/tape.hpp"

SENTEMB_NAMESPACE_BEGIN

enum class PoolingKind { cls, mean, max, cnn };

std::string to_string(PoolingKind kind);
PoolingKind parse_pooling_kind(const std::string& name);

struct CnnConfig {
  std::size_t blocks = 2;
  std::size_t kernel = 3;
  bool operator==(const CnnConfig&) const = default;
};

struct PoolingConfig {
  PoolingKind kind = PoolingKind::mean;
  CnnConfig cnn;
  bool operator==(const PoolingConfig&) const = default;
};

/// [B,T,H] -> [B,H] using the [CLS] position.
Tensor pool_cls(Tape* tape, const Tensor& tokens);
/// [B,T,H] -> [B,H] mean over valid positions.
Tensor pool_mean(Tape* tape, const Tensor& tokens, const Mask& mask);
/// [B,T,H] -> [B,H] per-dimension max over valid positions.
Tensor pool_max(Tape* tape, const Tensor& tokens, const Mask& mask);

struct CnnBlock {
  Tensor kernel;  // [k, H, H]
  Tensor bias;    // [H]
};

/// Maps token embeddings to a sentence vector.
///
/// The CNN head runs, per block, conv1d (k, H -> H, zero same-padding) ->
/// tanh -> masked max-pool (window 2, stride 2), then a masked mean over the
/// surviving positions. Masked positions are zeroed before each convolution
/// so padding never leaks into valid outputs.
class PoolingHead {
 public:
  PoolingHead(PoolingConfig config, std::size_t hidden_dim, std::uint64_t seed);

  const PoolingConfig& config() const noexcept { return config_; }
  std::size_t hidden_dim() const noexcept { return hidden_; }

  Tensor pool(Tape* tape, const Tensor& tokens, const Mask& mask) const;

  ParamList parameters() const;

 private:
  Tensor pool_cnn(Tape* tape, const Tensor& tokens, const Mask& mask) const;

  PoolingConfig config_;
  std::size_t hidden_;
  std::vector<CnnBlock> blocks_;
};

SENTEMB_NAMESPACE_END
