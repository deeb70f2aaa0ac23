// SPDX-License-Identifier: Apache-2.0
#include "sentemb/pooling.hpp"

#include <random>

#include "sentemb/encoder.hpp"
#include "sentemb/errors.hpp"
#include "sentemb/ops.hpp"

SENTEMB_NAMESPACE_BEGIN

std::string to_string(PoolingKind kind) {
  switch (kind) {
    case PoolingKind::cls:
      return "cls";
    case PoolingKind::mean:
      return "mean";
    case PoolingKind::max:
      return "max";
    case PoolingKind::cnn:
      return "cnn";
  }
  return "unknown";
}

PoolingKind parse_pooling_kind(const std::string& name) {
  if (name == "cls") return PoolingKind::cls;
  if (name == "mean") return PoolingKind::mean;
  if (name == "max") return PoolingKind::max;
  if (name == "cnn") return PoolingKind::cnn;
  throw ConfigError("unknown pooling kind '" + name + "' (expected cls, mean, max or cnn)");
}

Tensor pool_cls(Tape* tape, const Tensor& tokens) { return ops::select_position(tape, tokens, 0); }

Tensor pool_mean(Tape* tape, const Tensor& tokens, const Mask& mask) { return ops::masked_mean(tape, tokens, mask); }

Tensor pool_max(Tape* tape, const Tensor& tokens, const Mask& mask) { return ops::masked_max(tape, tokens, mask); }

PoolingHead::PoolingHead(PoolingConfig config, std::size_t hidden_dim, std::uint64_t seed)
    : config_(config), hidden_(hidden_dim) {
  if (hidden_ == 0) throw ConfigError("pooling head: hidden_dim must be positive");
  if (config_.kind != PoolingKind::cnn) return;
  if (config_.cnn.blocks < 1) throw ConfigError("cnn head: blocks must be >= 1");
  if (config_.cnn.kernel % 2 == 0) throw ConfigError("cnn head: kernel width must be odd");
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < config_.cnn.blocks; ++i) {
    CnnBlock block;
    block.kernel = truncated_normal({config_.cnn.kernel, hidden_, hidden_}, 0.02, rng);
    block.bias = Tensor({hidden_}, true);
    blocks_.push_back(std::move(block));
  }
}

Tensor PoolingHead::pool(Tape* tape, const Tensor& tokens, const Mask& mask) const {
  if (tokens.rank() != 3 || tokens.dim(2) != hidden_)
    throw DimensionError("pooling head expects [B,T," + std::to_string(hidden_) + "], got " +
                         shape_string(tokens.shape()));
  switch (config_.kind) {
    case PoolingKind::cls:
      return pool_cls(tape, tokens);
    case PoolingKind::mean:
      return pool_mean(tape, tokens, mask);
    case PoolingKind::max:
      return pool_max(tape, tokens, mask);
    case PoolingKind::cnn:
      return pool_cnn(tape, tokens, mask);
  }
  throw ConfigError("unhandled pooling kind");
}

Tensor PoolingHead::pool_cnn(Tape* tape, const Tensor& tokens, const Mask& mask) const {
  for (std::size_t b = 0; b < mask.batch; ++b)
    if (mask.count(b) == 0) throw DegenerateInputError("cnn head: row " + std::to_string(b) + " is fully masked");
  Tensor x = tokens;
  Mask m = mask;
  for (const auto& block : blocks_) {
    x = ops::apply_mask(tape, x, m);
    x = ops::activation(tape, ops::conv1d(tape, x, block.kernel, block.bias), Activation::tanh);
    auto pooled = ops::max_pool1d(tape, x, 2, 2, m);
    x = std::move(pooled.values);
    m = std::move(pooled.mask);
  }
  return ops::masked_mean(tape, x, m);
}

ParamList PoolingHead::parameters() const {
  ParamList out;
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    out.push_back({"head.cnn." + std::to_string(i) + ".kernel", blocks_[i].kernel});
    out.push_back({"head.cnn." + std::to_string(i) + ".bias", blocks_[i].bias});
  }
  return out;
}

SENTEMB_NAMESPACE_END
