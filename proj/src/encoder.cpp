// SPDX-License-Identifier: Apache-2.0
#include "sentemb/encoder.hpp"

#include <cmath>
#include <string>

#include "sentemb/errors.hpp"
#include "sentemb/ops.hpp"

SENTEMB_NAMESPACE_BEGIN

namespace {

constexpr double kInitStd = 0.02;
constexpr Real kLayerNormEps = static_cast<Real>(1e-12);

Tensor zeros(Shape shape) { return Tensor(std::move(shape), true); }

Tensor ones(Shape shape) {
  Tensor t(std::move(shape), true);
  for (auto& v : t.data()) v = Real(1);
  return t;
}

std::size_t block_size(std::size_t h, std::size_t f) {
  return 4 * h * h + 3 * h  // q, k, v, output projections; key has no bias
         + (h * f + f) + (f * h + h)  // feed-forward
         + 4 * h;  // two layer norms
}

}  // namespace

void EncoderConfig::validate() const {
  auto fail = [](const std::string& what) { throw ConfigError("encoder config: " + what); };
  if (vocab_size <= static_cast<std::size_t>(token_id::first_word)) fail("vocab_size must exceed the 4 reserved ids");
  if (hidden_dim == 0 || embed_dim == 0 || layers == 0 || heads == 0 || ffn_dim == 0)
    fail("all dimensions must be positive");
  if (hidden_dim % heads != 0)
    fail("hidden_dim " + std::to_string(hidden_dim) + " not divisible by heads " + std::to_string(heads));
  if (num_hidden_groups < 1 || num_hidden_groups > layers) fail("num_hidden_groups must lie in [1, layers]");
  if (share_layers && layers % num_hidden_groups != 0) fail("layers must be a multiple of num_hidden_groups");
  if (!factorized_embedding && embed_dim != hidden_dim) fail("embed_dim must equal hidden_dim without factorization");
  if (max_len < 2) fail("max_len must be at least 2");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) fail("dropout_rate must lie in [0, 1)");
}

ParamCount param_count(const EncoderConfig& config) {
  config.validate();
  ParamCount c;
  const std::size_t h = config.hidden_dim;
  c.embedding = config.vocab_size * config.embed_dim;
  c.projection = config.factorized_embedding ? config.embed_dim * h : 0;
  c.blocks = config.block_sets() * block_size(h, config.ffn_dim);
  c.other = config.max_len * h + 2 * h + 2 * h;
  c.total = c.embedding + c.projection + c.blocks + c.other;
  return c;
}

Tensor truncated_normal(Shape shape, double stddev, std::mt19937_64& rng) {
  Tensor t(std::move(shape), true);
  std::normal_distribution<double> normal(0.0, stddev);
  for (auto& v : t.data()) {
    double x;
    do {
      x = normal(rng);
    } while (std::abs(x) > 2.0 * stddev);
    v = static_cast<Real>(x);
  }
  return t;
}

Encoder::Encoder(EncoderConfig config) : config_(config) {
  config_.validate();
  std::mt19937_64 rng(config_.seed);
  const std::size_t h = config_.hidden_dim, f = config_.ffn_dim;
  token_table_ = truncated_normal({config_.vocab_size, config_.embed_dim}, kInitStd, rng);
  if (config_.factorized_embedding) projection_ = truncated_normal({config_.embed_dim, h}, kInitStd, rng);
  position_table_ = truncated_normal({config_.max_len, h}, kInitStd, rng);
  segment_table_ = truncated_normal({2, h}, kInitStd, rng);
  emb_ln_gamma_ = ones({h});
  emb_ln_beta_ = zeros({h});
  blocks_.reserve(config_.block_sets());
  for (std::size_t g = 0; g < config_.block_sets(); ++g) {
    BlockParams p;
    p.wq = truncated_normal({h, h}, kInitStd, rng);
    p.bq = zeros({h});
    p.wk = truncated_normal({h, h}, kInitStd, rng);
    p.wv = truncated_normal({h, h}, kInitStd, rng);
    p.bv = zeros({h});
    p.wo = truncated_normal({h, h}, kInitStd, rng);
    p.bo = zeros({h});
    p.ln1_gamma = ones({h});
    p.ln1_beta = zeros({h});
    p.w1 = truncated_normal({h, f}, kInitStd, rng);
    p.b1 = zeros({f});
    p.w2 = truncated_normal({f, h}, kInitStd, rng);
    p.b2 = zeros({h});
    p.ln2_gamma = ones({h});
    p.ln2_beta = zeros({h});
    blocks_.push_back(std::move(p));
  }
}

ParamList Encoder::parameters() const {
  ParamList out;
  out.push_back({"embeddings.token", token_table_});
  if (config_.factorized_embedding) out.push_back({"embeddings.projection", projection_});
  out.push_back({"embeddings.position", position_table_});
  out.push_back({"embeddings.segment", segment_table_});
  out.push_back({"embeddings.norm.gamma", emb_ln_gamma_});
  out.push_back({"embeddings.norm.beta", emb_ln_beta_});
  for (std::size_t g = 0; g < blocks_.size(); ++g) {
    const auto& p = blocks_[g];
    const std::string pre = "blocks." + std::to_string(g) + ".";
    out.push_back({pre + "attention.query.weight", p.wq});
    out.push_back({pre + "attention.query.bias", p.bq});
    out.push_back({pre + "attention.key.weight", p.wk});
    out.push_back({pre + "attention.value.weight", p.wv});
    out.push_back({pre + "attention.value.bias", p.bv});
    out.push_back({pre + "attention.output.weight", p.wo});
    out.push_back({pre + "attention.output.bias", p.bo});
    out.push_back({pre + "attention.norm.gamma", p.ln1_gamma});
    out.push_back({pre + "attention.norm.beta", p.ln1_beta});
    out.push_back({pre + "ffn.in.weight", p.w1});
    out.push_back({pre + "ffn.in.bias", p.b1});
    out.push_back({pre + "ffn.out.weight", p.w2});
    out.push_back({pre + "ffn.out.bias", p.b2});
    out.push_back({pre + "ffn.norm.gamma", p.ln2_gamma});
    out.push_back({pre + "ffn.norm.beta", p.ln2_beta});
  }
  return out;
}

Tensor Encoder::attention(const Tensor& x, const BlockParams& p, const Mask& mask, const ForwardContext& ctx) const {
  Tape* tape = ctx.tape;
  const std::size_t heads = config_.heads;
  const Real inv_sqrt_d = Real(1) / std::sqrt(static_cast<Real>(config_.hidden_dim / heads));
  Tensor q = ops::split_heads(tape, ops::linear(tape, x, p.wq, p.bq), heads);
  Tensor k = ops::split_heads(tape, ops::linear(tape, x, p.wk), heads);
  Tensor v = ops::split_heads(tape, ops::linear(tape, x, p.wv, p.bv), heads);
  Tensor scores = ops::scale(tape, ops::batched_matmul(tape, q, k, /*transpose_b=*/true), inv_sqrt_d);
  Tensor probs = ops::masked_softmax(tape, scores, mask, heads);
  Tensor context = ops::merge_heads(tape, ops::batched_matmul(tape, probs, v), heads);
  return ops::linear(tape, context, p.wo, p.bo);
}

Tensor Encoder::encode(const TokenizedBatch& batch, const ForwardContext& ctx) const {
  const std::size_t B = batch.batch, T = batch.length, H = config_.hidden_dim;
  if (B == 0 || T == 0) throw InputError("encode: empty batch");
  if (T > config_.max_len)
    throw InputError("sequence length " + std::to_string(T) + " exceeds max_len " + std::to_string(config_.max_len));
  if (batch.ids.size() != B * T || batch.mask.batch != B || batch.mask.length != T)
    throw InputError("encode: ids/mask do not match [B,T]");
  for (auto id : batch.ids)
    if (id < 0 || static_cast<std::size_t>(id) >= config_.vocab_size)
      throw InputError("token id " + std::to_string(id) + " out of range for vocab_size " +
                       std::to_string(config_.vocab_size));

  Tape* tape = ctx.tape;
  const Real rate = static_cast<Real>(config_.dropout_rate);
  const bool drop = ctx.rng != nullptr && rate > 0;

  Tensor x = ops::gather_rows(tape, token_table_, batch.ids);
  if (config_.factorized_embedding) x = ops::matmul(tape, x, projection_);
  x = ops::reshape(tape, x, {B, T, H});
  x = ops::add_position_rows(tape, x, position_table_);
  x = ops::add_table_row(tape, x, segment_table_, 0);
  x = ops::layer_norm(tape, x, emb_ln_gamma_, emb_ln_beta_, kLayerNormEps);
  if (drop) x = ops::dropout(tape, x, rate, *ctx.rng);

  for (std::size_t layer = 0; layer < config_.layers; ++layer) {
    const BlockParams& p = blocks_[config_.group_of_layer(layer)];
    Tensor a = attention(x, p, batch.mask, ctx);
    if (drop) a = ops::dropout(tape, a, rate, *ctx.rng);
    x = ops::layer_norm(tape, ops::add(tape, x, a), p.ln1_gamma, p.ln1_beta, kLayerNormEps);
    Tensor f = ops::activation(tape, ops::linear(tape, x, p.w1, p.b1), Activation::gelu);
    f = ops::linear(tape, f, p.w2, p.b2);
    if (drop) f = ops::dropout(tape, f, rate, *ctx.rng);
    x = ops::layer_norm(tape, ops::add(tape, x, f), p.ln2_gamma, p.ln2_beta, kLayerNormEps);
  }
  return x;
}

SENTEMB_NAMESPACE_END
