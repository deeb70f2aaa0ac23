// SPDX-License-Identifier: Apache-2.0
#include "sentemb/siamese.hpp"

#include <algorithm>
#include <cmath>

#include "sentemb/errors.hpp"
#include "sentemb/ops.hpp"

SENTEMB_NAMESPACE_BEGIN

namespace {

// Head and classifier draw from streams derived from the encoder seed.
constexpr std::uint64_t kHeadSeedOffset = 0x9E3779B97F4A7C15ULL;
constexpr std::uint64_t kClassifierSeedOffset = 0xC2B2AE3D27D4EB4FULL;

}  // namespace

SiameseModel::SiameseModel(EncoderConfig encoder, PoolingConfig head, bool with_classifier)
    : encoder_(encoder), head_(head, encoder.hidden_dim, encoder.seed + kHeadSeedOffset) {
  if (with_classifier) add_classifier();
}

void SiameseModel::add_classifier() {
  if (has_classifier()) return;
  std::mt19937_64 rng(encoder_.config().seed + kClassifierSeedOffset);
  classifier_weight_ = truncated_normal({3 * hidden_dim(), kNliClasses}, 0.02, rng);
  classifier_bias_ = Tensor({kNliClasses}, true);
}

Tensor SiameseModel::embed(const TokenizedBatch& batch, const ForwardContext& ctx) const {
  Tensor tokens = encoder_.encode(batch, ctx);
  return head_.pool(ctx.tape, tokens, batch.mask);
}

Tensor SiameseModel::classify_pair(Tape* tape, const Tensor& u, const Tensor& v) const {
  if (!has_classifier()) throw ConfigError("classify_pair: model has no classifier");
  return ops::linear(tape, pair_features(tape, u, v), classifier_weight_, classifier_bias_);
}

ParamList SiameseModel::parameters() const {
  ParamList out = encoder_.parameters();
  for (auto& p : head_.parameters()) out.push_back(std::move(p));
  if (has_classifier()) {
    out.push_back({"classifier.weight", classifier_weight_});
    out.push_back({"classifier.bias", classifier_bias_});
  }
  return out;
}

Tensor pair_features(Tape* tape, const Tensor& u, const Tensor& v) {
  return ops::concat_last(tape, {u, v, ops::abs(tape, ops::sub(tape, u, v))});
}

double cosine_similarity(std::span<const Real> u, std::span<const Real> v) {
  if (u.size() != v.size()) throw DimensionError("cosine_similarity: length mismatch");
  double dot = 0, nu = 0, nv = 0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    dot += static_cast<double>(u[i]) * v[i];
    nu += static_cast<double>(u[i]) * u[i];
    nv += static_cast<double>(v[i]) * v[i];
  }
  if (!(nu > 0) || !(nv > 0)) throw DegenerateInputError("cosine similarity of a zero-norm vector");
  return std::clamp(dot / (std::sqrt(nu) * std::sqrt(nv)), -1.0, 1.0);
}

Tensor regression_loss(const SiameseModel& model, const PairBatch& batch, const ForwardContext& ctx) {
  if (batch.targets.size() != batch.left.batch) throw ConfigError("regression_loss: batch carries no scores");
  Tensor u = model.embed(batch.left, ctx);
  Tensor v = model.embed(batch.right, ctx);
  return ops::mse(ctx.tape, ops::cosine_rows(ctx.tape, u, v), batch.targets);
}

Tensor classify_pair(const SiameseModel& model, const PairBatch& batch, const ForwardContext& ctx) {
  Tensor u = model.embed(batch.left, ctx);
  Tensor v = model.embed(batch.right, ctx);
  return model.classify_pair(ctx.tape, u, v);
}

Tensor cross_entropy_loss(Tape* tape, const Tensor& logits, std::span<const std::int32_t> labels) {
  return ops::cross_entropy(tape, logits, labels);
}

Tensor classification_loss(const SiameseModel& model, const PairBatch& batch, const ForwardContext& ctx) {
  if (batch.labels.size() != batch.left.batch) throw ConfigError("classification_loss: batch carries no labels");
  return cross_entropy_loss(ctx.tape, classify_pair(model, batch, ctx), batch.labels);
}

SENTEMB_NAMESPACE_END
