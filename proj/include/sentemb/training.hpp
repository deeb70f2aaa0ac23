// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "sentemb/siamese.hpp"
#include "sentemb/vocab.hpp"

SENTEMB_NAMESPACE_BEGIN

enum class Task { stsb, nli };

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  bool operator==(const AdamConfig&) const = default;
};

/// Fine-tuning hyperparameters. The defaults returned by recipe() follow the
/// published protocol: Adam, linear warmup over the first 10% of steps, then
/// a constant rate.
struct TrainConfig {
  double base_lr = 2e-5;
  std::size_t batch_size = 32;
  std::size_t epochs = 10;
  double warmup_fraction = 0.1;
  AdamConfig adam;
  std::uint64_t seed = 0;
  bool shuffle = true;
  double max_grad_norm = 0.0;  // 0 disables clipping

  void validate() const;
  bool operator==(const TrainConfig&) const = default;

  /// Learning rate for a pooling head: 3e-5 for CLS and max, 2e-5 for mean
  /// (SBERT/SALBERT), 1e-5 for CNN.
  static double default_lr(PoolingKind kind);
  /// STSb: batch 32, 10 epochs. NLI: batch 16, 1 epoch.
  static TrainConfig recipe(Task task, PoolingKind kind);
};

/// Number of warmup steps: ceil(fraction * total_steps).
std::size_t warmup_steps(std::size_t total_steps, double warmup_fraction = 0.1);

/// Linear ramp 0 -> base_lr over the warmup steps, then constant. Steps are
/// counted from 1 for the first optimizer update.
double lr_at(std::size_t step, std::size_t total_steps, double base_lr, double warmup_fraction = 0.1);

/// Adam with bias correction over a fixed parameter list:
///   m = b1 m + (1 - b1) g;  v = b2 v + (1 - b2) g^2
///   theta -= lr * m_hat / (sqrt(v_hat) + eps)
/// Parameters without a gradient buffer are left untouched.
class Adam {
 public:
  Adam(ParamList params, AdamConfig config);

  void step(double lr);
  void zero_grad();
  /// Rescales all gradients so their global L2 norm is at most max_norm.
  /// Returns the norm before clipping.
  double clip_grad_norm(double max_norm);

  std::uint64_t steps() const noexcept { return t_; }
  const ParamList& params() const noexcept { return params_; }
  std::span<const Real> first_moment(std::size_t i) const { return m_[i]; }
  std::span<const Real> second_moment(std::size_t i) const { return v_[i]; }

 private:
  ParamList params_;
  AdamConfig config_;
  std::vector<std::vector<Real>> m_;
  std::vector<std::vector<Real>> v_;
  std::uint64_t t_ = 0;
};

/// Pre-tokenized pair with its supervision.
struct TokenizedPair {
  std::vector<std::int32_t> left;
  std::vector<std::int32_t> right;
  std::optional<double> score;
  std::optional<NliLabel> label;
};

std::vector<TokenizedPair> tokenize_pairs(const Vocab& vocab, std::span<const SentencePair> pairs,
                                          const TokenizerOptions& options);

/// Builds the batch for pairs[index[0..]]; targets are score / 5.
PairBatch make_pair_batch(std::span<const TokenizedPair> pairs, std::span<const std::size_t> index,
                          Objective objective);

struct StepRecord {
  std::size_t epoch = 0;
  std::size_t step = 0;
  double lr = 0;
  double loss = 0;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double mean_loss = 0;
};

struct TrainLog {
  std::vector<StepRecord> steps;
  std::vector<EpochRecord> epochs;

  /// JSON lines: {"epoch","step","lr","loss"} per step and
  /// {"epoch","mean_loss"} after each epoch.
  void write(const std::filesystem::path& path) const;
};

/// Called after every optimizer step.
using StepObserver = std::function<void(const StepRecord&)>;

/// Runs epochs x ceil(N / batch_size) optimizer steps (last partial batch
/// kept). Throws ConfigError when a pair lacks the supervision the objective
/// needs and DivergenceError on a non-finite loss.
TrainLog train(SiameseModel& model, std::span<const TokenizedPair> data, Objective objective,
               const TrainConfig& config, const StepObserver& observer = {});

SENTEMB_NAMESPACE_END
