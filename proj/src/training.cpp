// SPDX-License-Identifier: Apache-2.0
#include "sentemb/training.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <utility>

#include "json.hpp"
#include "sentemb/errors.hpp"

SENTEMB_NAMESPACE_BEGIN

void TrainConfig::validate() const {
  if (!(base_lr > 0)) throw ConfigError("train config: base_lr must be positive");
  if (batch_size < 1) throw ConfigError("train config: batch_size must be >= 1");
  if (!(warmup_fraction >= 0 && warmup_fraction < 1)) throw ConfigError("train config: warmup_fraction must lie in [0, 1)");
  if (!(adam.beta1 >= 0 && adam.beta1 < 1) || !(adam.beta2 >= 0 && adam.beta2 < 1) || !(adam.eps > 0))
    throw ConfigError("train config: invalid Adam coefficients");
  if (max_grad_norm < 0) throw ConfigError("train config: max_grad_norm must be >= 0");
}

double TrainConfig::default_lr(PoolingKind kind) {
  switch (kind) {
    case PoolingKind::cls:
    case PoolingKind::max:
      return 3e-5;
    case PoolingKind::mean:
      return 2e-5;
    case PoolingKind::cnn:
      return 1e-5;
  }
  return 2e-5;
}

TrainConfig TrainConfig::recipe(Task task, PoolingKind kind) {
  TrainConfig c;
  c.base_lr = default_lr(kind);
  c.batch_size = task == Task::stsb ? 32 : 16;
  c.epochs = task == Task::stsb ? 10 : 1;
  c.warmup_fraction = 0.1;
  return c;
}

std::size_t warmup_steps(std::size_t total_steps, double warmup_fraction) {
  const double exact = warmup_fraction * static_cast<double>(total_steps);
  // 0.1 * 30 evaluates to 3.0000000000000004; snap values within rounding
  // noise of an integer before taking the ceiling.
  const double nearest = std::round(exact);
  if (std::abs(exact - nearest) <= 1e-9 * std::max(1.0, exact)) return static_cast<std::size_t>(nearest);
  return static_cast<std::size_t>(std::ceil(exact));
}

double lr_at(std::size_t step, std::size_t total_steps, double base_lr, double warmup_fraction) {
  const std::size_t warm = warmup_steps(std::max<std::size_t>(total_steps, 1), warmup_fraction);
  if (warm == 0 || step >= warm) return base_lr;
  return base_lr * static_cast<double>(step) / static_cast<double>(warm);
}

Adam::Adam(ParamList params, AdamConfig config) : params_(std::move(params)), config_(config) {
  m_.reserve(params_.size());
  v_.reserve(params_.size());
  for (const auto& p : params_) {
    m_.emplace_back(p.tensor.numel(), Real(0));
    v_.emplace_back(p.tensor.numel(), Real(0));
  }
}

void Adam::zero_grad() {
  for (auto& p : params_) p.tensor.zero_grad();
}

double Adam::clip_grad_norm(double max_norm) {
  double sq = 0;
  for (const auto& p : params_) {
    const Tensor& t = p.tensor;
    if (!t.has_grad()) continue;
    for (auto g : t.grad_view()) sq += static_cast<double>(g) * g;
  }
  const double norm = std::sqrt(sq);
  if (max_norm > 0 && norm > max_norm) {
    const auto factor = static_cast<Real>(max_norm / norm);
    for (auto& p : params_)
      if (p.tensor.has_grad())
        for (auto& g : p.tensor.grad()) g *= factor;
  }
  return norm;
}

void Adam::step(double lr) {
  ++t_;
  const double b1 = config_.beta1, b2 = config_.beta2;
  const double bc1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Tensor& t = params_[i].tensor;
    if (!t.has_grad()) continue;
    if (t.numel() != m_[i].size())
      throw ContractError("adam: parameter '" + params_[i].name + "' changed shape since the optimizer was built");
    auto theta = t.data();
    auto grad = t.grad_view();
    auto& m = m_[i];
    auto& v = v_[i];
    for (std::size_t j = 0; j < theta.size(); ++j) {
      const double g = grad[j];
      const double mj = b1 * m[j] + (1.0 - b1) * g;
      const double vj = b2 * v[j] + (1.0 - b2) * g * g;
      m[j] = static_cast<Real>(mj);
      v[j] = static_cast<Real>(vj);
      const double update = lr * (mj / bc1) / (std::sqrt(vj / bc2) + config_.eps);
      theta[j] = static_cast<Real>(theta[j] - update);
    }
  }
}

std::vector<TokenizedPair> tokenize_pairs(const Vocab& vocab, std::span<const SentencePair> pairs,
                                          const TokenizerOptions& options) {
  std::vector<TokenizedPair> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs)
    out.push_back({encode_sentence(vocab, p.sentence_a, options), encode_sentence(vocab, p.sentence_b, options),
                   p.score, p.label});
  return out;
}

PairBatch make_pair_batch(std::span<const TokenizedPair> pairs, std::span<const std::size_t> index,
                          Objective objective) {
  std::vector<std::vector<std::int32_t>> left, right;
  left.reserve(index.size());
  right.reserve(index.size());
  PairBatch batch;
  for (auto i : index) {
    const auto& p = pairs[i];
    left.push_back(p.left);
    right.push_back(p.right);
    if (objective == Objective::regression) {
      if (!p.score) throw ConfigError("regression objective needs scored pairs");
      batch.targets.push_back(static_cast<Real>(*p.score / kMaxScore));
    } else {
      if (!p.label) throw ConfigError("classification objective needs labeled pairs");
      batch.labels.push_back(static_cast<std::int32_t>(*p.label));
    }
  }
  batch.left = TokenizedBatch::from_sequences(left);
  batch.right = TokenizedBatch::from_sequences(right);
  return batch;
}

void TrainLog::write(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write loss log " + path.string());
  std::size_t next_step = 0;
  for (const auto& e : epochs) {
    for (; next_step < steps.size() && steps[next_step].epoch == e.epoch; ++next_step) {
      const auto& s = steps[next_step];
      nlohmann::ordered_json j{{"epoch", s.epoch}, {"step", s.step}, {"lr", s.lr}, {"loss", s.loss}};
      out << j.dump() << '\n';
    }
    nlohmann::ordered_json j{{"epoch", e.epoch}, {"mean_loss", e.mean_loss}};
    out << j.dump() << '\n';
  }
}

TrainLog train(SiameseModel& model, std::span<const TokenizedPair> data, Objective objective,
               const TrainConfig& config, const StepObserver& observer) {
  config.validate();
  for (const auto& p : data) {
    if (objective == Objective::regression && !p.score)
      throw ConfigError("regression objective needs scored pairs");
    if (objective == Objective::classification && !p.label)
      throw ConfigError("classification objective needs labeled pairs");
  }
  if (objective == Objective::classification) model.add_classifier();

  TrainLog log;
  if (config.epochs == 0 || data.empty()) return log;

  const std::size_t n = data.size();
  const std::size_t per_epoch = (n + config.batch_size - 1) / config.batch_size;
  const std::size_t total = config.epochs * per_epoch;

  Adam adam(model.parameters(), config.adam);
  std::mt19937_64 shuffle_rng(config.seed);
  std::mt19937_64 dropout_rng(config.seed ^ 0x5DEECE66DULL);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});

  std::size_t step = 0;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    if (config.shuffle) std::shuffle(order.begin(), order.end(), shuffle_rng);
    double epoch_total = 0;
    for (std::size_t start = 0; start < n; start += config.batch_size) {
      const std::size_t count = std::min(config.batch_size, n - start);
      const std::span<const std::size_t> index(order.data() + start, count);
      PairBatch batch = make_pair_batch(data, index, objective);

      ++step;
      const double lr = lr_at(step, total, config.base_lr, config.warmup_fraction);
      adam.zero_grad();
      Tape tape;
      ForwardContext ctx{&tape, &dropout_rng};
      Tensor loss = objective == Objective::regression ? regression_loss(model, batch, ctx)
                                                       : classification_loss(model, batch, ctx);
      const double value = loss.item();
      if (!std::isfinite(value))
        throw DivergenceError("non-finite loss at epoch " + std::to_string(epoch) + ", step " + std::to_string(step));
      tape.backward(loss);
      if (config.max_grad_norm > 0) adam.clip_grad_norm(config.max_grad_norm);
      adam.step(lr);

      StepRecord rec{epoch, step, lr, value};
      log.steps.push_back(rec);
      if (observer) observer(rec);
      epoch_total += value * static_cast<double>(count);
    }
    log.epochs.push_back({epoch, epoch_total / static_cast<double>(n)});
  }
  return log;
}

SENTEMB_NAMESPACE_END
