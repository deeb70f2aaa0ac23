// SPDX-License-Identifier: Apache-2.0
// Finite-difference cases shared by the 64-bit unit tests and the acceptance
// gradient suite. Include only from translation units built with SENTEMB_DOUBLE.
#pragma once

#include <functional>
#include <ostream>
#include <random>
#include <string>

#include "fixtures.hpp"
#include "sentemb/gradcheck.hpp"
#include "sentemb/ops.hpp"
#include "sentemb/siamese.hpp"

namespace sentemb::testing {

inline constexpr double kTolerance = 1e-4;
inline constexpr int kSeeds = 100;

/// Weighted sum with fixed pseudo-random weights so no output coordinate
/// cancels by symmetry (plain sum of a softmax is constant).
inline Tensor project(Tape* tape, const Tensor& y) {
  std::mt19937_64 rng(0xC0FFEE);
  return ops::sum(tape, ops::mul(tape, y, random_tensor(y.shape(), rng)));
}

inline std::size_t pick(std::mt19937_64& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

inline Mask random_mask(std::mt19937_64& rng, std::size_t b, std::size_t t) {
  std::vector<std::size_t> lengths(b);
  for (auto& l : lengths) l = pick(rng, 1, t);
  return Mask::from_lengths(lengths, t);
}

struct Case {
  std::vector<Tensor> inputs;
  ScalarFn f;
};

using Builder = std::function<Case(std::mt19937_64&)>;

struct OpCase {
  const char* name;
  Builder build;
};

inline std::vector<OpCase> op_cases() {
  return {
      {"matmul",
       [](auto& rng) {
         const auto m = pick(rng, 1, 5), k = pick(rng, 1, 5), n = pick(rng, 1, 5);
         Tensor a = random_tensor({m, k}, rng), b = random_tensor({k, n}, rng);
         return Case{{a, b}, [=](Tape* t) { return project(t, ops::matmul(t, a, b)); }};
       }},
      {"batched_matmul",
       [](auto& rng) {
         const auto q = pick(rng, 1, 3), m = pick(rng, 1, 4), k = pick(rng, 1, 4), n = pick(rng, 1, 4);
         const bool tb = pick(rng, 0, 1) == 1;
         Tensor a = random_tensor({q, m, k}, rng);
         Tensor b = tb ? random_tensor({q, n, k}, rng) : random_tensor({q, k, n}, rng);
         return Case{{a, b}, [=](Tape* t) { return project(t, ops::batched_matmul(t, a, b, tb)); }};
       }},
      {"add_sub_mul",
       [](auto& rng) {
         const auto r = pick(rng, 1, 4), c = pick(rng, 1, 4);
         Tensor a = random_tensor({r, c}, rng), b = random_tensor({r, c}, rng);
         return Case{{a, b}, [=](Tape* t) {
                       return project(t, ops::mul(t, ops::add(t, a, b), ops::sub(t, a, ops::scale(t, b, 0.7))));
                     }};
       }},
      {"abs",
       [](auto& rng) {
         Tensor x = random_tensor({pick(rng, 1, 10)}, rng);
         for (auto& v : x.data()) v = v < 0 ? v - 0.1 : v + 0.1;  // stay off the kink
         return Case{{x}, [=](Tape* t) { return project(t, ops::abs(t, x)); }};
       }},
      {"linear",
       [](auto& rng) {
         const auto b = pick(rng, 1, 3), tt = pick(rng, 1, 3), i = pick(rng, 1, 4), o = pick(rng, 1, 4);
         Tensor x = random_tensor({b, tt, i}, rng), w = random_tensor({i, o}, rng), bias = random_tensor({o}, rng);
         return Case{{x, w, bias}, [=](Tape* t) { return project(t, ops::linear(t, x, w, bias)); }};
       }},
      {"add_bias_reshape",
       [](auto& rng) {
         const auto r = pick(rng, 1, 4), c = pick(rng, 1, 4);
         Tensor x = random_tensor({r, c}, rng), bias = random_tensor({c}, rng);
         return Case{{x, bias}, [=](Tape* t) {
                       return project(t, ops::reshape(t, ops::add_bias(t, x, bias), {r * c}));
                     }};
       }},
      {"gather_rows",
       [](auto& rng) {
         const auto v = pick(rng, 2, 6), w = pick(rng, 1, 4), n = pick(rng, 1, 8);
         Tensor table = random_tensor({v, w}, rng);
         std::vector<std::int32_t> ids(n);
         for (auto& id : ids) id = static_cast<std::int32_t>(pick(rng, 0, v - 1));  // repeats accumulate
         return Case{{table}, [=](Tape* t) { return project(t, ops::gather_rows(t, table, ids)); }};
       }},
      {"position_and_table_rows",
       [](auto& rng) {
         const auto b = pick(rng, 1, 3), tt = pick(rng, 1, 4), h = pick(rng, 1, 4);
         Tensor x = random_tensor({b, tt, h}, rng), pos = random_tensor({tt + 2, h}, rng);
         Tensor seg = random_tensor({2, h}, rng);
         return Case{{x, pos, seg}, [=](Tape* t) {
                       return project(t, ops::add_table_row(t, ops::add_position_rows(t, x, pos), seg, 1));
                     }};
       }},
      {"softmax",
       [](auto& rng) {
         const auto a = pick(rng, 1, 3), b = pick(rng, 2, 5);
         const std::size_t axis = pick(rng, 0, 1);
         Tensor x = random_tensor({a, b}, rng, -3, 3);
         return Case{{x}, [=](Tape* t) { return project(t, ops::softmax(t, x, axis)); }};
       }},
      {"masked_softmax",
       [](auto& rng) {
         const auto b = pick(rng, 1, 2), heads = pick(rng, 1, 2), tt = pick(rng, 1, 5);
         Tensor s = random_tensor({b * heads, tt, tt}, rng, -3, 3);
         Mask m = random_mask(rng, b, tt);
         return Case{{s}, [=](Tape* t) { return project(t, ops::masked_softmax(t, s, m, heads)); }};
       }},
      {"layer_norm",
       [](auto& rng) {
         // Width 2 has an identically zero input gradient; see LayerNormWidthTwo.
         const auto r = pick(rng, 1, 4), w = pick(rng, 3, 8);
         Tensor x = random_tensor({r, w}, rng, -2, 2), g = random_tensor({w}, rng), b = random_tensor({w}, rng);
         return Case{{x, g, b}, [=](Tape* t) { return project(t, ops::layer_norm(t, x, g, b)); }};
       }},
      {"tanh",
       [](auto& rng) {
         Tensor x = random_tensor({pick(rng, 1, 10)}, rng, -3, 3);
         return Case{{x}, [=](Tape* t) { return project(t, ops::activation(t, x, Activation::tanh)); }};
       }},
      {"gelu",
       [](auto& rng) {
         Tensor x = random_tensor({pick(rng, 1, 10)}, rng, -3, 3);
         return Case{{x}, [=](Tape* t) { return project(t, ops::activation(t, x, Activation::gelu)); }};
       }},
      {"dropout",
       [](auto& rng) {
         Tensor x = random_tensor({pick(rng, 1, 10)}, rng);
         const std::uint64_t seed = rng();
         return Case{{x}, [=](Tape* t) {
                       std::mt19937_64 local(seed);  // same mask on every evaluation
                       return project(t, ops::dropout(t, x, 0.3, local));
                     }};
       }},
      {"conv1d",
       [](auto& rng) {
         const auto b = pick(rng, 1, 2), tt = pick(rng, 1, 6), ci = pick(rng, 1, 3), co = pick(rng, 1, 3);
         const std::size_t k = 2 * pick(rng, 0, 2) + 1;
         Tensor x = random_tensor({b, tt, ci}, rng), w = random_tensor({k, ci, co}, rng), bias = random_tensor({co}, rng);
         return Case{{x, w, bias}, [=](Tape* t) { return project(t, ops::conv1d(t, x, w, bias)); }};
       }},
      {"max_pool1d",
       [](auto& rng) {
         const auto b = pick(rng, 1, 2), tt = pick(rng, 1, 7), h = pick(rng, 1, 3);
         const auto win = pick(rng, 1, 3), stride = pick(rng, 1, 3);
         Tensor x = random_tensor({b, tt, h}, rng);
         Mask m = random_mask(rng, b, tt);
         return Case{{x}, [=](Tape* t) { return project(t, ops::max_pool1d(t, x, win, stride, m).values); }};
       }},
      {"masked_mean_max",
       [](auto& rng) {
         const auto b = pick(rng, 1, 3), tt = pick(rng, 1, 6), h = pick(rng, 1, 4);
         Tensor x = random_tensor({b, tt, h}, rng);
         Mask m = random_mask(rng, b, tt);
         return Case{{x}, [=](Tape* t) {
                       return ops::add(t, project(t, ops::masked_mean(t, x, m)), project(t, ops::masked_max(t, x, m)));
                     }};
       }},
      {"apply_mask_select",
       [](auto& rng) {
         const auto b = pick(rng, 1, 3), tt = pick(rng, 1, 5), h = pick(rng, 1, 4);
         Tensor x = random_tensor({b, tt, h}, rng);
         Mask m = random_mask(rng, b, tt);
         const auto pos = pick(rng, 0, tt - 1);
         return Case{{x}, [=](Tape* t) {
                       return ops::add(t, project(t, ops::apply_mask(t, x, m)), project(t, ops::select_position(t, x, pos)));
                     }};
       }},
      {"split_merge_heads",
       [](auto& rng) {
         const auto b = pick(rng, 1, 2), tt = pick(rng, 1, 4), heads = pick(rng, 1, 3), d = pick(rng, 1, 3);
         Tensor x = random_tensor({b, tt, heads * d}, rng);
         return Case{{x}, [=](Tape* t) {
                       Tensor s = ops::split_heads(t, x, heads);
                       return project(t, ops::merge_heads(t, ops::scale(t, ops::mul(t, s, s), 0.5), heads));
                     }};
       }},
      {"concat_last",
       [](auto& rng) {
         const auto r = pick(rng, 1, 3);
         Tensor a = random_tensor({r, pick(rng, 1, 3)}, rng), b = random_tensor({r, pick(rng, 1, 3)}, rng);
         return Case{{a, b}, [=](Tape* t) { return project(t, ops::concat_last(t, {a, b, a})); }};
       }},
      {"cosine_rows_mse",
       [](auto& rng) {
         const auto r = pick(rng, 1, 4), h = pick(rng, 2, 6);
         Tensor u = random_tensor({r, h}, rng), v = random_tensor({r, h}, rng);
         std::vector<Real> target(r);
         for (auto& x : target) x = std::uniform_real_distribution<double>(0, 1)(rng);
         return Case{{u, v}, [=](Tape* t) { return ops::mse(t, ops::cosine_rows(t, u, v), target); }};
       }},
      {"cross_entropy",
       [](auto& rng) {
         const auto b = pick(rng, 1, 4), c = pick(rng, 2, 5);
         Tensor logits = random_tensor({b, c}, rng, -3, 3);
         std::vector<std::int32_t> labels(b);
         for (auto& l : labels) l = static_cast<std::int32_t>(pick(rng, 0, c - 1));
         return Case{{logits}, [=](Tape* t) { return ops::cross_entropy(t, logits, labels); }};
       }},
      {"mean",
       [](auto& rng) {
         Tensor x = random_tensor({pick(rng, 1, 4), pick(rng, 1, 4)}, rng);
         return Case{{x}, [=](Tape* t) { return ops::mean(t, ops::mul(t, x, x)); }};
       }},
  };
}

inline PairBatch random_pair_batch(std::mt19937_64& rng, std::size_t vocab, bool labels) {
  std::vector<std::vector<std::int32_t>> left, right;
  PairBatch batch;
  for (int i = 0; i < 3; ++i) {
    for (auto* side : {&left, &right}) {
      std::vector<std::int32_t> ids{token_id::cls};
      const auto words = pick(rng, 1, 6);  // up to T = 8
      for (std::size_t w = 0; w < words; ++w) ids.push_back(static_cast<std::int32_t>(pick(rng, 4, vocab - 1)));
      ids.push_back(token_id::sep);
      side->push_back(ids);
    }
    batch.targets.push_back(std::uniform_real_distribution<double>(0, 1)(rng));
    batch.labels.push_back(static_cast<std::int32_t>(pick(rng, 0, 2)));
  }
  if (!labels) batch.labels.clear();
  batch.left = TokenizedBatch::from_sequences(left);
  batch.right = TokenizedBatch::from_sequences(right);
  return batch;
}

struct ModelCase {
  PoolingKind head;
  bool albert;
  Objective objective;
};

inline std::vector<ModelCase> model_cases() {
  std::vector<ModelCase> out;
  for (auto kind : {PoolingKind::cls, PoolingKind::mean, PoolingKind::max, PoolingKind::cnn})
    for (bool albert : {false, true})
      for (auto obj : {Objective::regression, Objective::classification}) out.push_back({kind, albert, obj});
  return out;
}

inline std::string model_case_name(const ModelCase& c) {
  return to_string(c.head) + (c.albert ? "_albert" : "_bert") +
         (c.objective == Objective::regression ? "_regression" : "_classification");
}

inline void PrintTo(const ModelCase& c, std::ostream* os) { *os << model_case_name(c); }

/// Checks every parameter of the smallest model at a fixed O(1) parameter point.
inline GradCheckResult check_model(const ModelCase& c, std::string* worst_name = nullptr) {
  const bool classify = c.objective == Objective::classification;
  SiameseModel model(tiny_encoder(c.albert, 17), {c.head, {}}, classify);
  spread_parameters(model.parameters(), 17);
  std::mt19937_64 rng(23);
  const PairBatch batch = random_pair_batch(rng, 50, classify);
  std::vector<Tensor> params;
  for (auto& p : model.parameters()) params.push_back(p.tensor);
  auto f = [&](Tape* t) {
    const ForwardContext ctx{t, nullptr};
    return classify ? classification_loss(model, batch, ctx) : regression_loss(model, batch, ctx);
  };
  const auto res = finite_diff_check(f, params);
  if (worst_name) *worst_name = model.parameters()[res.worst_tensor].name + "[" + std::to_string(res.worst_index) + "]";
  return res;
}

}  // namespace sentemb::testing
