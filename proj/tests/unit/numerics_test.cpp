// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sentemb/errors.hpp"
#include "sentemb/gradcheck.hpp"
#include "sentemb/ops.hpp"
#include "test_support.hpp"

namespace sentemb {
namespace {

using testing::random_tensor;
using testing::values;

TEST(Tensor, ShapeMustMatchData) {
  EXPECT_THROW(Tensor({2, 3}, std::vector<Real>(5)), DimensionError);
  EXPECT_THROW(Tensor(Shape{2, 0}), DimensionError);
  Tensor t({2, 3});
  EXPECT_EQ(t.numel(), 6u);
  EXPECT_EQ(t.rank(), 2u);
  EXPECT_FALSE(t.has_grad());
}

TEST(Tensor, CopiesShareStorageCloneDoesNot) {
  Tensor a({2}, {1, 2});
  Tensor b = a;
  Tensor c = a.clone();
  b.data()[0] = 7;
  EXPECT_EQ(a.data()[0], 7);
  EXPECT_EQ(c.data()[0], 1);
  EXPECT_TRUE(a.same_storage(b));
  EXPECT_FALSE(a.same_storage(c));
}

TEST(Tensor, GradientMatchesShape) {
  Tensor a({3, 2}, true);
  EXPECT_EQ(a.grad().size(), a.numel());
  EXPECT_TRUE(a.has_grad());
  a.drop_grad();
  EXPECT_TRUE(a.grad_view().empty());
}

TEST(Matmul, IdentityLeavesMatrixUnchanged) {
  Tensor eye({2, 2}, {1, 0, 0, 1});
  Tensor m({2, 2}, {1, 2, 3, 4});
  EXPECT_EQ(values(ops::matmul(nullptr, eye, m)), values(m));
}

TEST(Matmul, HandEvaluatedProduct) {
  Tensor a({2, 2}, {1, 2, 3, 4});
  Tensor b({2, 1}, {5, 6});
  Tensor c = ops::matmul(nullptr, a, b);
  EXPECT_EQ(c.shape(), (Shape{2, 1}));
  EXPECT_EQ(values(c), (std::vector<Real>{17, 39}));
}

TEST(Matmul, InnerDimensionMismatchIsDimensionError) {
  EXPECT_THROW(ops::matmul(nullptr, Tensor({2, 3}), Tensor({2, 3})), DimensionError);
}

TEST(Matmul, RecordsOnlyWhenAnInputRequiresGrad) {
  Tape tape;
  ops::matmul(&tape, Tensor({2, 2}), Tensor({2, 2}));
  EXPECT_EQ(tape.size(), 0u);
  ops::matmul(&tape, Tensor({2, 2}, true), Tensor({2, 2}));
  EXPECT_EQ(tape.size(), 1u);
}

TEST(Softmax, SymmetricInputIsUniform) {
  Tensor y = ops::softmax(nullptr, Tensor({2}, {0, 0}), 0);
  EXPECT_FLOAT_EQ(y.data()[0], 0.5f);
  EXPECT_FLOAT_EQ(y.data()[1], 0.5f);
}

TEST(Softmax, LogThreeGivesQuarterAndThreeQuarters) {
  Tensor y = ops::softmax(nullptr, Tensor({2}, {0, static_cast<Real>(std::log(3.0))}), 0);
  EXPECT_NEAR(y.data()[0], 0.25, 1e-6);
  EXPECT_NEAR(y.data()[1], 0.75, 1e-6);
}

TEST(Softmax, RowsSumToOneAndAreShiftInvariant) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    Tensor x = random_tensor({4, 7}, rng, -10, 10);
    Tensor shifted = x.clone();
    for (auto& v : shifted.data()) v += Real(3.5);
    Tensor y = ops::softmax(nullptr, x, 1);
    Tensor ys = ops::softmax(nullptr, shifted, 1);
    for (std::size_t r = 0; r < 4; ++r) {
      double total = 0;
      for (std::size_t j = 0; j < 7; ++j) {
        total += y.data()[r * 7 + j];
        EXPECT_GE(y.data()[r * 7 + j], 0);
        EXPECT_NEAR(y.data()[r * 7 + j], ys.data()[r * 7 + j], 1e-6);
      }
      EXPECT_NEAR(total, 1.0, 1e-6);
    }
  }
}

TEST(Softmax, AlongLeadingAxis) {
  Tensor y = ops::softmax(nullptr, Tensor({2, 2}, {0, 5, 0, 5}), 0);
  for (auto v : y.data()) EXPECT_FLOAT_EQ(v, 0.5f);
}

TEST(MaskedSoftmax, MaskedKeysGetExactlyZero) {
  std::mt19937_64 rng(5);
  Tensor scores = random_tensor({2, 3, 3}, rng);  // batch 1, 2 heads
  Mask mask = Mask::ones(1, 3);
  mask.valid[2] = 0;
  Tensor p = ops::masked_softmax(nullptr, scores, mask, 2);
  for (std::size_t row = 0; row < 6; ++row) {
    EXPECT_EQ(p.data()[row * 3 + 2], 0);
    EXPECT_NEAR(p.data()[row * 3] + p.data()[row * 3 + 1], 1.0, 1e-6);
  }
}

TEST(LayerNorm, ConstantVectorMapsToZero) {
  Tensor y = ops::layer_norm(nullptr, Tensor({1, 3}, {4, 4, 4}), Tensor({3}, {1, 1, 1}), Tensor({3}));
  for (auto v : y.data()) EXPECT_EQ(v, 0);
}

TEST(LayerNorm, TwoPointExample) {
  Tensor y = ops::layer_norm(nullptr, Tensor({1, 2}, {1, 3}), Tensor({2}, {1, 1}), Tensor({2}));
  EXPECT_NEAR(y.data()[0], -1.0, 1e-6);
  EXPECT_NEAR(y.data()[1], 1.0, 1e-6);
}

TEST(LayerNorm, ZeroGammaBroadcastsBeta) {
  std::mt19937_64 rng(1);
  Tensor beta({4}, {1, -2, 3, 0.5});
  Tensor y = ops::layer_norm(nullptr, random_tensor({3, 4}, rng), Tensor({4}), beta);
  for (std::size_t r = 0; r < 3; ++r)
    for (std::size_t j = 0; j < 4; ++j) EXPECT_EQ(y.data()[r * 4 + j], beta.data()[j]);
}

TEST(LayerNorm, NormalizedRowsHaveZeroMeanUnitVariance) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t width = 2 + trial % 30;
    Tensor x = random_tensor({5, width}, rng, -4, 4);
    Tensor ones({width}, std::vector<Real>(width, 1));
    Tensor y = ops::layer_norm(nullptr, x, ones, Tensor({width}));
    for (std::size_t r = 0; r < 5; ++r) {
      double mean = 0, var = 0;
      for (std::size_t j = 0; j < width; ++j) mean += y.data()[r * width + j];
      mean /= static_cast<double>(width);
      for (std::size_t j = 0; j < width; ++j) var += std::pow(y.data()[r * width + j] - mean, 2);
      var /= static_cast<double>(width);
      EXPECT_LE(std::abs(mean), 1e-6);
      EXPECT_NEAR(var, 1.0, 1e-4);
    }
  }
}

TEST(Activation, TanhValues) {
  Tensor y = ops::activation(nullptr, Tensor({3}, {0, 20, -20}), Activation::tanh);
  EXPECT_EQ(y.data()[0], 0);
  EXPECT_NEAR(y.data()[1], 1.0, 1e-9);
  EXPECT_NEAR(y.data()[2], -1.0, 1e-9);
}

TEST(Activation, GeluTanhApproximation) {
  Tensor y = ops::activation(nullptr, Tensor({3}, {0, 1, -1}), Activation::gelu);
  EXPECT_EQ(y.data()[0], 0);
  const double c = std::sqrt(2.0 / M_PI);
  const double at1 = 0.5 * (1 + std::tanh(c * (1 + 0.044715)));
  EXPECT_NEAR(y.data()[1], at1, 1e-6);
  EXPECT_NEAR(y.data()[2], -(1 - at1), 1e-6);
}

TEST(Conv1d, ZeroKernelGivesZeroOutput) {
  std::mt19937_64 rng(2);
  Tensor y = ops::conv1d(nullptr, random_tensor({2, 5, 3}, rng), Tensor({3, 3, 4}), Tensor({4}));
  EXPECT_EQ(y.shape(), (Shape{2, 5, 4}));
  for (auto v : y.data()) EXPECT_EQ(v, 0);
}

TEST(Conv1d, DeltaKernelIsIdentity) {
  std::mt19937_64 rng(2);
  const std::size_t c = 3;
  Tensor kernel({3, c, c});
  for (std::size_t i = 0; i < c; ++i) kernel.data()[1 * c * c + i * c + i] = 1;
  Tensor x = random_tensor({2, 6, c}, rng);
  EXPECT_EQ(values(ops::conv1d(nullptr, x, kernel, Tensor({c}))), values(x));
}

TEST(Conv1d, HandEvaluatedWithZeroPadding) {
  Tensor y = ops::conv1d(nullptr, Tensor({1, 3, 1}, {1, 2, 3}), Tensor({3, 1, 1}, {1, 1, 1}), Tensor({1}));
  EXPECT_EQ(values(y), (std::vector<Real>{3, 6, 5}));
}

TEST(Conv1d, EvenKernelIsConfigError) {
  EXPECT_THROW(ops::conv1d(nullptr, Tensor({1, 3, 1}), Tensor({2, 1, 1}), Tensor({1})), ConfigError);
}

TEST(MaxPool1d, WindowedMaximum) {
  auto out = ops::max_pool1d(nullptr, Tensor({1, 4, 1}, {1, 3, 2, 5}), 2, 2, Mask::ones(1, 4));
  EXPECT_EQ(values(out.values), (std::vector<Real>{3, 5}));
  EXPECT_EQ(out.mask.valid, (std::vector<std::uint8_t>{1, 1}));
}

TEST(MaxPool1d, ConstantSequenceStaysConstant) {
  auto out = ops::max_pool1d(nullptr, Tensor({1, 6, 1}, std::vector<Real>(6, 2.5)), 2, 2, Mask::ones(1, 6));
  for (auto v : out.values.data()) EXPECT_EQ(v, Real(2.5));
}

TEST(MaxPool1d, MaskedPositionsCountAsMinusInfinity) {
  Mask mask = Mask::ones(1, 4);
  mask.valid[2] = 0;
  auto out = ops::max_pool1d(nullptr, Tensor({1, 4, 1}, {1, 9, 100, 2}), 2, 2, mask);
  EXPECT_EQ(values(out.values), (std::vector<Real>{9, 2}));
}

TEST(MaxPool1d, FullyMaskedWindowEmitsZeroAndIsInvalid) {
  Mask mask = Mask::ones(1, 4);
  mask.valid[2] = mask.valid[3] = 0;
  auto out = ops::max_pool1d(nullptr, Tensor({1, 4, 1}, {1, 9, 100, 200}), 2, 2, mask);
  EXPECT_EQ(values(out.values), (std::vector<Real>{9, 0}));
  EXPECT_EQ(out.mask.valid, (std::vector<std::uint8_t>{1, 0}));
}

TEST(MaxPool1d, ShortSequenceKeepsSingleWindow) {
  auto out = ops::max_pool1d(nullptr, Tensor({1, 1, 2}, {4, -1}), 2, 2, Mask::ones(1, 1));
  EXPECT_EQ(out.values.shape(), (Shape{1, 1, 2}));
  EXPECT_EQ(values(out.values), (std::vector<Real>{4, -1}));
}

TEST(MaskedMean, AveragesValidPositions) {
  Tensor x({1, 2, 2}, {1, 1, 3, 3});
  EXPECT_EQ(values(ops::masked_mean(nullptr, x, Mask::ones(1, 2))), (std::vector<Real>{2, 2}));
  Mask first(1, 2);
  first.valid[1] = 0;
  EXPECT_EQ(values(ops::masked_mean(nullptr, x, first)), (std::vector<Real>{1, 1}));
}

TEST(MaskedMean, AllMaskedRowIsDegenerate) {
  EXPECT_THROW(ops::masked_mean(nullptr, Tensor({1, 2, 2}), Mask(1, 2, 0)), DegenerateInputError);
  EXPECT_THROW(ops::masked_max(nullptr, Tensor({1, 2, 2}), Mask(1, 2, 0)), DegenerateInputError);
}

TEST(MaskedMean, PermutationOfValidTokensLeavesResultUnchanged) {
  std::mt19937_64 rng(4);
  Tensor x = random_tensor({1, 4, 3}, rng);
  Tensor perm({1, 4, 3});
  const std::size_t order[4] = {2, 0, 3, 1};
  for (std::size_t t = 0; t < 4; ++t)
    for (std::size_t h = 0; h < 3; ++h) perm.data()[t * 3 + h] = x.data()[order[t] * 3 + h];
  auto a = values(ops::masked_mean(nullptr, x, Mask::ones(1, 4)));
  auto b = values(ops::masked_mean(nullptr, perm, Mask::ones(1, 4)));
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(a[i], b[i], 1e-6);
}

TEST(Masking, MeanAndPoolIgnoreMaskedValuesExactly) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    Tensor x = random_tensor({3, 7, 4}, rng);
    const std::size_t lengths[3] = {7, 3, 1};
    Mask mask = Mask::from_lengths(lengths, 7);
    Tensor noisy = x.clone();
    for (std::size_t b = 0; b < 3; ++b)
      for (std::size_t t = lengths[b]; t < 7; ++t)
        for (std::size_t h = 0; h < 4; ++h) noisy.data()[(b * 7 + t) * 4 + h] = Real(1000 + trial);
    EXPECT_EQ(values(ops::masked_mean(nullptr, x, mask)), values(ops::masked_mean(nullptr, noisy, mask)));
    EXPECT_EQ(values(ops::max_pool1d(nullptr, x, 2, 2, mask).values),
              values(ops::max_pool1d(nullptr, noisy, 2, 2, mask).values));
  }
}

TEST(Backward, SumOfSquaresGivesTwiceInput) {
  Tensor x({4}, {1, -2, 0.5, 3}, true);
  Tape tape;
  Tensor loss = ops::sum(&tape, ops::mul(&tape, x, x));
  tape.backward(loss);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_FLOAT_EQ(x.grad()[i], 2 * x.data()[i]);
  EXPECT_EQ(loss.grad()[0], 1);
}

TEST(Backward, TanhDerivative) {
  std::mt19937_64 rng(6);
  Tensor x = random_tensor({10}, rng, -3, 3);
  x.set_requires_grad(true);
  Tape tape;
  Tensor loss = ops::sum(&tape, ops::activation(&tape, x, Activation::tanh));
  tape.backward(loss);
  for (std::size_t i = 0; i < 10; ++i) {
    const double t = std::tanh(static_cast<double>(x.data()[i]));
    EXPECT_NEAR(x.grad()[i], 1 - t * t, 1e-6);
  }
}

TEST(Backward, NonScalarLossIsContractError) {
  Tensor x({3}, true);
  Tape tape;
  Tensor y = ops::scale(&tape, x, 2);
  EXPECT_THROW(tape.backward(y), ContractError);
}

TEST(Backward, TapeIsConsumedOnce) {
  Tensor x({2}, {1, 2}, true);
  Tape tape;
  Tensor loss = ops::sum(&tape, x);
  tape.backward(loss);
  EXPECT_TRUE(tape.consumed());
  EXPECT_THROW(tape.backward(loss), ContractError);
}

TEST(Backward, SharedInputAccumulatesGradient) {
  Tensor x({2}, {1, 2}, true);
  Tape tape;
  Tensor loss = ops::sum(&tape, ops::add(&tape, x, ops::scale(&tape, x, 3)));
  tape.backward(loss);
  EXPECT_EQ(values(Tensor({2}, {x.grad()[0], x.grad()[1]})), (std::vector<Real>{4, 4}));
}

TEST(FiniteDiff, ConstantFunctionHasZeroError) {
  Tensor x({3}, {1, 2, 3});
  const double err = finite_diff_check([](Tape*) { return Tensor::scalar(5); }, x);
  EXPECT_EQ(err, 0.0);
}

TEST(Determinism, RepeatedForwardIsBitIdentical) {
  std::mt19937_64 rng(10);
  Tensor x = random_tensor({2, 5, 4}, rng);
  Tensor k = random_tensor({3, 4, 4}, rng);
  Tensor b = random_tensor({4}, rng);
  auto run = [&] {
    Tensor y = ops::activation(nullptr, ops::conv1d(nullptr, x, k, b), Activation::gelu);
    return values(ops::softmax(nullptr, y, 2));
  };
  EXPECT_EQ(run(), run());
}

TEST(CrossEntropy, ReferenceValues) {
  std::vector<std::int32_t> label{1};
  EXPECT_NEAR(ops::cross_entropy(nullptr, Tensor({1, 3}), label).item(), std::log(3.0), 1e-6);
  EXPECT_NEAR(ops::cross_entropy(nullptr, Tensor({1, 3}, {-100, 100, -100}), label).item(), 0.0, 1e-6);
  const Real ln2 = static_cast<Real>(std::log(2.0));
  // p = (1/4, 1/2, 1/4): logits (0, ln 2, 0).
  EXPECT_NEAR(ops::cross_entropy(nullptr, Tensor({1, 3}, {0, ln2, 0}), label).item(), std::log(2.0), 1e-6);
  std::vector<std::int32_t> bad{3};
  EXPECT_THROW(ops::cross_entropy(nullptr, Tensor({1, 3}), bad), InputError);
}

TEST(CosineRows, ZeroVectorIsDegenerate) {
  EXPECT_THROW(ops::cosine_rows(nullptr, Tensor({1, 2}), Tensor({1, 2}, {1, 0})), DegenerateInputError);
}

TEST(Dropout, ZeroRateIsIdentityAndRateScalesSurvivors) {
  std::mt19937_64 rng(1);
  Tensor x = random_tensor({100}, rng);
  EXPECT_EQ(values(ops::dropout(nullptr, x, 0, rng)), values(x));
  Tensor y = ops::dropout(nullptr, x, Real(0.5), rng);
  std::size_t dropped = 0;
  for (std::size_t i = 0; i < 100; ++i) {
    if (y.data()[i] == 0)
      ++dropped;
    else
      EXPECT_FLOAT_EQ(y.data()[i], 2 * x.data()[i]);
  }
  EXPECT_GT(dropped, 20u);
  EXPECT_LT(dropped, 80u);
}

TEST(GatherRows, OutOfRangeIdIsInputError) {
  std::vector<std::int32_t> ids{0, 5};
  EXPECT_THROW(ops::gather_rows(nullptr, Tensor({3, 2}), ids), InputError);
}

}  // namespace
}  // namespace sentemb
