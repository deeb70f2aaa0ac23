// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <vector>

#include "sentemb/tensor.hpp"

SENTEMB_NAMESPACE_BEGIN

/// Ordered record of differentiable operations for one forward pass.
///
/// Operations are appended as they execute, so every entry's inputs were
/// produced by earlier entries (or are leaves). backward() walks the record
/// once in reverse. A tape belongs to a single training step on a single
/// thread of control.
class Tape {
 public:
  using BackwardFn = std::function<void()>;

  void record(std::vector<Tensor> inputs, Tensor output, BackwardFn backward);

  /// Seeds d(loss)/d(loss) = 1 and propagates to every recorded input.
  /// The tape is consumed: a second call throws ContractError.
  void backward(Tensor& loss);

  std::size_t size() const noexcept { return entries_.size(); }
  bool consumed() const noexcept { return consumed_; }
  void clear();

 private:
  struct Entry {
    std::vector<Tensor> inputs;
    Tensor output;
    BackwardFn backward;
  };
  std::vector<Entry> entries_;
  bool consumed_ = false;
};

SENTEMB_NAMESPACE_END
