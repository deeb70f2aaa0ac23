// SPDX-License-Identifier: Apache-2.0
#include "sentemb/tape.hpp"

#include "sentemb/errors.hpp"

SENTEMB_NAMESPACE_BEGIN

void Tape::record(std::vector<Tensor> inputs, Tensor output, BackwardFn backward) {
  if (consumed_) throw ContractError("recording on a tape that already ran backward");
  entries_.push_back({std::move(inputs), std::move(output), std::move(backward)});
}

void Tape::backward(Tensor& loss) {
  if (consumed_) throw ContractError("backward called twice on the same tape");
  if (!loss.defined() || loss.numel() != 1)
    throw ContractError("backward requires a scalar loss, got " +
                        (loss.defined() ? shape_string(loss.shape()) : std::string("undefined")));
  loss.grad()[0] = Real(1);
  for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) {
    // Outputs that never received a gradient do not influence the loss.
    if (it->output.has_grad()) it->backward();
  }
  consumed_ = true;
}

void Tape::clear() {
  entries_.clear();
  consumed_ = false;
}

SENTEMB_NAMESPACE_END
