// SPDX-License-Identifier: Apache-2.0
#include "sentemb/tensor.hpp"

#include <algorithm>
#include <sstream>

#include "sentemb/errors.hpp"

SENTEMB_NAMESPACE_BEGIN

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
  os << ']';
  return os.str();
}

Tensor::Tensor(Shape shape, bool requires_grad) : s_(std::make_shared<Storage>()) {
  for (auto d : shape)
    if (d == 0) throw DimensionError("tensor dimensions must be positive: " + shape_string(shape));
  s_->data.assign(shape_numel(shape), Real(0));
  s_->shape = std::move(shape);
  s_->requires_grad = requires_grad;
}

Tensor::Tensor(Shape shape, std::vector<Real> data, bool requires_grad) : s_(std::make_shared<Storage>()) {
  for (auto d : shape)
    if (d == 0) throw DimensionError("tensor dimensions must be positive: " + shape_string(shape));
  if (shape_numel(shape) != data.size())
    throw DimensionError("data length " + std::to_string(data.size()) + " does not match shape " + shape_string(shape));
  s_->shape = std::move(shape);
  s_->data = std::move(data);
  s_->requires_grad = requires_grad;
}

Tensor Tensor::scalar(Real value, bool requires_grad) { return Tensor({1}, {value}, requires_grad); }

const Shape& Tensor::shape() const { return s_->shape; }

std::size_t Tensor::dim(std::size_t axis) const {
  if (axis >= s_->shape.size()) throw DimensionError("axis out of range for " + shape_string(s_->shape));
  return s_->shape[axis];
}

std::size_t Tensor::numel() const { return s_->data.size(); }

std::span<Real> Tensor::data() { return s_->data; }
std::span<const Real> Tensor::data() const { return s_->data; }

Real Tensor::item() const {
  if (numel() != 1) throw ContractError("item() on tensor of shape " + shape_string(shape()));
  return s_->data[0];
}

bool Tensor::requires_grad() const { return s_->requires_grad; }
void Tensor::set_requires_grad(bool value) { s_->requires_grad = value; }

bool Tensor::has_grad() const { return !s_->grad.empty(); }

std::span<Real> Tensor::grad() const {
  if (s_->grad.empty()) s_->grad.assign(s_->data.size(), Real(0));
  return s_->grad;
}

std::span<const Real> Tensor::grad_view() const { return s_->grad; }

void Tensor::zero_grad() {
  if (!s_->grad.empty()) std::fill(s_->grad.begin(), s_->grad.end(), Real(0));
}

void Tensor::drop_grad() { s_->grad.clear(); }

Tensor Tensor::clone() const {
  Tensor t(s_->shape, s_->data, s_->requires_grad);
  t.s_->grad = s_->grad;
  return t;
}

std::size_t count_scalars(const ParamList& params) {
  std::size_t n = 0;
  for (const auto& p : params) n += p.tensor.numel();
  return n;
}

std::size_t Mask::count(std::size_t b) const {
  std::size_t n = 0;
  for (std::size_t t = 0; t < length; ++t) n += at(b, t) ? 1 : 0;
  return n;
}

Mask Mask::from_lengths(std::span<const std::size_t> lengths, std::size_t t) {
  Mask m(lengths.size(), t, 0);
  for (std::size_t b = 0; b < lengths.size(); ++b)
    for (std::size_t i = 0; i < std::min(lengths[b], t); ++i) m.valid[b * t + i] = 1;
  return m;
}

SENTEMB_NAMESPACE_END
