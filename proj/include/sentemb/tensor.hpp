// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "sentemb/real.hpp"

SENTEMB_NAMESPACE_BEGIN

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_string(const Shape& shape);

/// Dense row-major array with an optional gradient buffer.
///
/// A Tensor is a shared handle: copies alias the same storage, which is what
/// lets the compute tape hand gradients back to parameters. Use clone() for an
/// independent deep copy.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, bool requires_grad = false);
  Tensor(Shape shape, std::vector<Real> data, bool requires_grad = false);

  static Tensor scalar(Real value, bool requires_grad = false);

  bool defined() const noexcept { return static_cast<bool>(s_); }
  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t numel() const;

  std::span<Real> data();
  std::span<const Real> data() const;
  Real item() const;

  bool requires_grad() const;
  void set_requires_grad(bool value);

  bool has_grad() const;
  /// Allocates a zero gradient if none exists and returns it. Like the
  /// data, the gradient belongs to the shared storage, not the handle.
  std::span<Real> grad() const;
  /// The gradient without allocating; empty when none exists.
  std::span<const Real> grad_view() const;
  void zero_grad();
  void drop_grad();

  Tensor clone() const;
  bool same_storage(const Tensor& other) const noexcept { return s_ == other.s_; }

 private:
  struct Storage {
    Shape shape;
    std::vector<Real> data;
    std::vector<Real> grad;
    bool requires_grad = false;
  };
  std::shared_ptr<Storage> s_;
};

struct NamedTensor {
  std::string name;
  Tensor tensor;
};
using ParamList = std::vector<NamedTensor>;

std::size_t count_scalars(const ParamList& params);

/// Validity flags over [batch, length] token positions (1 = real token).
struct Mask {
  std::size_t batch = 0;
  std::size_t length = 0;
  std::vector<std::uint8_t> valid;

  Mask() = default;
  Mask(std::size_t b, std::size_t t, std::uint8_t fill = 1) : batch(b), length(t), valid(b * t, fill) {}

  bool at(std::size_t b, std::size_t t) const { return valid[b * length + t] != 0; }
  std::size_t count(std::size_t b) const;
  static Mask ones(std::size_t b, std::size_t t) { return Mask(b, t, 1); }
  static Mask from_lengths(std::span<const std::size_t> lengths, std::size_t t);
};

SENTEMB_NAMESPACE_END
