// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <vector>

#include "sentemb/tape.hpp"

SENTEMB_NAMESPACE_BEGIN

/// Scalar-valued function of the current parameter values. It must record on
/// the tape it is given (which may be null for plain evaluation).
using ScalarFn = std::function<Tensor(Tape*)>;

struct GradCheckResult {
  double max_rel_error = 0;
  std::size_t worst_tensor = 0;
  std::size_t worst_index = 0;
  std::size_t coordinates = 0;
};

/// Compares reverse-mode gradients of f against central differences
///   (f(x + h e_i) - f(x - h e_i)) / 2h
/// at every coordinate of every tensor in `inputs`. The per-coordinate error
/// is |analytic - numeric| / max(1e-8, |analytic| + |numeric|).
GradCheckResult finite_diff_check(const ScalarFn& f, std::vector<Tensor> inputs, double h = 1e-5);

/// Single-tensor convenience form; returns the max relative error.
double finite_diff_check(const ScalarFn& f, Tensor x, double h = 1e-5);

SENTEMB_NAMESPACE_END
