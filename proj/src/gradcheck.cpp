// SPDX-License-Identifier: Apache-2.0
#include "sentemb/gradcheck.hpp"

#include <algorithm>
#include <cmath>

SENTEMB_NAMESPACE_BEGIN

GradCheckResult finite_diff_check(const ScalarFn& f, std::vector<Tensor> inputs, double h) {
  for (auto& x : inputs) {
    x.set_requires_grad(true);
    x.drop_grad();
  }
  Tape tape;
  Tensor loss = f(&tape);
  tape.backward(loss);

  std::vector<std::vector<Real>> analytic;
  analytic.reserve(inputs.size());
  for (auto& x : inputs) {
    if (x.has_grad())
      analytic.emplace_back(x.grad().begin(), x.grad().end());
    else
      analytic.emplace_back(x.numel(), Real(0));
  }

  GradCheckResult result;
  for (std::size_t ti = 0; ti < inputs.size(); ++ti) {
    auto data = inputs[ti].data();
    for (std::size_t i = 0; i < data.size(); ++i) {
      const Real saved = data[i];
      data[i] = static_cast<Real>(saved + h);
      const double up = f(nullptr).item();
      data[i] = static_cast<Real>(saved - h);
      const double down = f(nullptr).item();
      data[i] = saved;
      const double numeric = (up - down) / (2 * h);
      const double a = analytic[ti][i];
      const double err = std::abs(a - numeric) / std::max(1e-8, std::abs(a) + std::abs(numeric));
      if (err > result.max_rel_error) {
        result.max_rel_error = err;
        result.worst_tensor = ti;
        result.worst_index = i;
      }
      ++result.coordinates;
    }
  }
  for (auto& x : inputs) x.drop_grad();
  return result;
}

double finite_diff_check(const ScalarFn& f, Tensor x, double h) {
  return finite_diff_check(f, std::vector<Tensor>{std::move(x)}, h).max_rel_error;
}

SENTEMB_NAMESPACE_END
