// SPDX-License-Identifier: Apache-2.0
#include "gradient_suite.hpp"

#include <chrono>

#include "grad_cases.hpp"

static_assert(sentemb::kDoublePrecision, "the gradient suite needs the 64-bit build");

namespace sentemb_acceptance {

using namespace sentemb;
using namespace sentemb::testing;

GradientSummary run_gradient_suite() {
  GradientSummary s;
  const auto start = std::chrono::steady_clock::now();
  const auto ops = op_cases();
  for (std::size_t i = 0; i < ops.size(); ++i) {
    for (int seed = 0; seed < kSeeds; ++seed) {
      std::mt19937_64 rng(static_cast<std::uint64_t>(seed) * 7919 + i);
      Case c = ops[i].build(rng);
      const double err = finite_diff_check(c.f, c.inputs).max_rel_error;
      ++s.op_checks;
      if (err >= s.worst_op_error) {
        s.worst_op_error = err;
        s.worst_op = std::string(ops[i].name) + " seed " + std::to_string(seed);
      }
    }
  }
  for (const auto& c : model_cases()) {
    std::string where;
    const double err = check_model(c, &where).max_rel_error;
    ++s.model_checks;
    if (err >= s.worst_model_error) {
      s.worst_model_error = err;
      s.worst_model = model_case_name(c) + " " + where;
    }
  }
  s.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return s;
}

}  // namespace sentemb_acceptance
