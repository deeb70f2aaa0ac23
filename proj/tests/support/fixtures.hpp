// SPDX-License-Identifier: Apache-2.0
// Model and tensor fixtures shared by unit tests and the acceptance binary.
#pragma once

#include <random>
#include <vector>

#include "sentemb/encoder.hpp"
#include "sentemb/tensor.hpp"

namespace sentemb::testing {

inline Tensor random_tensor(Shape shape, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> dist(lo, hi);
  std::vector<Real> v(shape_numel(shape));
  for (auto& x : v) x = static_cast<Real>(dist(rng));
  return Tensor(std::move(shape), std::move(v));
}

inline std::vector<Real> values(const Tensor& t) { return {t.data().begin(), t.data().end()}; }

/// Small encoder used across suites: V=50, E=8 (factorized) or 16, H=16, L=2, A=2.
inline EncoderConfig tiny_encoder(bool albert = false, std::uint64_t seed = 1) {
  EncoderConfig c;
  c.vocab_size = 50;
  c.hidden_dim = 16;
  c.embed_dim = albert ? 8 : 16;
  c.layers = 2;
  c.heads = 2;
  c.ffn_dim = 32;
  c.max_len = 8;
  c.factorized_embedding = albert;
  c.share_layers = albert;
  c.num_hidden_groups = 1;
  c.seed = seed;
  return c;
}

/// Redraws every parameter uniformly in [-0.5, 0.5] (gammas around 1) so a
/// gradient check probes O(1) weights instead of the 0.02-scale init, where
/// most attention gradients sit below the finite-difference noise floor.
inline void spread_parameters(const ParamList& params, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-0.5, 0.5);
  for (const auto& p : params) {
    const double centre = p.name.ends_with("gamma") ? 1.0 : 0.0;
    Tensor t = p.tensor;
    for (auto& v : t.data()) v = static_cast<Real>(centre + dist(rng));
  }
}

}  // namespace sentemb::testing
