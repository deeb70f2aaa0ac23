// SPDX-License-Identifier: Apache-2.0
#pragma once

// Differentiable tensor operations.
//
// Every op takes the active tape first. With a null tape (inference) or when
// no input requires a gradient, nothing is recorded and the result is a plain
// value. Broadcasting is limited to bias/row adds and scalar scaling.

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "sentemb/tape.hpp"
#include "sentemb/tensor.hpp"

SENTEMB_NAMESPACE_BEGIN

enum class Activation { tanh, gelu };

namespace ops {

Tensor matmul(Tape* tape, const Tensor& a, const Tensor& b);

/// [N,m,k] x [N,k,n] -> [N,m,n]; with transpose_b, b is [N,n,k].
Tensor batched_matmul(Tape* tape, const Tensor& a, const Tensor& b, bool transpose_b = false);

Tensor add(Tape* tape, const Tensor& a, const Tensor& b);
Tensor sub(Tape* tape, const Tensor& a, const Tensor& b);
Tensor mul(Tape* tape, const Tensor& a, const Tensor& b);
Tensor scale(Tape* tape, const Tensor& x, Real factor);
Tensor abs(Tape* tape, const Tensor& x);

/// x[..., n] + bias[n]
Tensor add_bias(Tape* tape, const Tensor& x, const Tensor& bias);

/// x[..., n] @ w[n, out] + bias[out]; leading axes are flattened.
Tensor linear(Tape* tape, const Tensor& x, const Tensor& w, const Tensor& bias);

/// x[..., n] @ w[n, out] without a bias term.
Tensor linear(Tape* tape, const Tensor& x, const Tensor& w);

/// Same data, new shape (element counts must agree).
Tensor reshape(Tape* tape, const Tensor& x, Shape shape);

/// Rows of table[R,E] selected by ids -> [ids.size(), E].
Tensor gather_rows(Tape* tape, const Tensor& table, std::span<const std::int32_t> ids);

/// x[B,T,H] + table[t,:] at every (b,t); requires T <= rows(table).
Tensor add_position_rows(Tape* tape, const Tensor& x, const Tensor& table);

/// x[..., H] + table[row,:] everywhere.
Tensor add_table_row(Tape* tape, const Tensor& x, const Tensor& table, std::size_t row);

Tensor softmax(Tape* tape, const Tensor& x, std::size_t axis);

/// Softmax over the last axis of scores[B*heads, Tq, Tk]; keys with
/// key_mask[b, k] == 0 get logit -inf and probability exactly 0.
Tensor masked_softmax(Tape* tape, const Tensor& scores, const Mask& key_mask, std::size_t heads);

Tensor layer_norm(Tape* tape, const Tensor& x, const Tensor& gamma, const Tensor& beta, Real eps = Real(1e-12));

/// gelu uses the tanh approximation 0.5 x (1 + tanh(sqrt(2/pi) (x + 0.044715 x^3))).
Tensor activation(Tape* tape, const Tensor& x, Activation kind);

/// Inverted dropout; identity when rate == 0.
Tensor dropout(Tape* tape, const Tensor& x, Real rate, std::mt19937_64& rng);

/// Cross-correlation along the token axis with same-size zero padding.
/// x[B,T,Cin], kernel[k,Cin,Cout], bias[Cout] -> [B,T,Cout]; k must be odd.
Tensor conv1d(Tape* tape, const Tensor& x, const Tensor& kernel, const Tensor& bias);

struct Pooled {
  Tensor values;
  Mask mask;
};

/// Windowed max along the token axis. Masked positions count as -inf; a
/// window with no valid position emits 0 and is invalid in the output mask.
/// Output length is 1 when T <= k, else ceil((T - k) / stride) + 1.
Pooled max_pool1d(Tape* tape, const Tensor& x, std::size_t window, std::size_t stride, const Mask& mask);

/// Mean over valid token positions: x[B,T,H] -> [B,H].
Tensor masked_mean(Tape* tape, const Tensor& x, const Mask& mask);

/// Per-dimension max over valid token positions: x[B,T,H] -> [B,H].
Tensor masked_max(Tape* tape, const Tensor& x, const Mask& mask);

/// Zeroes every masked position of x[B,T,H].
Tensor apply_mask(Tape* tape, const Tensor& x, const Mask& mask);

/// x[B,T,H] -> x[:, position, :] as [B,H].
Tensor select_position(Tape* tape, const Tensor& x, std::size_t position);

/// [B,T,H] -> [B*heads, T, H/heads]
Tensor split_heads(Tape* tape, const Tensor& x, std::size_t heads);
/// [B*heads, T, d] -> [B, T, heads*d]
Tensor merge_heads(Tape* tape, const Tensor& x, std::size_t heads);

/// Concatenates [B, n_i] tensors along the last axis.
Tensor concat_last(Tape* tape, const std::vector<Tensor>& parts);

/// Row-wise cosine similarity of u[B,H], v[B,H] -> [B], clamped to [-1, 1].
Tensor cosine_rows(Tape* tape, const Tensor& u, const Tensor& v);

/// Mean squared error of pred[B] against fixed targets.
Tensor mse(Tape* tape, const Tensor& pred, std::span<const Real> target);

/// Mean over rows of -log softmax(logits)[label].
Tensor cross_entropy(Tape* tape, const Tensor& logits, std::span<const std::int32_t> labels);

Tensor sum(Tape* tape, const Tensor& x);
Tensor mean(Tape* tape, const Tensor& x);

}  // namespace ops

SENTEMB_NAMESPACE_END
