// SPDX-License-Identifier: Apache-2.0
#pragma once

// Dense inner loops used by the differentiable ops.
//
// Each kernel has two implementations with the same signature:
//   kernels::serial::*  straightforward loops, kept as the reference
//   kernels::*          OpenMP-parallel over independent outputs
// Every output element is produced by exactly one thread with the same
// summation order as the reference, so both are bit-identical for any thread
// count.

#include <cstddef>
#include <span>

#include "sentemb/real.hpp"

SENTEMB_NAMESPACE_BEGIN

namespace kernels {

enum class Trans { no, yes };

/// c[m,n] = op(a)[m,k] * op(b)[k,n]   (or c += ... when accumulate)
/// a is stored [m,k] (or [k,m] when transposed); b is stored [k,n] (or [n,k]).
void gemm(Trans ta, Trans tb, std::size_t m, std::size_t n, std::size_t k, std::span<const Real> a,
          std::span<const Real> b, std::span<Real> c, bool accumulate = false);

/// gemm over `count` independent problems laid out contiguously.
void batched_gemm(Trans ta, Trans tb, std::size_t count, std::size_t m, std::size_t n, std::size_t k,
                  std::span<const Real> a, std::span<const Real> b, std::span<Real> c, bool accumulate = false);

/// Unfolds x[B,T,C] into cols[B*T, width*C] with zero padding of width/2 on
/// both sides of the token axis.
void im2col(std::size_t batch, std::size_t length, std::size_t channels, std::size_t width,
            std::span<const Real> x, std::span<Real> cols);

/// Adjoint of im2col: scatters cols back onto dx[B,T,C] (accumulating).
void col2im(std::size_t batch, std::size_t length, std::size_t channels, std::size_t width,
            std::span<const Real> cols, std::span<Real> dx);

/// Row-wise layer normalization over the last axis; also returns per-row
/// normalized values and inverse std for the backward pass.
void layer_norm(std::size_t rows, std::size_t width, std::span<const Real> x, std::span<const Real> gamma,
                std::span<const Real> beta, Real eps, std::span<Real> y, std::span<Real> xhat,
                std::span<Real> inv_std);

namespace serial {
void gemm(Trans ta, Trans tb, std::size_t m, std::size_t n, std::size_t k, std::span<const Real> a,
          std::span<const Real> b, std::span<Real> c, bool accumulate = false);
void batched_gemm(Trans ta, Trans tb, std::size_t count, std::size_t m, std::size_t n, std::size_t k,
                  std::span<const Real> a, std::span<const Real> b, std::span<Real> c, bool accumulate = false);
void im2col(std::size_t batch, std::size_t length, std::size_t channels, std::size_t width,
            std::span<const Real> x, std::span<Real> cols);
void col2im(std::size_t batch, std::size_t length, std::size_t channels, std::size_t width,
            std::span<const Real> cols, std::span<Real> dx);
void layer_norm(std::size_t rows, std::size_t width, std::span<const Real> x, std::span<const Real> gamma,
                std::span<const Real> beta, Real eps, std::span<Real> y, std::span<Real> xhat,
                std::span<Real> inv_std);
}  // namespace serial

/// Number of OpenMP threads the parallel kernels will use (1 without OpenMP).
int max_threads();

}  // namespace kernels

SENTEMB_NAMESPACE_END
