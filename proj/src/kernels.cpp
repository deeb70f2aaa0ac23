// SPDX-License-Identifier: Apache-2.0
#include "sentemb/kernels.hpp"

#include <cmath>
#include <vector>
#ifdef _OPENMP
#include <omp.h>
#endif

SENTEMB_NAMESPACE_BEGIN

namespace kernels {

namespace {

// Below this many multiply-adds the fork/join overhead dominates.
constexpr std::size_t kParallelWork = 1 << 15;

inline Real a_at(Trans ta, std::span<const Real> a, std::size_t m, std::size_t k, std::size_t i, std::size_t p) {
  return ta == Trans::no ? a[i * k + p] : a[p * m + i];
}

// Rows [i0, i1) of one gemm. Each c[i,j] is 0 + sum over p in ascending
// order, matching serial::gemm exactly.
void gemm_rows(Trans ta, Trans tb, std::size_t m, std::size_t n, std::size_t k, const Real* a_ptr,
               const Real* b_ptr, Real* c_ptr, bool accumulate, std::size_t i0, std::size_t i1, Real* row) {
  std::span<const Real> a(a_ptr, m * k);
  for (std::size_t i = i0; i < i1; ++i) {
    Real* ci = c_ptr + i * n;
    if (tb == Trans::no) {
      for (std::size_t j = 0; j < n; ++j) row[j] = Real(0);
      for (std::size_t p = 0; p < k; ++p) {
        const Real aip = a_at(ta, a, m, k, i, p);
        const Real* bp = b_ptr + p * n;
        for (std::size_t j = 0; j < n; ++j) row[j] += aip * bp[j];
      }
    } else {
      for (std::size_t j = 0; j < n; ++j) {
        const Real* bj = b_ptr + j * k;
        Real acc = 0;
        for (std::size_t p = 0; p < k; ++p) acc += a_at(ta, a, m, k, i, p) * bj[p];
        row[j] = acc;
      }
    }
    if (accumulate) {
      for (std::size_t j = 0; j < n; ++j) ci[j] += row[j];
    } else {
      for (std::size_t j = 0; j < n; ++j) ci[j] = row[j];
    }
  }
}

void layer_norm_row(std::size_t width, const Real* x, std::span<const Real> gamma, std::span<const Real> beta, Real eps,
                    Real* y, Real* xhat, Real* inv_std) {
  Real mean = 0;
  for (std::size_t j = 0; j < width; ++j) mean += x[j];
  mean /= static_cast<Real>(width);
  Real var = 0;
  for (std::size_t j = 0; j < width; ++j) {
    const Real d = x[j] - mean;
    var += d * d;
  }
  var /= static_cast<Real>(width);
  const Real inv = Real(1) / std::sqrt(var + eps);
  *inv_std = inv;
  for (std::size_t j = 0; j < width; ++j) {
    xhat[j] = (x[j] - mean) * inv;
    y[j] = gamma[j] * xhat[j] + beta[j];
  }
}

}  // namespace

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

void gemm(Trans ta, Trans tb, std::size_t m, std::size_t n, std::size_t k, std::span<const Real> a,
          std::span<const Real> b, std::span<Real> c, bool accumulate) {
  const bool parallel = m > 1 && m * n * k >= kParallelWork;
  const auto rows = static_cast<long long>(m);
#pragma omp parallel if (parallel)
  {
    std::vector<Real> row(n);
#pragma omp for schedule(static)
    for (long long i = 0; i < rows; ++i) {
      const auto r = static_cast<std::size_t>(i);
      gemm_rows(ta, tb, m, n, k, a.data(), b.data(), c.data(), accumulate, r, r + 1, row.data());
    }
  }
}

void batched_gemm(Trans ta, Trans tb, std::size_t count, std::size_t m, std::size_t n, std::size_t k,
                  std::span<const Real> a, std::span<const Real> b, std::span<Real> c, bool accumulate) {
  const bool parallel = count > 1 && count * m * n * k >= kParallelWork;
  const auto problems = static_cast<long long>(count);
#pragma omp parallel if (parallel)
  {
    std::vector<Real> row(n);
#pragma omp for schedule(static)
    for (long long q = 0; q < problems; ++q) {
      const auto s = static_cast<std::size_t>(q);
      gemm_rows(ta, tb, m, n, k, a.data() + s * m * k, b.data() + s * k * n, c.data() + s * m * n, accumulate, 0, m,
                row.data());
    }
  }
}

void im2col(std::size_t batch, std::size_t length, std::size_t channels, std::size_t width, std::span<const Real> x,
            std::span<Real> cols) {
  const auto half = static_cast<long long>(width / 2);
  const auto rows = static_cast<long long>(batch * length);
  const bool parallel = static_cast<std::size_t>(rows) * width * channels >= kParallelWork;
#pragma omp parallel for schedule(static) if (parallel)
  for (long long r = 0; r < rows; ++r) {
    const auto b = static_cast<std::size_t>(r) / length;
    const auto t = static_cast<long long>(static_cast<std::size_t>(r) % length);
    Real* dst = cols.data() + static_cast<std::size_t>(r) * width * channels;
    for (std::size_t w = 0; w < width; ++w) {
      const long long src = t + static_cast<long long>(w) - half;
      Real* out = dst + w * channels;
      if (src < 0 || src >= static_cast<long long>(length)) {
        for (std::size_t ch = 0; ch < channels; ++ch) out[ch] = Real(0);
      } else {
        const Real* in = x.data() + (b * length + static_cast<std::size_t>(src)) * channels;
        for (std::size_t ch = 0; ch < channels; ++ch) out[ch] = in[ch];
      }
    }
  }
}

void col2im(std::size_t batch, std::size_t length, std::size_t channels, std::size_t width, std::span<const Real> cols,
            std::span<Real> dx) {
  const auto half = static_cast<long long>(width / 2);
  const auto batches = static_cast<long long>(batch);
  const bool parallel = batch > 1 && batch * length * width * channels >= kParallelWork;
  // Parallel over batch rows only: within a row the scatter order is fixed.
#pragma omp parallel for schedule(static) if (parallel)
  for (long long bb = 0; bb < batches; ++bb) {
    const auto b = static_cast<std::size_t>(bb);
    for (std::size_t t = 0; t < length; ++t) {
      const Real* src_row = cols.data() + (b * length + t) * width * channels;
      for (std::size_t w = 0; w < width; ++w) {
        const long long dst = static_cast<long long>(t) + static_cast<long long>(w) - half;
        if (dst < 0 || dst >= static_cast<long long>(length)) continue;
        Real* out = dx.data() + (b * length + static_cast<std::size_t>(dst)) * channels;
        for (std::size_t ch = 0; ch < channels; ++ch) out[ch] += src_row[w * channels + ch];
      }
    }
  }
}

void layer_norm(std::size_t rows, std::size_t width, std::span<const Real> x, std::span<const Real> gamma,
                std::span<const Real> beta, Real eps, std::span<Real> y, std::span<Real> xhat,
                std::span<Real> inv_std) {
  const auto n = static_cast<long long>(rows);
  const bool parallel = rows > 1 && rows * width >= kParallelWork;
#pragma omp parallel for schedule(static) if (parallel)
  for (long long r = 0; r < n; ++r) {
    const auto i = static_cast<std::size_t>(r);
    layer_norm_row(width, x.data() + i * width, gamma, beta, eps, y.data() + i * width, xhat.data() + i * width,
                   inv_std.data() + i);
  }
}

namespace serial {

void gemm(Trans ta, Trans tb, std::size_t m, std::size_t n, std::size_t k, std::span<const Real> a,
          std::span<const Real> b, std::span<Real> c, bool accumulate) {
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      Real acc = 0;
      for (std::size_t p = 0; p < k; ++p) {
        const Real av = ta == Trans::no ? a[i * k + p] : a[p * m + i];
        const Real bv = tb == Trans::no ? b[p * n + j] : b[j * k + p];
        acc += av * bv;
      }
      c[i * n + j] = accumulate ? c[i * n + j] + acc : acc;
    }
  }
}

void batched_gemm(Trans ta, Trans tb, std::size_t count, std::size_t m, std::size_t n, std::size_t k,
                  std::span<const Real> a, std::span<const Real> b, std::span<Real> c, bool accumulate) {
  for (std::size_t q = 0; q < count; ++q)
    serial::gemm(ta, tb, m, n, k, a.subspan(q * m * k, m * k), b.subspan(q * k * n, k * n),
                 c.subspan(q * m * n, m * n), accumulate);
}

void im2col(std::size_t batch, std::size_t length, std::size_t channels, std::size_t width, std::span<const Real> x,
            std::span<Real> cols) {
  const auto half = static_cast<long long>(width / 2);
  for (std::size_t b = 0; b < batch; ++b)
    for (std::size_t t = 0; t < length; ++t)
      for (std::size_t w = 0; w < width; ++w)
        for (std::size_t ch = 0; ch < channels; ++ch) {
          const long long src = static_cast<long long>(t) + static_cast<long long>(w) - half;
          const bool inside = src >= 0 && src < static_cast<long long>(length);
          cols[((b * length + t) * width + w) * channels + ch] =
              inside ? x[(b * length + static_cast<std::size_t>(src)) * channels + ch] : Real(0);
        }
}

void col2im(std::size_t batch, std::size_t length, std::size_t channels, std::size_t width, std::span<const Real> cols,
            std::span<Real> dx) {
  const auto half = static_cast<long long>(width / 2);
  for (std::size_t b = 0; b < batch; ++b)
    for (std::size_t t = 0; t < length; ++t)
      for (std::size_t w = 0; w < width; ++w) {
        const long long dst = static_cast<long long>(t) + static_cast<long long>(w) - half;
        if (dst < 0 || dst >= static_cast<long long>(length)) continue;
        for (std::size_t ch = 0; ch < channels; ++ch)
          dx[(b * length + static_cast<std::size_t>(dst)) * channels + ch] +=
              cols[((b * length + t) * width + w) * channels + ch];
      }
}

void layer_norm(std::size_t rows, std::size_t width, std::span<const Real> x, std::span<const Real> gamma,
                std::span<const Real> beta, Real eps, std::span<Real> y, std::span<Real> xhat,
                std::span<Real> inv_std) {
  for (std::size_t i = 0; i < rows; ++i)
    layer_norm_row(width, x.data() + i * width, gamma, beta, eps, y.data() + i * width, xhat.data() + i * width,
                   inv_std.data() + i);
}

}  // namespace serial

}  // namespace kernels

SENTEMB_NAMESPACE_END
