// SPDX-License-Identifier: Apache-2.0
#include "sentemb/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numbers>

#include "sentemb/errors.hpp"
#include "sentemb/kernels.hpp"

SENTEMB_NAMESPACE_BEGIN

namespace ops {

namespace {

using kernels::Trans;

template <class... Ts>
bool tracking(Tape* tape, const Ts&... inputs) {
  return tape != nullptr && (inputs.requires_grad() || ...);
}

Tensor make_output(Shape shape, bool record) { return Tensor(std::move(shape), record); }

void require_rank(const Tensor& t, std::size_t rank, const char* op) {
  if (t.rank() != rank)
    throw DimensionError(std::string(op) + ": expected rank " + std::to_string(rank) + ", got " +
                         shape_string(t.shape()));
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape())
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                         shape_string(b.shape()));
}

void require_mask(const Tensor& x, const Mask& mask, const char* op) {
  require_rank(x, 3, op);
  if (mask.batch != x.dim(0) || mask.length != x.dim(1))
    throw DimensionError(std::string(op) + ": mask [" + std::to_string(mask.batch) + "," +
                         std::to_string(mask.length) + "] does not match " + shape_string(x.shape()));
}

std::size_t last_dim(const Tensor& t) { return t.shape().back(); }

}  // namespace

Tensor matmul(Tape* tape, const Tensor& a, const Tensor& b) {
  require_rank(a, 2, "matmul");
  require_rank(b, 2, "matmul");
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  if (b.dim(0) != k)
    throw DimensionError("matmul: inner dimensions disagree " + shape_string(a.shape()) + " x " +
                         shape_string(b.shape()));
  const bool record = tracking(tape, a, b);
  Tensor out = make_output({m, n}, record);
  kernels::gemm(Trans::no, Trans::no, m, n, k, a.data(), b.data(), out.data());
  if (record) {
    tape->record({a, b}, out, [a, b, out, m, n, k]() mutable {
      auto dc = out.grad_view();
      if (a.requires_grad()) kernels::gemm(Trans::no, Trans::yes, m, k, n, dc, b.data(), a.grad(), true);
      if (b.requires_grad()) kernels::gemm(Trans::yes, Trans::no, k, n, m, a.data(), dc, b.grad(), true);
    });
  }
  return out;
}

Tensor batched_matmul(Tape* tape, const Tensor& a, const Tensor& b, bool transpose_b) {
  require_rank(a, 3, "batched_matmul");
  require_rank(b, 3, "batched_matmul");
  const std::size_t count = a.dim(0), m = a.dim(1), k = a.dim(2);
  const std::size_t n = transpose_b ? b.dim(1) : b.dim(2);
  const std::size_t bk = transpose_b ? b.dim(2) : b.dim(1);
  if (b.dim(0) != count || bk != k)
    throw DimensionError("batched_matmul: incompatible " + shape_string(a.shape()) + " x " +
                         shape_string(b.shape()));
  const bool record = tracking(tape, a, b);
  Tensor out = make_output({count, m, n}, record);
  const Trans tb = transpose_b ? Trans::yes : Trans::no;
  kernels::batched_gemm(Trans::no, tb, count, m, n, k, a.data(), b.data(), out.data());
  if (record) {
    tape->record({a, b}, out, [a, b, out, count, m, n, k, transpose_b]() mutable {
      auto dc = out.grad_view();
      if (transpose_b) {
        // c = a * b^T with b stored [n,k]
        if (a.requires_grad())
          kernels::batched_gemm(Trans::no, Trans::no, count, m, k, n, dc, b.data(), a.grad(), true);
        if (b.requires_grad())
          kernels::batched_gemm(Trans::yes, Trans::no, count, n, k, m, dc, a.data(), b.grad(), true);
      } else {
        if (a.requires_grad())
          kernels::batched_gemm(Trans::no, Trans::yes, count, m, k, n, dc, b.data(), a.grad(), true);
        if (b.requires_grad())
          kernels::batched_gemm(Trans::yes, Trans::no, count, k, n, m, a.data(), dc, b.grad(), true);
      }
    });
  }
  return out;
}

Tensor add(Tape* tape, const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  const bool record = tracking(tape, a, b);
  Tensor out = make_output(a.shape(), record);
  auto o = out.data();
  auto x = a.data(), y = b.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = x[i] + y[i];
  if (record) {
    tape->record({a, b}, out, [a, b, out]() mutable {
      auto g = out.grad_view();
      if (a.requires_grad()) {
        auto ga = a.grad();
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
      }
      if (b.requires_grad()) {
        auto gb = b.grad();
        for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i];
      }
    });
  }
  return out;
}

Tensor sub(Tape* tape, const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  const bool record = tracking(tape, a, b);
  Tensor out = make_output(a.shape(), record);
  auto o = out.data();
  auto x = a.data(), y = b.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = x[i] - y[i];
  if (record) {
    tape->record({a, b}, out, [a, b, out]() mutable {
      auto g = out.grad_view();
      if (a.requires_grad()) {
        auto ga = a.grad();
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
      }
      if (b.requires_grad()) {
        auto gb = b.grad();
        for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
      }
    });
  }
  return out;
}

Tensor mul(Tape* tape, const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  const bool record = tracking(tape, a, b);
  Tensor out = make_output(a.shape(), record);
  auto o = out.data();
  auto x = a.data(), y = b.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = x[i] * y[i];
  if (record) {
    tape->record({a, b}, out, [a, b, out]() mutable {
      auto g = out.grad_view();
      if (a.requires_grad()) {
        auto ga = a.grad();
        auto y = b.data();
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * y[i];
      }
      if (b.requires_grad()) {
        auto gb = b.grad();
        auto x = a.data();
        for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * x[i];
      }
    });
  }
  return out;
}

Tensor scale(Tape* tape, const Tensor& x, Real factor) {
  const bool record = tracking(tape, x);
  Tensor out = make_output(x.shape(), record);
  auto o = out.data();
  auto in = x.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = in[i] * factor;
  if (record) {
    tape->record({x}, out, [x, out, factor]() mutable {
      auto g = out.grad_view();
      auto gx = x.grad();
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * factor;
    });
  }
  return out;
}

Tensor abs(Tape* tape, const Tensor& x) {
  const bool record = tracking(tape, x);
  Tensor out = make_output(x.shape(), record);
  auto o = out.data();
  auto in = x.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = std::abs(in[i]);
  if (record) {
    tape->record({x}, out, [x, out]() mutable {
      auto g = out.grad_view();
      auto gx = x.grad();
      auto in = x.data();
      for (std::size_t i = 0; i < g.size(); ++i) {
        const Real s = in[i] > 0 ? Real(1) : (in[i] < 0 ? Real(-1) : Real(0));
        gx[i] += g[i] * s;
      }
    });
  }
  return out;
}

Tensor add_bias(Tape* tape, const Tensor& x, const Tensor& bias) {
  require_rank(bias, 1, "add_bias");
  const std::size_t n = last_dim(x);
  if (bias.dim(0) != n)
    throw DimensionError("add_bias: bias " + shape_string(bias.shape()) + " vs " + shape_string(x.shape()));
  const bool record = tracking(tape, x, bias);
  Tensor out = make_output(x.shape(), record);
  auto o = out.data();
  auto in = x.data();
  auto bv = bias.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = in[i] + bv[i % n];
  if (record) {
    tape->record({x, bias}, out, [x, bias, out, n]() mutable {
      auto g = out.grad_view();
      if (x.requires_grad()) {
        auto gx = x.grad();
        for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
      }
      if (bias.requires_grad()) {
        auto gb = bias.grad();
        for (std::size_t i = 0; i < g.size(); ++i) gb[i % n] += g[i];
      }
    });
  }
  return out;
}

Tensor linear(Tape* tape, const Tensor& x, const Tensor& w, const Tensor& bias) {
  require_rank(bias, 1, "linear");
  if (w.rank() == 2 && bias.dim(0) != w.dim(1))
    throw DimensionError("linear: " + shape_string(x.shape()) + " x " + shape_string(w.shape()) + " + " +
                         shape_string(bias.shape()));
  return add_bias(tape, linear(tape, x, w), bias);
}

Tensor linear(Tape* tape, const Tensor& x, const Tensor& w) {
  require_rank(w, 2, "linear");
  const std::size_t in = last_dim(x), outw = w.dim(1);
  if (w.dim(0) != in)
    throw DimensionError("linear: " + shape_string(x.shape()) + " x " + shape_string(w.shape()));
  const std::size_t rows = x.numel() / in;
  Shape shape = x.shape();
  shape.back() = outw;
  const bool record = tracking(tape, x, w);
  Tensor out = make_output(shape, record);
  kernels::gemm(Trans::no, Trans::no, rows, outw, in, x.data(), w.data(), out.data());
  if (record) {
    tape->record({x, w}, out, [x, w, out, rows, in, outw]() mutable {
      auto dy = out.grad_view();
      if (x.requires_grad()) kernels::gemm(Trans::no, Trans::yes, rows, in, outw, dy, w.data(), x.grad(), true);
      if (w.requires_grad()) kernels::gemm(Trans::yes, Trans::no, in, outw, rows, x.data(), dy, w.grad(), true);
    });
  }
  return out;
}

Tensor reshape(Tape* tape, const Tensor& x, Shape shape) {
  if (shape_numel(shape) != x.numel())
    throw DimensionError("reshape: " + shape_string(x.shape()) + " to " + shape_string(shape));
  const bool record = tracking(tape, x);
  Tensor out(std::move(shape), std::vector<Real>(x.data().begin(), x.data().end()), record);
  if (record) {
    tape->record({x}, out, [x, out]() mutable {
      auto g = out.grad_view();
      auto gx = x.grad();
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
    });
  }
  return out;
}

Tensor gather_rows(Tape* tape, const Tensor& table, std::span<const std::int32_t> ids) {
  require_rank(table, 2, "gather_rows");
  const std::size_t rows = table.dim(0), width = table.dim(1);
  if (ids.empty()) throw DimensionError("gather_rows: no ids");
  for (auto id : ids)
    if (id < 0 || static_cast<std::size_t>(id) >= rows)
      throw InputError("token id " + std::to_string(id) + " out of range [0, " + std::to_string(rows) + ")");
  const bool record = tracking(tape, table);
  Tensor out = make_output({ids.size(), width}, record);
  auto o = out.data();
  auto src = table.data();
  for (std::size_t i = 0; i < ids.size(); ++i)
    std::copy_n(src.begin() + static_cast<std::ptrdiff_t>(static_cast<std::size_t>(ids[i]) * width), width,
                o.begin() + static_cast<std::ptrdiff_t>(i * width));
  if (record) {
    std::vector<std::int32_t> saved(ids.begin(), ids.end());
    tape->record({table}, out, [table, out, saved = std::move(saved), width]() mutable {
      auto g = out.grad_view();
      auto gt = table.grad();
      for (std::size_t i = 0; i < saved.size(); ++i)
        for (std::size_t j = 0; j < width; ++j) gt[static_cast<std::size_t>(saved[i]) * width + j] += g[i * width + j];
    });
  }
  return out;
}

Tensor add_position_rows(Tape* tape, const Tensor& x, const Tensor& table) {
  require_rank(x, 3, "add_position_rows");
  require_rank(table, 2, "add_position_rows");
  const std::size_t B = x.dim(0), T = x.dim(1), H = x.dim(2);
  if (table.dim(1) != H || table.dim(0) < T)
    throw DimensionError("add_position_rows: table " + shape_string(table.shape()) + " vs " + shape_string(x.shape()));
  const bool record = tracking(tape, x, table);
  Tensor out = make_output(x.shape(), record);
  auto o = out.data();
  auto in = x.data();
  auto tb = table.data();
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t t = 0; t < T; ++t)
      for (std::size_t h = 0; h < H; ++h) o[(b * T + t) * H + h] = in[(b * T + t) * H + h] + tb[t * H + h];
  if (record) {
    tape->record({x, table}, out, [x, table, out, B, T, H]() mutable {
      auto g = out.grad_view();
      if (x.requires_grad()) {
        auto gx = x.grad();
        for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
      }
      if (table.requires_grad()) {
        auto gt = table.grad();
        for (std::size_t b = 0; b < B; ++b)
          for (std::size_t t = 0; t < T; ++t)
            for (std::size_t h = 0; h < H; ++h) gt[t * H + h] += g[(b * T + t) * H + h];
      }
    });
  }
  return out;
}

Tensor add_table_row(Tape* tape, const Tensor& x, const Tensor& table, std::size_t row) {
  require_rank(table, 2, "add_table_row");
  const std::size_t H = last_dim(x);
  if (table.dim(1) != H || row >= table.dim(0))
    throw DimensionError("add_table_row: table " + shape_string(table.shape()) + " row " + std::to_string(row) +
                         " vs " + shape_string(x.shape()));
  const bool record = tracking(tape, x, table);
  Tensor out = make_output(x.shape(), record);
  auto o = out.data();
  auto in = x.data();
  auto tb = table.data().subspan(row * H, H);
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = in[i] + tb[i % H];
  if (record) {
    tape->record({x, table}, out, [x, table, out, row, H]() mutable {
      auto g = out.grad_view();
      if (x.requires_grad()) {
        auto gx = x.grad();
        for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
      }
      if (table.requires_grad()) {
        auto gt = table.grad();
        for (std::size_t i = 0; i < g.size(); ++i) gt[row * H + i % H] += g[i];
      }
    });
  }
  return out;
}

Tensor softmax(Tape* tape, const Tensor& x, std::size_t axis) {
  if (axis >= x.rank()) throw DimensionError("softmax: axis out of range for " + shape_string(x.shape()));
  std::size_t outer = 1, inner = 1;
  const std::size_t n = x.dim(axis);
  for (std::size_t i = 0; i < axis; ++i) outer *= x.dim(i);
  for (std::size_t i = axis + 1; i < x.rank(); ++i) inner *= x.dim(i);
  const bool record = tracking(tape, x);
  Tensor out = make_output(x.shape(), record);
  auto o = out.data();
  auto in = x.data();
  for (std::size_t a = 0; a < outer; ++a)
    for (std::size_t c = 0; c < inner; ++c) {
      const std::size_t base = a * n * inner + c;
      Real mx = in[base];
      for (std::size_t j = 1; j < n; ++j) mx = std::max(mx, in[base + j * inner]);
      Real total = 0;
      for (std::size_t j = 0; j < n; ++j) {
        const Real e = std::exp(in[base + j * inner] - mx);
        o[base + j * inner] = e;
        total += e;
      }
      for (std::size_t j = 0; j < n; ++j) o[base + j * inner] /= total;
    }
  if (record) {
    tape->record({x}, out, [x, out, outer, inner, n]() mutable {
      auto g = out.grad_view();
      auto y = std::as_const(out).data();
      auto gx = x.grad();
      for (std::size_t a = 0; a < outer; ++a)
        for (std::size_t c = 0; c < inner; ++c) {
          const std::size_t base = a * n * inner + c;
          Real dot = 0;
          for (std::size_t j = 0; j < n; ++j) dot += g[base + j * inner] * y[base + j * inner];
          for (std::size_t j = 0; j < n; ++j) gx[base + j * inner] += y[base + j * inner] * (g[base + j * inner] - dot);
        }
    });
  }
  return out;
}

Tensor masked_softmax(Tape* tape, const Tensor& scores, const Mask& key_mask, std::size_t heads) {
  require_rank(scores, 3, "masked_softmax");
  const std::size_t N = scores.dim(0), Tq = scores.dim(1), Tk = scores.dim(2);
  if (heads == 0 || key_mask.batch * heads != N || key_mask.length != Tk)
    throw DimensionError("masked_softmax: mask does not match scores " + shape_string(scores.shape()));
  const bool record = tracking(tape, scores);
  Tensor out = make_output(scores.shape(), record);
  auto o = out.data();
  auto in = scores.data();
  for (std::size_t q = 0; q < N; ++q) {
    const std::size_t b = q / heads;
    for (std::size_t i = 0; i < Tq; ++i) {
      const std::size_t base = (q * Tq + i) * Tk;
      Real mx = -std::numeric_limits<Real>::infinity();
      for (std::size_t j = 0; j < Tk; ++j)
        if (key_mask.at(b, j)) mx = std::max(mx, in[base + j]);
      Real total = 0;
      for (std::size_t j = 0; j < Tk; ++j) {
        const Real e = key_mask.at(b, j) ? std::exp(in[base + j] - mx) : Real(0);
        o[base + j] = e;
        total += e;
      }
      if (total > 0)
        for (std::size_t j = 0; j < Tk; ++j) o[base + j] /= total;
    }
  }
  if (record) {
    tape->record({scores}, out, [scores, out, N, Tq, Tk]() mutable {
      auto g = out.grad_view();
      auto y = std::as_const(out).data();
      auto gx = scores.grad();
      for (std::size_t r = 0; r < N * Tq; ++r) {
        const std::size_t base = r * Tk;
        Real dot = 0;
        for (std::size_t j = 0; j < Tk; ++j) dot += g[base + j] * y[base + j];
        for (std::size_t j = 0; j < Tk; ++j) gx[base + j] += y[base + j] * (g[base + j] - dot);
      }
    });
  }
  return out;
}

Tensor layer_norm(Tape* tape, const Tensor& x, const Tensor& gamma, const Tensor& beta, Real eps) {
  require_rank(gamma, 1, "layer_norm");
  require_rank(beta, 1, "layer_norm");
  const std::size_t H = last_dim(x);
  if (gamma.dim(0) != H || beta.dim(0) != H)
    throw DimensionError("layer_norm: gamma/beta do not match " + shape_string(x.shape()));
  const std::size_t rows = x.numel() / H;
  const bool record = tracking(tape, x, gamma, beta);
  Tensor out = make_output(x.shape(), record);
  auto xhat = std::make_shared<std::vector<Real>>(x.numel());
  auto inv_std = std::make_shared<std::vector<Real>>(rows);
  kernels::layer_norm(rows, H, x.data(), gamma.data(), beta.data(), eps, out.data(), *xhat, *inv_std);
  if (record) {
    tape->record({x, gamma, beta}, out, [x, gamma, beta, out, xhat, inv_std, rows, H]() mutable {
      auto g = out.grad_view();
      auto gm = gamma.data();
      const auto& xh = *xhat;
      if (gamma.requires_grad()) {
        auto gg = gamma.grad();
        for (std::size_t r = 0; r < rows; ++r)
          for (std::size_t j = 0; j < H; ++j) gg[j] += g[r * H + j] * xh[r * H + j];
      }
      if (beta.requires_grad()) {
        auto gb = beta.grad();
        for (std::size_t r = 0; r < rows; ++r)
          for (std::size_t j = 0; j < H; ++j) gb[j] += g[r * H + j];
      }
      if (x.requires_grad()) {
        auto gx = x.grad();
        const Real inv_h = Real(1) / static_cast<Real>(H);
        for (std::size_t r = 0; r < rows; ++r) {
          Real sum_d = 0, sum_dx = 0;
          for (std::size_t j = 0; j < H; ++j) {
            const Real d = g[r * H + j] * gm[j];
            sum_d += d;
            sum_dx += d * xh[r * H + j];
          }
          const Real inv = (*inv_std)[r];
          for (std::size_t j = 0; j < H; ++j) {
            const Real d = g[r * H + j] * gm[j];
            gx[r * H + j] += inv * inv_h * (static_cast<Real>(H) * d - sum_d - xh[r * H + j] * sum_dx);
          }
        }
      }
    });
  }
  return out;
}

Tensor activation(Tape* tape, const Tensor& x, Activation kind) {
  const bool record = tracking(tape, x);
  Tensor out = make_output(x.shape(), record);
  auto o = out.data();
  auto in = x.data();
  constexpr Real kC = static_cast<Real>(0.7978845608028654);  // sqrt(2/pi)
  constexpr Real kCubic = static_cast<Real>(0.044715);
  if (kind == Activation::tanh) {
    for (std::size_t i = 0; i < o.size(); ++i) o[i] = std::tanh(in[i]);
  } else {
    for (std::size_t i = 0; i < o.size(); ++i) {
      const Real v = in[i];
      o[i] = Real(0.5) * v * (Real(1) + std::tanh(kC * (v + kCubic * v * v * v)));
    }
  }
  if (record) {
    tape->record({x}, out, [x, out, kind, kC, kCubic]() mutable {
      auto g = out.grad_view();
      auto y = std::as_const(out).data();
      auto in = x.data();
      auto gx = x.grad();
      if (kind == Activation::tanh) {
        for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * (Real(1) - y[i] * y[i]);
      } else {
        for (std::size_t i = 0; i < g.size(); ++i) {
          const Real v = in[i];
          const Real t = std::tanh(kC * (v + kCubic * v * v * v));
          const Real dt = (Real(1) - t * t) * kC * (Real(1) + Real(3) * kCubic * v * v);
          gx[i] += g[i] * (Real(0.5) * (Real(1) + t) + Real(0.5) * v * dt);
        }
      }
    });
  }
  return out;
}

Tensor dropout(Tape* tape, const Tensor& x, Real rate, std::mt19937_64& rng) {
  if (rate <= 0) return x;
  if (rate >= 1) throw ConfigError("dropout rate must be < 1");
  const bool record = tracking(tape, x);
  Tensor out = make_output(x.shape(), record);
  auto keep = std::make_shared<std::vector<Real>>(x.numel());
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  const Real factor = Real(1) / (Real(1) - rate);
  auto o = out.data();
  auto in = x.data();
  for (std::size_t i = 0; i < o.size(); ++i) {
    (*keep)[i] = uniform(rng) >= static_cast<double>(rate) ? factor : Real(0);
    o[i] = in[i] * (*keep)[i];
  }
  if (record) {
    tape->record({x}, out, [x, out, keep]() mutable {
      auto g = out.grad_view();
      auto gx = x.grad();
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * (*keep)[i];
    });
  }
  return out;
}

Tensor conv1d(Tape* tape, const Tensor& x, const Tensor& kernel, const Tensor& bias) {
  require_rank(x, 3, "conv1d");
  require_rank(kernel, 3, "conv1d");
  require_rank(bias, 1, "conv1d");
  const std::size_t B = x.dim(0), T = x.dim(1), cin = x.dim(2);
  const std::size_t width = kernel.dim(0), cout = kernel.dim(2);
  if (width % 2 == 0) throw ConfigError("conv1d: kernel width must be odd, got " + std::to_string(width));
  if (kernel.dim(1) != cin || bias.dim(0) != cout)
    throw DimensionError("conv1d: kernel " + shape_string(kernel.shape()) + " does not fit input " +
                         shape_string(x.shape()));
  const std::size_t rows = B * T, cols_w = width * cin;
  auto cols = std::make_shared<std::vector<Real>>(rows * cols_w);
  kernels::im2col(B, T, cin, width, x.data(), *cols);
  const bool record = tracking(tape, x, kernel, bias);
  Tensor out = make_output({B, T, cout}, record);
  kernels::gemm(Trans::no, Trans::no, rows, cout, cols_w, *cols, kernel.data(), out.data());
  auto o = out.data();
  auto bv = bias.data();
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cout; ++c) o[r * cout + c] += bv[c];
  if (record) {
    tape->record({x, kernel, bias}, out, [x, kernel, bias, out, cols, B, T, cin, width, cout, rows, cols_w]() mutable {
      auto dy = out.grad_view();
      if (kernel.requires_grad())
        kernels::gemm(Trans::yes, Trans::no, cols_w, cout, rows, *cols, dy, kernel.grad(), true);
      if (bias.requires_grad()) {
        auto gb = bias.grad();
        for (std::size_t r = 0; r < rows; ++r)
          for (std::size_t c = 0; c < cout; ++c) gb[c] += dy[r * cout + c];
      }
      if (x.requires_grad()) {
        std::vector<Real> dcols(rows * cols_w);
        kernels::gemm(Trans::no, Trans::yes, rows, cols_w, cout, dy, kernel.data(), dcols);
        kernels::col2im(B, T, cin, width, dcols, x.grad());
      }
    });
  }
  return out;
}

Pooled max_pool1d(Tape* tape, const Tensor& x, std::size_t window, std::size_t stride, const Mask& mask) {
  require_mask(x, mask, "max_pool1d");
  if (window == 0 || stride == 0) throw ConfigError("max_pool1d: window and stride must be >= 1");
  const std::size_t B = x.dim(0), T = x.dim(1), C = x.dim(2);
  const std::size_t L = T <= window ? 1 : (T - window + stride - 1) / stride + 1;
  const bool record = tracking(tape, x);
  Pooled result{make_output({B, L, C}, record), Mask(B, L, 0)};
  auto argmax = std::make_shared<std::vector<std::ptrdiff_t>>(B * L * C, -1);
  auto o = result.values.data();
  auto in = x.data();
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t j = 0; j < L; ++j) {
      const std::size_t start = j * stride, end = std::min(start + window, T);
      bool any = false;
      for (std::size_t t = start; t < end; ++t) any = any || mask.at(b, t);
      result.mask.valid[b * L + j] = any ? 1 : 0;
      for (std::size_t c = 0; c < C; ++c) {
        const std::size_t oi = (b * L + j) * C + c;
        if (!any) {
          o[oi] = 0;
          continue;
        }
        std::ptrdiff_t best = -1;
        for (std::size_t t = start; t < end; ++t) {
          if (!mask.at(b, t)) continue;
          const std::size_t ii = (b * T + t) * C + c;
          if (best < 0 || in[ii] > in[static_cast<std::size_t>(best)]) best = static_cast<std::ptrdiff_t>(ii);
        }
        o[oi] = in[static_cast<std::size_t>(best)];
        (*argmax)[oi] = best;
      }
    }
  if (record) {
    Tensor out = result.values;
    tape->record({x}, out, [x, out, argmax]() mutable {
      auto g = out.grad_view();
      auto gx = x.grad();
      for (std::size_t i = 0; i < g.size(); ++i)
        if ((*argmax)[i] >= 0) gx[static_cast<std::size_t>((*argmax)[i])] += g[i];
    });
  }
  return result;
}

Tensor masked_mean(Tape* tape, const Tensor& x, const Mask& mask) {
  require_mask(x, mask, "masked_mean");
  const std::size_t B = x.dim(0), T = x.dim(1), H = x.dim(2);
  std::vector<Real> inv_count(B);
  for (std::size_t b = 0; b < B; ++b) {
    const std::size_t n = mask.count(b);
    if (n == 0) throw DegenerateInputError("masked_mean: row " + std::to_string(b) + " has no valid positions");
    inv_count[b] = Real(1) / static_cast<Real>(n);
  }
  const bool record = tracking(tape, x);
  Tensor out = make_output({B, H}, record);
  auto o = out.data();
  auto in = x.data();
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t t = 0; t < T; ++t) {
      if (!mask.at(b, t)) continue;
      for (std::size_t h = 0; h < H; ++h) o[b * H + h] += in[(b * T + t) * H + h];
    }
    for (std::size_t h = 0; h < H; ++h) o[b * H + h] *= inv_count[b];
  }
  if (record) {
    tape->record({x}, out, [x, out, mask, inv_count = std::move(inv_count), B, T, H]() mutable {
      auto g = out.grad_view();
      auto gx = x.grad();
      for (std::size_t b = 0; b < B; ++b)
        for (std::size_t t = 0; t < T; ++t) {
          if (!mask.at(b, t)) continue;
          for (std::size_t h = 0; h < H; ++h) gx[(b * T + t) * H + h] += g[b * H + h] * inv_count[b];
        }
    });
  }
  return out;
}

Tensor masked_max(Tape* tape, const Tensor& x, const Mask& mask) {
  require_mask(x, mask, "masked_max");
  const std::size_t B = x.dim(0), T = x.dim(1), H = x.dim(2);
  for (std::size_t b = 0; b < B; ++b)
    if (mask.count(b) == 0)
      throw DegenerateInputError("masked_max: row " + std::to_string(b) + " has no valid positions");
  const bool record = tracking(tape, x);
  Tensor out = make_output({B, H}, record);
  auto argmax = std::make_shared<std::vector<std::size_t>>(B * H);
  auto o = out.data();
  auto in = x.data();
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t h = 0; h < H; ++h) {
      bool found = false;
      std::size_t best = 0;
      for (std::size_t t = 0; t < T; ++t) {
        if (!mask.at(b, t)) continue;
        const std::size_t ii = (b * T + t) * H + h;
        if (!found || in[ii] > in[best]) {
          best = ii;
          found = true;
        }
      }
      o[b * H + h] = in[best];
      (*argmax)[b * H + h] = best;
    }
  if (record) {
    tape->record({x}, out, [x, out, argmax]() mutable {
      auto g = out.grad_view();
      auto gx = x.grad();
      for (std::size_t i = 0; i < g.size(); ++i) gx[(*argmax)[i]] += g[i];
    });
  }
  return out;
}

Tensor apply_mask(Tape* tape, const Tensor& x, const Mask& mask) {
  require_mask(x, mask, "apply_mask");
  const std::size_t B = x.dim(0), T = x.dim(1), H = x.dim(2);
  const bool record = tracking(tape, x);
  Tensor out = make_output(x.shape(), record);
  auto o = out.data();
  auto in = x.data();
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t t = 0; t < T; ++t) {
      if (!mask.at(b, t)) continue;
      for (std::size_t h = 0; h < H; ++h) o[(b * T + t) * H + h] = in[(b * T + t) * H + h];
    }
  if (record) {
    tape->record({x}, out, [x, out, mask, B, T, H]() mutable {
      auto g = out.grad_view();
      auto gx = x.grad();
      for (std::size_t b = 0; b < B; ++b)
        for (std::size_t t = 0; t < T; ++t) {
          if (!mask.at(b, t)) continue;
          for (std::size_t h = 0; h < H; ++h) gx[(b * T + t) * H + h] += g[(b * T + t) * H + h];
        }
    });
  }
  return out;
}

Tensor select_position(Tape* tape, const Tensor& x, std::size_t position) {
  require_rank(x, 3, "select_position");
  const std::size_t B = x.dim(0), T = x.dim(1), H = x.dim(2);
  if (position >= T) throw DimensionError("select_position: position out of range");
  const bool record = tracking(tape, x);
  Tensor out = make_output({B, H}, record);
  auto o = out.data();
  auto in = x.data();
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t h = 0; h < H; ++h) o[b * H + h] = in[(b * T + position) * H + h];
  if (record) {
    tape->record({x}, out, [x, out, position, B, T, H]() mutable {
      auto g = out.grad_view();
      auto gx = x.grad();
      for (std::size_t b = 0; b < B; ++b)
        for (std::size_t h = 0; h < H; ++h) gx[(b * T + position) * H + h] += g[b * H + h];
    });
  }
  return out;
}

Tensor split_heads(Tape* tape, const Tensor& x, std::size_t heads) {
  require_rank(x, 3, "split_heads");
  const std::size_t B = x.dim(0), T = x.dim(1), H = x.dim(2);
  if (heads == 0 || H % heads != 0) throw DimensionError("split_heads: hidden size not divisible by heads");
  const std::size_t d = H / heads;
  const bool record = tracking(tape, x);
  Tensor out = make_output({B * heads, T, d}, record);
  auto o = out.data();
  auto in = x.data();
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t t = 0; t < T; ++t)
      for (std::size_t a = 0; a < heads; ++a)
        for (std::size_t i = 0; i < d; ++i) o[((b * heads + a) * T + t) * d + i] = in[(b * T + t) * H + a * d + i];
  if (record) {
    tape->record({x}, out, [x, out, B, T, H, heads, d]() mutable {
      auto g = out.grad_view();
      auto gx = x.grad();
      for (std::size_t b = 0; b < B; ++b)
        for (std::size_t t = 0; t < T; ++t)
          for (std::size_t a = 0; a < heads; ++a)
            for (std::size_t i = 0; i < d; ++i) gx[(b * T + t) * H + a * d + i] += g[((b * heads + a) * T + t) * d + i];
    });
  }
  return out;
}

Tensor merge_heads(Tape* tape, const Tensor& x, std::size_t heads) {
  require_rank(x, 3, "merge_heads");
  if (heads == 0 || x.dim(0) % heads != 0) throw DimensionError("merge_heads: batch not divisible by heads");
  const std::size_t B = x.dim(0) / heads, T = x.dim(1), d = x.dim(2), H = heads * d;
  const bool record = tracking(tape, x);
  Tensor out = make_output({B, T, H}, record);
  auto o = out.data();
  auto in = x.data();
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t t = 0; t < T; ++t)
      for (std::size_t a = 0; a < heads; ++a)
        for (std::size_t i = 0; i < d; ++i) o[(b * T + t) * H + a * d + i] = in[((b * heads + a) * T + t) * d + i];
  if (record) {
    tape->record({x}, out, [x, out, B, T, H, heads, d]() mutable {
      auto g = out.grad_view();
      auto gx = x.grad();
      for (std::size_t b = 0; b < B; ++b)
        for (std::size_t t = 0; t < T; ++t)
          for (std::size_t a = 0; a < heads; ++a)
            for (std::size_t i = 0; i < d; ++i) gx[((b * heads + a) * T + t) * d + i] += g[(b * T + t) * H + a * d + i];
    });
  }
  return out;
}

Tensor concat_last(Tape* tape, const std::vector<Tensor>& parts) {
  if (parts.empty()) throw DimensionError("concat_last: nothing to concatenate");
  const std::size_t B = parts.front().dim(0);
  std::size_t total = 0;
  bool record = false;
  for (const auto& p : parts) {
    require_rank(p, 2, "concat_last");
    if (p.dim(0) != B) throw DimensionError("concat_last: batch mismatch");
    total += p.dim(1);
    record = record || tracking(tape, p);
  }
  Tensor out = make_output({B, total}, record);
  auto o = out.data();
  std::size_t offset = 0;
  for (const auto& p : parts) {
    const std::size_t w = p.dim(1);
    auto in = p.data();
    for (std::size_t b = 0; b < B; ++b)
      for (std::size_t j = 0; j < w; ++j) o[b * total + offset + j] = in[b * w + j];
    offset += w;
  }
  if (record) {
    tape->record(parts, out, [parts, out, B, total]() mutable {
      auto g = out.grad_view();
      std::size_t offset = 0;
      for (auto& p : parts) {
        const std::size_t w = p.dim(1);
        if (p.requires_grad()) {
          auto gp = p.grad();
          for (std::size_t b = 0; b < B; ++b)
            for (std::size_t j = 0; j < w; ++j) gp[b * w + j] += g[b * total + offset + j];
        }
        offset += w;
      }
    });
  }
  return out;
}

Tensor cosine_rows(Tape* tape, const Tensor& u, const Tensor& v) {
  require_rank(u, 2, "cosine_rows");
  require_same_shape(u, v, "cosine_rows");
  const std::size_t B = u.dim(0), H = u.dim(1);
  auto norms = std::make_shared<std::vector<Real>>(2 * B);
  const bool record = tracking(tape, u, v);
  Tensor out = make_output({B}, record);
  auto o = out.data();
  auto a = u.data(), c = v.data();
  for (std::size_t b = 0; b < B; ++b) {
    Real dot = 0, nu = 0, nv = 0;
    for (std::size_t h = 0; h < H; ++h) {
      dot += a[b * H + h] * c[b * H + h];
      nu += a[b * H + h] * a[b * H + h];
      nv += c[b * H + h] * c[b * H + h];
    }
    nu = std::sqrt(nu);
    nv = std::sqrt(nv);
    if (nu == 0 || nv == 0)  // NaN passes through so a diverged loss is reported as such
      throw DegenerateInputError("cosine similarity of a zero-norm vector (row " + std::to_string(b) + ")");
    (*norms)[2 * b] = nu;
    (*norms)[2 * b + 1] = nv;
    o[b] = std::clamp(dot / (nu * nv), Real(-1), Real(1));
  }
  if (record) {
    tape->record({u, v}, out, [u, v, out, norms, B, H]() mutable {
      auto g = out.grad_view();
      auto y = std::as_const(out).data();
      auto a = u.data(), c = v.data();
      for (std::size_t b = 0; b < B; ++b) {
        const Real nu = (*norms)[2 * b], nv = (*norms)[2 * b + 1];
        const Real inv = Real(1) / (nu * nv);
        if (u.requires_grad()) {
          auto gu = u.grad();
          for (std::size_t h = 0; h < H; ++h)
            gu[b * H + h] += g[b] * (c[b * H + h] * inv - y[b] * a[b * H + h] / (nu * nu));
        }
        if (v.requires_grad()) {
          auto gv = v.grad();
          for (std::size_t h = 0; h < H; ++h)
            gv[b * H + h] += g[b] * (a[b * H + h] * inv - y[b] * c[b * H + h] / (nv * nv));
        }
      }
    });
  }
  return out;
}

Tensor mse(Tape* tape, const Tensor& pred, std::span<const Real> target) {
  if (pred.numel() != target.size())
    throw DimensionError("mse: " + std::to_string(target.size()) + " targets for " + shape_string(pred.shape()));
  const std::size_t n = target.size();
  const bool record = tracking(tape, pred);
  Tensor out = make_output({1}, record);
  auto p = pred.data();
  Real total = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const Real d = p[i] - target[i];
    total += d * d;
  }
  out.data()[0] = total / static_cast<Real>(n);
  if (record) {
    std::vector<Real> saved(target.begin(), target.end());
    tape->record({pred}, out, [pred, out, saved = std::move(saved), n]() mutable {
      const Real g = out.grad_view()[0];
      auto gp = pred.grad();
      auto p = pred.data();
      for (std::size_t i = 0; i < n; ++i) gp[i] += g * Real(2) * (p[i] - saved[i]) / static_cast<Real>(n);
    });
  }
  return out;
}

Tensor cross_entropy(Tape* tape, const Tensor& logits, std::span<const std::int32_t> labels) {
  require_rank(logits, 2, "cross_entropy");
  const std::size_t B = logits.dim(0), C = logits.dim(1);
  if (labels.size() != B) throw DimensionError("cross_entropy: label count does not match batch");
  for (auto l : labels)
    if (l < 0 || static_cast<std::size_t>(l) >= C)
      throw InputError("class label " + std::to_string(l) + " out of range [0, " + std::to_string(C) + ")");
  const bool record = tracking(tape, logits);
  Tensor out = make_output({1}, record);
  auto probs = std::make_shared<std::vector<Real>>(B * C);
  auto z = logits.data();
  Real total = 0;
  for (std::size_t b = 0; b < B; ++b) {
    Real mx = z[b * C];
    for (std::size_t c = 1; c < C; ++c) mx = std::max(mx, z[b * C + c]);
    Real s = 0;
    for (std::size_t c = 0; c < C; ++c) {
      const Real e = std::exp(z[b * C + c] - mx);
      (*probs)[b * C + c] = e;
      s += e;
    }
    for (std::size_t c = 0; c < C; ++c) (*probs)[b * C + c] /= s;
    const Real lse = mx + std::log(s);
    total += lse - z[b * C + static_cast<std::size_t>(labels[b])];
  }
  out.data()[0] = total / static_cast<Real>(B);
  if (record) {
    std::vector<std::int32_t> saved(labels.begin(), labels.end());
    tape->record({logits}, out, [logits, out, probs, saved = std::move(saved), B, C]() mutable {
      const Real g = out.grad_view()[0] / static_cast<Real>(B);
      auto gz = logits.grad();
      for (std::size_t b = 0; b < B; ++b)
        for (std::size_t c = 0; c < C; ++c) {
          const Real onehot = static_cast<std::size_t>(saved[b]) == c ? Real(1) : Real(0);
          gz[b * C + c] += g * ((*probs)[b * C + c] - onehot);
        }
    });
  }
  return out;
}

Tensor sum(Tape* tape, const Tensor& x) {
  const bool record = tracking(tape, x);
  Tensor out = make_output({1}, record);
  Real total = 0;
  for (auto v : x.data()) total += v;
  out.data()[0] = total;
  if (record) {
    tape->record({x}, out, [x, out]() mutable {
      const Real g = out.grad_view()[0];
      for (auto& gx : x.grad()) gx += g;
    });
  }
  return out;
}

Tensor mean(Tape* tape, const Tensor& x) {
  return scale(tape, sum(tape, x), Real(1) / static_cast<Real>(x.numel()));
}

}  // namespace ops

SENTEMB_NAMESPACE_END
