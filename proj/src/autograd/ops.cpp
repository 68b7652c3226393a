// Copyright 2026 The Scanpath Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "scanpath/autograd/ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "scanpath/core/error.hpp"
#include "scanpath/simd/kernels.hpp"

namespace scanpath::ad {
namespace {

void require(bool ok, const char* op, const std::string& detail) {
  if (!ok) throw ShapeError(std::string(op) + ": " + detail);
}

std::string dims(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

void require_same(Var a, Var b, const char* op) {
  require(a.value().same_shape(b.value()), op,
          "shape mismatch " + dims(a.value()) + " vs " + dims(b.value()));
}

void accumulate(Tape& t, std::size_t id, const Matrix& g) {
  if (!t.needs_grad(id)) return;
  Matrix& dst = t.grad_for(id);
  simd::active().axpy(1.0, g.data(), dst.data(), g.size());
}

// Unary elementwise op: y = f(x), dy/dx computed from (x, y).
template <typename F, typename D>
Var unary(Var a, F f, D df) {
  const Matrix& x = a.value();
  Matrix y(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = f(x[i]);
  const std::size_t pa = a.id();
  return a.tape().record(std::move(y), {pa}, [pa, df](Tape& t, std::size_t self) {
    const Matrix& x = t.value(pa);
    const Matrix& y = t.value(self);
    const Matrix& g = t.grad(self);
    Matrix& ga = t.grad_for(pa);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * df(x[i], y[i]);
  });
}

}  // namespace

Var matmul(Var a, Var b) {
  const Matrix& av = a.value();
  const Matrix& bv = b.value();
  require(av.cols() == bv.rows(), "matmul", dims(av) + " * " + dims(bv));
  Matrix c(av.rows(), bv.cols());
  const auto& k = simd::active();
  k.gemm_nn(av.data(), bv.data(), c.data(), av.rows(), av.cols(), bv.cols(), false);
  const std::size_t pa = a.id(), pb = b.id();
  return a.tape().record(std::move(c), {pa, pb}, [pa, pb](Tape& t, std::size_t self) {
    const auto& k = simd::active();
    const Matrix& g = t.grad(self);
    const Matrix& av = t.value(pa);
    const Matrix& bv = t.value(pb);
    if (t.needs_grad(pa)) {
      // dA = G * B^T
      k.gemm_nt(g.data(), bv.data(), t.grad_for(pa).data(), g.rows(), g.cols(), bv.rows(),
                true);
    }
    if (t.needs_grad(pb)) {
      // dB = A^T * G
      k.gemm_tn(av.data(), g.data(), t.grad_for(pb).data(), av.cols(), av.rows(), g.cols(),
                true);
    }
  });
}

Var matmul_nt(Var a, Var b) {
  const Matrix& av = a.value();
  const Matrix& bv = b.value();
  require(av.cols() == bv.cols(), "matmul_nt", dims(av) + " * " + dims(bv) + "^T");
  Matrix c(av.rows(), bv.rows());
  simd::active().gemm_nt(av.data(), bv.data(), c.data(), av.rows(), av.cols(), bv.rows(),
                         false);
  const std::size_t pa = a.id(), pb = b.id();
  return a.tape().record(std::move(c), {pa, pb}, [pa, pb](Tape& t, std::size_t self) {
    const auto& k = simd::active();
    const Matrix& g = t.grad(self);  // m x n
    const Matrix& av = t.value(pa);  // m x d
    const Matrix& bv = t.value(pb);  // n x d
    if (t.needs_grad(pa)) {
      // dA = G * B
      k.gemm_nn(g.data(), bv.data(), t.grad_for(pa).data(), g.rows(), g.cols(), bv.cols(),
                true);
    }
    if (t.needs_grad(pb)) {
      // dB = G^T * A
      k.gemm_tn(g.data(), av.data(), t.grad_for(pb).data(), g.cols(), g.rows(), av.cols(),
                true);
    }
  });
}

Var add(Var a, Var b) {
  require_same(a, b, "add");
  Matrix c(a.rows(), a.cols());
  simd::active().add(a.value().data(), b.value().data(), c.data(), c.size());
  const std::size_t pa = a.id(), pb = b.id();
  return a.tape().record(std::move(c), {pa, pb}, [pa, pb](Tape& t, std::size_t self) {
    accumulate(t, pa, t.grad(self));
    accumulate(t, pb, t.grad(self));
  });
}

Var sub(Var a, Var b) {
  require_same(a, b, "sub");
  Matrix c = a.value();
  simd::active().axpy(-1.0, b.value().data(), c.data(), c.size());
  const std::size_t pa = a.id(), pb = b.id();
  return a.tape().record(std::move(c), {pa, pb}, [pa, pb](Tape& t, std::size_t self) {
    const Matrix& g = t.grad(self);
    accumulate(t, pa, g);
    if (t.needs_grad(pb)) simd::active().axpy(-1.0, g.data(), t.grad_for(pb).data(), g.size());
  });
}

Var mul(Var a, Var b) {
  require_same(a, b, "mul");
  Matrix c(a.rows(), a.cols());
  simd::active().mul(a.value().data(), b.value().data(), c.data(), c.size());
  const std::size_t pa = a.id(), pb = b.id();
  return a.tape().record(std::move(c), {pa, pb}, [pa, pb](Tape& t, std::size_t self) {
    const Matrix& g = t.grad(self);
    if (t.needs_grad(pa)) {
      const Matrix& bv = t.value(pb);
      Matrix& ga = t.grad_for(pa);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bv[i];
    }
    if (t.needs_grad(pb)) {
      const Matrix& av = t.value(pa);
      Matrix& gb = t.grad_for(pb);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * av[i];
    }
  });
}

Var add_row(Var a, Var row) {
  require(row.rows() == 1 && row.cols() == a.cols(), "add_row",
          dims(a.value()) + " + " + dims(row.value()));
  Matrix c = a.value();
  const auto& k = simd::active();
  for (std::size_t r = 0; r < c.rows(); ++r)
    k.axpy(1.0, row.value().data(), c.data() + r * c.cols(), c.cols());
  const std::size_t pa = a.id(), pr = row.id();
  return a.tape().record(std::move(c), {pa, pr}, [pa, pr](Tape& t, std::size_t self) {
    const Matrix& g = t.grad(self);
    accumulate(t, pa, g);
    if (t.needs_grad(pr)) {
      Matrix& gr = t.grad_for(pr);
      const auto& k = simd::active();
      for (std::size_t r = 0; r < g.rows(); ++r) k.axpy(1.0, g.data() + r * g.cols(), gr.data(), g.cols());
    }
  });
}

Var mul_row(Var a, Var row) {
  require(row.rows() == 1 && row.cols() == a.cols(), "mul_row",
          dims(a.value()) + " * " + dims(row.value()));
  const Matrix& av = a.value();
  Matrix c(av.rows(), av.cols());
  const auto& k = simd::active();
  for (std::size_t r = 0; r < c.rows(); ++r)
    k.mul(av.data() + r * av.cols(), row.value().data(), c.data() + r * c.cols(), c.cols());
  const std::size_t pa = a.id(), pr = row.id();
  return a.tape().record(std::move(c), {pa, pr}, [pa, pr](Tape& t, std::size_t self) {
    const Matrix& g = t.grad(self);
    const Matrix& av = t.value(pa);
    const Matrix& rv = t.value(pr);
    const std::size_t cols = g.cols();
    if (t.needs_grad(pa)) {
      Matrix& ga = t.grad_for(pa);
      for (std::size_t r = 0; r < g.rows(); ++r)
        for (std::size_t j = 0; j < cols; ++j) ga(r, j) += g(r, j) * rv[j];
    }
    if (t.needs_grad(pr)) {
      Matrix& gr = t.grad_for(pr);
      for (std::size_t r = 0; r < g.rows(); ++r)
        for (std::size_t j = 0; j < cols; ++j) gr[j] += g(r, j) * av(r, j);
    }
  });
}

Var scale(Var a, double s) {
  Matrix c = a.value();
  for (double& v : c.values()) v *= s;
  const std::size_t pa = a.id();
  return a.tape().record(std::move(c), {pa}, [pa, s](Tape& t, std::size_t self) {
    const Matrix& g = t.grad(self);
    simd::active().axpy(s, g.data(), t.grad_for(pa).data(), g.size());
  });
}

Var add_scalar(Var a, double s) {
  Matrix c = a.value();
  for (double& v : c.values()) v += s;
  const std::size_t pa = a.id();
  return a.tape().record(std::move(c), {pa}, [pa](Tape& t, std::size_t self) {
    accumulate(t, pa, t.grad(self));
  });
}

Var mul_const(Var a, const Matrix& cm) {
  require(a.value().same_shape(cm), "mul_const", dims(a.value()) + " vs " + dims(cm));
  Matrix c(cm.rows(), cm.cols());
  simd::active().mul(a.value().data(), cm.data(), c.data(), c.size());
  const std::size_t pa = a.id();
  return a.tape().record(std::move(c), {pa}, [pa, cm](Tape& t, std::size_t self) {
    const Matrix& g = t.grad(self);
    Matrix& ga = t.grad_for(pa);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * cm[i];
  });
}

Var scale_rows(Var a, std::vector<double> s) {
  require(s.size() == a.rows(), "scale_rows", "factor count != rows");
  Matrix c = a.value();
  for (std::size_t r = 0; r < c.rows(); ++r)
    for (double& v : c.row(r)) v *= s[r];
  const std::size_t pa = a.id();
  return a.tape().record(std::move(c), {pa}, [pa, s = std::move(s)](Tape& t, std::size_t self) {
    const Matrix& g = t.grad(self);
    Matrix& ga = t.grad_for(pa);
    for (std::size_t r = 0; r < g.rows(); ++r)
      simd::active().axpy(s[r], g.data() + r * g.cols(), ga.data() + r * g.cols(), g.cols());
  });
}

Var sigmoid(Var a) {
  return unary(
      a,
      [](double x) {
        if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
        const double e = std::exp(x);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

Var tanh(Var a) {
  return unary(a, [](double x) { return std::tanh(x); },
               [](double, double y) { return 1.0 - y * y; });
}

Var relu(Var a) {
  return unary(a, [](double x) { return x > 0.0 ? x : 0.0; },
               [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Var log(Var a) {
  return unary(a, [](double x) { return std::log(x); },
               [](double x, double) { return 1.0 / x; });
}

Var square(Var a) {
  return unary(a, [](double x) { return x * x; }, [](double x, double) { return 2.0 * x; });
}

Var clamp(Var a, double lo, double hi) {
  return unary(a, [lo, hi](double x) { return std::clamp(x, lo, hi); },
               [lo, hi](double x, double) { return (x >= lo && x <= hi) ? 1.0 : 0.0; });
}

Var softmax_rows(Var a, const std::vector<bool>& allowed) {
  const Matrix& x = a.value();
  require(allowed.empty() || allowed.size() == x.cols(), "softmax_rows", "mask width");
  Matrix y(x.rows(), x.cols());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    double mx = -INFINITY;
    for (std::size_t c = 0; c < x.cols(); ++c)
      if (allowed.empty() || allowed[c]) mx = std::max(mx, x(r, c));
    if (!std::isfinite(mx)) continue;  // nothing allowed: row of zeros
    double z = 0.0;
    for (std::size_t c = 0; c < x.cols(); ++c) {
      if (!allowed.empty() && !allowed[c]) continue;
      y(r, c) = std::exp(x(r, c) - mx);
      z += y(r, c);
    }
    for (std::size_t c = 0; c < x.cols(); ++c) y(r, c) /= z;
  }
  const std::size_t pa = a.id();
  return a.tape().record(std::move(y), {pa}, [pa](Tape& t, std::size_t self) {
    const Matrix& y = t.value(self);
    const Matrix& g = t.grad(self);
    Matrix& ga = t.grad_for(pa);
    const auto& k = simd::active();
    for (std::size_t r = 0; r < y.rows(); ++r) {
      const double dotp = k.dot(g.data() + r * g.cols(), y.data() + r * y.cols(), y.cols());
      for (std::size_t c = 0; c < y.cols(); ++c) ga(r, c) += y(r, c) * (g(r, c) - dotp);
    }
  });
}

Var concat_cols(std::span<const Var> parts) {
  require(!parts.empty(), "concat_cols", "no inputs");
  const std::size_t rows = parts[0].rows();
  std::size_t cols = 0;
  std::vector<std::size_t> ids, widths;
  for (const Var& p : parts) {
    require(p.rows() == rows, "concat_cols", "row counts differ");
    cols += p.cols();
    ids.push_back(p.id());
    widths.push_back(p.cols());
  }
  Matrix y(rows, cols);
  std::size_t off = 0;
  for (const Var& p : parts) {
    const Matrix& v = p.value();
    for (std::size_t r = 0; r < rows; ++r)
      std::copy_n(v.data() + r * v.cols(), v.cols(), y.data() + r * cols + off);
    off += v.cols();
  }
  return parts[0].tape().record(std::move(y), ids, [ids, widths](Tape& t, std::size_t self) {
    const Matrix& g = t.grad(self);
    std::size_t off = 0;
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (t.needs_grad(ids[i])) {
        Matrix& gp = t.grad_for(ids[i]);
        for (std::size_t r = 0; r < g.rows(); ++r)
          simd::active().axpy(1.0, g.data() + r * g.cols() + off, gp.data() + r * widths[i],
                              widths[i]);
      }
      off += widths[i];
    }
  });
}

Var concat_rows(std::span<const Var> parts) {
  require(!parts.empty(), "concat_rows", "no inputs");
  const std::size_t cols = parts[0].cols();
  std::size_t rows = 0;
  std::vector<std::size_t> ids, heights;
  for (const Var& p : parts) {
    require(p.cols() == cols, "concat_rows", "column counts differ");
    rows += p.rows();
    ids.push_back(p.id());
    heights.push_back(p.rows());
  }
  Matrix y(rows, cols);
  std::size_t off = 0;
  for (const Var& p : parts) {
    std::copy_n(p.value().data(), p.value().size(), y.data() + off * cols);
    off += p.rows();
  }
  return parts[0].tape().record(std::move(y), ids, [ids, heights](Tape& t, std::size_t self) {
    const Matrix& g = t.grad(self);
    std::size_t off = 0;
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (t.needs_grad(ids[i])) {
        Matrix& gp = t.grad_for(ids[i]);
        simd::active().axpy(1.0, g.data() + off * g.cols(), gp.data(), gp.size());
      }
      off += heights[i];
    }
  });
}

Var slice_rows(Var a, std::size_t start, std::size_t count) {
  const Matrix& x = a.value();
  require(start + count <= x.rows(), "slice_rows", "range past end");
  Matrix y(count, x.cols());
  std::copy_n(x.data() + start * x.cols(), count * x.cols(), y.data());
  const std::size_t pa = a.id();
  return a.tape().record(std::move(y), {pa}, [pa, start](Tape& t, std::size_t self) {
    const Matrix& g = t.grad(self);
    Matrix& ga = t.grad_for(pa);
    simd::active().axpy(1.0, g.data(), ga.data() + start * ga.cols(), g.size());
  });
}

Var slice_cols(Var a, std::size_t start, std::size_t count) {
  const Matrix& x = a.value();
  require(start + count <= x.cols(), "slice_cols", "range past end");
  Matrix y(x.rows(), count);
  for (std::size_t r = 0; r < x.rows(); ++r)
    std::copy_n(x.data() + r * x.cols() + start, count, y.data() + r * count);
  const std::size_t pa = a.id();
  return a.tape().record(std::move(y), {pa}, [pa, start](Tape& t, std::size_t self) {
    const Matrix& g = t.grad(self);
    Matrix& ga = t.grad_for(pa);
    for (std::size_t r = 0; r < g.rows(); ++r)
      simd::active().axpy(1.0, g.data() + r * g.cols(), ga.data() + r * ga.cols() + start,
                          g.cols());
  });
}

Var gather_rows(Var a, std::vector<std::size_t> index) {
  const Matrix& x = a.value();
  Matrix y(index.size(), x.cols());
  for (std::size_t i = 0; i < index.size(); ++i) {
    require(index[i] < x.rows(), "gather_rows", "index out of range");
    std::copy_n(x.data() + index[i] * x.cols(), x.cols(), y.data() + i * x.cols());
  }
  const std::size_t pa = a.id();
  return a.tape().record(std::move(y), {pa},
                         [pa, index = std::move(index)](Tape& t, std::size_t self) {
                           const Matrix& g = t.grad(self);
                           Matrix& ga = t.grad_for(pa);
                           for (std::size_t i = 0; i < index.size(); ++i)
                             simd::active().axpy(1.0, g.data() + i * g.cols(),
                                                 ga.data() + index[i] * g.cols(), g.cols());
                         });
}

Var sum(Var a) {
  double s = 0.0;
  for (double v : a.value().values()) s += v;
  const std::size_t pa = a.id();
  return a.tape().record(Matrix(1, 1, s), {pa}, [pa](Tape& t, std::size_t self) {
    const double g = t.grad(self)(0, 0);
    for (double& v : t.grad_for(pa).values()) v += g;
  });
}

Var mean(Var a) {
  const double n = static_cast<double>(a.value().size());
  return scale(sum(a), 1.0 / n);
}

Var block_mean_rows(Var a, std::size_t block) {
  const Matrix& x = a.value();
  require(block > 0 && x.rows() % block == 0, "block_mean_rows", "rows not a multiple of block");
  const std::size_t n = x.rows() / block;
  Matrix y(n, x.cols());
  const double inv = 1.0 / static_cast<double>(block);
  for (std::size_t b = 0; b < n; ++b)
    for (std::size_t r = 0; r < block; ++r)
      simd::active().axpy(inv, x.data() + (b * block + r) * x.cols(), y.data() + b * x.cols(),
                          x.cols());
  const std::size_t pa = a.id();
  return a.tape().record(std::move(y), {pa}, [pa, block, inv](Tape& t, std::size_t self) {
    const Matrix& g = t.grad(self);
    Matrix& ga = t.grad_for(pa);
    for (std::size_t b = 0; b < g.rows(); ++b)
      for (std::size_t r = 0; r < block; ++r)
        simd::active().axpy(inv, g.data() + b * g.cols(), ga.data() + (b * block + r) * g.cols(),
                            g.cols());
  });
}

Var layer_norm(Var a, double eps) {
  const Matrix& x = a.value();
  const std::size_t rows = x.rows(), cols = x.cols();
  Matrix y(rows, cols);
  std::vector<double> inv_std(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    double mu = 0.0;
    for (std::size_t c = 0; c < cols; ++c) mu += x(r, c);
    mu /= static_cast<double>(cols);
    double var = 0.0;
    for (std::size_t c = 0; c < cols; ++c) var += (x(r, c) - mu) * (x(r, c) - mu);
    var /= static_cast<double>(cols);
    inv_std[r] = 1.0 / std::sqrt(var + eps);
    for (std::size_t c = 0; c < cols; ++c) y(r, c) = (x(r, c) - mu) * inv_std[r];
  }
  const std::size_t pa = a.id();
  return a.tape().record(std::move(y), {pa},
                         [pa, inv_std = std::move(inv_std)](Tape& t, std::size_t self) {
                           const Matrix& y = t.value(self);
                           const Matrix& g = t.grad(self);
                           Matrix& ga = t.grad_for(pa);
                           const double n = static_cast<double>(y.cols());
                           for (std::size_t r = 0; r < y.rows(); ++r) {
                             double gsum = 0.0, gy = 0.0;
                             for (std::size_t c = 0; c < y.cols(); ++c) {
                               gsum += g(r, c);
                               gy += g(r, c) * y(r, c);
                             }
                             for (std::size_t c = 0; c < y.cols(); ++c)
                               ga(r, c) += inv_std[r] * (g(r, c) - gsum / n - y(r, c) * gy / n);
                           }
                         });
}

BatchNormOutput batch_norm(Var a, const std::vector<double>& row_mask, double eps) {
  const Matrix& x = a.value();
  require(row_mask.size() == x.rows(), "batch_norm", "mask length != rows");
  const std::size_t cols = x.cols();
  std::size_t count = 0;
  for (double m : row_mask) count += m > 0.0 ? 1 : 0;
  BatchNormOutput out;
  out.batch_mean = Matrix(1, cols);
  out.batch_var = Matrix(1, cols);
  out.count = count;
  Matrix y(x.rows(), cols);
  std::vector<double> inv_std(cols, 0.0);
  if (count > 0) {
    for (std::size_t r = 0; r < x.rows(); ++r)
      if (row_mask[r] > 0.0)
        for (std::size_t c = 0; c < cols; ++c) out.batch_mean[c] += x(r, c);
    for (std::size_t c = 0; c < cols; ++c) out.batch_mean[c] /= static_cast<double>(count);
    for (std::size_t r = 0; r < x.rows(); ++r)
      if (row_mask[r] > 0.0)
        for (std::size_t c = 0; c < cols; ++c) {
          const double d = x(r, c) - out.batch_mean[c];
          out.batch_var[c] += d * d;
        }
    for (std::size_t c = 0; c < cols; ++c) {
      out.batch_var[c] /= static_cast<double>(count);
      inv_std[c] = 1.0 / std::sqrt(out.batch_var[c] + eps);
    }
    for (std::size_t r = 0; r < x.rows(); ++r)
      if (row_mask[r] > 0.0)
        for (std::size_t c = 0; c < cols; ++c)
          y(r, c) = (x(r, c) - out.batch_mean[c]) * inv_std[c];
  }
  const std::size_t pa = a.id();
  out.y = a.tape().record(
      std::move(y), {pa},
      [pa, row_mask, inv_std = std::move(inv_std), count](Tape& t, std::size_t self) {
        if (count == 0) return;
        const Matrix& y = t.value(self);
        const Matrix& g = t.grad(self);
        Matrix& ga = t.grad_for(pa);
        const std::size_t cols = y.cols();
        const double n = static_cast<double>(count);
        std::vector<double> gsum(cols, 0.0), gy(cols, 0.0);
        for (std::size_t r = 0; r < y.rows(); ++r) {
          if (row_mask[r] <= 0.0) continue;
          for (std::size_t c = 0; c < cols; ++c) {
            gsum[c] += g(r, c);
            gy[c] += g(r, c) * y(r, c);
          }
        }
        for (std::size_t r = 0; r < y.rows(); ++r) {
          if (row_mask[r] <= 0.0) continue;
          for (std::size_t c = 0; c < cols; ++c)
            ga(r, c) += inv_std[c] * (g(r, c) - gsum[c] / n - y(r, c) * gy[c] / n);
        }
      });
  return out;
}

Var normalize_fixed(Var a, const Matrix& mean, const Matrix& var,
                    const std::vector<double>& row_mask, double eps) {
  const Matrix& x = a.value();
  require(mean.cols() == x.cols() && var.cols() == x.cols(), "normalize_fixed", "width");
  require(row_mask.size() == x.rows(), "normalize_fixed", "mask length != rows");
  Matrix factor(x.rows(), x.cols());
  Matrix shifted(x.rows(), x.cols());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    if (row_mask[r] <= 0.0) continue;
    for (std::size_t c = 0; c < x.cols(); ++c) {
      factor(r, c) = 1.0 / std::sqrt(var[c] + eps);
      shifted(r, c) = -mean[c] * factor(r, c);
    }
  }
  Var scaled = mul_const(a, factor);
  return add(scaled, a.tape().constant(std::move(shifted)));
}

Var lstm_pointwise(Var pre, Var c_prev) {
  const Matrix& z = pre.value();
  const Matrix& cp = c_prev.value();
  const std::size_t n = z.rows(), h = cp.cols();
  require(z.cols() == 4 * h && cp.rows() == n, "lstm_pointwise",
          dims(z) + " with cell " + dims(cp));
  auto sig = [](double x) {
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
  };
  // Cache gate activations and tanh(c) for the backward pass.
  Matrix gates(n, 4 * h);
  Matrix tc(n, h);
  Matrix y(n, 2 * h);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t j = 0; j < h; ++j) {
      const double ig = sig(z(r, j));
      const double fg = sig(z(r, h + j));
      const double gg = std::tanh(z(r, 2 * h + j));
      const double og = sig(z(r, 3 * h + j));
      const double c = fg * cp(r, j) + ig * gg;
      const double t = std::tanh(c);
      gates(r, j) = ig;
      gates(r, h + j) = fg;
      gates(r, 2 * h + j) = gg;
      gates(r, 3 * h + j) = og;
      tc(r, j) = t;
      y(r, j) = og * t;
      y(r, h + j) = c;
    }
  }
  const std::size_t pz = pre.id(), pc = c_prev.id();
  return pre.tape().record(
      std::move(y), {pz, pc},
      [pz, pc, h, gates = std::move(gates), tc = std::move(tc)](Tape& t, std::size_t self) {
        const Matrix& g = t.grad(self);
        const Matrix& cp = t.value(pc);
        const bool want_z = t.needs_grad(pz);
        const bool want_c = t.needs_grad(pc);
        Matrix* gz = want_z ? &t.grad_for(pz) : nullptr;
        Matrix* gc = want_c ? &t.grad_for(pc) : nullptr;
        for (std::size_t r = 0; r < g.rows(); ++r) {
          for (std::size_t j = 0; j < h; ++j) {
            const double ig = gates(r, j), fg = gates(r, h + j), gg = gates(r, 2 * h + j),
                         og = gates(r, 3 * h + j);
            const double dh = g(r, j);
            const double dc = g(r, h + j) + dh * og * (1.0 - tc(r, j) * tc(r, j));
            if (gz != nullptr) {
              (*gz)(r, j) += dc * gg * ig * (1.0 - ig);
              (*gz)(r, h + j) += dc * cp(r, j) * fg * (1.0 - fg);
              (*gz)(r, 2 * h + j) += dc * ig * (1.0 - gg * gg);
              (*gz)(r, 3 * h + j) += dh * tc(r, j) * og * (1.0 - og);
            }
            if (gc != nullptr) (*gc)(r, j) += dc * fg;
          }
        }
      });
}

Var row_blend(Var fresh, Var old, std::vector<double> m) {
  require_same(fresh, old, "row_blend");
  require(m.size() == fresh.rows(), "row_blend", "mask length != rows");
  const Matrix& f = fresh.value();
  const Matrix& o = old.value();
  Matrix y(f.rows(), f.cols());
  for (std::size_t r = 0; r < f.rows(); ++r)
    for (std::size_t c = 0; c < f.cols(); ++c) y(r, c) = m[r] * f(r, c) + (1.0 - m[r]) * o(r, c);
  const std::size_t pf = fresh.id(), po = old.id();
  return fresh.tape().record(std::move(y), {pf, po},
                             [pf, po, m = std::move(m)](Tape& t, std::size_t self) {
                               const Matrix& g = t.grad(self);
                               const std::size_t cols = g.cols();
                               if (t.needs_grad(pf)) {
                                 Matrix& gf = t.grad_for(pf);
                                 for (std::size_t r = 0; r < g.rows(); ++r)
                                   if (m[r] != 0.0)
                                     simd::active().axpy(m[r], g.data() + r * cols,
                                                         gf.data() + r * cols, cols);
                               }
                               if (t.needs_grad(po)) {
                                 Matrix& go = t.grad_for(po);
                                 for (std::size_t r = 0; r < g.rows(); ++r)
                                   if (m[r] != 1.0)
                                     simd::active().axpy(1.0 - m[r], g.data() + r * cols,
                                                         go.data() + r * cols, cols);
                               }
                             });
}

}  // namespace scanpath::ad
