/* Copyright 2026 The MSPT Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "mspt/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "mspt/error.hpp"
#include "mspt/kernels.hpp"

namespace mspt {
namespace {

Tape& tape_of(Var a) {
  if (!a.valid()) throw ContractError("operation on an unbound variable");
  return *a.tape();
}

Tape& tape_of(Var a, Var b) {
  Tape& t = tape_of(a);
  if (b.tape() != &t) throw ContractError("operands live on different tapes");
  return t;
}

void require_rank2(const Tensor& t, const char* op) {
  if (t.rank() != 2) {
    throw DimensionError(std::string(op) + " expects a matrix, got " +
                         to_string(t.shape()));
  }
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shapes " + to_string(a.shape()) +
                         " and " + to_string(b.shape()) + " differ");
  }
}

// Trailing-dimension broadcast: b's shape is a suffix of a's shape.
bool is_trailing_broadcast(const Shape& a, const Shape& b) {
  if (b.size() > a.size() || b.empty()) return false;
  return std::equal(b.rbegin(), b.rend(), a.rbegin());
}

void accumulate(std::vector<double>& dst, std::span<const double> src) {
  kernels::active().axpy(1.0, src.data(), dst.data(), src.size());
}

// Pointwise op with derivative expressed through input x and output y.
template <typename F, typename D>
Var unary(Var a, const char* name, F f, D df) {
  Tape& t = tape_of(a);
  const Tensor& x = a.value();
  Tensor y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = f(x[i]);
  const std::size_t out = t.size();
  const std::size_t ai = a.id();
  return t.record(name, std::move(y), t.any_requires_grad({a}),
                  [=](Tape& tp) {
                    auto g = tp.upstream(out);
                    const Tensor& xv = tp.value(ai);
                    const Tensor& yv = tp.value(out);
                    auto& ga = tp.grad_buffer(ai);
                    for (std::size_t i = 0; i < g.size(); ++i) {
                      ga[i] += g[i] * df(xv[i], yv[i]);
                    }
                  });
}

struct Layout {
  std::size_t outer = 1;
  std::size_t len = 1;
  std::size_t inner = 1;
};

Layout layout_along(const Shape& shape, std::size_t axis) {
  Layout l;
  for (std::size_t d = 0; d < axis; ++d) l.outer *= shape[d];
  l.len = shape[axis];
  for (std::size_t d = axis + 1; d < shape.size(); ++d) l.inner *= shape[d];
  return l;
}

}  // namespace

Var matmul(Var a, Var b) {
  Tape& t = tape_of(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.rank() != 2 || bv.rank() != 2 || av.dim(1) != bv.dim(0)) {
    throw DimensionError("matmul: cannot multiply " + to_string(av.shape()) +
                         " by " + to_string(bv.shape()));
  }
  const std::size_t m = av.dim(0), k = av.dim(1), n = bv.dim(1);
  Tensor c({m, n});
  kernels::active().gemm_nn(m, n, k, av.raw(), bv.raw(), c.raw());
  const std::size_t out = t.size();
  const std::size_t ai = a.id(), bi = b.id();
  return t.record("matmul", std::move(c), t.any_requires_grad({a, b}),
                  [=](Tape& tp) {
                    auto g = tp.upstream(out);
                    const auto& kt = kernels::active();
                    if (tp.requires_grad(ai)) {
                      auto& ga = tp.grad_buffer(ai);
                      kt.gemm_nt(m, k, n, g.data(), tp.value(bi).raw(), ga.data());
                    }
                    if (tp.requires_grad(bi)) {
                      auto& gb = tp.grad_buffer(bi);
                      kt.gemm_tn(k, n, m, tp.value(ai).raw(), g.data(), gb.data());
                    }
                  });
}

Var add(Var a, Var b) {
  Tape& t = tape_of(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  const std::size_t out = t.size();
  const std::size_t ai = a.id(), bi = b.id();
  if (av.shape() == bv.shape()) {
    Tensor c = av;
    for (std::size_t i = 0; i < c.size(); ++i) c[i] += bv[i];
    return t.record("add", std::move(c), t.any_requires_grad({a, b}),
                    [=](Tape& tp) {
                      auto g = tp.upstream(out);
                      if (tp.requires_grad(ai)) accumulate(tp.grad_buffer(ai), g);
                      if (tp.requires_grad(bi)) accumulate(tp.grad_buffer(bi), g);
                    });
  }
  if (!is_trailing_broadcast(av.shape(), bv.shape())) {
    throw DimensionError("add: shape " + to_string(bv.shape()) +
                         " does not broadcast onto " + to_string(av.shape()));
  }
  const std::size_t n = bv.size();
  const std::size_t reps = av.size() / n;
  Tensor c = av;
  for (std::size_t r = 0; r < reps; ++r) {
    for (std::size_t j = 0; j < n; ++j) c[r * n + j] += bv[j];
  }
  return t.record("add_bias", std::move(c), t.any_requires_grad({a, b}),
                  [=](Tape& tp) {
                    auto g = tp.upstream(out);
                    if (tp.requires_grad(ai)) accumulate(tp.grad_buffer(ai), g);
                    if (tp.requires_grad(bi)) {
                      auto& gb = tp.grad_buffer(bi);
                      for (std::size_t r = 0; r < reps; ++r) {
                        for (std::size_t j = 0; j < n; ++j) gb[j] += g[r * n + j];
                      }
                    }
                  });
}

Var sub(Var a, Var b) {
  Tape& t = tape_of(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  require_same_shape(av, bv, "sub");
  Tensor c = av;
  for (std::size_t i = 0; i < c.size(); ++i) c[i] -= bv[i];
  const std::size_t out = t.size();
  const std::size_t ai = a.id(), bi = b.id();
  return t.record("sub", std::move(c), t.any_requires_grad({a, b}),
                  [=](Tape& tp) {
                    auto g = tp.upstream(out);
                    if (tp.requires_grad(ai)) accumulate(tp.grad_buffer(ai), g);
                    if (tp.requires_grad(bi)) {
                      kernels::active().axpy(-1.0, g.data(),
                                             tp.grad_buffer(bi).data(), g.size());
                    }
                  });
}

Var mul(Var a, Var b) {
  Tape& t = tape_of(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  require_same_shape(av, bv, "mul");
  Tensor c(av.shape());
  for (std::size_t i = 0; i < c.size(); ++i) c[i] = av[i] * bv[i];
  const std::size_t out = t.size();
  const std::size_t ai = a.id(), bi = b.id();
  return t.record("mul", std::move(c), t.any_requires_grad({a, b}),
                  [=](Tape& tp) {
                    auto g = tp.upstream(out);
                    const auto& kt = kernels::active();
                    if (tp.requires_grad(ai)) {
                      kt.mul_acc(g.data(), tp.value(bi).raw(),
                                 tp.grad_buffer(ai).data(), g.size());
                    }
                    if (tp.requires_grad(bi)) {
                      kt.mul_acc(g.data(), tp.value(ai).raw(),
                                 tp.grad_buffer(bi).data(), g.size());
                    }
                  });
}

Var scale(Var a, double factor) {
  return unary(
      a, "scale", [factor](double x) { return factor * x; },
      [factor](double, double) { return factor; });
}

Var add_scalar(Var a, double offset) {
  return unary(
      a, "add_scalar", [offset](double x) { return x + offset; },
      [](double, double) { return 1.0; });
}

Var mul_scalar(Var a, Var s) {
  Tape& t = tape_of(a, s);
  const Tensor& av = a.value();
  if (s.value().size() != 1) {
    throw DimensionError("mul_scalar: factor has shape " + to_string(s.shape()));
  }
  const double factor = s.value()[0];
  Tensor c(av.shape());
  for (std::size_t i = 0; i < c.size(); ++i) c[i] = av[i] * factor;
  const std::size_t out = t.size();
  const std::size_t ai = a.id(), si = s.id();
  return t.record("mul_scalar", std::move(c), t.any_requires_grad({a, s}),
                  [=](Tape& tp) {
                    auto g = tp.upstream(out);
                    const auto& kt = kernels::active();
                    const double f = tp.value(si)[0];
                    if (tp.requires_grad(ai)) {
                      kt.axpy(f, g.data(), tp.grad_buffer(ai).data(), g.size());
                    }
                    if (tp.requires_grad(si)) {
                      tp.grad_buffer(si)[0] +=
                          kt.dot(g.data(), tp.value(ai).raw(), g.size());
                    }
                  });
}

Var sigmoid(Var a) {
  return unary(
      a, "sigmoid",
      [](double x) {
        if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
        const double e = std::exp(x);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

Var tanh(Var a) {
  return unary(
      a, "tanh", [](double x) { return std::tanh(x); },
      [](double, double y) { return 1.0 - y * y; });
}

Var relu(Var a) {
  return unary(
      a, "relu", [](double x) { return x > 0 ? x : 0.0; },
      [](double x, double) { return x > 0 ? 1.0 : 0.0; });
}

Var log(Var a) {
  for (double x : a.value().data()) {
    if (!(x > 0.0)) {
      throw DomainError("log of non-positive value " + std::to_string(x));
    }
  }
  return unary(
      a, "log", [](double x) { return std::log(x); },
      [](double x, double) { return 1.0 / x; });
}

Var log_floor(Var a, double floor) {
  return unary(
      a, "log_floor", [floor](double x) { return std::log(std::max(x, floor)); },
      [floor](double x, double) { return x > floor ? 1.0 / x : 0.0; });
}

Var softmax(Var a, int axis) {
  Tape& t = tape_of(a);
  const Tensor& x = a.value();
  const int rank = static_cast<int>(x.rank());
  const int ax = axis < 0 ? rank + axis : axis;
  if (ax < 0 || ax >= rank) {
    throw DimensionError("softmax: axis " + std::to_string(axis) +
                         " invalid for shape " + to_string(x.shape()));
  }
  const Layout l = layout_along(x.shape(), static_cast<std::size_t>(ax));
  Tensor y(x.shape());
  for (std::size_t o = 0; o < l.outer; ++o) {
    for (std::size_t in = 0; in < l.inner; ++in) {
      const std::size_t base = o * l.len * l.inner + in;
      double m = -std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < l.len; ++j) m = std::max(m, x[base + j * l.inner]);
      double s = 0.0;
      for (std::size_t j = 0; j < l.len; ++j) {
        const double e = std::exp(x[base + j * l.inner] - m);
        y[base + j * l.inner] = e;
        s += e;
      }
      for (std::size_t j = 0; j < l.len; ++j) y[base + j * l.inner] /= s;
    }
  }
  const std::size_t out = t.size();
  const std::size_t ai = a.id();
  return t.record("softmax", std::move(y), t.any_requires_grad({a}),
                  [=](Tape& tp) {
                    auto g = tp.upstream(out);
                    const Tensor& yv = tp.value(out);
                    auto& ga = tp.grad_buffer(ai);
                    for (std::size_t o = 0; o < l.outer; ++o) {
                      for (std::size_t in = 0; in < l.inner; ++in) {
                        const std::size_t base = o * l.len * l.inner + in;
                        double dot = 0.0;
                        for (std::size_t j = 0; j < l.len; ++j) {
                          const std::size_t idx = base + j * l.inner;
                          dot += g[idx] * yv[idx];
                        }
                        for (std::size_t j = 0; j < l.len; ++j) {
                          const std::size_t idx = base + j * l.inner;
                          ga[idx] += yv[idx] * (g[idx] - dot);
                        }
                      }
                    }
                  });
}

Var concat(std::span<const Var> parts, std::size_t axis) {
  if (parts.empty()) throw ContractError("concat of zero tensors");
  Tape& t = tape_of(parts.front());
  std::vector<std::size_t> ids;
  std::vector<Layout> layouts;
  const Shape* ref = nullptr;
  Shape out_shape;
  for (const Var& p : parts) {
    if (p.tape() != &t) throw ContractError("operands live on different tapes");
    const Tensor& v = p.value();
    if (v.size() == 0) continue;
    if (axis >= v.rank()) {
      throw DimensionError("concat: axis " + std::to_string(axis) +
                           " invalid for shape " + to_string(v.shape()));
    }
    if (ref == nullptr) {
      ref = &v.shape();
      out_shape = v.shape();
      out_shape[axis] = 0;
    } else {
      bool ok = v.rank() == ref->size();
      for (std::size_t d = 0; ok && d < v.rank(); ++d) {
        if (d != axis && v.dim(d) != (*ref)[d]) ok = false;
      }
      if (!ok) {
        throw DimensionError("concat: shape " + to_string(v.shape()) +
                             " incompatible with " + to_string(*ref) +
                             " along axis " + std::to_string(axis));
      }
    }
    out_shape[axis] += v.dim(axis);
    ids.push_back(p.id());
    layouts.push_back(layout_along(v.shape(), axis));
  }
  if (ids.empty()) return t.constant(Tensor());
  if (ids.size() == 1) {
    // Still a new node so the caller can treat the result uniformly.
    const std::size_t src = ids.front();
    const std::size_t out = t.size();
    return t.record("concat", t.value(src), t.requires_grad(src) && t.grad_enabled(),
                    [=](Tape& tp) { accumulate(tp.grad_buffer(src), tp.upstream(out)); });
  }
  const Layout ol = layout_along(out_shape, axis);
  Tensor y(out_shape);
  std::vector<std::size_t> offsets;
  std::size_t offset = 0;
  bool needs_grad = false;
  for (std::size_t p = 0; p < ids.size(); ++p) {
    const Tensor& v = t.value(ids[p]);
    const std::size_t block = layouts[p].len * layouts[p].inner;
    for (std::size_t o = 0; o < ol.outer; ++o) {
      std::copy_n(v.raw() + o * block, block,
                  y.raw() + o * ol.len * ol.inner + offset * ol.inner);
    }
    offsets.push_back(offset);
    offset += layouts[p].len;
    needs_grad = needs_grad || t.requires_grad(ids[p]);
  }
  const std::size_t out = t.size();
  return t.record("concat", std::move(y), needs_grad && t.grad_enabled(),
                  [=](Tape& tp) {
                    auto g = tp.upstream(out);
                    for (std::size_t p = 0; p < ids.size(); ++p) {
                      if (!tp.requires_grad(ids[p])) continue;
                      auto& gp = tp.grad_buffer(ids[p]);
                      const std::size_t block = layouts[p].len * layouts[p].inner;
                      for (std::size_t o = 0; o < ol.outer; ++o) {
                        const double* src =
                            g.data() + o * ol.len * ol.inner + offsets[p] * ol.inner;
                        double* dst = gp.data() + o * block;
                        for (std::size_t i = 0; i < block; ++i) dst[i] += src[i];
                      }
                    }
                  });
}

Var slice(Var a, std::size_t axis, std::size_t begin, std::size_t end) {
  Tape& t = tape_of(a);
  const Tensor& x = a.value();
  if (axis >= x.rank() || begin > end || end > x.dim(axis)) {
    throw DimensionError("slice [" + std::to_string(begin) + ", " +
                         std::to_string(end) + ") along axis " +
                         std::to_string(axis) + " of " + to_string(x.shape()));
  }
  const Layout l = layout_along(x.shape(), axis);
  Shape shape = x.shape();
  shape[axis] = end - begin;
  const std::size_t width = (end - begin) * l.inner;
  Tensor y(shape);
  for (std::size_t o = 0; o < l.outer; ++o) {
    std::copy_n(x.raw() + o * l.len * l.inner + begin * l.inner, width,
                y.raw() + o * width);
  }
  const std::size_t out = t.size();
  const std::size_t ai = a.id();
  return t.record("slice", std::move(y), t.any_requires_grad({a}),
                  [=](Tape& tp) {
                    auto g = tp.upstream(out);
                    auto& ga = tp.grad_buffer(ai);
                    for (std::size_t o = 0; o < l.outer; ++o) {
                      double* dst = ga.data() + o * l.len * l.inner + begin * l.inner;
                      const double* src = g.data() + o * width;
                      for (std::size_t i = 0; i < width; ++i) dst[i] += src[i];
                    }
                  });
}

Var reshape(Var a, Shape shape) {
  Tape& t = tape_of(a);
  Tensor y = a.value();
  y.reshape(std::move(shape));
  const std::size_t out = t.size();
  const std::size_t ai = a.id();
  return t.record("reshape", std::move(y), t.any_requires_grad({a}),
                  [=](Tape& tp) { accumulate(tp.grad_buffer(ai), tp.upstream(out)); });
}

Var gather_rows(Var a, std::span<const std::size_t> rows) {
  Tape& t = tape_of(a);
  const Tensor& x = a.value();
  require_rank2(x, "gather_rows");
  const std::size_t n = x.dim(0), c = x.dim(1);
  std::vector<std::size_t> idx(rows.begin(), rows.end());
  Tensor y({idx.size(), c});
  for (std::size_t r = 0; r < idx.size(); ++r) {
    if (idx[r] >= n) {
      throw ContractError("gather_rows: row " + std::to_string(idx[r]) +
                          " out of range for " + to_string(x.shape()));
    }
    std::copy_n(x.raw() + idx[r] * c, c, y.raw() + r * c);
  }
  const std::size_t out = t.size();
  const std::size_t ai = a.id();
  return t.record("gather_rows", std::move(y), t.any_requires_grad({a}),
                  [=](Tape& tp) {
                    auto g = tp.upstream(out);
                    auto& ga = tp.grad_buffer(ai);
                    const auto& kt = kernels::active();
                    for (std::size_t r = 0; r < idx.size(); ++r) {
                      kt.axpy(1.0, g.data() + r * c, ga.data() + idx[r] * c, c);
                    }
                  });
}

Var pick(Var a, std::span<const std::size_t> cols) {
  Tape& t = tape_of(a);
  const Tensor& x = a.value();
  require_rank2(x, "pick");
  const std::size_t n = x.dim(0), c = x.dim(1);
  if (cols.size() != n) {
    throw DimensionError("pick: " + std::to_string(cols.size()) +
                         " indices for " + std::to_string(n) + " rows");
  }
  std::vector<std::size_t> idx(cols.begin(), cols.end());
  Tensor y({n});
  for (std::size_t r = 0; r < n; ++r) {
    if (idx[r] >= c) {
      throw ContractError("pick: column " + std::to_string(idx[r]) +
                          " out of range for " + to_string(x.shape()));
    }
    y[r] = x[r * c + idx[r]];
  }
  const std::size_t out = t.size();
  const std::size_t ai = a.id();
  return t.record("pick", std::move(y), t.any_requires_grad({a}),
                  [=](Tape& tp) {
                    auto g = tp.upstream(out);
                    auto& ga = tp.grad_buffer(ai);
                    for (std::size_t r = 0; r < n; ++r) ga[r * c + idx[r]] += g[r];
                  });
}

Var sum(Var a) {
  Tape& t = tape_of(a);
  double s = 0.0;
  for (double v : a.value().data()) s += v;
  const std::size_t out = t.size();
  const std::size_t ai = a.id();
  return t.record("sum", Tensor::scalar(s), t.any_requires_grad({a}),
                  [=](Tape& tp) {
                    const double g = tp.upstream(out)[0];
                    for (double& v : tp.grad_buffer(ai)) v += g;
                  });
}

Var mean(Var a) {
  const std::size_t n = a.value().size();
  if (n == 0) throw ContractError("mean of an empty tensor");
  return scale(sum(a), 1.0 / static_cast<double>(n));
}

Var sum_axis(Var a, std::size_t axis) {
  Tape& t = tape_of(a);
  const Tensor& x = a.value();
  require_rank2(x, "sum_axis");
  if (axis > 1) throw DimensionError("sum_axis: axis must be 0 or 1");
  const std::size_t r = x.dim(0), c = x.dim(1);
  Tensor y(Shape{axis == 0 ? c : r});
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = 0; j < c; ++j) y[axis == 0 ? j : i] += x[i * c + j];
  }
  const std::size_t out = t.size();
  const std::size_t ai = a.id();
  return t.record("sum_axis", std::move(y), t.any_requires_grad({a}),
                  [=](Tape& tp) {
                    auto g = tp.upstream(out);
                    auto& ga = tp.grad_buffer(ai);
                    for (std::size_t i = 0; i < r; ++i) {
                      for (std::size_t j = 0; j < c; ++j) {
                        ga[i * c + j] += g[axis == 0 ? j : i];
                      }
                    }
                  });
}

Var weighted_sum(Var a, std::span<const double> weights) {
  Tape& t = tape_of(a);
  const Tensor& x = a.value();
  if (weights.size() != x.size()) {
    throw DimensionError("weighted_sum: " + std::to_string(weights.size()) +
                         " weights for " + to_string(x.shape()));
  }
  std::vector<double> w(weights.begin(), weights.end());
  double s = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) s += w[i] * x[i];
  const std::size_t out = t.size();
  const std::size_t ai = a.id();
  return t.record("weighted_sum", Tensor::scalar(s), t.any_requires_grad({a}),
                  [=](Tape& tp) {
                    const double g = tp.upstream(out)[0];
                    auto& ga = tp.grad_buffer(ai);
                    for (std::size_t i = 0; i < w.size(); ++i) ga[i] += g * w[i];
                  });
}

Var scale_rows(Var x, Var w) {
  Tape& t = tape_of(x, w);
  const Tensor& xv = x.value();
  require_rank2(xv, "scale_rows");
  const std::size_t r = xv.dim(0), c = xv.dim(1);
  if (w.value().size() != r) {
    throw DimensionError("scale_rows: " + to_string(w.shape()) +
                         " weights for " + to_string(xv.shape()));
  }
  const Tensor& wv = w.value();
  Tensor y(xv.shape());
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = 0; j < c; ++j) y[i * c + j] = xv[i * c + j] * wv[i];
  }
  const std::size_t out = t.size();
  const std::size_t xi = x.id(), wi = w.id();
  return t.record("scale_rows", std::move(y), t.any_requires_grad({x, w}),
                  [=](Tape& tp) {
                    auto g = tp.upstream(out);
                    const auto& kt = kernels::active();
                    const Tensor& xs = tp.value(xi);
                    const Tensor& ws = tp.value(wi);
                    if (tp.requires_grad(xi)) {
                      auto& gx = tp.grad_buffer(xi);
                      for (std::size_t i = 0; i < r; ++i) {
                        kt.axpy(ws[i], g.data() + i * c, gx.data() + i * c, c);
                      }
                    }
                    if (tp.requires_grad(wi)) {
                      auto& gw = tp.grad_buffer(wi);
                      for (std::size_t i = 0; i < r; ++i) {
                        gw[i] += kt.dot(g.data() + i * c, xs.raw() + i * c, c);
                      }
                    }
                  });
}

namespace {

void check_offsets(std::span<const std::size_t> offsets, std::size_t n,
                   const char* op) {
  if (offsets.empty() || offsets.front() != 0 || offsets.back() != n ||
      !std::is_sorted(offsets.begin(), offsets.end())) {
    throw ContractError(std::string(op) + ": offsets do not partition " +
                        std::to_string(n) + " rows");
  }
}

}  // namespace

Var segment_sum(Var x, std::span<const std::size_t> offsets) {
  Tape& t = tape_of(x);
  const Tensor& xv = x.value();
  require_rank2(xv, "segment_sum");
  const std::size_t c = xv.dim(1);
  check_offsets(offsets, xv.dim(0), "segment_sum");
  std::vector<std::size_t> off(offsets.begin(), offsets.end());
  const std::size_t segments = off.size() - 1;
  Tensor y({segments, c});
  for (std::size_t s = 0; s < segments; ++s) {
    for (std::size_t r = off[s]; r < off[s + 1]; ++r) {
      for (std::size_t j = 0; j < c; ++j) y[s * c + j] += xv[r * c + j];
    }
  }
  const std::size_t out = t.size();
  const std::size_t xi = x.id();
  return t.record("segment_sum", std::move(y), t.any_requires_grad({x}),
                  [=](Tape& tp) {
                    auto g = tp.upstream(out);
                    auto& gx = tp.grad_buffer(xi);
                    for (std::size_t s = 0; s < segments; ++s) {
                      for (std::size_t r = off[s]; r < off[s + 1]; ++r) {
                        for (std::size_t j = 0; j < c; ++j) gx[r * c + j] += g[s * c + j];
                      }
                    }
                  });
}

Var segment_softmax(Var x, std::span<const std::size_t> offsets) {
  Tape& t = tape_of(x);
  const Tensor& xv = x.value();
  check_offsets(offsets, xv.size(), "segment_softmax");
  std::vector<std::size_t> off(offsets.begin(), offsets.end());
  Tensor y(Shape{xv.size()});
  for (std::size_t s = 0; s + 1 < off.size(); ++s) {
    if (off[s] == off[s + 1]) continue;
    double m = -std::numeric_limits<double>::infinity();
    for (std::size_t i = off[s]; i < off[s + 1]; ++i) m = std::max(m, xv[i]);
    double z = 0.0;
    for (std::size_t i = off[s]; i < off[s + 1]; ++i) {
      y[i] = std::exp(xv[i] - m);
      z += y[i];
    }
    for (std::size_t i = off[s]; i < off[s + 1]; ++i) y[i] /= z;
  }
  const std::size_t out = t.size();
  const std::size_t xi = x.id();
  return t.record("segment_softmax", std::move(y), t.any_requires_grad({x}),
                  [=](Tape& tp) {
                    auto g = tp.upstream(out);
                    const Tensor& yv = tp.value(out);
                    auto& gx = tp.grad_buffer(xi);
                    for (std::size_t s = 0; s + 1 < off.size(); ++s) {
                      double dot = 0.0;
                      for (std::size_t i = off[s]; i < off[s + 1]; ++i) dot += g[i] * yv[i];
                      for (std::size_t i = off[s]; i < off[s + 1]; ++i) {
                        gx[i] += yv[i] * (g[i] - dot);
                      }
                    }
                  });
}

Var select_rows(std::span<const std::uint8_t> take_a, Var a, Var b) {
  Tape& t = tape_of(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  require_same_shape(av, bv, "select_rows");
  const std::size_t r = av.rows(), c = av.cols();
  if (take_a.size() != r) {
    throw DimensionError("select_rows: mask of " + std::to_string(take_a.size()) +
                         " entries for " + to_string(av.shape()));
  }
  std::vector<std::uint8_t> mask(take_a.begin(), take_a.end());
  Tensor y(av.shape());
  for (std::size_t i = 0; i < r; ++i) {
    const Tensor& src = mask[i] ? av : bv;
    std::copy_n(src.raw() + i * c, c, y.raw() + i * c);
  }
  const std::size_t out = t.size();
  const std::size_t ai = a.id(), bi = b.id();
  return t.record("select_rows", std::move(y), t.any_requires_grad({a, b}),
                  [=](Tape& tp) {
                    auto g = tp.upstream(out);
                    for (std::size_t i = 0; i < r; ++i) {
                      const std::size_t target = mask[i] ? ai : bi;
                      if (!tp.requires_grad(target)) continue;
                      auto& gt = tp.grad_buffer(target);
                      for (std::size_t j = 0; j < c; ++j) gt[i * c + j] += g[i * c + j];
                    }
                  });
}

Var layer_norm(Var x, Var gain, Var bias, double eps) {
  Tape& t = tape_of(x, gain);
  if (bias.tape() != &t) throw ContractError("operands live on different tapes");
  const Tensor& xv = x.value();
  const std::size_t r = xv.rows(), c = xv.cols();
  if (gain.value().size() != c || bias.value().size() != c) {
    throw DimensionError("layer_norm: gain/bias of shape " +
                         to_string(gain.shape()) + " for " + to_string(xv.shape()));
  }
  const Tensor& gv = gain.value();
  const Tensor& bv = bias.value();
  Tensor y(xv.shape());
  std::vector<double> normalized(xv.size());
  std::vector<double> inv_std(r);
  for (std::size_t i = 0; i < r; ++i) {
    const double* row = xv.raw() + i * c;
    double mu = 0.0;
    for (std::size_t j = 0; j < c; ++j) mu += row[j];
    mu /= static_cast<double>(c);
    double var = 0.0;
    for (std::size_t j = 0; j < c; ++j) var += (row[j] - mu) * (row[j] - mu);
    var /= static_cast<double>(c);
    inv_std[i] = 1.0 / std::sqrt(var + eps);
    for (std::size_t j = 0; j < c; ++j) {
      const double n = (row[j] - mu) * inv_std[i];
      normalized[i * c + j] = n;
      y[i * c + j] = gv[j] * n + bv[j];
    }
  }
  const std::size_t out = t.size();
  const std::size_t xi = x.id(), gi = gain.id(), bi = bias.id();
  return t.record(
      "layer_norm", std::move(y), t.any_requires_grad({x, gain, bias}),
      [=, normalized = std::move(normalized), inv_std = std::move(inv_std)](Tape& tp) {
        auto g = tp.upstream(out);
        const Tensor& gvv = tp.value(gi);
        if (tp.requires_grad(gi)) {
          auto& gg = tp.grad_buffer(gi);
          for (std::size_t i = 0; i < r; ++i) {
            for (std::size_t j = 0; j < c; ++j) gg[j] += g[i * c + j] * normalized[i * c + j];
          }
        }
        if (tp.requires_grad(bi)) {
          auto& gb = tp.grad_buffer(bi);
          for (std::size_t i = 0; i < r; ++i) {
            for (std::size_t j = 0; j < c; ++j) gb[j] += g[i * c + j];
          }
        }
        if (tp.requires_grad(xi)) {
          auto& gx = tp.grad_buffer(xi);
          const double inv_c = 1.0 / static_cast<double>(c);
          for (std::size_t i = 0; i < r; ++i) {
            double mean_d = 0.0, mean_dn = 0.0;
            for (std::size_t j = 0; j < c; ++j) {
              const double d = g[i * c + j] * gvv[j];
              mean_d += d;
              mean_dn += d * normalized[i * c + j];
            }
            mean_d *= inv_c;
            mean_dn *= inv_c;
            for (std::size_t j = 0; j < c; ++j) {
              const double d = g[i * c + j] * gvv[j];
              gx[i * c + j] +=
                  inv_std[i] * (d - mean_d - normalized[i * c + j] * mean_dn);
            }
          }
        }
      });
}

Var detach(Var a) { return tape_of(a).constant(a.value()); }

Var attention(Var q, Var k, Var v, const AttentionSpec& spec, Tensor* weights) {
  Tape& t = tape_of(q, k);
  if (v.tape() != &t) throw ContractError("operands live on different tapes");
  const Tensor& qv = q.value();
  const Tensor& kv = k.value();
  const Tensor& vv = v.value();
  const std::size_t B = spec.batch, Lq = spec.query_len, Lk = spec.key_len;
  const std::size_t H = spec.heads;
  require_rank2(qv, "attention");
  const std::size_t D = qv.cols();
  if (H == 0 || D % H != 0) {
    throw ConfigError("attention: model width " + std::to_string(D) +
                      " not divisible by " + std::to_string(H) + " heads");
  }
  if (qv.rows() != B * Lq || kv.shape() != Shape{B * Lk, D} ||
      vv.shape() != Shape{B * Lk, D}) {
    throw DimensionError("attention: q " + to_string(qv.shape()) + ", k " +
                         to_string(kv.shape()) + ", v " + to_string(vv.shape()) +
                         " inconsistent with batch " + std::to_string(B) +
                         ", lengths " + std::to_string(Lq) + "/" + std::to_string(Lk));
  }
  if (!spec.key_mask.empty() && spec.key_mask.size() != B * Lk) {
    throw DimensionError("attention: key mask has " +
                         std::to_string(spec.key_mask.size()) + " entries, expected " +
                         std::to_string(B * Lk));
  }
  const std::size_t dh = D / H;
  const double scl = 1.0 / std::sqrt(static_cast<double>(dh));
  const bool causal = spec.causal;
  std::vector<std::uint8_t> mask = spec.key_mask;
  if (mask.empty()) mask.assign(B * Lk, 1);

  const auto& kt = kernels::active();
  std::vector<double> probs(B * H * Lq * Lk, 0.0);
  Tensor y({B * Lq, D});
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t h = 0; h < H; ++h) {
      for (std::size_t i = 0; i < Lq; ++i) {
        const double* qrow = qv.raw() + (b * Lq + i) * D + h * dh;
        double* p = probs.data() + ((b * H + h) * Lq + i) * Lk;
        const std::size_t limit = causal ? std::min(i + 1, Lk) : Lk;
        double m = -std::numeric_limits<double>::infinity();
        bool any = false;
        for (std::size_t j = 0; j < limit; ++j) {
          if (!mask[b * Lk + j]) continue;
          p[j] = kt.dot(qrow, kv.raw() + (b * Lk + j) * D + h * dh, dh) * scl;
          m = any ? std::max(m, p[j]) : p[j];
          any = true;
        }
        if (!any) {
          throw ContractError("attention: query " + std::to_string(i) +
                              " of batch item " + std::to_string(b) +
                              " has every key masked");
        }
        double z = 0.0;
        for (std::size_t j = 0; j < limit; ++j) {
          if (!mask[b * Lk + j]) continue;
          p[j] = std::exp(p[j] - m);
          z += p[j];
        }
        double* yrow = y.raw() + (b * Lq + i) * D + h * dh;
        for (std::size_t j = 0; j < limit; ++j) {
          if (!mask[b * Lk + j]) continue;
          p[j] /= z;
          kt.axpy(p[j], vv.raw() + (b * Lk + j) * D + h * dh, yrow, dh);
        }
      }
    }
  }
  if (weights != nullptr) *weights = Tensor({B, H, Lq, Lk}, probs);

  const std::size_t out = t.size();
  const std::size_t qi = q.id(), ki = k.id(), vi = v.id();
  return t.record(
      "attention", std::move(y), t.any_requires_grad({q, k, v}),
      [=, probs = std::move(probs), mask = std::move(mask)](Tape& tp) {
        auto g = tp.upstream(out);
        const auto& kt = kernels::active();
        const Tensor& qs = tp.value(qi);
        const Tensor& ks = tp.value(ki);
        const Tensor& vs = tp.value(vi);
        const bool want_q = tp.requires_grad(qi);
        const bool want_k = tp.requires_grad(ki);
        const bool want_v = tp.requires_grad(vi);
        std::vector<double>* gq = want_q ? &tp.grad_buffer(qi) : nullptr;
        std::vector<double>* gk = want_k ? &tp.grad_buffer(ki) : nullptr;
        std::vector<double>* gv = want_v ? &tp.grad_buffer(vi) : nullptr;
        std::vector<double> dp(Lk);
        for (std::size_t b = 0; b < B; ++b) {
          for (std::size_t h = 0; h < H; ++h) {
            for (std::size_t i = 0; i < Lq; ++i) {
              const double* grow = g.data() + (b * Lq + i) * D + h * dh;
              const double* p = probs.data() + ((b * H + h) * Lq + i) * Lk;
              const std::size_t limit = causal ? std::min(i + 1, Lk) : Lk;
              double weighted = 0.0;
              for (std::size_t j = 0; j < limit; ++j) {
                if (!mask[b * Lk + j]) continue;
                const std::size_t krow = (b * Lk + j) * D + h * dh;
                dp[j] = kt.dot(grow, vs.raw() + krow, dh);
                weighted += dp[j] * p[j];
                if (gv) kt.axpy(p[j], grow, gv->data() + krow, dh);
              }
              const std::size_t qrow = (b * Lq + i) * D + h * dh;
              for (std::size_t j = 0; j < limit; ++j) {
                if (!mask[b * Lk + j]) continue;
                const double ds = p[j] * (dp[j] - weighted) * scl;
                const std::size_t krow = (b * Lk + j) * D + h * dh;
                if (gq) kt.axpy(ds, ks.raw() + krow, gq->data() + qrow, dh);
                if (gk) kt.axpy(ds, qs.raw() + qrow, gk->data() + krow, dh);
              }
            }
          }
        }
      });
}

}  // namespace mspt
