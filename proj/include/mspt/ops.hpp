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

#pragma once

// Differentiable operations on tape variables. Every op reads its inputs'
// values, appends one node to the inputs' tape and registers the adjoint
// rule. Binary ops require both operands to live on the same tape.
//
// Broadcasting is limited to add(a, b) where b's shape equals the trailing
// dimensions of a (bias addition); everything else needs equal shapes.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "mspt/tape.hpp"

namespace mspt {

inline constexpr double kProbabilityFloor = 1e-10;

// [m x k] * [k x n]
Var matmul(Var a, Var b);

Var add(Var a, Var b);
Var sub(Var a, Var b);
// Hadamard product of equal shapes.
Var mul(Var a, Var b);
Var scale(Var a, double factor);
Var add_scalar(Var a, double offset);
// a * s where s holds a single element.
Var mul_scalar(Var a, Var s);

Var sigmoid(Var a);
Var tanh(Var a);
Var relu(Var a);
// Natural log; throws DomainError on any non-positive input.
Var log(Var a);
// log(max(a, floor)); zero gradient where the floor is active.
Var log_floor(Var a, double floor = kProbabilityFloor);

// Max-subtracted softmax along `axis` (negative counts from the back).
Var softmax(Var a, int axis = -1);

// Zero-element parts are skipped.
Var concat(std::span<const Var> parts, std::size_t axis);
Var slice(Var a, std::size_t axis, std::size_t begin, std::size_t end);
Var reshape(Var a, Shape shape);

// Rows of a 2-D tensor, in the given order (repeats allowed).
Var gather_rows(Var a, std::span<const std::size_t> rows);
// out[r] = a[r, cols[r]] for a 2-D tensor.
Var pick(Var a, std::span<const std::size_t> cols);

Var sum(Var a);
Var mean(Var a);
// Reduces a 2-D tensor over rows (axis 0) or columns (axis 1).
Var sum_axis(Var a, std::size_t axis);
// sum_i weights[i] * a[i] with constant weights.
Var weighted_sum(Var a, std::span<const double> weights);

// out[r, :] = x[r, :] * w[r]
Var scale_rows(Var x, Var w);
// Rows offsets[b]..offsets[b+1] of x summed into output row b.
Var segment_sum(Var x, std::span<const std::size_t> offsets);
// Softmax over each contiguous segment of a flat vector.
Var segment_softmax(Var x, std::span<const std::size_t> offsets);
// Row r of the output is row r of `a` where take_a[r] != 0, else row r of `b`.
Var select_rows(std::span<const std::uint8_t> take_a, Var a, Var b);

// Per-row normalization with learned gain/bias of length cols.
Var layer_norm(Var x, Var gain, Var bias, double eps = 1e-5);

// Copies the value onto the tape with no gradient path.
Var detach(Var a);

struct AttentionSpec {
  std::size_t batch = 1;
  std::size_t query_len = 1;
  std::size_t key_len = 1;
  std::size_t heads = 1;
  // batch * key_len entries; nonzero marks a real (non-PAD) key. Empty means
  // every key is real.
  std::vector<std::uint8_t> key_mask;
  // Query i may only attend to keys j <= i.
  bool causal = false;
};

// Multi-head scaled dot-product attention over already projected inputs.
// q is [batch*query_len x d], k and v are [batch*key_len x d]; each head
// works on a contiguous d/heads slice of the columns. Masked keys get exactly
// zero weight. If `weights` is non-null it receives the attention
// probabilities, shaped [batch, heads, query_len, key_len].
Var attention(Var q, Var k, Var v, const AttentionSpec& spec,
              Tensor* weights = nullptr);

}  // namespace mspt
