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

#include "mspt/layers.hpp"

#include <algorithm>
#include <cmath>

#include "mspt/error.hpp"

namespace mspt {

SequenceBatch SequenceBatch::pack(const std::vector<std::vector<TokenId>>& sequences) {
  SequenceBatch s;
  s.batch = sequences.size();
  for (const auto& seq : sequences) {
    if (seq.empty()) throw ContractError("cannot encode an empty token sequence");
    s.max_len = std::max(s.max_len, seq.size());
    s.lengths.push_back(seq.size());
  }
  s.ids.assign(s.batch * s.max_len, Vocab::kPad);
  for (std::size_t b = 0; b < s.batch; ++b) {
    std::copy(sequences[b].begin(), sequences[b].end(), s.ids.begin() + static_cast<std::ptrdiff_t>(b * s.max_len));
  }
  return s;
}

std::vector<std::uint8_t> SequenceBatch::mask() const {
  std::vector<std::uint8_t> m(rows(), 0);
  for (std::size_t b = 0; b < batch; ++b) {
    std::fill_n(m.begin() + static_cast<std::ptrdiff_t>(b * max_len), lengths[b], 1);
  }
  return m;
}

Linear Linear::create(ParameterStore& store, const std::string& name, std::size_t in,
                      std::size_t out, Rng& rng, bool with_bias) {
  Linear l;
  l.weight = &store.create(name + ".w", {in, out}, in, rng);
  if (with_bias) l.bias = &store.create(name + ".b", {out}, in, rng);
  return l;
}

Var Linear::operator()(Tape& tape, Var x) const {
  Var y = matmul(x, tape.param(*weight));
  return bias ? add(y, tape.param(*bias)) : y;
}

LayerNorm LayerNorm::create(ParameterStore& store, const std::string& name, std::size_t dim) {
  LayerNorm n;
  n.gain = &store.create(name + ".gain", Tensor::filled({dim}, 1.0));
  n.bias = &store.create(name + ".bias", Tensor::filled({dim}, 0.0));
  return n;
}

Var LayerNorm::operator()(Tape& tape, Var x) const {
  return layer_norm(x, tape.param(*gain), tape.param(*bias));
}

Var embed(Tape& tape, Parameter& table, const SequenceBatch& batch) {
  const std::size_t vocab = table.value.dim(0);
  for (TokenId id : batch.ids) {
    if (id >= vocab) {
      throw ContractError("token id " + std::to_string(id) + " outside embedding table of " +
                          std::to_string(vocab) + " rows");
    }
  }
  const auto rows = batch.id_rows();
  return gather_rows(tape.param(table), rows);
}

BiLstm BiLstm::create(ParameterStore& store, const std::string& prefix, std::size_t input_dim,
                      std::size_t hidden, Rng& rng) {
  BiLstm l;
  l.hidden_ = hidden;
  for (auto [dir, w] : {std::pair{"fwd", &l.fwd_}, std::pair{"bwd", &l.bwd_}}) {
    const std::string p = prefix + "." + dir;
    w->input = &store.create(p + ".wx", {input_dim, 4 * hidden}, input_dim, rng);
    w->recurrent = &store.create(p + ".wh", {hidden, 4 * hidden}, hidden, rng);
    w->bias = &store.create(p + ".b", {4 * hidden}, hidden, rng);
  }
  return l;
}

namespace {

struct DirectionResult {
  std::vector<Var> steps;  // [batch x h] per step
  Var final_state;
};

DirectionResult run_direction(Tape& tape, const LstmWeights& w, std::size_t h, Var inputs,
                              const SequenceBatch& s, bool reverse) {
  const std::size_t B = s.batch, L = s.max_len;
  Var gx = add(matmul(inputs, tape.param(*w.input)), tape.param(*w.bias));
  Var wh = tape.param(*w.recurrent);

  DirectionResult r;
  Var h_prev, c_prev;
  std::vector<std::size_t> rows(B);
  std::vector<std::uint8_t> active(B);
  for (std::size_t step = 0; step < L; ++step) {
    bool all_active = true;
    for (std::size_t b = 0; b < B; ++b) {
      const std::size_t len = s.lengths[b];
      active[b] = step < len;
      all_active &= active[b] != 0;
      const std::size_t pos = step < len ? (reverse ? len - 1 - step : step) : 0;
      rows[b] = b * L + pos;
    }
    Var g = gather_rows(gx, rows);
    if (step > 0) g = add(g, matmul(h_prev, wh));
    Var i = sigmoid(slice(g, 1, 0, h));
    Var f = sigmoid(slice(g, 1, h, 2 * h));
    Var cand = tanh(slice(g, 1, 2 * h, 3 * h));
    Var o = sigmoid(slice(g, 1, 3 * h, 4 * h));
    Var c = step > 0 ? add(mul(f, c_prev), mul(i, cand)) : mul(i, cand);
    Var hn = mul(o, tanh(c));
    if (!all_active) {
      // Finished sequences carry their last state forward unchanged.
      c = select_rows(active, c, c_prev);
      hn = select_rows(active, hn, h_prev);
    }
    r.steps.push_back(hn);
    h_prev = hn;
    c_prev = c;
  }
  r.final_state = h_prev;
  return r;
}

}  // namespace

BiLstmOutput BiLstm::operator()(Tape& tape, Var inputs, const SequenceBatch& s) const {
  if (s.batch == 0 || s.max_len == 0) throw ContractError("bilstm: empty batch");
  if (inputs.shape() != Shape{s.rows(), fwd_.input->value.dim(0)}) {
    throw DimensionError("bilstm: inputs " + to_string(inputs.shape()) + " for a batch of " +
                         std::to_string(s.batch) + "x" + std::to_string(s.max_len) +
                         " with input width " + std::to_string(fwd_.input->value.dim(0)));
  }
  const std::size_t B = s.batch, L = s.max_len, h = hidden_;
  DirectionResult f = run_direction(tape, fwd_, h, inputs, s, false);
  DirectionResult b = run_direction(tape, bwd_, h, inputs, s, true);

  Var zero = tape.constant(Tensor({1, h}));
  auto stacked = [&](std::vector<Var>& steps) {
    steps.push_back(zero);
    return concat(steps, 0);
  };
  Var fwd_all = stacked(f.steps);
  Var bwd_all = stacked(b.steps);
  std::vector<std::size_t> fwd_rows(B * L), bwd_rows(B * L);
  for (std::size_t bi = 0; bi < B; ++bi) {
    const std::size_t len = s.lengths[bi];
    for (std::size_t pos = 0; pos < L; ++pos) {
      const bool real = pos < len;
      fwd_rows[bi * L + pos] = real ? pos * B + bi : L * B;
      bwd_rows[bi * L + pos] = real ? (len - 1 - pos) * B + bi : L * B;
    }
  }
  const Var halves[] = {gather_rows(fwd_all, fwd_rows), gather_rows(bwd_all, bwd_rows)};
  const Var finals[] = {f.final_state, b.final_state};
  return {concat(halves, 1), concat(finals, 1)};
}

Tensor positional_encoding(std::size_t length, std::size_t dim) {
  if (dim % 2 != 0) {
    throw ConfigError("positional encoding needs an even width, got " + std::to_string(dim));
  }
  Tensor pe({length, dim});
  for (std::size_t pos = 0; pos < length; ++pos) {
    for (std::size_t i = 0; i < dim / 2; ++i) {
      const double angle =
          static_cast<double>(pos) / std::pow(10000.0, static_cast<double>(2 * i) / static_cast<double>(dim));
      pe.at(pos, 2 * i) = std::sin(angle);
      pe.at(pos, 2 * i + 1) = std::cos(angle);
    }
  }
  return pe;
}

Var add_positional(Tape& tape, Var x, const SequenceBatch& s) {
  const std::size_t d = x.value().cols();
  const Tensor pe = positional_encoding(s.max_len, d);
  Tensor full({s.rows(), d});
  for (std::size_t b = 0; b < s.batch; ++b) {
    for (std::size_t pos = 0; pos < s.lengths[b]; ++pos) {
      std::copy_n(pe.raw() + pos * d, d, full.data().data() + (b * s.max_len + pos) * d);
    }
  }
  return add(x, tape.constant(std::move(full)));
}

Var mean_pool(Tape& tape, Var x, const SequenceBatch& s) {
  Tensor p({s.batch, s.rows()});
  for (std::size_t b = 0; b < s.batch; ++b) {
    const double w = 1.0 / static_cast<double>(s.lengths[b]);
    for (std::size_t pos = 0; pos < s.lengths[b]; ++pos) p.at(b, b * s.max_len + pos) = w;
  }
  return matmul(tape.constant(std::move(p)), x);
}

AttentionBlock AttentionBlock::create(ParameterStore& store, const std::string& prefix,
                                      std::size_t dim, std::size_t heads, Rng& rng) {
  AttentionBlock a;
  a.query = Linear::create(store, prefix + ".q", dim, dim, rng);
  a.key = Linear::create(store, prefix + ".k", dim, dim, rng);
  a.value = Linear::create(store, prefix + ".v", dim, dim, rng);
  a.output = Linear::create(store, prefix + ".o", dim, dim, rng);
  a.heads = heads;
  return a;
}

Var AttentionBlock::operator()(Tape& tape, Var queries, Var memory, const AttentionSpec& spec,
                               Tensor* weights) const {
  Var q = query(tape, queries);
  Var k = key(tape, memory);
  Var v = value(tape, memory);
  return output(tape, attention(q, k, v, spec, weights));
}

FeedForward FeedForward::create(ParameterStore& store, const std::string& prefix, std::size_t dim,
                                std::size_t width, Rng& rng) {
  return {Linear::create(store, prefix + ".in", dim, width, rng),
          Linear::create(store, prefix + ".out", width, dim, rng)};
}

Var FeedForward::operator()(Tape& tape, Var x) const { return outer(tape, relu(inner(tape, x))); }

EncoderLayer EncoderLayer::create(ParameterStore& store, const std::string& prefix,
                                  std::size_t dim, std::size_t heads, std::size_t ffn_width,
                                  bool residual_norm, Rng& rng) {
  EncoderLayer l;
  l.attention = AttentionBlock::create(store, prefix + ".attn", dim, heads, rng);
  l.norm1 = LayerNorm::create(store, prefix + ".ln1", dim);
  l.ffn = FeedForward::create(store, prefix + ".ffn", dim, ffn_width, rng);
  l.norm2 = LayerNorm::create(store, prefix + ".ln2", dim);
  l.residual_norm = residual_norm;
  return l;
}

Var EncoderLayer::operator()(Tape& tape, Var x, const SequenceBatch& s, Tensor* weights) const {
  AttentionSpec spec;
  spec.batch = s.batch;
  spec.query_len = s.max_len;
  spec.key_len = s.max_len;
  spec.heads = attention.heads;
  spec.key_mask = s.mask();
  Var a = attention(tape, x, x, spec, weights);
  Var h = residual_norm ? norm1(tape, add(x, a)) : a;
  Var f = ffn(tape, h);
  return residual_norm ? norm2(tape, add(h, f)) : f;
}

}  // namespace mspt
