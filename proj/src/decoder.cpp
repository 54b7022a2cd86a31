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

#include "mspt/decoder.hpp"

#include "mspt/error.hpp"

namespace mspt {

DecoderMemory item_memory(Var fused, const ItemState& item,
                          std::span<const std::size_t> product,
                          std::span<const std::uint8_t> item_visible) {
  const std::size_t n_rows = fused.value().rows();
  if (product.size() != n_rows) {
    throw ContractError("decoder memory: " + std::to_string(product.size()) +
                        " product indices for " + std::to_string(n_rows) + " fused rows");
  }
  if (!item_visible.empty() && item_visible.size() != n_rows) {
    throw ContractError("decoder memory: visibility mask has the wrong length");
  }
  const SequenceBatch& t = item.title;
  const SequenceBatch& a = item.attributes;
  DecoderMemory m;
  m.count = n_rows;
  m.length = 1 + t.max_len + a.max_len;
  const std::size_t title_base = n_rows;
  const std::size_t attr_base = n_rows + t.rows();
  std::vector<std::size_t> idx;
  idx.reserve(m.count * m.length);
  m.mask.reserve(m.count * m.length);
  for (std::size_t n = 0; n < n_rows; ++n) {
    const std::size_t b = product[n];
    if (b >= t.batch) throw ContractError("decoder memory: product index out of range");
    const bool visible = item_visible.empty() || item_visible[n];
    idx.push_back(n);
    m.mask.push_back(1);
    for (std::size_t p = 0; p < t.max_len; ++p) {
      idx.push_back(title_base + b * t.max_len + p);
      m.mask.push_back(visible && p < t.lengths[b]);
    }
    for (std::size_t p = 0; p < a.max_len; ++p) {
      idx.push_back(attr_base + b * a.max_len + p);
      m.mask.push_back(visible && p < a.lengths[b]);
    }
  }
  const Var sources[] = {fused, item.title_memory, item.attr_memory};
  m.rows = gather_rows(concat(sources, 0), idx);
  return m;
}

Decoder Decoder::create(ParameterStore& store, const ModelConfig& config, std::size_t vocab,
                        Parameter* shared_embedding, Rng& rng) {
  Decoder d;
  const std::size_t dim = config.model_dim();
  if (shared_embedding && shared_embedding->value.dim(1) == dim) {
    d.embedding_ = shared_embedding;
  } else {
    d.embedding_ = &store.create("decoder.embed", {vocab, dim}, dim, rng);
  }
  for (std::size_t l = 0; l < config.decoder_layers; ++l) {
    const std::string p = "decoder.layer" + std::to_string(l);
    DecoderLayer layer;
    layer.self_attention = AttentionBlock::create(store, p + ".self", dim, config.heads, rng);
    layer.norm1 = LayerNorm::create(store, p + ".ln1", dim);
    layer.cross_attention = AttentionBlock::create(store, p + ".cross", dim, config.heads, rng);
    layer.norm2 = LayerNorm::create(store, p + ".ln2", dim);
    layer.ffn = FeedForward::create(store, p + ".ffn", dim, config.ffn_width(), rng);
    layer.norm3 = LayerNorm::create(store, p + ".ln3", dim);
    d.layers_.push_back(std::move(layer));
  }
  d.output_ = Linear::create(store, "decoder.out", dim, vocab, rng);
  d.heads_ = config.heads;
  d.residual_norm_ = config.residual_norm;
  return d;
}

Var Decoder::logits(Tape& tape, Var fused, const DecoderMemory& memory,
                    const SequenceBatch& inputs) const {
  const std::size_t n = inputs.batch, len = inputs.max_len;
  if (fused.value().rows() != n || memory.count != n) {
    throw DimensionError("decoder: " + std::to_string(n) + " input rows, " +
                         std::to_string(fused.value().rows()) + " fused rows, " +
                         std::to_string(memory.count) + " memory rows");
  }
  Var x = embed(tape, *embedding_, inputs);

  // Fused vector on the <bos> position of every row, zero elsewhere.
  std::vector<std::size_t> at_bos(n * len);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t t = 0; t < len; ++t) at_bos[r * len + t] = t == 0 ? r : n;
  }
  const Var with_zero[] = {fused, tape.constant(Tensor({1, fused.value().cols()}))};
  x = add(x, gather_rows(concat(with_zero, 0), at_bos));
  x = add_positional(tape, x, inputs);

  AttentionSpec self_spec;
  self_spec.batch = n;
  self_spec.query_len = len;
  self_spec.key_len = len;
  self_spec.heads = heads_;
  self_spec.key_mask = inputs.mask();
  self_spec.causal = true;

  AttentionSpec cross_spec;
  cross_spec.batch = n;
  cross_spec.query_len = len;
  cross_spec.key_len = memory.length;
  cross_spec.heads = heads_;
  cross_spec.key_mask = memory.mask;

  for (const DecoderLayer& layer : layers_) {
    Var s = layer.self_attention(tape, x, x, self_spec);
    x = residual_norm_ ? layer.norm1(tape, add(x, s)) : s;
    Var c = layer.cross_attention(tape, x, memory.rows, cross_spec);
    x = residual_norm_ ? layer.norm2(tape, add(x, c)) : c;
    Var f = layer.ffn(tape, x);
    x = residual_norm_ ? layer.norm3(tape, add(x, f)) : f;
  }
  return output_(tape, x);
}

}  // namespace mspt
