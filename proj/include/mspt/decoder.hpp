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

#include <span>
#include <vector>

#include "mspt/config.hpp"
#include "mspt/encoders.hpp"

namespace mspt {

// Cross-attention memory: `count` rows of `length` slots each.
struct DecoderMemory {
  Var rows;  // [count*length x d]
  std::size_t count = 0;
  std::size_t length = 0;
  std::vector<std::uint8_t> mask;
};

// Memory row n is [fused[n] | title tokens | attribute tokens] of item
// product[n]. Where item_visible[n] is 0 only the fused slot is unmasked.
DecoderMemory item_memory(Var fused, const ItemState& item,
                          std::span<const std::size_t> product,
                          std::span<const std::uint8_t> item_visible = {});

struct DecoderLayer {
  AttentionBlock self_attention;
  LayerNorm norm1;
  AttentionBlock cross_attention;
  LayerNorm norm2;
  FeedForward ffn;
  LayerNorm norm3;
};

// Transformer decoder: causal self-attention, cross-attention over the
// memory, feed-forward; the fused vector is also added to the <bos> slot.
class Decoder {
 public:
  Decoder() = default;
  // Uses `shared_embedding` when its width equals the model width, else
  // builds "decoder.embed".
  static Decoder create(ParameterStore& store, const ModelConfig& config, std::size_t vocab,
                        Parameter* shared_embedding, Rng& rng);

  // inputs: <bos> y1 .. y(T-1) per row, padded. Returns [rows*T x vocab]
  // logits, row n*T + t scoring the token after position t.
  Var logits(Tape& tape, Var fused, const DecoderMemory& memory, const SequenceBatch& inputs) const;

  Parameter& embedding() const { return *embedding_; }
  const std::vector<DecoderLayer>& layers() const { return layers_; }

 private:
  Parameter* embedding_ = nullptr;
  std::vector<DecoderLayer> layers_;
  Linear output_;
  std::size_t heads_ = 1;
  bool residual_norm_ = true;
};

}  // namespace mspt
