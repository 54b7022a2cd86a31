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

#include <cstdint>
#include <string>
#include <vector>

#include "mspt/ops.hpp"
#include "mspt/parameters.hpp"
#include "mspt/text.hpp"

namespace mspt {

// Padded batch of token sequences, batch-major: row b * max_len + t.
struct SequenceBatch {
  std::size_t batch = 0;
  std::size_t max_len = 0;
  std::vector<std::size_t> lengths;
  std::vector<TokenId> ids;

  // Throws ContractError on an empty sequence.
  static SequenceBatch pack(const std::vector<std::vector<TokenId>>& sequences);
  std::size_t rows() const { return batch * max_len; }
  // 1 for real tokens, 0 for padding.
  std::vector<std::uint8_t> mask() const;
  std::vector<std::size_t> id_rows() const { return {ids.begin(), ids.end()}; }
};

// x W + b over the rows of x.
struct Linear {
  Parameter* weight = nullptr;
  Parameter* bias = nullptr;

  static Linear create(ParameterStore& store, const std::string& name, std::size_t in,
                       std::size_t out, Rng& rng, bool with_bias = true);
  Var operator()(Tape& tape, Var x) const;
  std::size_t in() const { return weight->value.dim(0); }
  std::size_t out() const { return weight->value.dim(1); }
};

// Gain starts at 1 and bias at 0 so a fresh layer is a pure normalization.
struct LayerNorm {
  Parameter* gain = nullptr;
  Parameter* bias = nullptr;

  static LayerNorm create(ParameterStore& store, const std::string& name, std::size_t dim);
  Var operator()(Tape& tape, Var x) const;
};

// Rows of `table` for every id of the batch (padding rows included).
// Throws ContractError for ids outside the table.
Var embed(Tape& tape, Parameter& table, const SequenceBatch& batch);

// Single-direction LSTM weights; gate columns are ordered i, f, g, o.
struct LstmWeights {
  Parameter* input = nullptr;
  Parameter* recurrent = nullptr;
  Parameter* bias = nullptr;
};

struct BiLstmOutput {
  // [batch*max_len x 2h], forward state then backward state per token;
  // padding rows are exactly zero.
  Var states;
  // [batch x 2h]: final forward state, final backward state.
  Var pooled;
};

class BiLstm {
 public:
  BiLstm() = default;
  static BiLstm create(ParameterStore& store, const std::string& prefix, std::size_t input_dim,
                       std::size_t hidden, Rng& rng);

  // `inputs` is [batch*max_len x input_dim] laid out like `shape`. The
  // backward direction reads each sequence from its own last real token.
  BiLstmOutput operator()(Tape& tape, Var inputs, const SequenceBatch& shape) const;

  std::size_t hidden() const { return hidden_; }
  const LstmWeights& forward_weights() const { return fwd_; }
  const LstmWeights& backward_weights() const { return bwd_; }

 private:
  LstmWeights fwd_;
  LstmWeights bwd_;
  std::size_t hidden_ = 0;
};

// PE(pos, 2i) = sin(pos / 10000^(2i/d)), PE(pos, 2i+1) = cos(same angle).
// Throws ConfigError for odd d.
Tensor positional_encoding(std::size_t length, std::size_t dim);

// Adds the encoding for each row's position within its sequence.
Var add_positional(Tape& tape, Var x, const SequenceBatch& shape);

// Mean over the real tokens of each sequence: [batch x d].
Var mean_pool(Tape& tape, Var x, const SequenceBatch& shape);

// Projections around the fused multi-head attention op.
struct AttentionBlock {
  Linear query;
  Linear key;
  Linear value;
  Linear output;
  std::size_t heads = 1;

  static AttentionBlock create(ParameterStore& store, const std::string& prefix, std::size_t dim,
                               std::size_t heads, Rng& rng);
  Var operator()(Tape& tape, Var queries, Var memory, const AttentionSpec& spec,
                 Tensor* weights = nullptr) const;
};

struct FeedForward {
  Linear inner;
  Linear outer;

  static FeedForward create(ParameterStore& store, const std::string& prefix, std::size_t dim,
                            std::size_t width, Rng& rng);
  // relu(x W1 + b1) W2 + b2
  Var operator()(Tape& tape, Var x) const;
};

// E' = FFN(MHA(E, E, E)), each sublayer wrapped as LN(x + sublayer(x)) when
// residual_norm is set.
struct EncoderLayer {
  AttentionBlock attention;
  LayerNorm norm1;
  FeedForward ffn;
  LayerNorm norm2;
  bool residual_norm = true;

  static EncoderLayer create(ParameterStore& store, const std::string& prefix, std::size_t dim,
                             std::size_t heads, std::size_t ffn_width, bool residual_norm,
                             Rng& rng);
  Var operator()(Tape& tape, Var x, const SequenceBatch& shape, Tensor* weights = nullptr) const;
};

}  // namespace mspt
