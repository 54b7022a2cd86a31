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

#include <optional>
#include <span>
#include <vector>

#include "mspt/config.hpp"
#include "mspt/corpus.hpp"
#include "mspt/decoder.hpp"
#include "mspt/encoders.hpp"
#include "mspt/fusion.hpp"
#include "mspt/losses.hpp"
#include "mspt/qa_attention.hpp"

namespace mspt {

// Padded model inputs for a group of products.
struct Batch {
  std::size_t size = 0;
  SequenceBatch title;
  SequenceBatch attributes;
  // Every QA pair of every product, flattened; empty when there are none.
  SequenceBatch qa;
  std::vector<std::size_t> qa_offsets;
  std::vector<std::uint8_t> has_qa;
  // Teacher forcing: <bos> y1 .. yn per product, and targets y1 .. yn <eos>.
  // Empty unless built with targets.
  SequenceBatch decoder_inputs;
  std::vector<std::vector<TokenId>> targets;

  bool has_targets() const { return !targets.empty(); }
};

// Throws ContractError if `with_targets` and an example has no reason.
Batch make_batch(std::span<const EncodedExample* const> examples, bool with_targets);
Batch make_batch(std::span<const EncodedExample> examples, bool with_targets);

struct ForwardState {
  ItemState item;
  std::optional<UserState> user;
  Var prior;
  // Computed for every product when the model uses QA; rows of products
  // without pairs are never consumed.
  Var posterior;
};

struct LossVars {
  Var kl;
  Var nll;
  Var reg;
  Var total;
  LossBreakdown values() const {
    return {kl.item(), nll.item(), reg.item(), total.item()};
  }
};

class MsptModel {
 public:
  // Parameters are initialized deterministically from `seed`.
  MsptModel(const ModelConfig& config, std::size_t vocab_size, std::uint64_t seed);

  const ModelConfig& config() const { return config_; }
  std::size_t vocab_size() const { return vocab_size_; }
  ParameterStore& parameters() { return store_; }
  const ParameterStore& parameters() const { return store_; }

  ForwardState encode(Tape& tape, const Batch& batch) const;

  // KL between posterior- and prior-conditioned step distributions (products
  // with QA), NLL of the training-conditioned decoder (posterior when QA
  // exists, else prior), and the regularizer from H_user alone.
  LossVars loss(Tape& tape, const Batch& batch) const;

  // Per-product decoder conditioning at inference time.
  Var conditioning(const ForwardState& state, const Batch& batch, Conditioning mode) const;

  const ItemEncoder& item_encoder() const { return item_; }
  const BiLstm& qa_encoder() const;
  const ProductGuidedAttention& attention() const { return pga_; }
  const Fusion& fusion() const { return fusion_; }
  const Decoder& decoder() const { return decoder_; }
  Parameter& embedding() const { return *embedding_; }

 private:
  ModelConfig config_;
  std::size_t vocab_size_;
  ParameterStore store_;
  Parameter* embedding_ = nullptr;
  ItemEncoder item_;
  BiLstm qa_lstm_;
  ProductGuidedAttention pga_;
  Fusion fusion_;
  Decoder decoder_;
  std::optional<Linear> reg_projection_;
};

}  // namespace mspt
