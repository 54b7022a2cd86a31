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

#include <vector>

#include "mspt/config.hpp"
#include "mspt/layers.hpp"

namespace mspt {

struct SequenceEncoderOutput {
  // Per-token states after the self-attention stack, [batch*max_len x d].
  Var memory;
  // Mean of `memory` over real tokens, [batch x d].
  Var pooled;
  BiLstmOutput lstm;
};

// Embedding -> BiLSTM -> positional encoding -> N self-attention layers.
class SequenceEncoder {
 public:
  SequenceEncoder() = default;
  static SequenceEncoder create(ParameterStore& store, const std::string& prefix,
                                const ModelConfig& config, Rng& rng);

  // `attention_weights`, when given, receives one tensor per layer.
  SequenceEncoderOutput operator()(Tape& tape, Parameter& table, const SequenceBatch& batch,
                                   std::vector<Tensor>* attention_weights = nullptr) const;

  const BiLstm& lstm() const { return lstm_; }
  const std::vector<EncoderLayer>& layers() const { return layers_; }

 private:
  BiLstm lstm_;
  std::vector<EncoderLayer> layers_;
};

struct ItemState {
  // lambda1 * title_pooled + (1 - lambda1) * attr_pooled, [batch x d].
  Var h_item;
  Var title_pooled;
  Var attr_pooled;
  Var title_memory;
  Var attr_memory;
  SequenceBatch title;
  SequenceBatch attributes;
};

// H = lambda1 * title + (1 - lambda1) * attributes with a constant weight.
// Throws ConfigError outside [0, 1].
Var combine_item(Var title_pooled, Var attr_pooled, double lambda1);

class ItemEncoder {
 public:
  ItemEncoder() = default;
  static ItemEncoder create(ParameterStore& store, const ModelConfig& config, Rng& rng);

  ItemState operator()(Tape& tape, Parameter& table, const SequenceBatch& title,
                       const SequenceBatch& attributes) const;

  // Uses the learned weight when configured, else the constant lambda1.
  Var combine(Tape& tape, Var title_pooled, Var attr_pooled) const;

  const SequenceEncoder& title() const { return title_; }
  const SequenceEncoder& attributes() const { return attributes_; }

 private:
  SequenceEncoder title_;
  SequenceEncoder attributes_;
  double lambda1_ = 0.5;
  // sigmoid(logit) replaces lambda1 when learnable.
  Parameter* lambda_logit_ = nullptr;
};

}  // namespace mspt
