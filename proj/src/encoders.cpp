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

#include "mspt/encoders.hpp"

#include <algorithm>
#include <cmath>

#include "mspt/error.hpp"

namespace mspt {

SequenceEncoder SequenceEncoder::create(ParameterStore& store, const std::string& prefix,
                                        const ModelConfig& config, Rng& rng) {
  SequenceEncoder e;
  e.lstm_ = BiLstm::create(store, prefix + ".lstm", config.embed_dim, config.hidden_dim, rng);
  for (std::size_t l = 0; l < config.encoder_layers; ++l) {
    e.layers_.push_back(EncoderLayer::create(store, prefix + ".layer" + std::to_string(l),
                                             config.model_dim(), config.heads,
                                             config.ffn_width(), config.residual_norm, rng));
  }
  return e;
}

SequenceEncoderOutput SequenceEncoder::operator()(Tape& tape, Parameter& table,
                                                  const SequenceBatch& batch,
                                                  std::vector<Tensor>* attention_weights) const {
  SequenceEncoderOutput out;
  out.lstm = lstm_(tape, embed(tape, table, batch), batch);
  Var x = add_positional(tape, out.lstm.states, batch);
  for (const EncoderLayer& layer : layers_) {
    Tensor w;
    x = layer(tape, x, batch, attention_weights ? &w : nullptr);
    if (attention_weights) attention_weights->push_back(std::move(w));
  }
  out.memory = x;
  out.pooled = mean_pool(tape, x, batch);
  return out;
}

Var combine_item(Var title_pooled, Var attr_pooled, double lambda1) {
  if (!(lambda1 >= 0.0 && lambda1 <= 1.0)) {
    throw ConfigError("lambda1 = " + std::to_string(lambda1) + " outside [0,1]");
  }
  return add(scale(title_pooled, lambda1), scale(attr_pooled, 1.0 - lambda1));
}

ItemEncoder ItemEncoder::create(ParameterStore& store, const ModelConfig& config, Rng& rng) {
  ItemEncoder e;
  e.title_ = SequenceEncoder::create(store, "item.title", config, rng);
  e.attributes_ = SequenceEncoder::create(store, "item.attr", config, rng);
  e.lambda1_ = config.lambda1;
  if (config.learn_lambda1) {
    // Start at the configured weight; clamp so the logit stays finite.
    const double p = std::clamp(config.lambda1, 1e-3, 1.0 - 1e-3);
    e.lambda_logit_ = &store.create("item.lambda1_logit", Tensor::vector({std::log(p / (1.0 - p))}));
  }
  return e;
}

Var ItemEncoder::combine(Tape& tape, Var title_pooled, Var attr_pooled) const {
  if (!lambda_logit_) return combine_item(title_pooled, attr_pooled, lambda1_);
  Var w = sigmoid(tape.param(*lambda_logit_));
  Var one_minus = add_scalar(scale(w, -1.0), 1.0);
  return add(mul_scalar(title_pooled, w), mul_scalar(attr_pooled, one_minus));
}

ItemState ItemEncoder::operator()(Tape& tape, Parameter& table, const SequenceBatch& title,
                                  const SequenceBatch& attributes) const {
  if (title.batch != attributes.batch) {
    throw DimensionError("item encoder: " + std::to_string(title.batch) + " titles vs " +
                         std::to_string(attributes.batch) + " attribute lists");
  }
  ItemState s;
  SequenceEncoderOutput t = title_(tape, table, title);
  SequenceEncoderOutput a = attributes_(tape, table, attributes);
  s.title_pooled = t.pooled;
  s.attr_pooled = a.pooled;
  s.title_memory = t.memory;
  s.attr_memory = a.memory;
  s.h_item = combine(tape, t.pooled, a.pooled);
  s.title = title;
  s.attributes = attributes;
  return s;
}

}  // namespace mspt
