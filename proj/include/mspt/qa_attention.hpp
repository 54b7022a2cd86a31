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

#include "mspt/layers.hpp"

namespace mspt {

struct UserState {
  // sum_k delta_k h_QA^k per product, [batch x d]; zero rows for products
  // without QA pairs.
  Var h_user;
  // Attention weights over each product's pairs, flat [total pairs].
  Var delta;
  // h_QA^k, [total pairs x d].
  Var qa_vectors;
  // Pairs of product b are rows offsets[b] .. offsets[b+1].
  std::vector<std::size_t> offsets;
};

// Pooled BiLSTM vector of each "question <sep> answer" sequence.
Var encode_qa_pairs(Tape& tape, const BiLstm& lstm, Parameter& table, const SequenceBatch& pairs);

// score_k = (H_item W1 + b1) . (h_QA^k W2 + b2); delta = softmax over each
// product's pairs; H_user = sum_k delta_k h_QA^k. With `uniform` set the
// scores are skipped and delta_k = 1/n (no projection parameters exist).
class ProductGuidedAttention {
 public:
  ProductGuidedAttention() = default;
  static ProductGuidedAttention create(ParameterStore& store, const std::string& prefix,
                                       std::size_t dim, Rng& rng);
  static ProductGuidedAttention uniform_weights(std::size_t dim);

  UserState operator()(Tape& tape, Var h_item, Var qa_vectors,
                       std::vector<std::size_t> offsets) const;

  bool uniform() const { return item_proj_.weight == nullptr; }
  const Linear& item_projection() const { return item_proj_; }
  const Linear& qa_projection() const { return qa_proj_; }

 private:
  Linear item_proj_;
  Linear qa_proj_;
  std::size_t dim_ = 0;
};

}  // namespace mspt
