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

#include "mspt/qa_attention.hpp"

#include "mspt/error.hpp"

namespace mspt {

Var encode_qa_pairs(Tape& tape, const BiLstm& lstm, Parameter& table, const SequenceBatch& pairs) {
  return lstm(tape, embed(tape, table, pairs), pairs).pooled;
}

ProductGuidedAttention ProductGuidedAttention::create(ParameterStore& store,
                                                      const std::string& prefix, std::size_t dim,
                                                      Rng& rng) {
  ProductGuidedAttention p;
  p.item_proj_ = Linear::create(store, prefix + ".item", dim, dim, rng);
  p.qa_proj_ = Linear::create(store, prefix + ".qa", dim, dim, rng);
  p.dim_ = dim;
  return p;
}

ProductGuidedAttention ProductGuidedAttention::uniform_weights(std::size_t dim) {
  ProductGuidedAttention p;
  p.dim_ = dim;
  return p;
}

UserState ProductGuidedAttention::operator()(Tape& tape, Var h_item, Var qa_vectors,
                                             std::vector<std::size_t> offsets) const {
  const std::size_t batch = h_item.value().rows();
  if (offsets.size() != batch + 1 || offsets.front() != 0) {
    throw ContractError("product-guided attention: offsets must have batch + 1 entries from 0");
  }
  const std::size_t pairs = offsets.back();
  UserState u;
  u.offsets = offsets;
  u.qa_vectors = qa_vectors;
  if (pairs == 0) {
    u.h_user = tape.constant(Tensor({batch, dim_}));
    u.delta = tape.constant(Tensor(Shape{0}));
    return u;
  }
  if (qa_vectors.value().rows() != pairs) {
    throw DimensionError("product-guided attention: " + std::to_string(qa_vectors.value().rows()) +
                         " QA vectors for offsets ending at " + std::to_string(pairs));
  }
  if (uniform()) {
    Tensor w(Shape{pairs});
    for (std::size_t b = 0; b < batch; ++b) {
      const std::size_t n = offsets[b + 1] - offsets[b];
      for (std::size_t k = offsets[b]; k < offsets[b + 1]; ++k) w.data()[k] = 1.0 / static_cast<double>(n);
    }
    u.delta = tape.constant(std::move(w));
  } else {
    std::vector<std::size_t> owner(pairs);
    for (std::size_t b = 0; b < batch; ++b) {
      for (std::size_t k = offsets[b]; k < offsets[b + 1]; ++k) owner[k] = b;
    }
    Var item_side = gather_rows(item_proj_(tape, h_item), owner);
    Var qa_side = qa_proj_(tape, qa_vectors);
    Var scores = sum_axis(mul(item_side, qa_side), 1);
    u.delta = segment_softmax(scores, offsets);
  }
  u.h_user = segment_sum(scale_rows(qa_vectors, u.delta), offsets);
  return u;
}

}  // namespace mspt
