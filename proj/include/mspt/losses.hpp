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

#include "mspt/layers.hpp"

namespace mspt {

struct LossBreakdown {
  double kl = 0.0;
  double nll = 0.0;
  double reg = 0.0;
  double total = 0.0;
};

// total = kl + nll + reg.
LossBreakdown total_loss(double kl, double nll, double reg);

// Mean over rows of sum_v p(v) (log p(v) - log q(v)), both floored at
// kProbabilityFloor. Throws ContractError on shape mismatch.
Var kl_loss(Var post_dists, Var prior_dists);

// Mean over rows of -log p(target), floored. Throws ContractError for a
// length mismatch or a target outside the vocabulary.
Var nll_loss(Var dists, std::span<const std::size_t> targets);

// Bag-of-words reading of the regularizer: one softmax over
// `projection(h_user)` per product, scored against every target token of
// that product; mean -log p per token. targets[b] belongs to row b.
Var bow_regular_loss(Tape& tape, const Linear& projection, Var h_user,
                     const std::vector<std::vector<TokenId>>& targets);

}  // namespace mspt
