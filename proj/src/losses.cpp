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

#include "mspt/losses.hpp"

#include "mspt/error.hpp"

namespace mspt {

LossBreakdown total_loss(double kl, double nll, double reg) {
  return {kl, nll, reg, kl + nll + reg};
}

Var kl_loss(Var post_dists, Var prior_dists) {
  if (post_dists.shape() != prior_dists.shape() || post_dists.shape().size() != 2) {
    throw ContractError("kl_loss: distributions " + to_string(post_dists.shape()) + " vs " +
                        to_string(prior_dists.shape()));
  }
  const std::size_t rows = post_dists.value().rows();
  if (rows == 0) throw ContractError("kl_loss: no steps");
  Var log_ratio = sub(log_floor(post_dists), log_floor(prior_dists));
  return scale(sum(mul(post_dists, log_ratio)), 1.0 / static_cast<double>(rows));
}

Var nll_loss(Var dists, std::span<const std::size_t> targets) {
  if (dists.shape().size() != 2 || dists.value().rows() != targets.size()) {
    throw ContractError("nll_loss: " + std::to_string(targets.size()) + " targets for " +
                        to_string(dists.shape()) + " distributions");
  }
  if (targets.empty()) throw ContractError("nll_loss: no steps");
  const std::size_t vocab = dists.value().cols();
  for (std::size_t t : targets) {
    if (t >= vocab) {
      throw ContractError("nll_loss: target id " + std::to_string(t) + " outside vocabulary of " +
                          std::to_string(vocab));
    }
  }
  return scale(sum(log_floor(pick(dists, targets))), -1.0 / static_cast<double>(targets.size()));
}

Var bow_regular_loss(Tape& tape, const Linear& projection, Var h_user,
                     const std::vector<std::vector<TokenId>>& targets) {
  if (h_user.value().rows() != targets.size()) {
    throw ContractError("bow_regular_loss: " + std::to_string(targets.size()) +
                        " target lists for " + std::to_string(h_user.value().rows()) + " users");
  }
  Var probs = softmax(projection(tape, h_user), -1);
  std::vector<std::size_t> rows, ids;
  for (std::size_t b = 0; b < targets.size(); ++b) {
    for (TokenId id : targets[b]) {
      rows.push_back(b);
      ids.push_back(id);
    }
  }
  return nll_loss(gather_rows(probs, rows), ids);
}

}  // namespace mspt
