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

#include "mspt/model.hpp"

namespace mspt {

struct GeneratedSequence {
  // Generated tokens without <bos>/<eos>.
  std::vector<TokenId> tokens;
  // Sum of log p over the generated steps, <eos> included when produced.
  double log_prob = 0.0;
  bool finished = false;
};

// Decodes every product of `batch` (targets are ignored). Greedy picks the
// arg-max token, ties going to the lowest id. Beam search keeps the
// `beam_width` best expansions per step, ranked by log-probability with
// ties broken by lower token id and then by older hypothesis; finished
// hypotheses leave the beam. The answer is the best of the finished
// hypotheses and the greedy sequence under logp / length^alpha, so beam
// search never returns a sequence less likely than greedy when alpha = 0.
std::vector<GeneratedSequence> generate(const MsptModel& model, const Batch& batch,
                                        const GenerationConfig& config);

// Log-probability of `tokens` followed by <eos> for product `index`.
double sequence_log_prob(const MsptModel& model, const Batch& batch, std::size_t index,
                         const std::vector<TokenId>& tokens, Conditioning conditioning);

// Per-step distributions of teacher-forced decoding (rows sum to 1), shaped
// [products * steps x vocab] with steps = longest target.
Tensor decode_train(const MsptModel& model, const Batch& batch, Conditioning conditioning);

}  // namespace mspt
