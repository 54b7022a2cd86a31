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

#include "mspt/generation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mspt/error.hpp"

namespace mspt {
namespace {

// Encoder outputs copied off their tape, reused by every decoding step.
struct FrozenItem {
  Tensor fused;
  Tensor title_memory;
  Tensor attr_memory;
  SequenceBatch title;
  SequenceBatch attributes;
};

FrozenItem freeze(const MsptModel& model, const Batch& batch, Conditioning conditioning) {
  Tape tape(false);
  ForwardState s = model.encode(tape, batch);
  return {model.conditioning(s, batch, conditioning).value(), s.item.title_memory.value(),
          s.item.attr_memory.value(), s.item.title, s.item.attributes};
}

// Decoder logits for each prefix, as a [rows*len x vocab] tensor.
Tensor prefix_logits(const MsptModel& model, const FrozenItem& item,
                     const std::vector<std::size_t>& product,
                     const std::vector<std::vector<TokenId>>& prefixes) {
  Tape tape(false);
  ItemState state;
  state.title_memory = tape.constant(item.title_memory);
  state.attr_memory = tape.constant(item.attr_memory);
  state.title = item.title;
  state.attributes = item.attributes;
  Var fused = gather_rows(tape.constant(item.fused), product);
  DecoderMemory memory = item_memory(fused, state, product);
  return model.decoder().logits(tape, fused, memory, SequenceBatch::pack(prefixes)).value();
}

std::vector<double> log_softmax_row(const Tensor& logits, std::size_t row) {
  const std::size_t v = logits.cols();
  const double* x = logits.raw() + row * v;
  const double m = *std::max_element(x, x + v);
  double z = 0.0;
  for (std::size_t i = 0; i < v; ++i) z += std::exp(x[i] - m);
  const double log_z = m + std::log(z);
  std::vector<double> out(v);
  for (std::size_t i = 0; i < v; ++i) out[i] = x[i] - log_z;
  return out;
}

// Log-probabilities of the next token after each (equal-length) prefix.
std::vector<std::vector<double>> next_log_probs(const MsptModel& model, const FrozenItem& item,
                                                const std::vector<std::size_t>& product,
                                                const std::vector<std::vector<TokenId>>& prefixes) {
  const Tensor logits = prefix_logits(model, item, product, prefixes);
  const std::size_t len = prefixes.front().size();
  std::vector<std::vector<double>> out;
  for (std::size_t n = 0; n < prefixes.size(); ++n) out.push_back(log_softmax_row(logits, n * len + len - 1));
  return out;
}

TokenId arg_max(const std::vector<double>& lp) {
  TokenId best = 0;
  for (TokenId v = 1; v < lp.size(); ++v) {
    if (lp[v] > lp[best]) best = v;
  }
  return best;
}

std::vector<GeneratedSequence> greedy(const MsptModel& model, const FrozenItem& item,
                                      std::size_t count, std::size_t max_length) {
  std::vector<GeneratedSequence> out(count);
  std::vector<std::vector<TokenId>> prefix(count, std::vector<TokenId>{Vocab::kBos});
  for (std::size_t step = 0; step < max_length; ++step) {
    std::vector<std::size_t> live;
    std::vector<std::vector<TokenId>> prefixes;
    for (std::size_t n = 0; n < count; ++n) {
      if (!out[n].finished) {
        live.push_back(n);
        prefixes.push_back(prefix[n]);
      }
    }
    if (live.empty()) break;
    const auto lps = next_log_probs(model, item, live, prefixes);
    for (std::size_t i = 0; i < live.size(); ++i) {
      GeneratedSequence& g = out[live[i]];
      const TokenId v = arg_max(lps[i]);
      g.log_prob += lps[i][v];
      if (v == Vocab::kEos) {
        g.finished = true;
      } else {
        g.tokens.push_back(v);
        prefix[live[i]].push_back(v);
      }
    }
  }
  return out;
}

double ranking_score(const GeneratedSequence& s, double alpha) {
  const double len = static_cast<double>(std::max<std::size_t>(1, s.tokens.size() + (s.finished ? 1 : 0)));
  return alpha == 0.0 ? s.log_prob : s.log_prob / std::pow(len, alpha);
}

bool better(const GeneratedSequence& a, const GeneratedSequence& b, double alpha) {
  const double sa = ranking_score(a, alpha), sb = ranking_score(b, alpha);
  if (sa != sb) return sa > sb;
  if (a.log_prob != b.log_prob) return a.log_prob > b.log_prob;
  return a.tokens < b.tokens;
}

GeneratedSequence beam(const MsptModel& model, const FrozenItem& item, std::size_t product,
                       const GenerationConfig& config, const GeneratedSequence& greedy_result) {
  struct Candidate {
    double log_prob;
    TokenId token;
    std::size_t parent;
  };
  std::vector<GeneratedSequence> live(1), finished;
  for (std::size_t step = 0; step < config.max_length && !live.empty(); ++step) {
    std::vector<std::vector<TokenId>> prefixes;
    for (const auto& h : live) {
      std::vector<TokenId> p = {Vocab::kBos};
      p.insert(p.end(), h.tokens.begin(), h.tokens.end());
      prefixes.push_back(std::move(p));
    }
    const auto lps = next_log_probs(model, item, std::vector<std::size_t>(live.size(), product), prefixes);
    std::vector<Candidate> cands;
    cands.reserve(live.size() * lps.front().size());
    for (std::size_t h = 0; h < live.size(); ++h) {
      for (TokenId v = 0; v < lps[h].size(); ++v) cands.push_back({live[h].log_prob + lps[h][v], v, h});
    }
    const std::size_t keep = std::min(config.beam_width, cands.size());
    std::partial_sort(cands.begin(), cands.begin() + static_cast<std::ptrdiff_t>(keep), cands.end(),
                      [](const Candidate& a, const Candidate& b) {
                        if (a.log_prob != b.log_prob) return a.log_prob > b.log_prob;
                        if (a.token != b.token) return a.token < b.token;
                        return a.parent < b.parent;
                      });
    std::vector<GeneratedSequence> next;
    for (std::size_t i = 0; i < keep; ++i) {
      GeneratedSequence h = live[cands[i].parent];
      h.log_prob = cands[i].log_prob;
      if (cands[i].token == Vocab::kEos) {
        h.finished = true;
        finished.push_back(std::move(h));
      } else {
        h.tokens.push_back(cands[i].token);
        next.push_back(std::move(h));
      }
    }
    live = std::move(next);
  }
  finished.insert(finished.end(), live.begin(), live.end());
  GeneratedSequence best = greedy_result;
  for (const auto& h : finished) {
    if (better(h, best, config.length_alpha)) best = h;
  }
  return best;
}

}  // namespace

std::vector<GeneratedSequence> generate(const MsptModel& model, const Batch& batch,
                                        const GenerationConfig& config) {
  config.validate();
  const FrozenItem item = freeze(model, batch, config.conditioning);
  std::vector<GeneratedSequence> out = greedy(model, item, batch.size, config.max_length);
  if (config.mode == DecodeMode::kBeam) {
    for (std::size_t n = 0; n < batch.size; ++n) out[n] = beam(model, item, n, config, out[n]);
  }
  return out;
}

double sequence_log_prob(const MsptModel& model, const Batch& batch, std::size_t index,
                         const std::vector<TokenId>& tokens, Conditioning conditioning) {
  if (index >= batch.size) throw ContractError("sequence_log_prob: product index out of range");
  const FrozenItem item = freeze(model, batch, conditioning);
  std::vector<TokenId> prefix = {Vocab::kBos};
  prefix.insert(prefix.end(), tokens.begin(), tokens.end());
  const Tensor logits = prefix_logits(model, item, {index}, {prefix});
  double total = 0.0;
  for (std::size_t t = 0; t < prefix.size(); ++t) {
    const TokenId next = t + 1 < prefix.size() ? prefix[t + 1] : Vocab::kEos;
    total += log_softmax_row(logits, t)[next];
  }
  return total;
}

Tensor decode_train(const MsptModel& model, const Batch& batch, Conditioning conditioning) {
  if (!batch.has_targets()) throw ContractError("decode_train needs a batch built with targets");
  const std::size_t limit = model.config().limits.reason + 1;
  for (const auto& t : batch.targets) {
    if (t.size() > limit) {
      throw ContractError("target of " + std::to_string(t.size()) + " steps exceeds the limit of " +
                          std::to_string(limit));
    }
  }
  Tape tape(false);
  ForwardState s = model.encode(tape, batch);
  Var fused = model.conditioning(s, batch, conditioning);
  std::vector<std::size_t> product(batch.size);
  for (std::size_t b = 0; b < batch.size; ++b) product[b] = b;
  DecoderMemory memory = item_memory(fused, s.item, product);
  return softmax(model.decoder().logits(tape, fused, memory, batch.decoder_inputs), -1).value();
}

}  // namespace mspt
