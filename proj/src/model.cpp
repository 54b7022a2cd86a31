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

#include "mspt/model.hpp"

#include "mspt/error.hpp"

namespace mspt {

Batch make_batch(std::span<const EncodedExample* const> examples, bool with_targets) {
  if (examples.empty()) throw ContractError("cannot build an empty batch");
  Batch b;
  b.size = examples.size();
  std::vector<std::vector<TokenId>> titles, attrs, pairs, inputs;
  b.qa_offsets.push_back(0);
  for (const EncodedExample* e : examples) {
    titles.push_back(e->title);
    attrs.push_back(e->attributes);
    for (const auto& qa : e->qa) pairs.push_back(qa);
    b.qa_offsets.push_back(pairs.size());
    b.has_qa.push_back(!e->qa.empty());
    if (with_targets) {
      if (e->reason.size() < 2) {
        throw ContractError("example " + e->id + " has no reference reason to train on");
      }
      inputs.emplace_back(e->reason.begin(), e->reason.end() - 1);
      b.targets.emplace_back(e->reason.begin() + 1, e->reason.end());
    }
  }
  b.title = SequenceBatch::pack(titles);
  b.attributes = SequenceBatch::pack(attrs);
  if (!pairs.empty()) b.qa = SequenceBatch::pack(pairs);
  if (with_targets) b.decoder_inputs = SequenceBatch::pack(inputs);
  return b;
}

Batch make_batch(std::span<const EncodedExample> examples, bool with_targets) {
  std::vector<const EncodedExample*> ptrs;
  for (const auto& e : examples) ptrs.push_back(&e);
  return make_batch(std::span<const EncodedExample* const>(ptrs), with_targets);
}

MsptModel::MsptModel(const ModelConfig& config, std::size_t vocab_size, std::uint64_t seed)
    : config_(config), vocab_size_(vocab_size) {
  config_.validate();
  if (vocab_size <= Vocab::kReserved) throw ConfigError("vocabulary has no content tokens");
  Rng rng(seed);
  embedding_ = &store_.create("embed.table", {vocab_size, config.embed_dim}, config.embed_dim, rng);
  item_ = ItemEncoder::create(store_, config_, rng);
  if (config_.uses_qa()) {
    if (!config_.share_qa_encoder) {
      qa_lstm_ = BiLstm::create(store_, "user.qa.lstm", config.embed_dim, config.hidden_dim, rng);
    }
    pga_ = config_.variant == Variant::kNoPga
               ? ProductGuidedAttention::uniform_weights(config_.model_dim())
               : ProductGuidedAttention::create(store_, "user.pga", config_.model_dim(), rng);
  }
  fusion_ = Fusion::create(store_, config_, rng);
  decoder_ = Decoder::create(store_, config_, vocab_size, embedding_, rng);
  if (config_.uses_qa() && config_.reg_mode == RegMode::kBagOfWords) {
    reg_projection_ = Linear::create(store_, "reg.out", config_.model_dim(), vocab_size, rng);
  }
}

const BiLstm& MsptModel::qa_encoder() const {
  if (!config_.uses_qa()) throw ContractError("this model variant has no QA encoder");
  return config_.share_qa_encoder ? item_.title().lstm() : qa_lstm_;
}

ForwardState MsptModel::encode(Tape& tape, const Batch& batch) const {
  ForwardState s;
  s.item = item_(tape, *embedding_, batch.title, batch.attributes);
  s.prior = fusion_.prior(tape, s.item.h_item);
  if (config_.uses_qa()) {
    Var qa_vectors;
    if (batch.qa.batch > 0) qa_vectors = encode_qa_pairs(tape, qa_encoder(), *embedding_, batch.qa);
    s.user = pga_(tape, s.item.h_item, qa_vectors, batch.qa_offsets);
    s.posterior = fusion_.posterior(tape, s.item.h_item, s.user->h_user);
  }
  return s;
}

Var MsptModel::conditioning(const ForwardState& state, const Batch& batch, Conditioning mode) const {
  if (mode == Conditioning::kPrior || !config_.uses_qa()) return state.prior;
  return select_rows(batch.has_qa, state.posterior, state.prior);
}

LossVars MsptModel::loss(Tape& tape, const Batch& batch) const {
  if (!batch.has_targets()) throw ContractError("loss needs a batch built with targets");
  const std::size_t limit = config_.limits.reason + 1;
  for (const auto& t : batch.targets) {
    if (t.size() > limit) {
      throw ContractError("target of " + std::to_string(t.size()) + " steps exceeds the limit of " +
                          std::to_string(limit));
    }
  }
  const ForwardState s = encode(tape, batch);
  const std::size_t B = batch.size;

  std::vector<std::size_t> qa_rows;
  if (config_.uses_qa()) {
    for (std::size_t b = 0; b < B; ++b) {
      if (batch.has_qa[b]) qa_rows.push_back(b);
    }
  }
  const bool with_user = !qa_rows.empty();
  const bool autoregressive_reg = with_user && config_.reg_mode == RegMode::kAutoregressive;

  // Decoder rows, stacked: training conditioning for every product, then
  // the prior of QA products (KL), then H_user alone (regularizer).
  std::vector<Var> fused_parts = {with_user ? conditioning(s, batch, Conditioning::kPosteriorIfAvailable)
                                            : s.prior};
  std::vector<std::size_t> product(B);
  for (std::size_t b = 0; b < B; ++b) product[b] = b;
  std::vector<std::uint8_t> visible(B, 1);
  if (with_user) {
    fused_parts.push_back(gather_rows(s.prior, qa_rows));
    product.insert(product.end(), qa_rows.begin(), qa_rows.end());
    visible.insert(visible.end(), qa_rows.size(), 1);
  }
  if (autoregressive_reg) {
    fused_parts.push_back(gather_rows(s.user->h_user, qa_rows));
    product.insert(product.end(), qa_rows.begin(), qa_rows.end());
    visible.insert(visible.end(), qa_rows.size(), 0);
  }
  Var fused = fused_parts.size() == 1 ? fused_parts[0] : concat(fused_parts, 0);
  DecoderMemory memory = item_memory(fused, s.item, product, visible);

  std::vector<std::vector<TokenId>> inputs;
  for (std::size_t p : product) {
    const std::size_t len = batch.decoder_inputs.lengths[p];
    const auto* row = batch.decoder_inputs.ids.data() + p * batch.decoder_inputs.max_len;
    inputs.emplace_back(row, row + len);
  }
  const SequenceBatch in = SequenceBatch::pack(inputs);
  Var dists = softmax(decoder_.logits(tape, fused, memory, in), -1);

  const std::size_t T = in.max_len;
  // Valid step rows of decoder row n, and the matching gold tokens.
  auto steps = [&](std::size_t n, std::vector<std::size_t>& rows, std::vector<std::size_t>* gold) {
    const auto& target = batch.targets[product[n]];
    for (std::size_t t = 0; t < target.size(); ++t) {
      rows.push_back(n * T + t);
      if (gold) gold->push_back(target[t]);
    }
  };

  LossVars out;
  std::vector<std::size_t> rows, gold;
  for (std::size_t n = 0; n < B; ++n) steps(n, rows, &gold);
  out.nll = nll_loss(gather_rows(dists, rows), gold);

  if (with_user) {
    std::vector<std::size_t> post_rows, prior_rows;
    for (std::size_t j = 0; j < qa_rows.size(); ++j) {
      steps(qa_rows[j], post_rows, nullptr);
      steps(B + j, prior_rows, nullptr);
    }
    Var post = gather_rows(dists, post_rows);
    if (config_.detach_posterior) post = detach(post);
    out.kl = kl_loss(post, gather_rows(dists, prior_rows));

    if (autoregressive_reg) {
      std::vector<std::size_t> reg_rows, reg_gold;
      for (std::size_t j = 0; j < qa_rows.size(); ++j) steps(B + qa_rows.size() + j, reg_rows, &reg_gold);
      out.reg = nll_loss(gather_rows(dists, reg_rows), reg_gold);
    } else {
      std::vector<std::vector<TokenId>> targets;
      for (std::size_t b : qa_rows) targets.push_back(batch.targets[b]);
      out.reg = bow_regular_loss(tape, *reg_projection_, gather_rows(s.user->h_user, qa_rows), targets);
    }
  } else {
    out.kl = tape.constant(Tensor::scalar(0.0));
    out.reg = tape.constant(Tensor::scalar(0.0));
  }
  out.total = add(add(scale(out.kl, config_.kl_weight), scale(out.nll, config_.nll_weight)),
                  scale(out.reg, config_.reg_weight));
  return out;
}

}  // namespace mspt
