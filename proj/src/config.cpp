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

#include "mspt/config.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include "mspt/error.hpp"
#include "mspt/text.hpp"

namespace mspt {
namespace {

using nlohmann::json;

// Reads known keys of one JSON object and rejects the rest.
class Reader {
 public:
  Reader(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw ConfigError(where_ + " must be an object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) return;
    try {
      out = it->get<T>();
    } catch (const json::exception&) {
      throw ConfigError(where_ + "." + key + " has the wrong type");
    }
  }

  template <typename E>
  void get_enum(const char* key, E& out, E (*parse)(const std::string&)) {
    std::string s;
    bool present = j_.contains(key);
    get(key, s);
    if (present) out = parse(s);
  }

  const json* child(const char* key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.count(key)) throw ConfigError("unknown config key " + where_ + "." + key);
    }
  }

 private:
  const json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

template <typename E>
E parse_named(const std::string& s, std::initializer_list<std::pair<const char*, E>> names,
              const char* what) {
  std::string options;
  for (const auto& [name, value] : names) {
    if (s == name) return value;
    options += options.empty() ? name : std::string("|") + name;
  }
  throw ConfigError("unknown " + std::string(what) + " '" + s + "' (expected " + options + ")");
}

json limits_json(const TokenLimits& l) {
  return {{"title", l.title},   {"attributes", l.attributes}, {"question", l.question},
          {"answer", l.answer}, {"reason", l.reason},         {"max_qa_pairs", l.max_qa_pairs}};
}

void read_limits(const json& j, TokenLimits& l) {
  Reader r(j, "model.limits");
  r.get("title", l.title);
  r.get("attributes", l.attributes);
  r.get("question", l.question);
  r.get("answer", l.answer);
  r.get("reason", l.reason);
  r.get("max_qa_pairs", l.max_qa_pairs);
  r.finish();
}

}  // namespace

std::string to_string(Variant v) {
  switch (v) {
    case Variant::kFull: return "full";
    case Variant::kNoQa: return "no-qa";
    case Variant::kNoPga: return "no-pga";
  }
  return "?";
}
std::string to_string(FusionMode m) { return m == FusionMode::kHard ? "hard" : "soft"; }
std::string to_string(Activation a) { return a == Activation::kTanh ? "tanh" : "sigmoid"; }
std::string to_string(Conditioning c) {
  return c == Conditioning::kPrior ? "prior" : "posterior-if-available";
}
std::string to_string(RegMode m) {
  return m == RegMode::kAutoregressive ? "autoregressive" : "bow";
}
std::string to_string(DecodeMode m) { return m == DecodeMode::kGreedy ? "greedy" : "beam"; }

Variant parse_variant(const std::string& s) {
  return parse_named<Variant>(
      s, {{"full", Variant::kFull}, {"no-qa", Variant::kNoQa}, {"no-pga", Variant::kNoPga}},
      "variant");
}
FusionMode parse_fusion_mode(const std::string& s) {
  return parse_named<FusionMode>(s, {{"hard", FusionMode::kHard}, {"soft", FusionMode::kSoft}},
                                 "fusion mode");
}
Activation parse_activation(const std::string& s) {
  return parse_named<Activation>(
      s, {{"tanh", Activation::kTanh}, {"sigmoid", Activation::kSigmoid}}, "activation");
}
Conditioning parse_conditioning(const std::string& s) {
  return parse_named<Conditioning>(s,
                                   {{"prior", Conditioning::kPrior},
                                    {"posterior-if-available", Conditioning::kPosteriorIfAvailable}},
                                   "conditioning");
}
RegMode parse_reg_mode(const std::string& s) {
  return parse_named<RegMode>(
      s, {{"autoregressive", RegMode::kAutoregressive}, {"bow", RegMode::kBagOfWords}},
      "reg mode");
}
DecodeMode parse_decode_mode(const std::string& s) {
  return parse_named<DecodeMode>(s, {{"greedy", DecodeMode::kGreedy}, {"beam", DecodeMode::kBeam}},
                                 "decode mode");
}

void ModelConfig::validate() const {
  if (embed_dim == 0 || hidden_dim == 0) throw ConfigError("model dims must be positive");
  if (model_dim() % 2 != 0) throw ConfigError("model width must be even for positional encoding");
  if (heads == 0 || model_dim() % heads != 0) {
    throw ConfigError("model width " + std::to_string(model_dim()) + " not divisible by " +
                      std::to_string(heads) + " heads");
  }
  if (encoder_layers == 0 || decoder_layers == 0) throw ConfigError("need at least one layer");
  if (!(lambda1 >= 0.0 && lambda1 <= 1.0)) throw ConfigError("lambda1 must lie in [0,1]");
  if (!(lambda2 >= 0.0 && lambda2 <= 1.0)) throw ConfigError("lambda2 must lie in [0,1]");
  for (double w : {kl_weight, nll_weight, reg_weight}) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw ConfigError("loss weights must be finite and >= 0");
  }
  if (limits.title == 0 || limits.attributes == 0 || limits.question == 0 ||
      limits.answer == 0 || limits.reason == 0) {
    throw ConfigError("token limits must be positive");
  }
}

void GenerationConfig::validate() const {
  if (beam_width == 0) throw ConfigError("beam width must be >= 1");
  if (max_length == 0) throw ConfigError("max length must be >= 1");
  if (!std::isfinite(length_alpha) || length_alpha < 0) throw ConfigError("length_alpha must be >= 0");
}

void TrainConfig::validate() const {
  if (batch_size == 0) throw ConfigError("batch size must be >= 1");
  if (!(optimizer.learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
  if (eval_every == 0) throw ConfigError("eval_every must be >= 1");
  if (selection_metric != "rouge1" && selection_metric != "rouge2" &&
      selection_metric != "rougeL" && selection_metric != "bleu1" && selection_metric != "bleu2") {
    throw ConfigError("unknown selection metric '" + selection_metric + "'");
  }
}

void ExperimentConfig::validate() const {
  model.validate();
  generation.validate();
  train.validate();
  synthetic.validate();
}

json to_json(const SyntheticCorpusSpec& s) {
  return {{"products", s.products},
          {"seed", s.seed},
          {"aspect_pool", s.aspect_pool},
          {"categories", s.categories},
          {"brands", s.brands},
          {"aspects_per_category", s.aspects_per_category},
          {"aspects_min", s.aspects_min},
          {"aspects_max", s.aspects_max},
          {"qa_only_fraction", s.qa_only_fraction},
          {"zero_qa_fraction", s.zero_qa_fraction},
          {"title_tokens", s.title_tokens},
          {"attribute_tokens", s.attribute_tokens},
          {"question_tokens", s.question_tokens},
          {"answer_tokens", s.answer_tokens},
          {"qa_pairs_mean", s.qa_pairs_mean},
          {"mentions_per_qa_aspect", s.mentions_per_qa_aspect},
          {"mentions_per_item_aspect", s.mentions_per_item_aspect}};
}

SyntheticCorpusSpec synthetic_spec_from_json(const json& j) {
  SyntheticCorpusSpec s;
  Reader r(j, "synthetic");
  r.get("products", s.products);
  r.get("seed", s.seed);
  r.get("aspect_pool", s.aspect_pool);
  r.get("categories", s.categories);
  r.get("brands", s.brands);
  r.get("aspects_per_category", s.aspects_per_category);
  r.get("aspects_min", s.aspects_min);
  r.get("aspects_max", s.aspects_max);
  r.get("qa_only_fraction", s.qa_only_fraction);
  r.get("zero_qa_fraction", s.zero_qa_fraction);
  r.get("title_tokens", s.title_tokens);
  r.get("attribute_tokens", s.attribute_tokens);
  r.get("question_tokens", s.question_tokens);
  r.get("answer_tokens", s.answer_tokens);
  r.get("qa_pairs_mean", s.qa_pairs_mean);
  r.get("mentions_per_qa_aspect", s.mentions_per_qa_aspect);
  r.get("mentions_per_item_aspect", s.mentions_per_item_aspect);
  r.finish();
  return s;
}

json to_json(const ExperimentConfig& c) {
  const ModelConfig& m = c.model;
  const GenerationConfig& g = c.generation;
  const TrainConfig& t = c.train;
  json j;
  j["model"] = {{"embed_dim", m.embed_dim},
                {"hidden_dim", m.hidden_dim},
                {"heads", m.heads},
                {"encoder_layers", m.encoder_layers},
                {"decoder_layers", m.decoder_layers},
                {"ffn_dim", m.ffn_dim},
                {"lambda1", m.lambda1},
                {"learn_lambda1", m.learn_lambda1},
                {"lambda2", m.lambda2},
                {"fusion", to_string(m.fusion)},
                {"variant", to_string(m.variant)},
                {"activation", to_string(m.activation)},
                {"detach_posterior", m.detach_posterior},
                {"residual_norm", m.residual_norm},
                {"share_qa_encoder", m.share_qa_encoder},
                {"reg_mode", to_string(m.reg_mode)},
                {"kl_weight", m.kl_weight},
                {"nll_weight", m.nll_weight},
                {"reg_weight", m.reg_weight},
                {"limits", limits_json(m.limits)}};
  j["generation"] = {{"mode", to_string(g.mode)},
                     {"beam_width", g.beam_width},
                     {"max_length", g.max_length},
                     {"length_alpha", g.length_alpha},
                     {"conditioning", to_string(g.conditioning)}};
  j["train"] = {{"optimizer", to_string(t.optimizer.kind)},
                {"learning_rate", t.optimizer.learning_rate},
                {"beta1", t.optimizer.beta1},
                {"beta2", t.optimizer.beta2},
                {"epsilon", t.optimizer.epsilon},
                {"clip_norm", t.optimizer.clip_norm},
                {"batch_size", t.batch_size},
                {"epochs", t.epochs},
                {"max_steps", t.max_steps},
                {"patience", t.patience},
                {"eval_every", t.eval_every},
                {"seed", t.seed},
                {"selection_metric", t.selection_metric}};
  j["data"] = {{"train_path", c.data.train_path},
               {"valid_path", c.data.valid_path},
               {"test_path", c.data.test_path},
               {"vocab_min_count", c.data.vocab_min_count},
               {"vocab_max_size", c.data.vocab_max_size}};
  j["synthetic"] = to_json(c.synthetic);
  return j;
}

ExperimentConfig experiment_config_from_json(const json& j) {
  ExperimentConfig c;
  Reader top(j, "config");
  if (const json* mj = top.child("model")) {
    ModelConfig& m = c.model;
    Reader r(*mj, "model");
    r.get("embed_dim", m.embed_dim);
    r.get("hidden_dim", m.hidden_dim);
    r.get("heads", m.heads);
    r.get("encoder_layers", m.encoder_layers);
    r.get("decoder_layers", m.decoder_layers);
    r.get("ffn_dim", m.ffn_dim);
    r.get("lambda1", m.lambda1);
    r.get("learn_lambda1", m.learn_lambda1);
    r.get("lambda2", m.lambda2);
    r.get_enum("fusion", m.fusion, &parse_fusion_mode);
    r.get_enum("variant", m.variant, &parse_variant);
    r.get_enum("activation", m.activation, &parse_activation);
    r.get("detach_posterior", m.detach_posterior);
    r.get("residual_norm", m.residual_norm);
    r.get("share_qa_encoder", m.share_qa_encoder);
    r.get_enum("reg_mode", m.reg_mode, &parse_reg_mode);
    r.get("kl_weight", m.kl_weight);
    r.get("nll_weight", m.nll_weight);
    r.get("reg_weight", m.reg_weight);
    if (const json* lj = r.child("limits")) read_limits(*lj, m.limits);
    r.finish();
  }
  if (const json* gj = top.child("generation")) {
    GenerationConfig& g = c.generation;
    Reader r(*gj, "generation");
    r.get_enum("mode", g.mode, &parse_decode_mode);
    r.get("beam_width", g.beam_width);
    r.get("max_length", g.max_length);
    r.get("length_alpha", g.length_alpha);
    r.get_enum("conditioning", g.conditioning, &parse_conditioning);
    r.finish();
  }
  if (const json* tj = top.child("train")) {
    TrainConfig& t = c.train;
    Reader r(*tj, "train");
    r.get_enum("optimizer", t.optimizer.kind, &parse_optimizer_kind);
    r.get("learning_rate", t.optimizer.learning_rate);
    r.get("beta1", t.optimizer.beta1);
    r.get("beta2", t.optimizer.beta2);
    r.get("epsilon", t.optimizer.epsilon);
    r.get("clip_norm", t.optimizer.clip_norm);
    r.get("batch_size", t.batch_size);
    r.get("epochs", t.epochs);
    r.get("max_steps", t.max_steps);
    r.get("patience", t.patience);
    r.get("eval_every", t.eval_every);
    r.get("seed", t.seed);
    r.get("selection_metric", t.selection_metric);
    r.finish();
  }
  if (const json* dj = top.child("data")) {
    Reader r(*dj, "data");
    r.get("train_path", c.data.train_path);
    r.get("valid_path", c.data.valid_path);
    r.get("test_path", c.data.test_path);
    r.get("vocab_min_count", c.data.vocab_min_count);
    r.get("vocab_max_size", c.data.vocab_max_size);
    r.finish();
  }
  if (const json* sj = top.child("synthetic")) c.synthetic = synthetic_spec_from_json(*sj);
  top.finish();
  c.validate();
  return c;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return experiment_config_from_json(j);
}

std::string config_hash(const ExperimentConfig& config) {
  json j = to_json(config);
  j.erase("data");
  j["vocab"] = {{"min_count", config.data.vocab_min_count},
                {"max_size", config.data.vocab_max_size}};
  return hex64(fnv1a(j.dump()));
}

}  // namespace mspt
