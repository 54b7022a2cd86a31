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

#include <cstdint>
#include <string>

#include <json.hpp>

#include "mspt/corpus.hpp"
#include "mspt/optimizer.hpp"
#include "mspt/synthetic.hpp"

namespace mspt {

// Which parts of the model exist.
//   kFull:  item + QA content, product-guided attention, posterior fusion.
//   kNoQa:  item content only; no QA, attention or posterior parameters.
//   kNoPga: like kFull but QA vectors are averaged with uniform weights.
enum class Variant { kFull, kNoQa, kNoPga };
enum class FusionMode { kHard, kSoft };
enum class Activation { kTanh, kSigmoid };
// Representation fed to the decoder at inference time.
enum class Conditioning { kPrior, kPosteriorIfAvailable };
// kAutoregressive runs the decoder with H_user as its only memory slot;
// kBagOfWords scores every reason token with one softmax over H_user.
enum class RegMode { kAutoregressive, kBagOfWords };
enum class DecodeMode { kGreedy, kBeam };

struct ModelConfig {
  std::size_t embed_dim = 64;
  // Per direction; encoder token states have width 2 * hidden_dim.
  std::size_t hidden_dim = 32;
  std::size_t heads = 4;
  std::size_t encoder_layers = 2;
  std::size_t decoder_layers = 2;
  // Feed-forward inner width; 0 means 2 * model width.
  std::size_t ffn_dim = 0;

  double lambda1 = 0.5;
  bool learn_lambda1 = false;
  double lambda2 = 0.5;
  FusionMode fusion = FusionMode::kSoft;
  Variant variant = Variant::kFull;
  Activation activation = Activation::kTanh;
  bool detach_posterior = false;
  bool residual_norm = true;
  bool share_qa_encoder = false;

  RegMode reg_mode = RegMode::kAutoregressive;
  double kl_weight = 1.0;
  double nll_weight = 1.0;
  double reg_weight = 1.0;

  TokenLimits limits;

  std::size_t model_dim() const { return 2 * hidden_dim; }
  std::size_t ffn_width() const { return ffn_dim ? ffn_dim : 2 * model_dim(); }
  bool uses_qa() const { return variant != Variant::kNoQa; }
  // Throws ConfigError.
  void validate() const;
};

struct GenerationConfig {
  DecodeMode mode = DecodeMode::kGreedy;
  std::size_t beam_width = 4;
  // Maximum generated tokens, <eos> included.
  std::size_t max_length = 32;
  // Beam ranking uses logp / length^alpha; 0 ranks by raw log-probability.
  double length_alpha = 0.0;
  Conditioning conditioning = Conditioning::kPrior;
  void validate() const;
};

struct TrainConfig {
  OptimizerConfig optimizer;
  std::size_t batch_size = 16;
  std::size_t epochs = 30;
  // Hard cap on optimizer steps; 0 means no cap.
  std::size_t max_steps = 0;
  // Epochs without validation improvement before stopping; 0 disables.
  std::size_t patience = 5;
  // Validation every this many epochs (when a validation set exists).
  std::size_t eval_every = 1;
  std::uint64_t seed = 1;
  std::string selection_metric = "rouge1";
  void validate() const;
};

struct DataConfig {
  std::string train_path;
  std::string valid_path;
  std::string test_path;
  std::size_t vocab_min_count = 1;
  std::size_t vocab_max_size = 2000;
};

struct ExperimentConfig {
  ModelConfig model;
  GenerationConfig generation;
  TrainConfig train;
  DataConfig data;
  SyntheticCorpusSpec synthetic;
  void validate() const;
};

std::string to_string(Variant v);
std::string to_string(FusionMode m);
std::string to_string(Activation a);
std::string to_string(Conditioning c);
std::string to_string(RegMode m);
std::string to_string(DecodeMode m);
Variant parse_variant(const std::string& s);
FusionMode parse_fusion_mode(const std::string& s);
Activation parse_activation(const std::string& s);
Conditioning parse_conditioning(const std::string& s);
RegMode parse_reg_mode(const std::string& s);
DecodeMode parse_decode_mode(const std::string& s);

nlohmann::json to_json(const ExperimentConfig& config);
nlohmann::json to_json(const SyntheticCorpusSpec& spec);
// Missing keys keep their defaults; unknown keys are ConfigErrors so typos
// do not pass silently. The result is validated.
ExperimentConfig experiment_config_from_json(const nlohmann::json& j);
SyntheticCorpusSpec synthetic_spec_from_json(const nlohmann::json& j);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

// FNV-1a of the canonical (sorted-key, compact) JSON, as 16 hex digits.
// Paths are excluded so a run can move between directories.
std::string config_hash(const ExperimentConfig& config);

}  // namespace mspt
