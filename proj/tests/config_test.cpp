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

#include <gtest/gtest.h>

#include <fstream>

#include <json.hpp>

#include "mspt/config.hpp"
#include "mspt/error.hpp"

namespace mspt {
namespace {

using nlohmann::json;

ExperimentConfig non_default() {
  ExperimentConfig c;
  c.model.embed_dim = 24;
  c.model.hidden_dim = 6;
  c.model.heads = 3;
  c.model.encoder_layers = 3;
  c.model.ffn_dim = 40;
  c.model.lambda1 = 0.3;
  c.model.learn_lambda1 = true;
  c.model.lambda2 = 0.7;
  c.model.fusion = FusionMode::kHard;
  c.model.variant = Variant::kNoPga;
  c.model.activation = Activation::kSigmoid;
  c.model.detach_posterior = true;
  c.model.residual_norm = false;
  c.model.share_qa_encoder = true;
  c.model.reg_mode = RegMode::kBagOfWords;
  c.model.kl_weight = 0.25;
  c.model.limits.reason = 12;
  c.model.limits.max_qa_pairs = 5;
  c.generation.mode = DecodeMode::kBeam;
  c.generation.beam_width = 7;
  c.generation.length_alpha = 0.6;
  c.generation.conditioning = Conditioning::kPosteriorIfAvailable;
  c.train.optimizer.kind = OptimizerKind::kSgd;
  c.train.optimizer.learning_rate = 0.1;
  c.train.batch_size = 3;
  c.train.max_steps = 99;
  c.train.seed = 1234567890123ULL;
  c.train.selection_metric = "bleu2";
  c.data.train_path = "a/train.jsonl";
  c.data.vocab_max_size = 500;
  c.synthetic.products = 77;
  c.synthetic.qa_only_fraction = 0.25;
  return c;
}

TEST(ExperimentConfig, JsonRoundTripPreservesEveryField) {
  const ExperimentConfig c = non_default();
  const json j = to_json(c);
  const ExperimentConfig back = experiment_config_from_json(json::parse(j.dump()));
  EXPECT_EQ(to_json(back), j);
  EXPECT_EQ(back.train.seed, 1234567890123ULL);
  EXPECT_EQ(back.model.lambda1, 0.3);
  EXPECT_EQ(back.model.variant, Variant::kNoPga);
  EXPECT_EQ(back.generation.conditioning, Conditioning::kPosteriorIfAvailable);
}

TEST(ExperimentConfig, MissingKeysKeepDefaults) {
  const ExperimentConfig c = experiment_config_from_json(json::parse(R"({"model": {"heads": 2}})"));
  EXPECT_EQ(c.model.heads, 2u);
  EXPECT_EQ(c.model.embed_dim, 64u);
  EXPECT_EQ(c.train.batch_size, 16u);
  EXPECT_EQ(c.model.variant, Variant::kFull);
  EXPECT_EQ(c.generation.conditioning, Conditioning::kPrior);
}

TEST(ExperimentConfig, UnknownKeysBadTypesAndBadValuesAreConfigErrors) {
  EXPECT_THROW(experiment_config_from_json(json::parse(R"({"modle": {}})")), ConfigError);
  EXPECT_THROW(experiment_config_from_json(json::parse(R"({"model": {"lambda_1": 0.2}})")),
               ConfigError);
  EXPECT_THROW(experiment_config_from_json(json::parse(R"({"model": {"heads": "four"}})")),
               ConfigError);
  EXPECT_THROW(experiment_config_from_json(json::parse(R"({"model": {"fusion": "medium"}})")),
               ConfigError);
  EXPECT_THROW(experiment_config_from_json(json::parse(R"({"model": {"lambda2": 1.5}})")),
               ConfigError);
  EXPECT_THROW(experiment_config_from_json(json::parse(R"({"model": {"heads": 5}})")),
               ConfigError);
  EXPECT_THROW(experiment_config_from_json(json::parse(R"({"generation": {"beam_width": 0}})")),
               ConfigError);
  EXPECT_THROW(experiment_config_from_json(json::parse(R"({"train": {"selection_metric": "f1"}})")),
               ConfigError);
  EXPECT_THROW(experiment_config_from_json(json::parse(R"([1, 2])")), ConfigError);
}

TEST(ExperimentConfig, EnumNamesRoundTrip) {
  for (Variant v : {Variant::kFull, Variant::kNoQa, Variant::kNoPga}) {
    EXPECT_EQ(parse_variant(to_string(v)), v);
  }
  EXPECT_EQ(to_string(Variant::kNoQa), "no-qa");
  EXPECT_EQ(parse_fusion_mode("hard"), FusionMode::kHard);
  EXPECT_EQ(parse_conditioning("posterior-if-available"), Conditioning::kPosteriorIfAvailable);
  EXPECT_EQ(parse_reg_mode("bow"), RegMode::kBagOfWords);
  EXPECT_EQ(parse_decode_mode("beam"), DecodeMode::kBeam);
  EXPECT_EQ(parse_activation("sigmoid"), Activation::kSigmoid);
  EXPECT_THROW(parse_variant("full-soft"), ConfigError);
}

TEST(ConfigHash, StableIgnoresPathsAndTracksSettings) {
  ExperimentConfig a = non_default();
  ExperimentConfig b = non_default();
  b.data.train_path = "elsewhere/train.jsonl";
  b.data.test_path = "x";
  EXPECT_EQ(config_hash(a), config_hash(b));
  EXPECT_EQ(config_hash(a).size(), 16u);
  b.model.lambda2 = 0.71;
  EXPECT_NE(config_hash(a), config_hash(b));
  b = non_default();
  b.train.seed += 1;
  EXPECT_NE(config_hash(a), config_hash(b));
  b = non_default();
  b.data.vocab_max_size = 10;
  EXPECT_NE(config_hash(a), config_hash(b));
}

TEST(ExperimentConfig, LoadFromFile) {
  const auto path = std::filesystem::temp_directory_path() / "mspt_config_test.json";
  {
    std::ofstream out(path);
    out << to_json(non_default()).dump(2);
  }
  EXPECT_EQ(to_json(load_experiment_config(path)), to_json(non_default()));
  {
    std::ofstream out(path);
    out << "{ not json";
  }
  EXPECT_THROW(load_experiment_config(path), ConfigError);
  std::filesystem::remove(path);
  EXPECT_THROW(load_experiment_config(path), ConfigError);
}

}  // namespace
}  // namespace mspt
