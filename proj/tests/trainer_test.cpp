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

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "mspt/error.hpp"
#include "mspt/trainer.hpp"
#include "model_fixtures.hpp"

namespace mspt {
namespace {

using nlohmann::json;

ExperimentConfig tiny_config() {
  ExperimentConfig c;
  c.model = testing::micro_config();
  c.train.batch_size = 3;
  c.train.epochs = 2;
  c.train.optimizer.learning_rate = 1e-2;
  c.generation.max_length = 8;
  return c;
}

struct TinyData {
  Vocab vocab;
  Dataset train, valid;
};

TinyData tiny_data(const ExperimentConfig& c, std::uint64_t seed = 5) {
  auto records = generate_synthetic_corpus(testing::micro_corpus_spec(10, seed)).records;
  std::vector<ProductRecord> train(records.begin(), records.begin() + 7);
  std::vector<ProductRecord> valid(records.begin() + 7, records.end());
  TinyData d;
  d.vocab = build_vocab(train, c.data);
  d.train = make_dataset(train, d.vocab, c.model.limits);
  d.valid = make_dataset(valid, d.vocab, c.model.limits);
  return d;
}

std::string train_log(const ExperimentConfig& c, const TinyData& d, TrainSummary* summary = nullptr) {
  MsptModel m(c.model, d.vocab.size(), c.train.seed);
  std::ostringstream log;
  TrainHooks hooks;
  hooks.log = &log;
  const TrainSummary s = train_model(m, c, d.train, nullptr, hooks);
  if (summary) *summary = s;
  return log.str();
}

TEST(BuildVocab, CoversTrainingTokensAndRespectsMaximum) {
  const ExperimentConfig c = tiny_config();
  const TinyData d = tiny_data(c);
  for (const auto& e : d.train.examples) {
    for (TokenId id : e.title) EXPECT_NE(id, Vocab::kUnk);
  }
  DataConfig small;
  small.vocab_max_size = 12;
  EXPECT_EQ(build_vocab(d.train.records, small).size(), 12u);
}

TEST(TrainModel, LogsAreBitIdenticalAcrossRuns) {
  const ExperimentConfig c = tiny_config();
  const TinyData d = tiny_data(c);
  const std::string a = train_log(c, d), b = train_log(c, d);
  EXPECT_EQ(a, b);
  std::istringstream lines(a);
  std::string first;
  std::getline(lines, first);
  const json header = json::parse(first);
  EXPECT_EQ(header.at("config_hash"), config_hash(c));
  EXPECT_EQ(header.at("seed"), c.train.seed);

  ExperimentConfig other = c;
  other.train.seed = 2;
  EXPECT_NE(train_log(other, d), a);
}

TEST(TrainModel, StepLinesCarryComponentLossesThatSum) {
  const ExperimentConfig c = tiny_config();
  const TinyData d = tiny_data(c);
  TrainSummary s;
  std::istringstream lines(train_log(c, d, &s));
  std::string line;
  std::getline(lines, line);
  std::size_t steps = 0;
  while (std::getline(lines, line)) {
    const json j = json::parse(line);
    if (!j.contains("step")) continue;
    ++steps;
    const double sum = j["kl"].get<double>() + j["nll"].get<double>() + j["reg"].get<double>();
    EXPECT_NEAR(j["total"].get<double>(), sum, 1e-12);
  }
  // 7 examples in batches of 3 for 2 epochs.
  EXPECT_EQ(steps, 6u);
  EXPECT_EQ(s.steps.size(), 6u);
  EXPECT_EQ(s.stop_reason, "epochs");
}

TEST(TrainModel, NoQaVariantLogsZeroKlAndReg) {
  ExperimentConfig c = tiny_config();
  c.model.variant = Variant::kNoQa;
  const TinyData d = tiny_data(c);
  TrainSummary s;
  train_log(c, d, &s);
  ASSERT_FALSE(s.steps.empty());
  for (const StepLog& step : s.steps) {
    EXPECT_EQ(step.loss.kl, 0.0);
    EXPECT_EQ(step.loss.reg, 0.0);
  }
}

TEST(TrainModel, MaxStepsCapsTraining) {
  ExperimentConfig c = tiny_config();
  c.train.epochs = 50;
  c.train.max_steps = 4;
  const TinyData d = tiny_data(c);
  TrainSummary s;
  train_log(c, d, &s);
  EXPECT_EQ(s.steps.size(), 4u);
  EXPECT_EQ(s.stop_reason, "max_steps");
}

TEST(TrainModel, LossDecreasesOnTinyCorpus) {
  ExperimentConfig c = tiny_config();
  c.train.epochs = 30;
  const TinyData d = tiny_data(c);
  MsptModel m(c.model, d.vocab.size(), 1);
  const double before = evaluate_loss(m, d.train, 4).total;
  train_model(m, c, d.train, nullptr);
  EXPECT_LT(evaluate_loss(m, d.train, 4).total, 0.5 * before);
}

TEST(TrainModel, NonFiniteLossNamesTheTensor) {
  const ExperimentConfig c = tiny_config();
  const TinyData d = tiny_data(c);
  MsptModel m(c.model, d.vocab.size(), 1);
  m.parameters().get("fusion.prior.b").value[0] = std::nan("");
  try {
    train_model(m, c, d.train, nullptr);
    FAIL() << "expected NumericError";
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("non-finite"), std::string::npos) << e.what();
    EXPECT_NE(std::string(e.what()).find("fusion.prior.b"), std::string::npos) << e.what();
  }
}

TEST(TrainModel, EmptyTrainingSetIsContractError) {
  const ExperimentConfig c = tiny_config();
  MsptModel m(c.model, 20, 1);
  EXPECT_THROW(train_model(m, c, Dataset{}, nullptr), ContractError);
}

TEST(TrainModel, ValidationRestoresBestParameters) {
  ExperimentConfig c = tiny_config();
  c.train.epochs = 6;
  c.train.patience = 2;
  const TinyData d = tiny_data(c);
  MsptModel m(c.model, d.vocab.size(), 1);
  std::size_t improvements = 0;
  TrainHooks hooks;
  hooks.on_improvement = [&](const MsptModel&, const EpochLog&) { ++improvements; };
  const TrainSummary s = train_model(m, c, d.train, &d.valid, hooks);
  ASSERT_TRUE(s.best_metric.has_value());
  EXPECT_GE(improvements, 1u);
  EXPECT_GE(s.best_epoch, 1u);
  for (const EpochLog& e : s.epochs) {
    ASSERT_TRUE(e.validation_metric.has_value());
    EXPECT_LE(*e.validation_metric, *s.best_metric);
  }
  // The model left behind scores exactly the best validation value.
  const GenerationResult g = generate_dataset(m, Vocab(), d.valid, c.generation, 4);
  EXPECT_EQ(score_generation(g).rouge1, *s.best_metric);
  EXPECT_TRUE(s.stop_reason == "patience" || s.stop_reason == "epochs");
}

TEST(EvaluateLoss, WeightsBatchesBySize) {
  const ExperimentConfig c = tiny_config();
  const TinyData d = tiny_data(c);
  MsptModel m(c.model, d.vocab.size(), 3);
  double per_item = 0.0;
  for (std::size_t i = 0; i < d.train.examples.size(); ++i) {
    Dataset one;
    one.records = {d.train.records[i]};
    one.examples = {d.train.examples[i]};
    per_item += evaluate_loss(m, one, 1).nll;
  }
  EXPECT_NEAR(evaluate_loss(m, d.train, 1).nll,
              per_item / static_cast<double>(d.train.examples.size()), 1e-12);
  EXPECT_THROW(evaluate_loss(m, Dataset{}, 4), ContractError);
}

TEST(GenerateDataset, DecodesTokensAndScoresAgainstReasons) {
  const ExperimentConfig c = tiny_config();
  const TinyData d = tiny_data(c);
  MsptModel m(c.model, d.vocab.size(), 3);
  const GenerationResult g = generate_dataset(m, d.vocab, d.valid, c.generation, 2);
  ASSERT_EQ(g.outputs.size(), d.valid.records.size());
  for (std::size_t i = 0; i < g.outputs.size(); ++i) {
    EXPECT_EQ(g.outputs[i], d.vocab.decode(g.sequences[i].tokens));
    EXPECT_EQ(g.references[i], tokenize(*d.valid.records[i].reason));
  }
  const MetricReport r = score_generation(g);
  EXPECT_EQ(r.examples, g.outputs.size());
  GenerationResult perfect = g;
  perfect.outputs = perfect.references;
  EXPECT_EQ(exact_match_rate(perfect), 1.0);
  EXPECT_EQ(score_generation(perfect).rouge1, 1.0);
  GenerationResult none;
  EXPECT_THROW(score_generation(none), ContractError);
  GenerationResult missing = g;
  missing.references[0].clear();
  EXPECT_THROW(score_generation(missing), ContractError);
}

class CheckpointTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = std::filesystem::temp_directory_path() / "mspt_checkpoint_test";
    std::filesystem::remove_all(dir_);
  }
  void TearDown() override { std::filesystem::remove_all(dir_); }
  std::filesystem::path dir_;
};

TEST_F(CheckpointTest, RoundTripReproducesGenerations) {
  ExperimentConfig c = tiny_config();
  c.data.train_path = "somewhere/train.jsonl";
  const TinyData d = tiny_data(c);
  MsptModel m(c.model, d.vocab.size(), 4);
  train_model(m, c, d.train, nullptr);
  save_checkpoint(dir_, m, d.vocab, c);
  const Checkpoint loaded = load_checkpoint(dir_);
  EXPECT_EQ(loaded.config_hash, config_hash(c));
  EXPECT_EQ(loaded.vocab.hash(), d.vocab.hash());
  EXPECT_EQ(loaded.model->parameters().serialize(), m.parameters().serialize());
  const auto a = generate_dataset(m, d.vocab, d.valid, c.generation, 4);
  const auto b = generate_dataset(*loaded.model, loaded.vocab, d.valid, loaded.config.generation, 4);
  EXPECT_EQ(a.outputs, b.outputs);
  std::ifstream meta_in(dir_ / "config.json");
  const json meta = json::parse(meta_in);
  EXPECT_EQ(meta.at("seed"), c.train.seed);
}

TEST_F(CheckpointTest, TamperedVocabularyIsCompatibilityError) {
  const ExperimentConfig c = tiny_config();
  const TinyData d = tiny_data(c);
  MsptModel m(c.model, d.vocab.size(), 4);
  save_checkpoint(dir_, m, d.vocab, c);
  {
    std::ofstream out(dir_ / "vocab.txt", std::ios::app);
    out << "extra\n";
  }
  EXPECT_THROW(load_checkpoint(dir_), CompatibilityError);
}

TEST_F(CheckpointTest, ParameterInventoryMismatchIsCompatibilityError) {
  const ExperimentConfig c = tiny_config();
  const TinyData d = tiny_data(c);
  MsptModel m(c.model, d.vocab.size(), 4);
  save_checkpoint(dir_, m, d.vocab, c);
  json meta;
  {
    std::ifstream in(dir_ / "config.json");
    in >> meta;
  }
  meta["config"]["model"]["variant"] = "no-qa";
  {
    std::ofstream out(dir_ / "config.json");
    out << meta.dump();
  }
  EXPECT_THROW(load_checkpoint(dir_), CompatibilityError);
  meta["config"]["model"]["variant"] = "full";
  meta["config"]["model"]["ffn_dim"] = 3;
  {
    std::ofstream out(dir_ / "config.json");
    out << meta.dump();
  }
  EXPECT_THROW(load_checkpoint(dir_), CompatibilityError);
}

TEST_F(CheckpointTest, MissingDirectoryIsCompatibilityError) {
  EXPECT_THROW(load_checkpoint(dir_), CompatibilityError);
}

TEST(Ablation, TableHasFourVariantRowsAndFiveMetrics) {
  ExperimentConfig c = tiny_config();
  c.train.max_steps = 2;
  const TinyData d = tiny_data(c);
  std::ostringstream progress;
  const AblationResult r =
      run_ablation(c, d.train, nullptr, d.valid, d.vocab, standard_variants(), {1, 2, 3}, &progress);
  ASSERT_EQ(r.rows.size(), 4u);
  const std::vector<std::string> names = {"full-soft", "full-hard", "no-pga", "no-qa"};
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(r.rows[i].name, names[i]);
    ASSERT_EQ(r.rows[i].per_seed.size(), 3u);
    std::vector<double> xs;
    for (const auto& m : r.rows[i].per_seed) xs.push_back(m.rouge1);
    std::sort(xs.begin(), xs.end());
    EXPECT_EQ(r.rows[i].median.rouge1, xs[1]);
  }
  const std::string table = ablation_table(r);
  std::istringstream lines(table);
  std::string line;
  std::getline(lines, line);
  EXPECT_NE(line.find("RG-1"), std::string::npos);
  std::size_t rows = 0;
  while (std::getline(lines, line)) {
    std::istringstream cells(line);
    std::string name;
    cells >> name;
    std::size_t values = 0;
    double x;
    while (cells >> x) ++values;
    EXPECT_EQ(values, 5u) << line;
    ++rows;
  }
  EXPECT_EQ(rows, 4u);
  const json j = json::parse(ablation_json(r, "abc"));
  EXPECT_EQ(j.at("config_hash"), "abc");
  EXPECT_EQ(j.at("rows").size(), 4u);
  EXPECT_EQ(j.at("seeds").size(), 3u);
  EXPECT_THROW(run_ablation(c, d.train, nullptr, d.valid, d.vocab, standard_variants(), {}),
               ConfigError);
}

}  // namespace
}  // namespace mspt
