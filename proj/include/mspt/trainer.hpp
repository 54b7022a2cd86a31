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

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mspt/config.hpp"
#include "mspt/generation.hpp"
#include "mspt/metrics.hpp"
#include "mspt/model.hpp"

namespace mspt {

// Records plus their encoded form under one vocabulary.
struct Dataset {
  std::vector<ProductRecord> records;
  std::vector<EncodedExample> examples;
};

Dataset make_dataset(std::vector<ProductRecord> records, const Vocab& vocab,
                     const TokenLimits& limits);

// Vocabulary over every token sequence of the training records.
Vocab build_vocab(const std::vector<ProductRecord>& records, const DataConfig& data);

struct StepLog {
  std::size_t step = 0;
  std::size_t epoch = 0;
  LossBreakdown loss;
};

struct EpochLog {
  std::size_t epoch = 0;
  std::size_t steps = 0;
  // Mean of the step losses of this epoch.
  LossBreakdown mean_loss;
  std::optional<double> validation_metric;
};

struct TrainSummary {
  std::vector<StepLog> steps;
  std::vector<EpochLog> epochs;
  std::optional<double> best_metric;
  std::size_t best_epoch = 0;
  std::string stop_reason;
};

struct TrainHooks {
  // Deterministic structured log: one JSON object per line.
  std::ostream* log = nullptr;
  // Wall-clock timings, kept apart so `log` stays reproducible.
  std::ostream* timing = nullptr;
  // Human-readable progress.
  std::ostream* progress = nullptr;
  // Called whenever validation improves (for checkpointing).
  std::function<void(const MsptModel&, const EpochLog&)> on_improvement;
};

// Minimizes the total loss with the configured optimizer. With a non-empty
// validation set the model is scored every `eval_every` epochs, the best
// parameters are restored at the end and training stops after `patience`
// evaluations without improvement. Throws NumericError on a non-finite loss,
// naming the first non-finite tensor on the tape.
TrainSummary train_model(MsptModel& model, const ExperimentConfig& config, const Dataset& train,
                         const Dataset* valid, const TrainHooks& hooks = {});

// Loss over a dataset without gradients, averaged over batches weighted by
// batch size.
LossBreakdown evaluate_loss(const MsptModel& model, const Dataset& data, std::size_t batch_size);

struct GenerationResult {
  std::vector<GeneratedSequence> sequences;
  std::vector<Tokens> outputs;
  // Tokenized record reasons (empty for records without one).
  std::vector<Tokens> references;
};

GenerationResult generate_dataset(const MsptModel& model, const Vocab& vocab, const Dataset& data,
                                  const GenerationConfig& config, std::size_t batch_size);

// Throws ContractError if the dataset is empty or a record has no reason.
MetricReport score_generation(const GenerationResult& result);

// Fraction of records whose generated token sequence equals the reason.
double exact_match_rate(const GenerationResult& result);

// Checkpoint directory: params.bin, vocab.txt and config.json (experiment
// config, config hash, vocabulary hash, seed).
void save_checkpoint(const std::filesystem::path& dir, const MsptModel& model, const Vocab& vocab,
                     const ExperimentConfig& config);

struct Checkpoint {
  ExperimentConfig config;
  Vocab vocab;
  std::unique_ptr<MsptModel> model;
  std::string config_hash;
};

// Throws CompatibilityError when the files disagree with each other.
Checkpoint load_checkpoint(const std::filesystem::path& dir);

struct AblationVariant {
  std::string name;
  Variant variant = Variant::kFull;
  FusionMode fusion = FusionMode::kSoft;
};

// full-soft, full-hard, no-pga, no-qa.
std::vector<AblationVariant> standard_variants();

struct AblationRow {
  std::string name;
  std::vector<MetricReport> per_seed;
  // Per-metric median over seeds.
  MetricReport median;
};

struct AblationResult {
  std::vector<AblationRow> rows;
  std::vector<std::uint64_t> seeds;
};

// Trains a fresh model for every (variant, seed) with otherwise identical
// settings and scores it on `test`.
AblationResult run_ablation(const ExperimentConfig& base, const Dataset& train,
                            const Dataset* valid, const Dataset& test, const Vocab& vocab,
                            const std::vector<AblationVariant>& variants,
                            const std::vector<std::uint64_t>& seeds,
                            std::ostream* progress = nullptr);

std::string ablation_table(const AblationResult& result);
std::string ablation_json(const AblationResult& result, const std::string& config_hash);

}  // namespace mspt
