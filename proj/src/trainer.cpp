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

#include "mspt/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <ostream>
#include <set>

#include <json.hpp>

#include "mspt/error.hpp"
#include "mspt/optimizer.hpp"

namespace mspt {
namespace {

using nlohmann::json;

double metric_value(const MetricReport& r, const std::string& name) {
  if (name == "rouge1") return r.rouge1;
  if (name == "rouge2") return r.rouge2;
  if (name == "rougeL") return r.rougeL;
  if (name == "bleu1") return r.bleu1;
  if (name == "bleu2") return r.bleu2;
  throw ConfigError("unknown metric '" + name + "'");
}

json loss_json(const LossBreakdown& l) {
  return {{"kl", l.kl}, {"nll", l.nll}, {"reg", l.reg}, {"total", l.total}};
}

std::vector<std::vector<const EncodedExample*>> batches_in_order(const Dataset& data,
                                                                 const std::vector<std::size_t>& order,
                                                                 std::size_t batch_size) {
  std::vector<std::vector<const EncodedExample*>> out;
  for (std::size_t i = 0; i < order.size(); i += batch_size) {
    std::vector<const EncodedExample*> b;
    for (std::size_t j = i; j < std::min(order.size(), i + batch_size); ++j) {
      b.push_back(&data.examples[order[j]]);
    }
    out.push_back(std::move(b));
  }
  return out;
}

std::vector<std::size_t> identity(std::size_t n) {
  std::vector<std::size_t> v(n);
  std::iota(v.begin(), v.end(), 0);
  return v;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

Dataset make_dataset(std::vector<ProductRecord> records, const Vocab& vocab,
                     const TokenLimits& limits) {
  Dataset d;
  d.records = std::move(records);
  for (const auto& r : d.records) d.examples.push_back(encode_record(r, vocab, limits));
  return d;
}

Vocab build_vocab(const std::vector<ProductRecord>& records, const DataConfig& data) {
  return Vocab::build(corpus_sentences(records), data.vocab_min_count, data.vocab_max_size);
}

TrainSummary train_model(MsptModel& model, const ExperimentConfig& config, const Dataset& train,
                         const Dataset* valid, const TrainHooks& hooks) {
  config.train.validate();
  config.generation.validate();
  if (train.examples.empty()) throw ContractError("training set is empty");
  const TrainConfig& tc = config.train;
  const bool validate = valid && !valid->examples.empty();

  if (hooks.log) {
    *hooks.log << json{{"config_hash", config_hash(config)}, {"seed", tc.seed}}.dump() << "\n";
  }
  Rng rng(tc.seed);
  std::vector<std::size_t> order = identity(train.examples.size());
  TrainSummary summary;
  std::string best_snapshot;
  std::size_t stale = 0;
  std::size_t step = 0;
  const auto start = std::chrono::steady_clock::now();

  for (std::size_t epoch = 1; epoch <= tc.epochs; ++epoch) {
    if (tc.max_steps && step >= tc.max_steps) break;
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.index(i)]);
    EpochLog elog;
    elog.epoch = epoch;
    for (const auto& group : batches_in_order(train, order, tc.batch_size)) {
      if (tc.max_steps && step >= tc.max_steps) break;
      const Batch batch = make_batch(std::span<const EncodedExample* const>(group), true);
      Tape tape;
      LossVars loss = model.loss(tape, batch);
      const LossBreakdown values = loss.values();
      if (!std::isfinite(values.total)) {
        const auto where = tape.first_non_finite();
        throw NumericError("non-finite loss at step " + std::to_string(step + 1) +
                           "; first non-finite tensor: " + (where ? *where : "none found"));
      }
      tape.backward(loss.total);
      optimizer_step(model.parameters(), tc.optimizer);
      ++step;
      summary.steps.push_back({step, epoch, values});
      elog.steps += 1;
      elog.mean_loss.kl += values.kl;
      elog.mean_loss.nll += values.nll;
      elog.mean_loss.reg += values.reg;
      elog.mean_loss.total += values.total;
      if (hooks.log) {
        json line = loss_json(values);
        line["step"] = step;
        line["epoch"] = epoch;
        *hooks.log << line.dump() << "\n";
      }
      if (hooks.timing) {
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        *hooks.timing << json{{"step", step}, {"wall_seconds", secs}}.dump() << "\n";
      }
    }
    if (elog.steps == 0) break;
    const double n = static_cast<double>(elog.steps);
    elog.mean_loss = total_loss(elog.mean_loss.kl / n, elog.mean_loss.nll / n, elog.mean_loss.reg / n);

    bool improved = false;
    if (validate && epoch % tc.eval_every == 0) {
      const GenerationResult g =
          generate_dataset(model, Vocab(), *valid, config.generation, tc.batch_size);
      const double m = metric_value(score_generation(g), tc.selection_metric);
      elog.validation_metric = m;
      if (!summary.best_metric || m > *summary.best_metric) {
        summary.best_metric = m;
        summary.best_epoch = epoch;
        best_snapshot = model.parameters().serialize();
        stale = 0;
        improved = true;
      } else {
        ++stale;
      }
    }
    if (hooks.log) {
      json line = {{"epoch_end", epoch}, {"mean", loss_json(elog.mean_loss)}};
      if (elog.validation_metric) line["valid_" + tc.selection_metric] = *elog.validation_metric;
      *hooks.log << line.dump() << "\n";
    }
    if (hooks.progress) {
      char buf[200];
      std::snprintf(buf, sizeof(buf), "epoch %zu  step %zu  kl %.4f  nll %.4f  reg %.4f  total %.4f",
                    epoch, step, elog.mean_loss.kl, elog.mean_loss.nll, elog.mean_loss.reg,
                    elog.mean_loss.total);
      *hooks.progress << buf;
      if (elog.validation_metric) {
        std::snprintf(buf, sizeof(buf), "  valid %s %.4f", tc.selection_metric.c_str(),
                      *elog.validation_metric);
        *hooks.progress << buf;
      }
      *hooks.progress << std::endl;
    }
    summary.epochs.push_back(elog);
    if (improved && hooks.on_improvement) hooks.on_improvement(model, elog);
    if (validate && tc.patience && stale >= tc.patience) {
      summary.stop_reason = "patience";
      break;
    }
  }
  if (summary.stop_reason.empty()) {
    summary.stop_reason = tc.max_steps && step >= tc.max_steps ? "max_steps" : "epochs";
  }
  if (!best_snapshot.empty()) {
    model.parameters().copy_values_from(ParameterStore::deserialize(best_snapshot));
  }
  return summary;
}

LossBreakdown evaluate_loss(const MsptModel& model, const Dataset& data, std::size_t batch_size) {
  if (data.examples.empty()) throw ContractError("cannot evaluate an empty dataset");
  double kl = 0, nll = 0, reg = 0;
  const double n = static_cast<double>(data.examples.size());
  for (const auto& group : batches_in_order(data, identity(data.examples.size()), batch_size)) {
    Tape tape(false);
    const LossBreakdown l =
        model.loss(tape, make_batch(std::span<const EncodedExample* const>(group), true)).values();
    const double w = static_cast<double>(group.size()) / n;
    kl += w * l.kl;
    nll += w * l.nll;
    reg += w * l.reg;
  }
  const ModelConfig& c = model.config();
  LossBreakdown out = total_loss(kl, nll, reg);
  out.total = c.kl_weight * kl + c.nll_weight * nll + c.reg_weight * reg;
  return out;
}

GenerationResult generate_dataset(const MsptModel& model, const Vocab& vocab, const Dataset& data,
                                  const GenerationConfig& config, std::size_t batch_size) {
  GenerationResult r;
  for (const auto& group : batches_in_order(data, identity(data.examples.size()), batch_size)) {
    const Batch batch = make_batch(std::span<const EncodedExample* const>(group), false);
    for (auto& s : generate(model, batch, config)) r.sequences.push_back(std::move(s));
  }
  // Token strings: an empty vocabulary means "compare ids only", used during
  // training where references are re-encoded the same way.
  for (std::size_t i = 0; i < r.sequences.size(); ++i) {
    const auto& ids = r.sequences[i].tokens;
    if (vocab.size() > Vocab::kReserved) {
      r.outputs.push_back(vocab.decode(ids));
    } else {
      Tokens t;
      for (TokenId id : ids) t.push_back(std::to_string(id));
      r.outputs.push_back(std::move(t));
    }
    const auto& rec = data.records[i];
    const auto& ex = data.examples[i];
    if (vocab.size() > Vocab::kReserved) {
      r.references.push_back(rec.reason ? tokenize(*rec.reason) : Tokens{});
    } else {
      Tokens t;
      for (std::size_t k = 1; k + 1 < ex.reason.size(); ++k) t.push_back(std::to_string(ex.reason[k]));
      r.references.push_back(std::move(t));
    }
  }
  return r;
}

MetricReport score_generation(const GenerationResult& result) {
  if (result.outputs.empty()) throw ContractError("no generated outputs to score");
  for (std::size_t i = 0; i < result.references.size(); ++i) {
    if (result.references[i].empty()) {
      throw ContractError("record " + std::to_string(i + 1) + " has no reference reason");
    }
  }
  return evaluate_corpus(result.outputs, result.references);
}

double exact_match_rate(const GenerationResult& result) {
  if (result.outputs.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < result.outputs.size(); ++i) hits += result.outputs[i] == result.references[i];
  return static_cast<double>(hits) / static_cast<double>(result.outputs.size());
}

void save_checkpoint(const std::filesystem::path& dir, const MsptModel& model, const Vocab& vocab,
                     const ExperimentConfig& config) {
  std::filesystem::create_directories(dir);
  model.parameters().save(dir / "params.bin");
  vocab.save(dir / "vocab.txt");
  json meta = {{"format", 1},
               {"config", to_json(config)},
               {"config_hash", config_hash(config)},
               {"vocab_hash", hex64(vocab.hash())},
               {"vocab_size", vocab.size()},
               {"seed", config.train.seed},
               {"parameter_count", model.parameters().element_count()}};
  std::ofstream out(dir / "config.json");
  out << meta.dump(2) << "\n";
  if (!out) throw Error("cannot write " + (dir / "config.json").string());
}

Checkpoint load_checkpoint(const std::filesystem::path& dir) {
  std::ifstream in(dir / "config.json");
  if (!in) throw CompatibilityError("no checkpoint at " + dir.string() + " (config.json missing)");
  json meta;
  try {
    in >> meta;
  } catch (const json::exception& e) {
    throw ParseError(std::string("checkpoint config.json: ") + e.what(), 0);
  }
  Checkpoint c;
  c.config = experiment_config_from_json(meta.at("config"));
  c.config_hash = meta.value("config_hash", "");
  c.vocab = Vocab::load(dir / "vocab.txt");
  if (hex64(c.vocab.hash()) != meta.value("vocab_hash", "")) {
    throw CompatibilityError("vocab.txt does not match the vocabulary hash recorded in config.json");
  }
  c.model = std::make_unique<MsptModel>(c.config.model, c.vocab.size(), c.config.train.seed);
  ParameterStore stored = ParameterStore::load(dir / "params.bin");
  auto expected = c.model->parameters().names();
  auto found = stored.names();
  std::sort(expected.begin(), expected.end());
  std::sort(found.begin(), found.end());
  if (expected != found) {
    throw CompatibilityError("params.bin holds a different parameter inventory than config.json describes");
  }
  for (const auto& name : expected) {
    if (stored.get(name).value.shape() != c.model->parameters().get(name).value.shape()) {
      throw CompatibilityError("parameter " + name + " has shape " +
                               to_string(stored.get(name).value.shape()) + ", model expects " +
                               to_string(c.model->parameters().get(name).value.shape()));
    }
  }
  c.model->parameters().copy_values_from(stored);
  return c;
}

std::vector<AblationVariant> standard_variants() {
  return {{"full-soft", Variant::kFull, FusionMode::kSoft},
          {"full-hard", Variant::kFull, FusionMode::kHard},
          {"no-pga", Variant::kNoPga, FusionMode::kSoft},
          {"no-qa", Variant::kNoQa, FusionMode::kSoft}};
}

AblationResult run_ablation(const ExperimentConfig& base, const Dataset& train,
                            const Dataset* valid, const Dataset& test, const Vocab& vocab,
                            const std::vector<AblationVariant>& variants,
                            const std::vector<std::uint64_t>& seeds, std::ostream* progress) {
  if (seeds.empty()) throw ConfigError("ablation needs at least one seed");
  AblationResult result;
  result.seeds = seeds;
  for (const auto& v : variants) {
    AblationRow row;
    row.name = v.name;
    for (std::uint64_t seed : seeds) {
      ExperimentConfig cfg = base;
      cfg.model.variant = v.variant;
      cfg.model.fusion = v.fusion;
      cfg.train.seed = seed;
      MsptModel model(cfg.model, vocab.size(), seed);
      train_model(model, cfg, train, valid);
      const MetricReport r = score_generation(
          generate_dataset(model, vocab, test, cfg.generation, cfg.train.batch_size));
      if (progress) {
        char buf[160];
        std::snprintf(buf, sizeof(buf), "%-10s seed %llu  rouge1 %.4f", v.name.c_str(),
                      static_cast<unsigned long long>(seed), r.rouge1);
        *progress << buf << std::endl;
      }
      row.per_seed.push_back(r);
    }
    auto med = [&](double MetricReport::*field) {
      std::vector<double> xs;
      for (const auto& r : row.per_seed) xs.push_back(r.*field);
      return median(xs);
    };
    row.median.rouge1 = med(&MetricReport::rouge1);
    row.median.rouge2 = med(&MetricReport::rouge2);
    row.median.rougeL = med(&MetricReport::rougeL);
    row.median.bleu1 = med(&MetricReport::bleu1);
    row.median.bleu2 = med(&MetricReport::bleu2);
    row.median.examples = test.examples.size();
    result.rows.push_back(std::move(row));
  }
  return result;
}

std::string ablation_table(const AblationResult& result) {
  std::string out = "variant       RG-1    RG-2    RG-L    BU-1    BU-2   (median over " +
                    std::to_string(result.seeds.size()) + " seeds, %)\n";
  for (const auto& row : result.rows) {
    char buf[160];
    const MetricReport& m = row.median;
    std::snprintf(buf, sizeof(buf), "%-10s  %6.2f  %6.2f  %6.2f  %6.2f  %6.2f\n", row.name.c_str(),
                  100 * m.rouge1, 100 * m.rouge2, 100 * m.rougeL, 100 * m.bleu1, 100 * m.bleu2);
    out += buf;
  }
  return out;
}

std::string ablation_json(const AblationResult& result, const std::string& config_hash) {
  json rows = json::array();
  for (const auto& row : result.rows) {
    json per_seed = json::array();
    for (const auto& r : row.per_seed) per_seed.push_back(r.rouge1);
    rows.push_back({{"variant", row.name},
                    {"rouge1", row.median.rouge1},
                    {"rouge2", row.median.rouge2},
                    {"rougeL", row.median.rougeL},
                    {"bleu1", row.median.bleu1},
                    {"bleu2", row.median.bleu2},
                    {"rouge1_per_seed", per_seed}});
  }
  return json{{"config_hash", config_hash}, {"seeds", result.seeds}, {"rows", rows}}.dump(2);
}

}  // namespace mspt
