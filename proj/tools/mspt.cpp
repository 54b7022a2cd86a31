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

// Command-line entry point: gen-data, train, eval, generate, ablate.

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mspt/config.hpp"
#include "mspt/corpus.hpp"
#include "mspt/error.hpp"
#include "mspt/kernels.hpp"
#include "mspt/synthetic.hpp"
#include "mspt/text.hpp"
#include "mspt/trainer.hpp"

namespace {

using nlohmann::json;
using namespace mspt;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumeric = 3;

// Flag values that override the config file when given.
struct Overrides {
  std::optional<std::size_t> embed_dim, hidden_dim, heads, encoder_layers, decoder_layers, ffn_dim;
  std::optional<double> lambda1, lambda2;
  std::optional<bool> learn_lambda1, detach_posterior, residual_norm, share_qa_encoder;
  std::optional<std::string> fusion, variant, activation, reg_mode;
  std::optional<double> kl_weight, nll_weight, reg_weight;
  std::optional<std::string> decode, conditioning;
  std::optional<std::size_t> beam_width, max_length;
  std::optional<double> length_alpha;
  std::optional<std::string> optimizer;
  std::optional<double> learning_rate, clip_norm;
  std::optional<std::size_t> batch_size, epochs, max_steps, patience, eval_every;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> selection_metric;
  std::optional<std::size_t> vocab_max_size, vocab_min_count;
};

void add_model_flags(CLI::App& app, Overrides& o) {
  app.add_option("--embed-dim", o.embed_dim, "Token embedding width");
  app.add_option("--hidden-dim", o.hidden_dim, "Bi-LSTM hidden size per direction");
  app.add_option("--heads", o.heads, "Attention heads");
  app.add_option("--encoder-layers", o.encoder_layers, "Self-attention layers per item encoder");
  app.add_option("--decoder-layers", o.decoder_layers, "Decoder layers");
  app.add_option("--ffn-dim", o.ffn_dim, "Feed-forward width (0 = twice the model width)");
  app.add_option("--lambda1", o.lambda1, "Title weight in the item representation");
  app.add_option("--learn-lambda1", o.learn_lambda1, "Learn lambda1 through a sigmoid");
  app.add_option("--lambda2", o.lambda2, "Item weight in soft fusion");
  app.add_option("--fusion", o.fusion, "Posterior fusion: soft | hard");
  app.add_option("--variant", o.variant, "Model variant: full | no-qa | no-pga");
  app.add_option("--activation", o.activation, "Fusion activation: tanh | sigmoid");
  app.add_option("--detach-posterior", o.detach_posterior, "Stop KL gradients into the posterior");
  app.add_option("--residual-norm", o.residual_norm, "Residual connections and layer norm");
  app.add_option("--share-qa-encoder", o.share_qa_encoder, "QA pairs reuse the title Bi-LSTM");
  app.add_option("--reg-mode", o.reg_mode, "Regularizer: autoregressive | bow");
  app.add_option("--kl-weight", o.kl_weight, "Weight of the KL term");
  app.add_option("--nll-weight", o.nll_weight, "Weight of the NLL term");
  app.add_option("--reg-weight", o.reg_weight, "Weight of the regularizer");
}

void add_generation_flags(CLI::App& app, Overrides& o) {
  app.add_option("--decode", o.decode, "Decoding: greedy | beam");
  app.add_option("--beam-width", o.beam_width, "Beam width");
  app.add_option("--max-length", o.max_length, "Maximum generated tokens");
  app.add_option("--length-alpha", o.length_alpha, "Beam length normalization exponent");
  app.add_option("--conditioning", o.conditioning,
                 "Inference conditioning: prior | posterior-if-available");
}

void add_train_flags(CLI::App& app, Overrides& o) {
  app.add_option("--optimizer", o.optimizer, "adam | sgd");
  app.add_option("--lr", o.learning_rate, "Learning rate");
  app.add_option("--clip-norm", o.clip_norm, "Global gradient norm cap (0 disables)");
  app.add_option("--batch-size", o.batch_size, "Products per step");
  app.add_option("--epochs", o.epochs, "Maximum epochs");
  app.add_option("--max-steps", o.max_steps, "Maximum optimizer steps (0 = no cap)");
  app.add_option("--patience", o.patience, "Evaluations without improvement before stopping");
  app.add_option("--eval-every", o.eval_every, "Validate every this many epochs");
  app.add_option("--seed", o.seed, "Training seed");
  app.add_option("--selection-metric", o.selection_metric, "Validation metric for model selection");
  app.add_option("--vocab-max-size", o.vocab_max_size, "Vocabulary size cap");
  app.add_option("--vocab-min-count", o.vocab_min_count, "Minimum token count");
}

template <typename T>
void set_if(const std::optional<T>& from, T& to) {
  if (from) to = *from;
}

template <typename E>
void set_enum_if(const std::optional<std::string>& from, E& to, E (*parse)(const std::string&)) {
  if (from) to = parse(*from);
}

void apply(const Overrides& o, ExperimentConfig& c) {
  ModelConfig& m = c.model;
  set_if(o.embed_dim, m.embed_dim);
  set_if(o.hidden_dim, m.hidden_dim);
  set_if(o.heads, m.heads);
  set_if(o.encoder_layers, m.encoder_layers);
  set_if(o.decoder_layers, m.decoder_layers);
  set_if(o.ffn_dim, m.ffn_dim);
  set_if(o.lambda1, m.lambda1);
  set_if(o.learn_lambda1, m.learn_lambda1);
  set_if(o.lambda2, m.lambda2);
  set_enum_if(o.fusion, m.fusion, &parse_fusion_mode);
  set_enum_if(o.variant, m.variant, &parse_variant);
  set_enum_if(o.activation, m.activation, &parse_activation);
  set_if(o.detach_posterior, m.detach_posterior);
  set_if(o.residual_norm, m.residual_norm);
  set_if(o.share_qa_encoder, m.share_qa_encoder);
  set_enum_if(o.reg_mode, m.reg_mode, &parse_reg_mode);
  set_if(o.kl_weight, m.kl_weight);
  set_if(o.nll_weight, m.nll_weight);
  set_if(o.reg_weight, m.reg_weight);
  GenerationConfig& g = c.generation;
  set_enum_if(o.decode, g.mode, &parse_decode_mode);
  set_if(o.beam_width, g.beam_width);
  set_if(o.max_length, g.max_length);
  set_if(o.length_alpha, g.length_alpha);
  set_enum_if(o.conditioning, g.conditioning, &parse_conditioning);
  TrainConfig& t = c.train;
  set_enum_if(o.optimizer, t.optimizer.kind, &parse_optimizer_kind);
  set_if(o.learning_rate, t.optimizer.learning_rate);
  set_if(o.clip_norm, t.optimizer.clip_norm);
  set_if(o.batch_size, t.batch_size);
  set_if(o.epochs, t.epochs);
  set_if(o.max_steps, t.max_steps);
  set_if(o.patience, t.patience);
  set_if(o.eval_every, t.eval_every);
  set_if(o.seed, t.seed);
  set_if(o.selection_metric, t.selection_metric);
  set_if(o.vocab_max_size, c.data.vocab_max_size);
  set_if(o.vocab_min_count, c.data.vocab_min_count);
}

ExperimentConfig resolve(const std::string& config_path, const Overrides& o) {
  ExperimentConfig c = config_path.empty() ? ExperimentConfig{} : load_experiment_config(config_path);
  apply(o, c);
  c.validate();
  return c;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw Error("cannot write " + path.string());
}

std::vector<ProductRecord> load_nonempty(const std::string& path, const char* role) {
  if (path.empty()) throw ConfigError(std::string("no ") + role + " corpus given");
  auto records = load_corpus(path);
  if (records.empty()) throw ContractError(std::string(role) + " corpus " + path + " has no records");
  return records;
}

std::string format_stats(const CorpusStats& s, const SyntheticCorpusSpec& spec) {
  std::ostringstream out;
  char buf[160];
  out << "statistic        measured   target\n";
  const auto row = [&](const char* name, double measured, double target) {
    std::snprintf(buf, sizeof(buf), "%-15s %9.2f %8.2f\n", name, measured, target);
    out << buf;
  };
  row("title tokens", s.title_tokens, spec.title_tokens);
  row("attr tokens", s.attribute_tokens, spec.attribute_tokens);
  row("question tokens", s.question_tokens, spec.question_tokens);
  row("answer tokens", s.answer_tokens, spec.answer_tokens);
  row("qa pairs", s.qa_pairs, spec.qa_pairs_mean * (1.0 - spec.zero_qa_fraction));
  std::snprintf(buf, sizeof(buf), "%-15s %9.2f\n", "reason tokens", s.reason_tokens);
  out << buf;
  return out.str();
}

json stats_json(const CorpusStats& s) {
  return {{"products", s.products},         {"title_tokens", s.title_tokens},
          {"attribute_tokens", s.attribute_tokens}, {"question_tokens", s.question_tokens},
          {"answer_tokens", s.answer_tokens},       {"reason_tokens", s.reason_tokens},
          {"qa_pairs", s.qa_pairs}};
}

struct GenDataArgs {
  std::string config, out = "data";
  std::optional<std::size_t> products;
  std::optional<std::uint64_t> seed;
  std::optional<double> qa_only_fraction, zero_qa_fraction, qa_pairs_mean;
  std::vector<double> split = {0.8, 0.1, 0.1};
};

int run_gen_data(const GenDataArgs& a) {
  ExperimentConfig c = a.config.empty() ? ExperimentConfig{} : load_experiment_config(a.config);
  set_if(a.products, c.synthetic.products);
  set_if(a.seed, c.synthetic.seed);
  set_if(a.qa_only_fraction, c.synthetic.qa_only_fraction);
  set_if(a.zero_qa_fraction, c.synthetic.zero_qa_fraction);
  set_if(a.qa_pairs_mean, c.synthetic.qa_pairs_mean);
  c.validate();
  if (a.split.size() != 3) throw ConfigError("--split takes three fractions");
  const SyntheticCorpus corpus = generate_synthetic_corpus(c.synthetic);
  const CorpusSplit split = split_corpus(corpus.records, a.split[0], a.split[1], a.split[2]);
  const std::filesystem::path dir(a.out);
  std::filesystem::create_directories(dir);
  save_corpus(dir / "train.jsonl", split.train);
  save_corpus(dir / "valid.jsonl", split.valid);
  save_corpus(dir / "test.jsonl", split.test);
  const CorpusStats stats = corpus_stats(corpus.records);
  json manifest = {{"config_hash", config_hash(c)},
                   {"seed", c.synthetic.seed},
                   {"synthetic", to_json(c.synthetic)},
                   {"split", a.split},
                   {"counts",
                    {{"train", split.train.size()},
                     {"valid", split.valid.size()},
                     {"test", split.test.size()}}},
                   {"stats", stats_json(stats)}};
  write_text(dir / "manifest.json", manifest.dump(2) + "\n");
  std::cout << "wrote " << split.train.size() << "/" << split.valid.size() << "/"
            << split.test.size() << " records to " << dir.string() << "\n"
            << format_stats(stats, c.synthetic);
  return kExitOk;
}

struct TrainArgs {
  std::string config, train, valid, out = "checkpoint";
  Overrides overrides;
};

int run_train(const TrainArgs& a) {
  ExperimentConfig c = resolve(a.config, a.overrides);
  if (!a.train.empty()) c.data.train_path = a.train;
  if (!a.valid.empty()) c.data.valid_path = a.valid;
  const auto train_records = load_nonempty(c.data.train_path, "training");
  const Vocab vocab = build_vocab(train_records, c.data);
  const Dataset train = make_dataset(train_records, vocab, c.model.limits);
  std::optional<Dataset> valid;
  if (!c.data.valid_path.empty()) {
    valid = make_dataset(load_corpus(c.data.valid_path), vocab, c.model.limits);
  }
  const std::filesystem::path dir(a.out);
  std::filesystem::create_directories(dir);
  std::ofstream log(dir / "train_log.jsonl");
  std::ofstream timing(dir / "timing.jsonl");
  MsptModel model(c.model, vocab.size(), c.train.seed);
  std::cerr << "config " << config_hash(c) << "  seed " << c.train.seed << "  vocab "
            << vocab.size() << "  parameters " << model.parameters().element_count()
            << "  kernels " << kernels::active().name << "\n";
  TrainHooks hooks;
  hooks.log = &log;
  hooks.timing = &timing;
  hooks.progress = &std::cerr;
  hooks.on_improvement = [&](const MsptModel& m, const EpochLog&) { save_checkpoint(dir, m, vocab, c); };
  const TrainSummary s = train_model(model, c, train, valid ? &*valid : nullptr, hooks);
  // Best parameters are restored at the end; saving again covers runs
  // without a validation set.
  save_checkpoint(dir, model, vocab, c);
  std::cout << "trained " << s.steps.size() << " steps (" << s.stop_reason << ")";
  if (s.best_metric) {
    std::printf("; best validation %s %.4f at epoch %zu", c.train.selection_metric.c_str(),
                *s.best_metric, s.best_epoch);
  }
  std::cout << "\ncheckpoint: " << dir.string() << "\n";
  return kExitOk;
}

struct EvalArgs {
  std::string checkpoint, data, json_out, output;
  Overrides overrides;
};

GenerationConfig generation_for(const Checkpoint& cp, const Overrides& o) {
  ExperimentConfig c = cp.config;
  apply(o, c);
  c.generation.validate();
  return c.generation;
}

int run_eval(const EvalArgs& a) {
  const Checkpoint cp = load_checkpoint(a.checkpoint);
  const GenerationConfig gen = generation_for(cp, a.overrides);
  const auto records = load_nonempty(a.data, "evaluation");
  const Dataset data = make_dataset(records, cp.vocab, cp.config.model.limits);
  const GenerationResult result =
      generate_dataset(*cp.model, cp.vocab, data, gen, cp.config.train.batch_size);
  const MetricReport report = score_generation(result);
  json extra = {{"config_hash", cp.config_hash},
                {"seed", cp.config.train.seed},
                {"checkpoint", a.checkpoint},
                {"data", a.data},
                {"decode", to_string(gen.mode)},
                {"conditioning", to_string(gen.conditioning)},
                {"exact_match", exact_match_rate(result)}};
  std::cout << metric_report_table(report);
  if (!a.json_out.empty()) write_text(a.json_out, metric_report_json(report, extra.dump()) + "\n");
  return kExitOk;
}

int run_generate(const EvalArgs& a) {
  const Checkpoint cp = load_checkpoint(a.checkpoint);
  const GenerationConfig gen = generation_for(cp, a.overrides);
  const auto records = load_nonempty(a.data, "input");
  const Dataset data = make_dataset(records, cp.vocab, cp.config.model.limits);
  const GenerationResult result =
      generate_dataset(*cp.model, cp.vocab, data, gen, cp.config.train.batch_size);
  std::ostringstream lines;
  for (const Tokens& out : result.outputs) lines << join_tokens(out) << "\n";
  if (a.output.empty()) {
    std::cout << lines.str();
  } else {
    write_text(a.output, lines.str());
    json meta = {{"config_hash", cp.config_hash},
                 {"seed", cp.config.train.seed},
                 {"checkpoint", a.checkpoint},
                 {"data", a.data},
                 {"decode", to_string(gen.mode)},
                 {"conditioning", to_string(gen.conditioning)}};
    write_text(a.output + ".meta.json", meta.dump(2) + "\n");
  }
  return kExitOk;
}

struct AblateArgs {
  std::string config, train, valid, test, json_out;
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
  std::vector<std::string> variants;
  Overrides overrides;
};

int run_ablate(const AblateArgs& a) {
  ExperimentConfig c = resolve(a.config, a.overrides);
  if (!a.train.empty()) c.data.train_path = a.train;
  if (!a.valid.empty()) c.data.valid_path = a.valid;
  if (!a.test.empty()) c.data.test_path = a.test;
  const auto train_records = load_nonempty(c.data.train_path, "training");
  const Vocab vocab = build_vocab(train_records, c.data);
  const Dataset train = make_dataset(train_records, vocab, c.model.limits);
  const Dataset test = make_dataset(load_nonempty(c.data.test_path, "test"), vocab, c.model.limits);
  std::optional<Dataset> valid;
  if (!c.data.valid_path.empty()) {
    valid = make_dataset(load_corpus(c.data.valid_path), vocab, c.model.limits);
  }
  std::vector<AblationVariant> variants;
  for (const AblationVariant& v : standard_variants()) {
    if (a.variants.empty() ||
        std::find(a.variants.begin(), a.variants.end(), v.name) != a.variants.end()) {
      variants.push_back(v);
    }
  }
  if (variants.empty()) throw ConfigError("no known variant selected");
  const AblationResult r =
      run_ablation(c, train, valid ? &*valid : nullptr, test, vocab, variants, a.seeds, &std::cerr);
  std::cout << ablation_table(r);
  if (!a.json_out.empty()) write_text(a.json_out, ablation_json(r, config_hash(c)) + "\n");
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-source posterior transformer for recommendation reasons"};
  app.require_subcommand(1);

  GenDataArgs gen_data;
  CLI::App* gd = app.add_subcommand("gen-data", "Write a synthetic corpus split into train/valid/test");
  gd->add_option("--config", gen_data.config, "Experiment config (its synthetic section is used)");
  gd->add_option("--out", gen_data.out, "Output directory");
  gd->add_option("--products", gen_data.products, "Number of products");
  gd->add_option("--seed", gen_data.seed, "Corpus seed");
  gd->add_option("--qa-only-fraction", gen_data.qa_only_fraction,
                 "Fraction of each product's aspects mentioned only in QA");
  gd->add_option("--zero-qa-fraction", gen_data.zero_qa_fraction, "Fraction of products without QA");
  gd->add_option("--qa-pairs", gen_data.qa_pairs_mean, "Mean QA pairs per product");
  gd->add_option("--split", gen_data.split, "Train, valid and test fractions")->expected(3);

  TrainArgs train;
  CLI::App* tr = app.add_subcommand("train", "Train a model and write a checkpoint directory");
  tr->add_option("--config", train.config, "Experiment config JSON");
  tr->add_option("--train", train.train, "Training corpus (JSONL)");
  tr->add_option("--valid", train.valid, "Validation corpus (JSONL)");
  tr->add_option("--out", train.out, "Checkpoint directory");
  add_model_flags(*tr, train.overrides);
  add_generation_flags(*tr, train.overrides);
  add_train_flags(*tr, train.overrides);

  EvalArgs eval;
  CLI::App* ev = app.add_subcommand("eval", "Score generated reasons against a corpus");
  ev->add_option("--checkpoint", eval.checkpoint, "Checkpoint directory")->required();
  ev->add_option("--data", eval.data, "Corpus with reference reasons")->required();
  ev->add_option("--json", eval.json_out, "Also write the report as JSON");
  add_generation_flags(*ev, eval.overrides);

  EvalArgs gen;
  CLI::App* ge = app.add_subcommand("generate", "Generate one reason per input record");
  ge->add_option("--checkpoint", gen.checkpoint, "Checkpoint directory")->required();
  ge->add_option("--data", gen.data, "Input corpus")->required();
  ge->add_option("--out", gen.output, "Output text file (stdout if omitted)");
  add_generation_flags(*ge, gen.overrides);

  AblateArgs ablate;
  CLI::App* ab = app.add_subcommand("ablate", "Train and score every model variant over several seeds");
  ab->add_option("--config", ablate.config, "Base experiment config JSON");
  ab->add_option("--train", ablate.train, "Training corpus");
  ab->add_option("--valid", ablate.valid, "Validation corpus");
  ab->add_option("--test", ablate.test, "Test corpus");
  ab->add_option("--seeds", ablate.seeds, "Training seeds")->delimiter(',');
  ab->add_option("--variants", ablate.variants, "Subset of full-soft,full-hard,no-pga,no-qa")
      ->delimiter(',');
  ab->add_option("--json", ablate.json_out, "Also write the table as JSON");
  add_model_flags(*ab, ablate.overrides);
  add_generation_flags(*ab, ablate.overrides);
  add_train_flags(*ab, ablate.overrides);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (gd->parsed()) return run_gen_data(gen_data);
    if (tr->parsed()) return run_train(train);
    if (ev->parsed()) return run_eval(eval);
    if (ge->parsed()) return run_generate(gen);
    if (ab->parsed()) return run_ablate(ablate);
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const Error& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}
