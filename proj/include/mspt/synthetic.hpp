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
#include <vector>

#include "mspt/corpus.hpp"

namespace mspt {

// Parameters of the synthetic product corpus. Every product belongs to a
// category, carries a brand and a set of planted aspects (two-word phrases
// whose words occur in no other aspect and in no filler pool). A fraction of
// each product's aspects is expressed only through QA pairs; the rest appear
// in the title and attributes. The reference reason is
//   <brand> <category> <aspect phrases in pool order>.
struct SyntheticCorpusSpec {
  std::size_t products = 1000;
  std::uint64_t seed = 1;

  // Two-word aspect phrases; empty means the built-in pool.
  std::vector<std::string> aspect_pool;
  std::size_t categories = 8;
  std::size_t brands = 20;
  std::size_t aspects_per_category = 12;
  std::size_t aspects_min = 3;
  std::size_t aspects_max = 5;

  // ceil(f * k) of a product's k aspects appear only in QA text.
  double qa_only_fraction = 0.5;
  // Products with no QA at all; their aspects are all item-visible.
  double zero_qa_fraction = 0.0;

  // Mean token lengths; individual lengths vary by +-40% around them.
  double title_tokens = 23.2;
  double attribute_tokens = 16.03;
  double question_tokens = 18.05;
  double answer_tokens = 18.59;
  double qa_pairs_mean = 30.9;

  // QA pairs that mention each QA-only aspect and each item aspect.
  std::size_t mentions_per_qa_aspect = 2;
  std::size_t mentions_per_item_aspect = 1;

  // Throws ConfigError on inconsistent settings.
  void validate() const;
};

std::vector<std::string> default_aspect_pool();

// Planted ground truth for one product, exposed for tests and diagnostics.
struct PlantedAspects {
  std::vector<std::string> item;
  std::vector<std::string> qa_only;
};

struct SyntheticCorpus {
  std::vector<ProductRecord> records;
  std::vector<PlantedAspects> planted;
};

// Deterministic in spec (including seed).
SyntheticCorpus generate_synthetic_corpus(const SyntheticCorpusSpec& spec);

struct CorpusStats {
  std::size_t products = 0;
  double title_tokens = 0.0;
  double attribute_tokens = 0.0;
  double question_tokens = 0.0;
  double answer_tokens = 0.0;
  double reason_tokens = 0.0;
  double qa_pairs = 0.0;
};

// Means over products (lengths) and over QA pairs (question/answer lengths),
// measured with the library tokenizer. Products without QA contribute to
// qa_pairs as 0.
CorpusStats corpus_stats(const std::vector<ProductRecord>& records);

struct CorpusSplit {
  std::vector<ProductRecord> train;
  std::vector<ProductRecord> valid;
  std::vector<ProductRecord> test;
};

// Contiguous split in record order: round(n * train) then round(n * valid)
// records, the rest to test. Fractions must be non-negative and sum to 1.
CorpusSplit split_corpus(const std::vector<ProductRecord>& records, double train,
                         double valid, double test);

}  // namespace mspt
