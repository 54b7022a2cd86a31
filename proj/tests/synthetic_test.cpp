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

#include <cmath>
#include <set>
#include <sstream>

#include "mspt/error.hpp"
#include "mspt/synthetic.hpp"
#include "mspt/text.hpp"

namespace mspt {
namespace {

std::set<std::string> item_words(const ProductRecord& r) {
  std::set<std::string> out;
  for (const auto& w : tokenize(r.title)) out.insert(w);
  for (const auto& a : r.attributes) {
    for (const auto& w : tokenize(a)) out.insert(w);
  }
  return out;
}

TEST(Synthetic, SameSeedGivesIdenticalCorpora) {
  SyntheticCorpusSpec spec;
  spec.products = 50;
  spec.seed = 9;
  auto a = generate_synthetic_corpus(spec);
  auto b = generate_synthetic_corpus(spec);
  std::stringstream sa, sb;
  write_corpus(sa, a.records);
  write_corpus(sb, b.records);
  EXPECT_EQ(sa.str(), sb.str());
  spec.seed = 10;
  std::stringstream sc;
  write_corpus(sc, generate_synthetic_corpus(spec).records);
  EXPECT_NE(sa.str(), sc.str());
}

TEST(Synthetic, ZeroQaOnlyFractionMakesReasonsDerivableFromItemText) {
  SyntheticCorpusSpec spec;
  spec.products = 200;
  spec.qa_only_fraction = 0.0;
  for (const auto& r : generate_synthetic_corpus(spec).records) {
    const auto words = item_words(r);
    for (const auto& w : tokenize(*r.reason)) {
      EXPECT_TRUE(words.count(w)) << r.id << ": '" << w << "' not in title/attributes";
    }
  }
}

TEST(Synthetic, QaOnlyAspectsHaveNoOverlapWithItemText) {
  for (double f : {0.25, 0.5, 1.0}) {
    SyntheticCorpusSpec spec;
    spec.products = 200;
    spec.qa_only_fraction = f;
    spec.seed = 4;
    auto corpus = generate_synthetic_corpus(spec);
    for (std::size_t i = 0; i < corpus.records.size(); ++i) {
      const auto& r = corpus.records[i];
      const auto& planted = corpus.planted[i];
      const double k = static_cast<double>(planted.item.size() + planted.qa_only.size());
      EXPECT_GE(static_cast<double>(planted.qa_only.size()), f * k - 1e-9);
      const auto words = item_words(r);
      const auto reason = tokenize(*r.reason);
      std::size_t hidden = 0;
      for (const auto& aspect : planted.qa_only) {
        bool overlaps = false;
        for (const auto& w : tokenize(aspect)) {
          overlaps |= words.count(w) > 0;
          EXPECT_NE(std::find(reason.begin(), reason.end(), w), reason.end());
        }
        if (!overlaps) ++hidden;
        // Realized somewhere in the QA text.
        bool mentioned = false;
        for (const auto& qa : r.qa_pairs) mentioned |= qa.answer.find(aspect) != std::string::npos;
        EXPECT_TRUE(mentioned) << r.id << " " << aspect;
      }
      EXPECT_EQ(hidden, planted.qa_only.size()) << r.id;
    }
  }
}

TEST(Synthetic, StatisticsMatchTargetsWithinFifteenPercent) {
  SyntheticCorpusSpec spec;
  spec.products = 1000;
  spec.seed = 123;
  const CorpusStats s = corpus_stats(generate_synthetic_corpus(spec).records);
  auto within = [](double got, double want) { return std::abs(got - want) <= 0.15 * want; };
  EXPECT_TRUE(within(s.qa_pairs, 30.9)) << s.qa_pairs;
  EXPECT_TRUE(within(s.title_tokens, 23.2)) << s.title_tokens;
  EXPECT_TRUE(within(s.attribute_tokens, 16.03)) << s.attribute_tokens;
  EXPECT_TRUE(within(s.question_tokens, 18.05)) << s.question_tokens;
  EXPECT_TRUE(within(s.answer_tokens, 18.59)) << s.answer_tokens;
  EXPECT_TRUE(within(s.reason_tokens, 10.5)) << s.reason_tokens;
}

TEST(Synthetic, ZeroQaProductsAreLongTail) {
  SyntheticCorpusSpec spec;
  spec.products = 400;
  spec.zero_qa_fraction = 0.5;
  auto corpus = generate_synthetic_corpus(spec);
  std::size_t empty = 0;
  for (std::size_t i = 0; i < corpus.records.size(); ++i) {
    if (corpus.records[i].qa_pairs.empty()) {
      ++empty;
      EXPECT_TRUE(corpus.planted[i].qa_only.empty());
    }
  }
  EXPECT_GT(empty, 150u);
  EXPECT_LT(empty, 250u);
}

TEST(Synthetic, RecordsSurviveTheCorpusFormat) {
  SyntheticCorpusSpec spec;
  spec.products = 30;
  auto records = generate_synthetic_corpus(spec).records;
  std::stringstream s;
  write_corpus(s, records);
  EXPECT_EQ(read_corpus(s), records);
}

TEST(Synthetic, InvalidSpecsAreConfigErrors) {
  SyntheticCorpusSpec spec;
  spec.qa_only_fraction = 1.5;
  EXPECT_THROW(generate_synthetic_corpus(spec), ConfigError);
  spec = {};
  spec.aspect_pool = {"soft towel", "soft blanket"};
  EXPECT_THROW(spec.validate(), ConfigError);
  spec = {};
  spec.aspects_min = 6;
  EXPECT_THROW(spec.validate(), ConfigError);
}

TEST(Split, EightyTenTenIsDisjointAndComplete) {
  SyntheticCorpusSpec spec;
  spec.products = 100;
  spec.qa_pairs_mean = 3;
  auto records = generate_synthetic_corpus(spec).records;
  auto split = split_corpus(records, 0.8, 0.1, 0.1);
  EXPECT_EQ(split.train.size(), 80u);
  EXPECT_EQ(split.valid.size(), 10u);
  EXPECT_EQ(split.test.size(), 10u);
  std::set<std::string> ids;
  for (const auto* part : {&split.train, &split.valid, &split.test}) {
    for (const auto& r : *part) EXPECT_TRUE(ids.insert(r.id).second);
  }
  EXPECT_EQ(ids.size(), 100u);
  EXPECT_THROW(split_corpus(records, 0.8, 0.3, 0.1), ConfigError);
  EXPECT_THROW(split_corpus(records, 1.2, -0.2, 0.0), ConfigError);
}

}  // namespace
}  // namespace mspt
