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

#include "mspt/error.hpp"
#include "mspt/metrics.hpp"
#include "mspt/rng.hpp"
#include "mspt/text.hpp"

namespace mspt {
namespace {

Tokens toks(const char* s) { return tokenize(s); }

TEST(RougeN, IdenticalIsOne) {
  EXPECT_DOUBLE_EQ(rouge_n(toks("a b c b"), toks("a b c b"), 1), 1.0);
  EXPECT_DOUBLE_EQ(rouge_n(toks("a b c b"), toks("a b c b"), 2), 1.0);
}

TEST(RougeN, HandCountedUnigramRecall) {
  // Overlap {a, c} out of three reference unigrams.
  EXPECT_NEAR(rouge_n(toks("a c d"), toks("a b c"), 1), 2.0 / 3.0, 1e-15);
}

TEST(RougeN, ClipsRepeatedCandidateGrams) {
  EXPECT_NEAR(rouge_n(toks("a a a a"), toks("a b"), 1), 0.5, 1e-15);
}

TEST(RougeN, DisjointIsZero) { EXPECT_EQ(rouge_n(toks("x y"), toks("a b"), 1), 0.0); }

TEST(RougeN, EmptyReferenceIsAContractError) {
  EXPECT_THROW(rouge_n(toks("a"), Tokens{}, 1), ContractError);
  EXPECT_THROW(rouge_n(toks("a"), toks("a"), 0), ContractError);
}

TEST(RougeL, IdenticalIsOne) {
  auto r = rouge_l(toks("a b c"), toks("a b c"));
  EXPECT_EQ(r.lcs, 3u);
  EXPECT_DOUBLE_EQ(r.f, 1.0);
}

TEST(RougeL, HandLcsCase) {
  auto r = rouge_l(toks("a b c d"), toks("a c"));
  EXPECT_EQ(r.lcs, 2u);
  EXPECT_DOUBLE_EQ(r.recall, 1.0);
  EXPECT_DOUBLE_EQ(r.precision, 0.5);
  const double b2 = kRougeLBeta * kRougeLBeta;
  EXPECT_NEAR(r.f, (1 + b2) * 0.5 / (1.0 + b2 * 0.5), 1e-15);
}

TEST(RougeL, ReversedDistinctTokensHaveLcsOne) {
  auto r = rouge_l(toks("e d c b a"), toks("a b c d e"));
  EXPECT_EQ(r.lcs, 1u);
  EXPECT_DOUBLE_EQ(r.precision, 0.2);
  EXPECT_DOUBLE_EQ(r.recall, 0.2);
  EXPECT_NEAR(r.f, 0.2, 1e-15);
}

TEST(RougeL, MatchesBruteForceSubsequenceSearch) {
  // Enumerate every subsequence of the short candidate and test membership.
  Rng rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    Tokens cand, ref;
    const std::size_t m = 1 + rng.index(8), n = 1 + rng.index(8);
    for (std::size_t i = 0; i < m; ++i) cand.push_back(std::string(1, char('a' + rng.index(4))));
    for (std::size_t i = 0; i < n; ++i) ref.push_back(std::string(1, char('a' + rng.index(4))));
    std::size_t best = 0;
    for (unsigned mask = 0; mask < (1u << m); ++mask) {
      std::size_t j = 0, len = 0;
      bool ok = true;
      for (std::size_t i = 0; i < m && ok; ++i) {
        if (!(mask >> i & 1u)) continue;
        while (j < n && ref[j] != cand[i]) ++j;
        if (j == n) ok = false;
        else { ++j; ++len; }
      }
      if (ok) best = std::max(best, len);
    }
    EXPECT_EQ(rouge_l(cand, ref).lcs, best);
  }
}

TEST(Bleu, IdenticalCorpusIsOne) {
  std::vector<Tokens> c = {toks("a b c"), toks("d e")};
  EXPECT_NEAR(bleu(c, c, 1), 1.0, 1e-15);
  EXPECT_NEAR(bleu(c, c, 2), 1.0, 1e-15);
}

TEST(Bleu, LongerCandidateHasNoBrevityPenalty) {
  // Every reference unigram matched; clipped precision 3/5.
  std::vector<Tokens> c = {toks("a b c a x")}, r = {toks("a b c")};
  EXPECT_NEAR(bleu(c, r, 1), 3.0 / 5.0, 1e-15);
}

TEST(Bleu, ShortCandidatePaysBrevityPenalty) {
  std::vector<Tokens> c = {toks("a b")}, r = {toks("a b c d")};
  EXPECT_NEAR(bleu(c, r, 1), std::exp(1.0 - 2.0), 1e-15);
}

TEST(Bleu, ZeroOverlapSitsAtTheSmoothingFloor) {
  // No unigram matches: (0+1)/(3+1). Bigrams likewise (0+1)/(2+1).
  std::vector<Tokens> c = {toks("x y z")}, r = {toks("a b c")};
  EXPECT_NEAR(bleu(c, r, 1), 0.25, 1e-15);
  EXPECT_NEAR(bleu(c, r, 2), std::sqrt(0.25 / 3.0), 1e-15);
}

TEST(Bleu, MatchesSmoothedFormulaOnAHandCase) {
  // Unigrams: 3 of 4 match; bigrams: "a b" matches 1 of 3.
  std::vector<Tokens> c = {toks("a b d c")}, r = {toks("a b c e")};
  EXPECT_NEAR(bleu(c, r, 2), std::sqrt(0.75 * (1.0 / 3.0)), 1e-9);
}

TEST(Bleu, LengthMismatchIsAContractError) {
  EXPECT_THROW(bleu({toks("a")}, {}, 1), ContractError);
}

TEST(Metrics, InvariantToRecordOrder) {
  Rng rng(5);
  std::vector<Tokens> c, r;
  for (int i = 0; i < 40; ++i) {
    Tokens a, b;
    for (std::size_t k = 0, n = 1 + rng.index(6); k < n; ++k) a.push_back(std::string(1, char('a' + rng.index(5))));
    for (std::size_t k = 0, n = 1 + rng.index(6); k < n; ++k) b.push_back(std::string(1, char('a' + rng.index(5))));
    c.push_back(a);
    r.push_back(b);
  }
  auto base = evaluate_corpus(c, r);
  std::vector<std::size_t> perm(c.size());
  for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
  std::shuffle(perm.begin(), perm.end(), rng.engine());
  std::vector<Tokens> c2, r2;
  for (std::size_t i : perm) {
    c2.push_back(c[i]);
    r2.push_back(r[i]);
  }
  auto shuffled = evaluate_corpus(c2, r2);
  EXPECT_NEAR(base.rouge1, shuffled.rouge1, 1e-12);
  EXPECT_NEAR(base.rouge2, shuffled.rouge2, 1e-12);
  EXPECT_NEAR(base.rougeL, shuffled.rougeL, 1e-12);
  EXPECT_EQ(base.bleu1, shuffled.bleu1);
  EXPECT_EQ(base.bleu2, shuffled.bleu2);
  for (double v : {base.rouge1, base.rouge2, base.rougeL, base.bleu1, base.bleu2}) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
}

TEST(FleissKappa, PerfectAgreementIsOne) {
  auto k = fleiss_kappa({{3, 0, 0}, {0, 3, 0}, {0, 0, 3}});
  ASSERT_TRUE(k);
  EXPECT_NEAR(*k, 1.0, 1e-15);
}

TEST(FleissKappa, OppositeRatingsGiveMinusOne) {
  // Items rated (A,B) and (B,A): observed agreement 0, chance agreement 0.5.
  auto k = fleiss_kappa_from_labels({{0, 1}, {1, 0}}, 2);
  ASSERT_TRUE(k);
  EXPECT_NEAR(*k, -1.0, 1e-15);
}

TEST(FleissKappa, RandomRatingsAreNearZero) {
  Rng rng(2026);
  std::vector<std::vector<int>> labels(2000, std::vector<int>(3));
  for (auto& item : labels) {
    for (int& l : item) l = static_cast<int>(rng.index(3));
  }
  auto k = fleiss_kappa_from_labels(labels, 3);
  ASSERT_TRUE(k);
  EXPECT_NEAR(*k, 0.0, 0.1);
}

TEST(FleissKappa, SingleCategoryIsDegenerate) {
  EXPECT_FALSE(fleiss_kappa({{2, 0}, {2, 0}}).has_value());
}

TEST(FleissKappa, RejectsMalformedTables) {
  EXPECT_THROW(fleiss_kappa({{2, 0}}), ContractError);
  EXPECT_THROW(fleiss_kappa({{2, 0}, {1, 0}}), ContractError);
  EXPECT_THROW(fleiss_kappa({{1, 0}, {0, 1}}), ContractError);
}

TEST(Bootstrap, ClearWinnerWinsEveryResample) {
  std::vector<double> a(30, 0.9), b(30, 0.1);
  EXPECT_EQ(paired_bootstrap(a, b, 200, 1), 1.0);
  EXPECT_EQ(paired_bootstrap(b, a, 200, 1), 0.0);
}

TEST(Report, JsonCarriesEveryMetric) {
  auto rep = evaluate_corpus({toks("a b")}, {toks("a b")});
  const std::string j = metric_report_json(rep);
  for (const char* m : {"rouge1", "rouge2", "rougeL", "bleu1", "bleu2"}) {
    EXPECT_NE(j.find(m), std::string::npos) << m;
  }
  EXPECT_NE(metric_report_table(rep).find("100.00"), std::string::npos);
}

}  // namespace
}  // namespace mspt
