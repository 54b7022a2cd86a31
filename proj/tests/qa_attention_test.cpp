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
#include "mspt/gradcheck.hpp"
#include "mspt/ops.hpp"
#include "mspt/qa_attention.hpp"
#include "model_fixtures.hpp"

namespace mspt {
namespace {

using testing::affine;
using testing::random_tensor;

void set_matrix(Parameter& p, std::initializer_list<std::initializer_list<double>> rows) {
  p.value = Tensor::matrix(rows);
}

void set_zero(Parameter& p) { std::fill(p.value.data().begin(), p.value.data().end(), 0.0); }

struct PgaRun {
  Tensor delta;
  Tensor h_user;
};

PgaRun run(const ProductGuidedAttention& pga, const Tensor& h_item, const Tensor& qa,
           std::vector<std::size_t> offsets) {
  Tape tape;
  const UserState u = pga(tape, tape.constant(h_item), tape.constant(qa), std::move(offsets));
  return {u.delta.value(), u.h_user.value()};
}

// Scores (item W1 + b1) . (qa W2 + b2) and the resulting softmax, computed
// directly from the parameter values.
std::vector<double> reference_scores(const ProductGuidedAttention& pga,
                                     const std::vector<double>& item, const Tensor& qa) {
  const auto& ip = pga.item_projection();
  const auto& qp = pga.qa_projection();
  const std::vector<double> a = affine(item, ip.weight->value, &ip.bias->value);
  std::vector<double> scores;
  for (std::size_t k = 0; k < qa.rows(); ++k) {
    std::vector<double> row(qa.cols());
    for (std::size_t c = 0; c < qa.cols(); ++c) row[c] = qa.at(k, c);
    const std::vector<double> b = affine(row, qp.weight->value, &qp.bias->value);
    double s = 0.0;
    for (std::size_t c = 0; c < a.size(); ++c) s += a[c] * b[c];
    scores.push_back(s);
  }
  return scores;
}

std::vector<double> softmax_ref(const std::vector<double>& s) {
  const double m = *std::max_element(s.begin(), s.end());
  double z = 0.0;
  for (double x : s) z += std::exp(x - m);
  std::vector<double> p;
  for (double x : s) p.push_back(std::exp(x - m) / z);
  return p;
}

ProductGuidedAttention random_pga(ParameterStore& store, std::size_t dim, std::uint64_t seed) {
  Rng rng(seed);
  return ProductGuidedAttention::create(store, "user.pga", dim, rng);
}

TEST(ProductGuidedAttention, HandCaseWithIdentityProjections) {
  ParameterStore store;
  ProductGuidedAttention pga = random_pga(store, 2, 1);
  set_matrix(*pga.item_projection().weight, {{1, 0}, {0, 1}});
  set_matrix(*pga.qa_projection().weight, {{1, 0}, {0, 1}});
  set_zero(*pga.item_projection().bias);
  set_zero(*pga.qa_projection().bias);
  const PgaRun r = run(pga, Tensor::matrix({{1, 0}}), Tensor::matrix({{2, 0}, {0, 2}}), {0, 2});
  const double d0 = std::exp(2.0) / (std::exp(2.0) + 1.0);
  EXPECT_NEAR(r.delta[0], d0, 1e-15);
  EXPECT_NEAR(r.delta[1], 1.0 - d0, 1e-15);
  EXPECT_NEAR(r.delta[0], 0.8808, 1e-4);
  EXPECT_NEAR(r.h_user.at(0, 0), 2.0 * d0, 1e-15);
  EXPECT_NEAR(r.h_user.at(0, 1), 2.0 * (1.0 - d0), 1e-15);
  EXPECT_NEAR(r.h_user.at(0, 0), 1.7616, 1e-4);
  EXPECT_NEAR(r.h_user.at(0, 1), 0.2384, 1e-4);
}

TEST(ProductGuidedAttention, SingletonGetsFullWeight) {
  ParameterStore store;
  ProductGuidedAttention pga = random_pga(store, 4, 2);
  Rng rng(3);
  const Tensor qa = random_tensor({1, 4}, rng);
  const PgaRun r = run(pga, random_tensor({1, 4}, rng), qa, {0, 1});
  EXPECT_NEAR(r.delta[0], 1.0, 1e-12);
  for (std::size_t c = 0; c < 4; ++c) EXPECT_NEAR(r.h_user.at(0, c), qa.at(0, c), 1e-12);
}

TEST(ProductGuidedAttention, IdenticalPairsGetUniformWeight) {
  ParameterStore store;
  ProductGuidedAttention pga = random_pga(store, 4, 4);
  Rng rng(5);
  const Tensor one = random_tensor({1, 4}, rng);
  Tensor qa({5, 4});
  for (std::size_t k = 0; k < 5; ++k) {
    for (std::size_t c = 0; c < 4; ++c) qa.at(k, c) = one.at(0, c);
  }
  const PgaRun r = run(pga, random_tensor({1, 4}, rng), qa, {0, 5});
  for (std::size_t k = 0; k < 5; ++k) EXPECT_NEAR(r.delta[k], 0.2, 1e-15);
}

TEST(ProductGuidedAttention, MatchesDirectFormulaAcrossProducts) {
  ParameterStore store;
  ProductGuidedAttention pga = random_pga(store, 3, 6);
  Rng rng(7);
  const Tensor items = random_tensor({3, 3}, rng);
  const Tensor qa = random_tensor({6, 3}, rng);
  const std::vector<std::size_t> offsets = {0, 2, 3, 6};
  const PgaRun r = run(pga, items, qa, offsets);
  double delta_sum_error = 0.0;
  for (std::size_t b = 0; b < 3; ++b) {
    Tensor own({offsets[b + 1] - offsets[b], 3});
    for (std::size_t k = offsets[b]; k < offsets[b + 1]; ++k) {
      for (std::size_t c = 0; c < 3; ++c) own.at(k - offsets[b], c) = qa.at(k, c);
    }
    const std::vector<double> item = {items.at(b, 0), items.at(b, 1), items.at(b, 2)};
    const std::vector<double> p = softmax_ref(reference_scores(pga, item, own));
    double total = 0.0;
    for (std::size_t k = 0; k < p.size(); ++k) {
      EXPECT_NEAR(r.delta[offsets[b] + k], p[k], 1e-13);
      EXPECT_GE(r.delta[offsets[b] + k], 0.0);
      total += r.delta[offsets[b] + k];
    }
    delta_sum_error = std::max(delta_sum_error, std::abs(total - 1.0));
    for (std::size_t c = 0; c < 3; ++c) {
      double h = 0.0, lo = 1e300, hi = -1e300;
      for (std::size_t k = 0; k < p.size(); ++k) {
        h += r.delta[offsets[b] + k] * own.at(k, c);
        lo = std::min(lo, own.at(k, c));
        hi = std::max(hi, own.at(k, c));
      }
      EXPECT_NEAR(r.h_user.at(b, c), h, 1e-14);
      EXPECT_GE(r.h_user.at(b, c), lo - 1e-15);
      EXPECT_LE(r.h_user.at(b, c), hi + 1e-15);
    }
  }
  EXPECT_LT(delta_sum_error, 1e-9);
}

TEST(ProductGuidedAttention, PermutingPairsPermutesWeights) {
  ParameterStore store;
  ProductGuidedAttention pga = random_pga(store, 4, 8);
  Rng rng(9);
  const Tensor item = random_tensor({1, 4}, rng);
  const Tensor qa = random_tensor({4, 4}, rng);
  const std::size_t perm[] = {2, 0, 3, 1};
  Tensor permuted({4, 4});
  for (std::size_t k = 0; k < 4; ++k) {
    for (std::size_t c = 0; c < 4; ++c) permuted.at(k, c) = qa.at(perm[k], c);
  }
  const PgaRun a = run(pga, item, qa, {0, 4});
  const PgaRun b = run(pga, item, permuted, {0, 4});
  for (std::size_t k = 0; k < 4; ++k) EXPECT_NEAR(b.delta[k], a.delta[perm[k]], 1e-15);
  for (std::size_t c = 0; c < 4; ++c) EXPECT_NEAR(a.h_user.at(0, c), b.h_user.at(0, c), 1e-14);
}

TEST(ProductGuidedAttention, DuplicatePairSplitsItsExtendedSoftmaxWeight) {
  ParameterStore store;
  ProductGuidedAttention pga = random_pga(store, 3, 10);
  Rng rng(11);
  const Tensor item = random_tensor({1, 3}, rng);
  const Tensor qa = random_tensor({3, 3}, rng);
  const std::size_t j = 1;
  Tensor extended({4, 3});
  for (std::size_t k = 0; k < 4; ++k) {
    for (std::size_t c = 0; c < 3; ++c) extended.at(k, c) = qa.at(k < 3 ? k : j, c);
  }
  const std::vector<double> item_v = {item.at(0, 0), item.at(0, 1), item.at(0, 2)};
  std::vector<double> scores = reference_scores(pga, item_v, qa);
  scores.push_back(scores[j]);
  const std::vector<double> expected = softmax_ref(scores);
  const PgaRun r = run(pga, item, extended, {0, 4});
  EXPECT_NEAR(r.delta[j] + r.delta[3], expected[j] + expected[3], 1e-14);
  EXPECT_NEAR(r.delta[j], r.delta[3], 1e-15);
  for (std::size_t k = 0; k < 4; ++k) EXPECT_NEAR(r.delta[k], expected[k], 1e-14);
}

TEST(ProductGuidedAttention, NoPairsGivesZeroUserVector) {
  ParameterStore store;
  ProductGuidedAttention pga = random_pga(store, 3, 12);
  Rng rng(13);
  const PgaRun r = run(pga, random_tensor({2, 3}, rng), Tensor({0, 3}), {0, 0, 0});
  EXPECT_EQ(r.h_user.shape(), (Shape{2, 3}));
  for (double x : r.h_user.data()) EXPECT_EQ(x, 0.0);
}

TEST(ProductGuidedAttention, MalformedOffsetsAreRejected) {
  ParameterStore store;
  ProductGuidedAttention pga = random_pga(store, 3, 12);
  Rng rng(13);
  EXPECT_THROW(run(pga, random_tensor({2, 3}, rng), random_tensor({2, 3}, rng), {0, 2}),
               ContractError);
}

TEST(ProductGuidedAttention, UniformVariantHasNoParametersAndAveragesPairs) {
  const ProductGuidedAttention pga = ProductGuidedAttention::uniform_weights(2);
  EXPECT_TRUE(pga.uniform());
  const PgaRun r = run(pga, Tensor::matrix({{1, 0}, {0, 1}}),
                       Tensor::matrix({{2, 0}, {0, 2}, {4, 4}, {1, 1}, {3, 0}}), {0, 2, 5});
  EXPECT_EQ(r.delta[0], 0.5);
  EXPECT_NEAR(r.delta[2], 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(r.h_user.at(0, 0), 1.0, 1e-15);
  EXPECT_NEAR(r.h_user.at(1, 0), 8.0 / 3.0, 1e-15);
  EXPECT_NEAR(r.h_user.at(1, 1), 5.0 / 3.0, 1e-15);
}

TEST(ProductGuidedAttention, GradientsMatchFiniteDifferences) {
  ParameterStore store;
  ProductGuidedAttention pga = random_pga(store, 3, 14);
  Rng rng(15);
  const Tensor items = random_tensor({2, 3}, rng);
  const Tensor qa = random_tensor({5, 3}, rng);
  const Tensor w = random_tensor({2, 3}, rng);
  const auto loss = [&](Tape& tape, Var i, Var q) {
    return sum(mul(pga(tape, i, q, {0, 3, 5}).h_user, tape.constant(w)));
  };
  const GradCheckReport params = check_parameter_gradients(store, [&](Tape& tape) {
    return loss(tape, tape.constant(items), tape.constant(qa));
  });
  EXPECT_EQ(params.entries_checked, store.element_count());
  EXPECT_LT(params.max_relative_error, 1e-4) << params.worst_entry;
  const GradCheckReport inputs = check_input_gradients(
      {items, qa}, [&](Tape& tape, const std::vector<Var>& in) { return loss(tape, in[0], in[1]); });
  EXPECT_LT(inputs.max_relative_error, 1e-4) << inputs.worst_entry;
}

TEST(QaPairEncoding, DeterministicAndOrderSensitive) {
  ParameterStore store;
  Rng rng(16);
  Parameter& table = store.create("embed.table", {20, 4}, 4, rng);
  BiLstm lstm = BiLstm::create(store, "user.qa.lstm", 4, 3, rng);
  // question 5 6 <sep> answer 7 8 9, the same pair again, and the swapped order.
  const SequenceBatch pairs = SequenceBatch::pack(
      {{5, 6, Vocab::kSep, 7, 8, 9}, {5, 6, Vocab::kSep, 7, 8, 9}, {7, 8, 9, Vocab::kSep, 5, 6}});
  Tape tape;
  const Tensor v = encode_qa_pairs(tape, lstm, table, pairs).value();
  ASSERT_EQ(v.shape(), (Shape{3, 6}));
  double swapped_gap = 0.0;
  for (std::size_t c = 0; c < 6; ++c) {
    EXPECT_EQ(v.at(0, c), v.at(1, c));
    swapped_gap = std::max(swapped_gap, std::abs(v.at(0, c) - v.at(2, c)));
  }
  EXPECT_GT(swapped_gap, 1e-6);
}

TEST(QaPairEncoding, GradientsMatchFiniteDifferences) {
  ParameterStore store;
  Rng rng(17);
  Parameter& table = store.create("embed.table", {12, 4}, 4, rng);
  BiLstm lstm = BiLstm::create(store, "user.qa.lstm", 4, 2, rng);
  const SequenceBatch pairs = SequenceBatch::pack({{5, Vocab::kSep, 7, 8}, {9, Vocab::kSep, 10}});
  const Tensor w = random_tensor({2, 4}, rng);
  const GradCheckReport report = check_parameter_gradients(store, [&](Tape& tape) {
    return sum(mul(encode_qa_pairs(tape, lstm, table, pairs), tape.constant(w)));
  });
  EXPECT_LT(report.max_relative_error, 1e-4) << report.worst_entry;
}

}  // namespace
}  // namespace mspt
