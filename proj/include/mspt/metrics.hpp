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
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace mspt {

using Tokens = std::vector<std::string>;

// Recall-oriented ROUGE-N: clipped n-gram overlap / reference n-gram count.
// Throws ContractError for n == 0 or an empty reference. A reference shorter
// than n has no n-grams and scores 0.
double rouge_n(std::span<const std::string> candidate,
               std::span<const std::string> reference, std::size_t n);

// beta weights recall beta^2 times as much as precision.
inline constexpr double kRougeLBeta = 1.2;

struct RougeL {
  std::size_t lcs = 0;
  double precision = 0.0;
  double recall = 0.0;
  // (1 + b^2) P R / (R + b^2 P); 0 when P = R = 0.
  double f = 0.0;
};

// LCS-based ROUGE-L. Throws ContractError on an empty reference; an empty
// candidate scores 0.
RougeL rouge_l(std::span<const std::string> candidate,
               std::span<const std::string> reference, double beta = kRougeLBeta);

// Corpus-level BLEU up to `max_n`: modified precisions are pooled over the
// whole corpus before the geometric mean, so the score does not depend on
// record order. Any order with zero matched n-grams is smoothed by adding 1
// to both its match count and its candidate n-gram count. Brevity penalty
// exp(1 - r/c) applies when the total candidate length c is below the total
// reference length r. An empty candidate corpus scores 0.
double bleu(const std::vector<Tokens>& candidates, const std::vector<Tokens>& references,
            std::size_t max_n);

// Fleiss' kappa from an items x categories count table; every row must sum to
// the same number of raters (>= 2) and there must be >= 2 items. Returns
// nullopt when expected agreement is 1 (every rating in one category), where
// kappa is undefined.
std::optional<double> fleiss_kappa(const std::vector<std::vector<int>>& counts);

// Same, from raw labels: labels[item][rater] in [0, categories).
std::optional<double> fleiss_kappa_from_labels(const std::vector<std::vector<int>>& labels,
                                               int categories);

// Fraction of bootstrap resamples in which mean(a) > mean(b) over the same
// resampled indices.
double paired_bootstrap(std::span<const double> a, std::span<const double> b,
                        std::size_t resamples, std::uint64_t seed);

struct MetricReport {
  double rouge1 = 0.0;
  double rouge2 = 0.0;
  double rougeL = 0.0;
  double bleu1 = 0.0;
  double bleu2 = 0.0;
  std::size_t examples = 0;
  // Per-example ROUGE-1, for bootstrap comparisons.
  std::vector<double> rouge1_per_example;
};

// ROUGE scores are macro-averaged over examples; BLEU is corpus-level.
MetricReport evaluate_corpus(const std::vector<Tokens>& candidates,
                             const std::vector<Tokens>& references);

// {"examples":n,"metrics":[{"metric":"rouge1","value":..,"n":..},...]}
std::string metric_report_json(const MetricReport& report, const std::string& extra_json = "{}");
std::string metric_report_table(const MetricReport& report);

}  // namespace mspt
