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

#include "mspt/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>

#include <json.hpp>

#include "mspt/error.hpp"
#include "mspt/rng.hpp"

namespace mspt {
namespace {

using NgramCounts = std::map<std::vector<std::string>, std::size_t>;

NgramCounts ngrams(std::span<const std::string> tokens, std::size_t n) {
  NgramCounts counts;
  if (tokens.size() < n) return counts;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    ++counts[std::vector<std::string>(tokens.begin() + i, tokens.begin() + i + n)];
  }
  return counts;
}

std::size_t clipped_overlap(const NgramCounts& cand, const NgramCounts& ref) {
  std::size_t overlap = 0;
  for (const auto& [gram, count] : cand) {
    auto it = ref.find(gram);
    if (it != ref.end()) overlap += std::min(count, it->second);
  }
  return overlap;
}

}  // namespace

double rouge_n(std::span<const std::string> candidate,
               std::span<const std::string> reference, std::size_t n) {
  if (n == 0) throw ContractError("rouge_n needs n >= 1");
  if (reference.empty()) throw ContractError("rouge_n needs a non-empty reference");
  if (reference.size() < n) return 0.0;
  const auto ref = ngrams(reference, n);
  const std::size_t total = reference.size() - n + 1;
  return static_cast<double>(clipped_overlap(ngrams(candidate, n), ref)) /
         static_cast<double>(total);
}

RougeL rouge_l(std::span<const std::string> candidate,
               std::span<const std::string> reference, double beta) {
  if (reference.empty()) throw ContractError("rouge_l needs a non-empty reference");
  RougeL out;
  if (candidate.empty()) return out;
  const std::size_t m = candidate.size(), n = reference.size();
  std::vector<std::size_t> prev(n + 1, 0), cur(n + 1, 0);
  for (std::size_t i = 1; i <= m; ++i) {
    for (std::size_t j = 1; j <= n; ++j) {
      cur[j] = candidate[i - 1] == reference[j - 1] ? prev[j - 1] + 1
                                                     : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  out.lcs = prev[n];
  out.precision = static_cast<double>(out.lcs) / static_cast<double>(m);
  out.recall = static_cast<double>(out.lcs) / static_cast<double>(n);
  const double b2 = beta * beta;
  const double denom = out.recall + b2 * out.precision;
  out.f = denom > 0.0 ? (1.0 + b2) * out.precision * out.recall / denom : 0.0;
  return out;
}

double bleu(const std::vector<Tokens>& candidates, const std::vector<Tokens>& references,
            std::size_t max_n) {
  if (candidates.size() != references.size()) {
    throw ContractError("bleu: " + std::to_string(candidates.size()) + " candidates vs " +
                        std::to_string(references.size()) + " references");
  }
  if (max_n == 0) throw ContractError("bleu needs max_n >= 1");
  std::size_t cand_len = 0, ref_len = 0;
  std::vector<double> matched(max_n, 0.0), total(max_n, 0.0);
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    cand_len += candidates[i].size();
    ref_len += references[i].size();
    for (std::size_t n = 1; n <= max_n; ++n) {
      const auto c = ngrams(candidates[i], n);
      matched[n - 1] += static_cast<double>(clipped_overlap(c, ngrams(references[i], n)));
      if (candidates[i].size() >= n) {
        total[n - 1] += static_cast<double>(candidates[i].size() - n + 1);
      }
    }
  }
  if (cand_len == 0) return 0.0;
  double log_sum = 0.0;
  for (std::size_t n = 0; n < max_n; ++n) {
    double m = matched[n], t = total[n];
    if (m == 0.0) {
      m += 1.0;
      t += 1.0;
    }
    log_sum += std::log(m / t);
  }
  const double c = static_cast<double>(cand_len), r = static_cast<double>(ref_len);
  const double bp = c > r ? 1.0 : std::exp(1.0 - r / c);
  return bp * std::exp(log_sum / static_cast<double>(max_n));
}

std::optional<double> fleiss_kappa(const std::vector<std::vector<int>>& counts) {
  if (counts.size() < 2) throw ContractError("fleiss_kappa needs at least 2 items");
  const std::size_t k = counts.front().size();
  if (k < 2) throw ContractError("fleiss_kappa needs at least 2 categories");
  int raters = -1;
  for (const auto& row : counts) {
    if (row.size() != k) throw ContractError("fleiss_kappa: ragged count table");
    int s = 0;
    for (int c : row) {
      if (c < 0) throw ContractError("fleiss_kappa: negative count");
      s += c;
    }
    if (raters < 0) raters = s;
    if (s != raters) throw ContractError("fleiss_kappa: items rated by different numbers of raters");
  }
  if (raters < 2) throw ContractError("fleiss_kappa needs at least 2 raters");

  const double n = raters;
  const double items = static_cast<double>(counts.size());
  std::vector<double> p(k, 0.0);
  double p_bar = 0.0;
  for (const auto& row : counts) {
    double agree = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      agree += static_cast<double>(row[j]) * (row[j] - 1);
      p[j] += row[j];
    }
    p_bar += agree / (n * (n - 1.0));
  }
  p_bar /= items;
  double p_e = 0.0;
  for (double& pj : p) {
    pj /= items * n;
    p_e += pj * pj;
  }
  if (p_e >= 1.0) return std::nullopt;
  return (p_bar - p_e) / (1.0 - p_e);
}

std::optional<double> fleiss_kappa_from_labels(const std::vector<std::vector<int>>& labels,
                                               int categories) {
  std::vector<std::vector<int>> counts;
  for (const auto& item : labels) {
    std::vector<int> row(static_cast<std::size_t>(categories), 0);
    for (int label : item) {
      if (label < 0 || label >= categories) {
        throw ContractError("fleiss_kappa: label " + std::to_string(label) + " out of range");
      }
      ++row[static_cast<std::size_t>(label)];
    }
    counts.push_back(std::move(row));
  }
  return fleiss_kappa(counts);
}

double paired_bootstrap(std::span<const double> a, std::span<const double> b,
                        std::size_t resamples, std::uint64_t seed) {
  if (a.size() != b.size() || a.empty()) {
    throw ContractError("paired_bootstrap needs equal, non-empty score lists");
  }
  Rng rng(seed);
  std::size_t wins = 0;
  for (std::size_t r = 0; r < resamples; ++r) {
    double diff = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      const std::size_t j = rng.index(a.size());
      diff += a[j] - b[j];
    }
    if (diff > 0.0) ++wins;
  }
  return resamples ? static_cast<double>(wins) / static_cast<double>(resamples) : 0.0;
}

MetricReport evaluate_corpus(const std::vector<Tokens>& candidates,
                             const std::vector<Tokens>& references) {
  if (candidates.size() != references.size()) {
    throw ContractError("evaluate_corpus: candidate/reference count mismatch");
  }
  if (candidates.empty()) throw ContractError("evaluate_corpus: no examples");
  MetricReport r;
  r.examples = candidates.size();
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const double r1 = rouge_n(candidates[i], references[i], 1);
    r.rouge1_per_example.push_back(r1);
    r.rouge1 += r1;
    r.rouge2 += rouge_n(candidates[i], references[i], 2);
    r.rougeL += rouge_l(candidates[i], references[i]).f;
  }
  const double n = static_cast<double>(candidates.size());
  r.rouge1 /= n;
  r.rouge2 /= n;
  r.rougeL /= n;
  r.bleu1 = bleu(candidates, references, 1);
  r.bleu2 = bleu(candidates, references, 2);
  return r;
}

std::string metric_report_json(const MetricReport& report, const std::string& extra_json) {
  nlohmann::json j = nlohmann::json::parse(extra_json);
  j["examples"] = report.examples;
  nlohmann::json rows = nlohmann::json::array();
  const std::pair<const char*, double> metrics[] = {
      {"rouge1", report.rouge1}, {"rouge2", report.rouge2}, {"rougeL", report.rougeL},
      {"bleu1", report.bleu1},   {"bleu2", report.bleu2}};
  for (const auto& [name, value] : metrics) {
    rows.push_back({{"metric", name}, {"value", value}, {"n", report.examples}});
  }
  j["metrics"] = std::move(rows);
  return j.dump(2);
}

std::string metric_report_table(const MetricReport& report) {
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "  RG-1    RG-2    RG-L    BU-1    BU-2    (n=%zu, %%)\n"
                "%6.2f  %6.2f  %6.2f  %6.2f  %6.2f\n",
                report.examples, 100 * report.rouge1, 100 * report.rouge2,
                100 * report.rougeL, 100 * report.bleu1, 100 * report.bleu2);
  return buf;
}

}  // namespace mspt
