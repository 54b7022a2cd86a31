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

#include "mspt/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

#include "mspt/error.hpp"
#include "mspt/rng.hpp"
#include "mspt/text.hpp"

namespace mspt {
namespace {

const std::vector<std::string> kBrands = {
    "acme", "zenith", "nova",  "orion", "lumo",  "kibo", "vexa", "polar", "tandem", "quill",
    "rivo", "sable",  "terra", "umbra", "velo",  "wren", "yara", "zest",  "mako",   "halo",
    "ardo", "bexi",   "corvo", "dalia", "enzo",  "fiko", "gavo", "hesta", "ivra",   "jolo"};

const std::vector<std::string> kCategories = {
    "towel", "kettle", "shampoo", "jacket", "headphones", "blender", "backpack", "lamp",
    "pillow", "toothbrush", "mattress", "speaker", "sneakers", "umbrella", "cushion", "razor"};

const std::vector<std::string> kTitleFiller = {
    "new",    "official", "genuine", "store",  "edition", "pack",    "set",    "premium",
    "home",   "daily",    "classic", "series", "model",   "version", "original", "standard",
    "plus",   "pro",      "mini",    "max",    "basic",   "family",  "travel", "office",
    "kitchen", "outdoor", "indoor",  "unisex", "men",     "women",   "kids",   "2024",
    "sale",   "hot",      "limited", "bundle", "upgraded", "authentic"};

const std::vector<std::string> kAttributeFiller = {
    "black",   "white",  "grey",   "blue",    "red",    "green",  "cotton", "steel",
    "plastic", "aluminum", "glass", "bamboo", "rubber", "leather", "nylon", "wood",
    "ceramic", "silicone", "round", "square", "medium", "small",  "single", "double",
    "matte",   "glossy", "500ml",  "1kg",     "usb",    "cordless", "beige", "navy"};

const std::vector<std::string> kQuestionFiller = {
    "hi",     "anyone", "know",  "whether", "after", "weeks", "of",   "use",
    "i",      "want",   "to",    "buy",     "for",   "my",    "mom",  "dad",
    "please", "tell",   "me",    "honestly", "guys", "thinking", "about", "getting",
    "one",    "second", "time",  "buyer",   "here",  "short", "question", "also"};

const std::vector<std::string> kAnswerFiller = {
    "i",     "bought", "two",  "months", "ago",   "and",  "so",    "far",
    "happy", "with",   "it",   "works",  "well",  "recommend", "worth", "the",
    "money", "my",     "wife", "likes",  "using", "every", "day",  "no",
    "problem", "yet",  "good", "value",  "would", "buy",   "again", "overall"};

const std::vector<std::string> kLogisticsWords = {
    "shipping", "delivery", "arrived", "box",    "package", "courier", "days",  "refund",
    "invoice",  "price",    "discount", "coupon", "order",  "seller",  "reply", "tracking",
    "week",     "return",   "service", "warranty", "receipt", "stock", "express", "wrapped"};

std::vector<std::string> words_of(const std::string& phrase) { return tokenize(phrase); }

std::size_t jittered_length(Rng& rng, double mean) {
  // Uniform on [0.6 mean, 1.4 mean], rounded; mean preserved up to rounding.
  const double v = mean * (0.6 + 0.8 * rng.uniform());
  return static_cast<std::size_t>(std::llround(std::max(0.0, v)));
}

template <typename T>
const T& pick(Rng& rng, const std::vector<T>& pool) {
  return pool[rng.index(pool.size())];
}

void append(std::vector<std::string>& out, const std::vector<std::string>& more) {
  out.insert(out.end(), more.begin(), more.end());
}

std::string join(const std::vector<std::string>& words) { return join_tokens(words); }

// Inserts the contiguous `blocks` into `filler` at random positions.
std::vector<std::string> interleave(Rng& rng, std::vector<std::vector<std::string>> blocks,
                                    const std::vector<std::string>& filler) {
  std::vector<std::vector<std::string>> pieces = std::move(blocks);
  for (const auto& w : filler) pieces.push_back({w});
  std::shuffle(pieces.begin(), pieces.end(), rng.engine());
  std::vector<std::string> out;
  for (const auto& p : pieces) append(out, p);
  return out;
}

std::vector<std::string> filler_words(Rng& rng, const std::vector<std::string>& pool,
                                      std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(pick(rng, pool));
  return out;
}

QaText relevant_pair(Rng& rng, const SyntheticCorpusSpec& spec, const std::string& aspect) {
  const auto phrase = words_of(aspect);
  std::vector<std::string> q = {"is", "it"};
  append(q, phrase);
  q.push_back("?");
  const std::size_t q_len = std::max(jittered_length(rng, spec.question_tokens), q.size());
  std::vector<std::string> question = filler_words(rng, kQuestionFiller, q_len - q.size());
  append(question, q);

  std::vector<std::string> answer = {"yes", ","};
  append(answer, phrase);
  const std::size_t a_len = std::max(jittered_length(rng, spec.answer_tokens), answer.size());
  append(answer, filler_words(rng, kAnswerFiller, a_len - answer.size()));
  return {join(question), join(answer)};
}

QaText distractor_pair(Rng& rng, const SyntheticCorpusSpec& spec) {
  std::vector<std::string> q = {"when", "will", "it", pick(rng, kLogisticsWords), "?"};
  const std::size_t q_len = std::max(jittered_length(rng, spec.question_tokens), q.size());
  std::vector<std::string> question = filler_words(rng, kQuestionFiller, q_len - q.size());
  append(question, q);

  std::vector<std::string> answer = {"the", pick(rng, kLogisticsWords)};
  const std::size_t a_len = std::max(jittered_length(rng, spec.answer_tokens), answer.size());
  append(answer, filler_words(rng, kLogisticsWords, a_len - answer.size()));
  return {join(question), join(answer)};
}

}  // namespace

std::vector<std::string> default_aspect_pool() {
  return {"deep clean",      "long lasting",    "quick dry",      "ultra soft",
          "machine washable", "fresh scent",    "gentle formula", "strong grip",
          "light weight",    "water resistant", "easy install",   "silent motor",
          "fast charging",   "bright display",  "compact size",   "rich foam",
          "natural ingredients", "warm lining", "breathable mesh", "sturdy frame",
          "smooth texture",  "intense hydration", "anti slip",    "low noise",
          "energy saving",   "large capacity",  "stain proof",    "elegant design",
          "portable handle", "crisp sound",     "child safe",     "odor control",
          "heat insulated",  "color stable",    "wrinkle free",   "scratch guard",
          "steady airflow",  "gift ready",      "vivid print",    "firm support",
          "cool touch",      "mild fragrance",  "durable stitching", "precise cutting",
          "even heating",    "tight seal",      "flexible strap", "clear picture"};
}

void SyntheticCorpusSpec::validate() const {
  auto fail = [](const std::string& m) { throw ConfigError("synthetic corpus: " + m); };
  const auto pool = aspect_pool.empty() ? default_aspect_pool() : aspect_pool;
  if (pool.empty()) fail("aspect pool is empty");
  std::set<std::string> seen;
  std::set<std::string> filler;
  for (const auto* list : {&kBrands, &kCategories, &kTitleFiller, &kAttributeFiller,
                           &kQuestionFiller, &kAnswerFiller, &kLogisticsWords}) {
    filler.insert(list->begin(), list->end());
  }
  for (const auto& w : std::vector<std::string>{"is", "it", "?", "yes", ",", "when", "will",
                                                 "the"}) {
    filler.insert(w);
  }
  for (const auto& phrase : pool) {
    const auto words = words_of(phrase);
    if (words.empty()) fail("empty aspect phrase");
    for (const auto& w : words) {
      if (!seen.insert(w).second) fail("aspect word '" + w + "' is used twice");
      if (filler.count(w)) fail("aspect word '" + w + "' collides with template text");
    }
  }
  if (categories == 0 || categories > kCategories.size()) {
    fail("categories must be in [1, " + std::to_string(kCategories.size()) + "]");
  }
  if (brands == 0 || brands > kBrands.size()) {
    fail("brands must be in [1, " + std::to_string(kBrands.size()) + "]");
  }
  if (aspects_min == 0 || aspects_min > aspects_max) fail("need 1 <= aspects_min <= aspects_max");
  if (aspects_per_category < aspects_max || aspects_per_category > pool.size()) {
    fail("aspects_per_category must lie in [aspects_max, pool size]");
  }
  if (!(qa_only_fraction >= 0.0 && qa_only_fraction <= 1.0)) fail("qa_only_fraction outside [0,1]");
  if (!(zero_qa_fraction >= 0.0 && zero_qa_fraction <= 1.0)) fail("zero_qa_fraction outside [0,1]");
  for (double v : {title_tokens, attribute_tokens, question_tokens, answer_tokens, qa_pairs_mean}) {
    if (!(v >= 0.0) || !std::isfinite(v)) fail("length targets must be finite and >= 0");
  }
}

SyntheticCorpus generate_synthetic_corpus(const SyntheticCorpusSpec& spec) {
  spec.validate();
  const auto pool = spec.aspect_pool.empty() ? default_aspect_pool() : spec.aspect_pool;
  Rng rng(spec.seed);

  // Category -> sorted subset of pool indices.
  std::vector<std::vector<std::size_t>> category_aspects(spec.categories);
  for (auto& subset : category_aspects) {
    std::vector<std::size_t> all(pool.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    std::shuffle(all.begin(), all.end(), rng.engine());
    subset.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(spec.aspects_per_category));
  }

  SyntheticCorpus corpus;
  const int id_width = static_cast<int>(std::to_string(spec.products).size());
  for (std::size_t p = 0; p < spec.products; ++p) {
    const std::size_t cat = rng.index(spec.categories);
    const std::string& brand = kBrands[rng.index(spec.brands)];
    const std::string& category = kCategories[cat];

    std::vector<std::size_t> chosen = category_aspects[cat];
    std::shuffle(chosen.begin(), chosen.end(), rng.engine());
    const std::size_t k = spec.aspects_min + rng.index(spec.aspects_max - spec.aspects_min + 1);
    chosen.resize(k);

    const bool has_qa = !rng.bernoulli(spec.zero_qa_fraction);
    const std::size_t n_qa_only =
        has_qa ? static_cast<std::size_t>(std::ceil(spec.qa_only_fraction * static_cast<double>(k) - 1e-9))
               : 0;
    // `chosen` is already in random order: the first n_qa_only are QA-only.
    PlantedAspects planted;
    std::vector<bool> qa_only(pool.size(), false);
    for (std::size_t i = 0; i < k; ++i) {
      if (i < n_qa_only) {
        planted.qa_only.push_back(pool[chosen[i]]);
        qa_only[chosen[i]] = true;
      } else {
        planted.item.push_back(pool[chosen[i]]);
      }
    }

    ProductRecord r;
    char id[32];
    std::snprintf(id, sizeof(id), "p%0*zu", id_width, p);
    r.id = id;

    // Title: brand, category, then item aspect phrases mixed into filler.
    std::vector<std::vector<std::string>> blocks;
    std::size_t aspect_words = 0;
    for (const auto& a : planted.item) {
      blocks.push_back(words_of(a));
      aspect_words += blocks.back().size();
    }
    const std::size_t title_len = jittered_length(rng, spec.title_tokens);
    const std::size_t fixed = 2 + aspect_words;
    std::vector<std::string> title = {brand, category};
    append(title, interleave(rng, blocks,
                             filler_words(rng, kTitleFiller, title_len > fixed ? title_len - fixed : 0)));
    r.title = join(title);

    // Attributes: one entry per item aspect phrase plus single filler words.
    const std::size_t attr_len = jittered_length(rng, spec.attribute_tokens);
    for (const auto& a : planted.item) r.attributes.push_back(a);
    for (std::size_t n = aspect_words; n < attr_len; ++n) {
      r.attributes.push_back(pick(rng, kAttributeFiller));
    }
    std::shuffle(r.attributes.begin(), r.attributes.end(), rng.engine());

    // QA: mentions of every aspect first, then logistics distractors.
    if (has_qa) {
      std::vector<QaText> relevant;
      for (const auto& a : planted.qa_only) {
        for (std::size_t m = 0; m < spec.mentions_per_qa_aspect; ++m) {
          relevant.push_back(relevant_pair(rng, spec, a));
        }
      }
      for (const auto& a : planted.item) {
        for (std::size_t m = 0; m < spec.mentions_per_item_aspect; ++m) {
          relevant.push_back(relevant_pair(rng, spec, a));
        }
      }
      const std::size_t target = jittered_length(rng, spec.qa_pairs_mean);
      const std::size_t count = std::max<std::size_t>({target, relevant.size(), 1});
      std::vector<QaText> distractors;
      for (std::size_t i = relevant.size(); i < count; ++i) {
        distractors.push_back(distractor_pair(rng, spec));
      }
      // Keep every mention inside the first 32 pairs so the default cap
      // never hides planted content.
      const std::size_t head = std::min<std::size_t>(count, std::max<std::size_t>(32, relevant.size()));
      std::vector<QaText> front = relevant;
      std::size_t d = 0;
      while (front.size() < head) front.push_back(distractors[d++]);
      std::shuffle(front.begin(), front.end(), rng.engine());
      r.qa_pairs = std::move(front);
      r.qa_pairs.insert(r.qa_pairs.end(), distractors.begin() + static_cast<std::ptrdiff_t>(d),
                        distractors.end());
    }

    // Reason: aspects in pool order.
    std::sort(chosen.begin(), chosen.end());
    std::vector<std::string> reason = {brand, category};
    for (std::size_t idx : chosen) append(reason, words_of(pool[idx]));
    r.reason = join(reason);

    corpus.records.push_back(std::move(r));
    corpus.planted.push_back(std::move(planted));
  }
  return corpus;
}

CorpusStats corpus_stats(const std::vector<ProductRecord>& records) {
  CorpusStats s;
  s.products = records.size();
  if (records.empty()) return s;
  std::size_t pairs = 0, reasons = 0;
  for (const auto& r : records) {
    s.title_tokens += static_cast<double>(tokenize(r.title).size());
    for (const auto& a : r.attributes) s.attribute_tokens += static_cast<double>(tokenize(a).size());
    for (const auto& qa : r.qa_pairs) {
      s.question_tokens += static_cast<double>(tokenize(qa.question).size());
      s.answer_tokens += static_cast<double>(tokenize(qa.answer).size());
    }
    pairs += r.qa_pairs.size();
    if (r.reason) {
      s.reason_tokens += static_cast<double>(tokenize(*r.reason).size());
      ++reasons;
    }
  }
  const double n = static_cast<double>(records.size());
  s.title_tokens /= n;
  s.attribute_tokens /= n;
  s.qa_pairs = static_cast<double>(pairs) / n;
  if (pairs) {
    s.question_tokens /= static_cast<double>(pairs);
    s.answer_tokens /= static_cast<double>(pairs);
  }
  if (reasons) s.reason_tokens /= static_cast<double>(reasons);
  return s;
}

CorpusSplit split_corpus(const std::vector<ProductRecord>& records, double train, double valid,
                         double test) {
  if (train < 0 || valid < 0 || test < 0 || std::abs(train + valid + test - 1.0) > 1e-9) {
    throw ConfigError("split fractions must be non-negative and sum to 1");
  }
  const double n = static_cast<double>(records.size());
  const auto n_train = static_cast<std::size_t>(std::llround(n * train));
  const auto n_valid =
      std::min(records.size() - n_train, static_cast<std::size_t>(std::llround(n * valid)));
  CorpusSplit s;
  auto it = records.begin();
  s.train.assign(it, it + static_cast<std::ptrdiff_t>(n_train));
  s.valid.assign(it + static_cast<std::ptrdiff_t>(n_train),
                 it + static_cast<std::ptrdiff_t>(n_train + n_valid));
  s.test.assign(it + static_cast<std::ptrdiff_t>(n_train + n_valid), records.end());
  return s;
}

}  // namespace mspt
