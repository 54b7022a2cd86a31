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
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mspt/text.hpp"

namespace mspt {

struct QaText {
  std::string question;
  std::string answer;
  bool operator==(const QaText&) const = default;
};

// One product. Corpus files hold one record per line as a JSON object:
//   {"v":1,"id":"...","title":"...","attributes":["..."],
//    "qa_pairs":[{"q":"...","a":"..."}],"reason":"..."}
// "reason" is optional (absent at inference). Keys are written in sorted
// order so serialization is canonical.
struct ProductRecord {
  std::string id;
  std::string title;
  std::vector<std::string> attributes;
  std::vector<QaText> qa_pairs;
  std::optional<std::string> reason;
  bool operator==(const ProductRecord&) const = default;
};

inline constexpr int kCorpusSchemaVersion = 1;

std::string to_json_line(const ProductRecord& record);
// Throws ParseError (carrying `line_number`) on schema violations.
ProductRecord parse_json_line(const std::string& line, std::size_t line_number);

// Blank lines are skipped. Throws ContractError when no record is present.
std::vector<ProductRecord> read_corpus(std::istream& in);
std::vector<ProductRecord> load_corpus(const std::filesystem::path& path);
void write_corpus(std::ostream& out, const std::vector<ProductRecord>& records);
void save_corpus(const std::filesystem::path& path,
                 const std::vector<ProductRecord>& records);

struct TokenLimits {
  std::size_t title = 64;
  std::size_t attributes = 64;
  std::size_t question = 64;
  std::size_t answer = 64;
  std::size_t reason = 32;
  std::size_t max_qa_pairs = 32;
};

// Token ids ready for the model.
struct EncodedExample {
  std::string id;
  std::vector<TokenId> title;
  // Never empty: a record without attributes is encoded as a lone <sep>.
  std::vector<TokenId> attributes;
  // question <sep> answer, one entry per (question, answer) combination.
  std::vector<std::vector<TokenId>> qa;
  // <bos> ... <eos>; empty when the record has no reason.
  std::vector<TokenId> reason;
};

// Splits "A1 /// A2" answers into separate pairs, drops pairs whose question
// or answer tokenizes to nothing, truncates to the limits and keeps the first
// `max_qa_pairs` pairs in file order.
EncodedExample encode_record(const ProductRecord& record, const Vocab& vocab,
                             const TokenLimits& limits);

// All token sequences of a corpus, for vocabulary construction.
std::vector<std::vector<std::string>> corpus_sentences(
    const std::vector<ProductRecord>& records);

}  // namespace mspt
