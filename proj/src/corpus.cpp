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

#include "mspt/corpus.hpp"

#include <fstream>
#include <istream>
#include <ostream>

#include <json.hpp>

#include "mspt/error.hpp"

namespace mspt {

using nlohmann::json;

std::string to_json_line(const ProductRecord& record) {
  json j;
  j["v"] = kCorpusSchemaVersion;
  j["id"] = record.id;
  j["title"] = record.title;
  j["attributes"] = record.attributes;
  json qa = json::array();
  for (const auto& p : record.qa_pairs) qa.push_back({{"q", p.question}, {"a", p.answer}});
  j["qa_pairs"] = std::move(qa);
  if (record.reason) j["reason"] = *record.reason;
  return j.dump();
}

namespace {

const json& require(const json& j, const char* key, std::size_t line) {
  auto it = j.find(key);
  if (it == j.end()) throw ParseError(std::string("missing field \"") + key + "\"", line);
  return *it;
}

std::string require_string(const json& j, const char* key, std::size_t line) {
  const json& v = require(j, key, line);
  if (!v.is_string()) throw ParseError(std::string("field \"") + key + "\" must be a string", line);
  return v.get<std::string>();
}

}  // namespace

ProductRecord parse_json_line(const std::string& line, std::size_t line_number) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("invalid JSON: ") + e.what(), line_number);
  }
  if (!j.is_object()) throw ParseError("record must be a JSON object", line_number);
  const json& version = require(j, "v", line_number);
  if (!version.is_number_integer() || version.get<int>() != kCorpusSchemaVersion) {
    throw ParseError("unsupported schema version " + version.dump(), line_number);
  }
  ProductRecord r;
  r.id = require_string(j, "id", line_number);
  r.title = require_string(j, "title", line_number);
  if (tokenize(r.title).empty()) throw ParseError("empty title", line_number);

  const json& attrs = require(j, "attributes", line_number);
  if (!attrs.is_array()) throw ParseError("\"attributes\" must be an array", line_number);
  for (const auto& a : attrs) {
    if (!a.is_string()) throw ParseError("attribute entries must be strings", line_number);
    r.attributes.push_back(a.get<std::string>());
  }
  const json& qa = require(j, "qa_pairs", line_number);
  if (!qa.is_array()) throw ParseError("\"qa_pairs\" must be an array", line_number);
  for (const auto& p : qa) {
    if (!p.is_object()) throw ParseError("qa_pairs entries must be objects", line_number);
    r.qa_pairs.push_back({require_string(p, "q", line_number), require_string(p, "a", line_number)});
  }
  if (auto it = j.find("reason"); it != j.end()) {
    if (!it->is_string()) throw ParseError("\"reason\" must be a string", line_number);
    r.reason = it->get<std::string>();
  }
  return r;
}

std::vector<ProductRecord> read_corpus(std::istream& in) {
  std::vector<ProductRecord> records;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    records.push_back(parse_json_line(line, n));
  }
  if (records.empty()) throw ContractError("corpus contains no records");
  return records;
}

std::vector<ProductRecord> load_corpus(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open corpus " + path.string());
  return read_corpus(in);
}

void write_corpus(std::ostream& out, const std::vector<ProductRecord>& records) {
  for (const auto& r : records) out << to_json_line(r) << '\n';
}

void save_corpus(const std::filesystem::path& path,
                 const std::vector<ProductRecord>& records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  write_corpus(out, records);
}

namespace {

std::vector<TokenId> encode_text(const std::string& text, const Vocab& vocab,
                                 std::size_t limit) {
  auto tokens = tokenize(text);
  if (tokens.size() > limit) tokens.resize(limit);
  return vocab.encode(tokens);
}

std::vector<std::string> split_answers(const std::string& answer) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = answer.find("///", start);
    parts.push_back(answer.substr(start, pos == std::string::npos ? std::string::npos : pos - start));
    if (pos == std::string::npos) break;
    start = pos + 3;
  }
  return parts;
}

}  // namespace

EncodedExample encode_record(const ProductRecord& record, const Vocab& vocab,
                             const TokenLimits& limits) {
  EncodedExample ex;
  ex.id = record.id;
  ex.title = encode_text(record.title, vocab, limits.title);
  if (ex.title.empty()) throw ContractError("record '" + record.id + "' has an empty title");
  for (const auto& a : record.attributes) {
    for (TokenId t : encode_text(a, vocab, limits.attributes)) {
      if (ex.attributes.size() < limits.attributes) ex.attributes.push_back(t);
    }
  }
  if (ex.attributes.empty()) ex.attributes.push_back(Vocab::kSep);

  for (const auto& p : record.qa_pairs) {
    const auto q = encode_text(p.question, vocab, limits.question);
    if (q.empty()) continue;
    for (const auto& answer : split_answers(p.answer)) {
      if (ex.qa.size() >= limits.max_qa_pairs) break;
      const auto a = encode_text(answer, vocab, limits.answer);
      if (a.empty()) continue;
      std::vector<TokenId> seq = q;
      seq.push_back(Vocab::kSep);
      seq.insert(seq.end(), a.begin(), a.end());
      ex.qa.push_back(std::move(seq));
    }
  }
  if (record.reason) {
    ex.reason.push_back(Vocab::kBos);
    for (TokenId t : encode_text(*record.reason, vocab, limits.reason)) ex.reason.push_back(t);
    ex.reason.push_back(Vocab::kEos);
  }
  return ex;
}

std::vector<std::vector<std::string>> corpus_sentences(
    const std::vector<ProductRecord>& records) {
  std::vector<std::vector<std::string>> out;
  for (const auto& r : records) {
    out.push_back(tokenize(r.title));
    for (const auto& a : r.attributes) out.push_back(tokenize(a));
    for (const auto& p : r.qa_pairs) {
      out.push_back(tokenize(p.question));
      for (const auto& answer : split_answers(p.answer)) out.push_back(tokenize(answer));
    }
    if (r.reason) out.push_back(tokenize(*r.reason));
  }
  return out;
}

}  // namespace mspt
