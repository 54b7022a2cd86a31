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

#include <filesystem>
#include <fstream>
#include <sstream>

#include "mspt/corpus.hpp"
#include "mspt/error.hpp"
#include "mspt/rng.hpp"
#include "mspt/text.hpp"

namespace mspt {
namespace {

using Strings = std::vector<std::string>;

TEST(Tokenize, LowercasesAndSplitsPunctuation) {
  EXPECT_EQ(tokenize("Soft, Washable  cotton!"),
            (Strings{"soft", ",", "washable", "cotton", "!"}));
  EXPECT_EQ(tokenize("  \t\n"), Strings{});
  EXPECT_EQ(tokenize("yes /// no"), (Strings{"yes", "///", "no"}));
  EXPECT_EQ(tokenize("a//b"), (Strings{"a", "/", "/", "b"}));
}

TEST(Tokenize, PassesNonAsciiBytesThrough) {
  EXPECT_EQ(tokenize("caf\xc3\xa9 OK"), (Strings{"caf\xc3\xa9", "ok"}));
}

TEST(Vocab, ReservedIdsAreFixed) {
  Vocab v;
  EXPECT_EQ(v.size(), Vocab::kReserved);
  EXPECT_EQ(v.token(Vocab::kPad), "<pad>");
  EXPECT_EQ(v.id("<bos>"), Vocab::kBos);
  EXPECT_EQ(v.id("<eos>"), Vocab::kEos);
  EXPECT_EQ(v.id("<unk>"), Vocab::kUnk);
  EXPECT_EQ(v.id("<sep>"), Vocab::kSep);
  EXPECT_EQ(v.id("never-seen"), Vocab::kUnk);
}

TEST(Vocab, BuildOrdersByFrequencyThenLexically) {
  std::vector<Strings> sentences = {{"b", "a", "c"}, {"c", "b"}, {"c", "z"}};
  Vocab v = Vocab::build(sentences);
  ASSERT_EQ(v.size(), Vocab::kReserved + 4);
  EXPECT_EQ(v.token(5), "c");
  EXPECT_EQ(v.token(6), "b");
  EXPECT_EQ(v.token(7), "a");
  EXPECT_EQ(v.token(8), "z");

  Vocab capped = Vocab::build(sentences, 2);
  EXPECT_EQ(capped.size(), Vocab::kReserved + 2);
  Vocab small = Vocab::build(sentences, 1, Vocab::kReserved + 1);
  EXPECT_EQ(small.size(), Vocab::kReserved + 1);
}

TEST(Vocab, IsABijectionOnKnownTokens) {
  std::vector<Strings> sentences = {{"x", "y", "w"}, {"y"}};
  Vocab v = Vocab::build(sentences);
  for (TokenId id = 0; id < v.size(); ++id) EXPECT_EQ(v.id(v.token(id)), id);
  EXPECT_THROW(v.token(static_cast<TokenId>(v.size())), ContractError);
}

TEST(Vocab, DecodeStopsAtEosAndDropsPadding) {
  Vocab v = Vocab::build(std::vector<Strings>{{"good", "fit"}});
  auto ids = v.encode(Strings{"good", "fit"});
  std::vector<TokenId> seq = {Vocab::kBos, ids[0], Vocab::kPad, ids[1], Vocab::kEos, ids[0]};
  EXPECT_EQ(v.decode(seq), (Strings{"good", "fit"}));
}

TEST(Vocab, SaveLoadRoundTripKeepsHash) {
  Vocab v = Vocab::build(std::vector<Strings>{{"alpha", "beta", "beta"}});
  auto path = std::filesystem::temp_directory_path() / "mspt_vocab_test.txt";
  v.save(path);
  Vocab back = Vocab::load(path);
  EXPECT_EQ(back.tokens(), v.tokens());
  EXPECT_EQ(back.hash(), v.hash());
  std::filesystem::remove(path);
}

TEST(Vocab, FromTokensRejectsBadTables) {
  EXPECT_THROW(Vocab::from_tokens({"<pad>", "<bos>"}), ParseError);
  EXPECT_THROW(Vocab::from_tokens({"<pad>", "<bos>", "<eos>", "<unk>", "<sep>", "a", "a"}),
               ParseError);
  EXPECT_THROW(Vocab::from_tokens({"<bos>", "<pad>", "<eos>", "<unk>", "<sep>"}), ParseError);
}

std::string random_word(Rng& rng) {
  static const char* kAlphabet = "abcdefghijklmnopqrstuvwxyz";
  std::string w;
  const std::size_t len = 1 + rng.index(8);
  for (std::size_t i = 0; i < len; ++i) w.push_back(kAlphabet[rng.index(26)]);
  return w;
}

std::string random_text(Rng& rng, std::size_t max_words) {
  std::string s;
  const std::size_t n = 1 + rng.index(max_words);
  for (std::size_t i = 0; i < n; ++i) {
    if (i) s += ' ';
    s += random_word(rng);
    if (rng.bernoulli(0.1)) s += rng.bernoulli(0.5) ? "\"," : "\\n\t";
  }
  return s;
}

ProductRecord random_record(Rng& rng, std::size_t index) {
  ProductRecord r;
  r.id = "p" + std::to_string(index);
  r.title = random_text(rng, 10);
  const std::size_t attrs = rng.index(5);
  for (std::size_t i = 0; i < attrs; ++i) r.attributes.push_back(random_word(rng));
  const std::size_t qa = rng.index(6);
  for (std::size_t i = 0; i < qa; ++i) {
    r.qa_pairs.push_back({random_text(rng, 6), random_text(rng, 6)});
  }
  if (rng.bernoulli(0.8)) r.reason = random_text(rng, 8);
  return r;
}

TEST(Corpus, RoundTripOfRandomRecordsIsFieldEqual) {
  Rng rng(7);
  std::vector<ProductRecord> records;
  for (std::size_t i = 0; i < 100; ++i) records.push_back(random_record(rng, i));
  std::stringstream buffer;
  write_corpus(buffer, records);
  auto loaded = read_corpus(buffer);
  ASSERT_EQ(loaded.size(), records.size());
  for (std::size_t i = 0; i < records.size(); ++i) EXPECT_EQ(loaded[i], records[i]) << i;
}

TEST(Corpus, WriteLoadWriteIsByteIdentical) {
  Rng rng(11);
  std::vector<ProductRecord> records;
  for (std::size_t i = 0; i < 50; ++i) records.push_back(random_record(rng, i));
  auto dir = std::filesystem::temp_directory_path();
  auto first = dir / "mspt_corpus_a.jsonl", second = dir / "mspt_corpus_b.jsonl";
  save_corpus(first, records);
  save_corpus(second, load_corpus(first));
  auto slurp = [](const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
  };
  EXPECT_EQ(slurp(first), slurp(second));
  std::filesystem::remove(first);
  std::filesystem::remove(second);
}

TEST(Corpus, EmptyQaPairsLoad) {
  std::stringstream in(
      R"({"v":1,"id":"x","title":"red mug","attributes":[],"qa_pairs":[],"reason":"nice mug"})"
      "\n");
  auto records = read_corpus(in);
  ASSERT_EQ(records.size(), 1u);
  EXPECT_TRUE(records[0].qa_pairs.empty());
  EXPECT_TRUE(records[0].attributes.empty());
}

TEST(Corpus, MissingTitleIsRejectedWithLineNumber) {
  std::stringstream in(
      R"({"v":1,"id":"a","title":"ok","attributes":[],"qa_pairs":[]})"
      "\n\n"
      R"({"v":1,"id":"b","attributes":[],"qa_pairs":[]})"
      "\n");
  try {
    read_corpus(in);
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
    EXPECT_NE(std::string(e.what()).find("title"), std::string::npos);
  }
}

TEST(Corpus, SchemaViolationsAreParseErrors) {
  const char* bad[] = {
      "not json",
      R"({"id":"a","title":"t","attributes":[],"qa_pairs":[]})",
      R"({"v":2,"id":"a","title":"t","attributes":[],"qa_pairs":[]})",
      R"({"v":1,"id":"a","title":"","attributes":[],"qa_pairs":[]})",
      R"({"v":1,"id":"a","title":"t","attributes":"x","qa_pairs":[]})",
      R"({"v":1,"id":"a","title":"t","attributes":[],"qa_pairs":[{"question":"q"}]})",
      R"({"v":1,"id":"a","title":"t","attributes":[],"qa_pairs":[],"reason":3})",
  };
  for (const char* line : bad) {
    EXPECT_THROW(parse_json_line(line, 1), ParseError) << line;
  }
}

TEST(Corpus, EmptyFileIsAContractError) {
  std::stringstream in("\n\n");
  EXPECT_THROW(read_corpus(in), ContractError);
}

TEST(Encode, SplitsMultiAnswersAndFramesReason) {
  ProductRecord r;
  r.id = "p";
  r.title = "soft towel";
  r.qa_pairs = {{"is it soft ?", "yes /// very soft"}, {"", "empty question"}};
  r.reason = "soft towel";
  Vocab v = Vocab::build(corpus_sentences({r}));
  EncodedExample e = encode_record(r, v, TokenLimits{});
  EXPECT_EQ(e.attributes, std::vector<TokenId>{Vocab::kSep});
  ASSERT_EQ(e.qa.size(), 2u);
  const auto q = v.encode(tokenize("is it soft ?"));
  std::vector<TokenId> first = q;
  first.push_back(Vocab::kSep);
  first.push_back(v.id("yes"));
  EXPECT_EQ(e.qa[0], first);
  EXPECT_EQ(e.reason.front(), Vocab::kBos);
  EXPECT_EQ(e.reason.back(), Vocab::kEos);
  EXPECT_EQ(e.reason.size(), 4u);
}

TEST(Encode, TruncatesToLimits) {
  ProductRecord r;
  r.id = "p";
  r.title = "a b c d e f";
  r.attributes = {"x", "y", "z"};
  for (int i = 0; i < 5; ++i) r.qa_pairs.push_back({"q q q q", "a a a a"});
  r.reason = "r r r r r r";
  TokenLimits limits;
  limits.title = 3;
  limits.attributes = 2;
  limits.question = 2;
  limits.answer = 1;
  limits.reason = 4;
  limits.max_qa_pairs = 3;
  Vocab v = Vocab::build(corpus_sentences({r}));
  EncodedExample e = encode_record(r, v, limits);
  EXPECT_EQ(e.title.size(), 3u);
  EXPECT_EQ(e.attributes.size(), 2u);
  ASSERT_EQ(e.qa.size(), 3u);
  EXPECT_EQ(e.qa[0].size(), 4u);
  // Reason limit counts content tokens; BOS and EOS frame them.
  EXPECT_EQ(e.reason.size(), 6u);
}

TEST(Encode, RecordWithoutReasonHasEmptyTarget) {
  ProductRecord r;
  r.id = "p";
  r.title = "lamp";
  Vocab v;
  EXPECT_TRUE(encode_record(r, v, TokenLimits{}).reason.empty());
}

}  // namespace
}  // namespace mspt
