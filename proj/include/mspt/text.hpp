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
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace mspt {

using TokenId = std::uint32_t;

// Lowercases ASCII, splits on whitespace and emits every ASCII punctuation
// character as its own token, except that "///" (the multi-answer separator)
// is kept whole. Non-ASCII bytes pass through untouched.
std::vector<std::string> tokenize(std::string_view text);
std::string join_tokens(std::span<const std::string> tokens);

// Token <-> id bijection with reserved ids that are never reassigned.
class Vocab {
 public:
  static constexpr TokenId kPad = 0;
  static constexpr TokenId kBos = 1;
  static constexpr TokenId kEos = 2;
  static constexpr TokenId kUnk = 3;
  static constexpr TokenId kSep = 4;
  static constexpr TokenId kReserved = 5;

  Vocab();

  // Tokens seen at least `min_count` times, most frequent first (ties broken
  // lexicographically), truncated so the vocabulary holds at most max_size ids.
  static Vocab build(std::span<const std::vector<std::string>> sentences,
                     std::size_t min_count = 1, std::size_t max_size = 0);
  static Vocab from_tokens(std::vector<std::string> tokens);

  std::size_t size() const { return tokens_.size(); }
  TokenId id(std::string_view token) const;
  bool contains(std::string_view token) const;
  const std::string& token(TokenId id) const;

  std::vector<TokenId> encode(std::span<const std::string> tokens) const;
  // Drops PAD/BOS/EOS; stops at the first EOS.
  std::vector<std::string> decode(std::span<const TokenId> ids) const;

  const std::vector<std::string>& tokens() const { return tokens_; }
  // FNV-1a over the ordered token list.
  std::uint64_t hash() const;

  // One token per line in id order.
  void save(const std::filesystem::path& path) const;
  static Vocab load(const std::filesystem::path& path);

 private:
  void add(std::string token);

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> ids_;
};

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::string hex64(std::uint64_t value);

}  // namespace mspt
