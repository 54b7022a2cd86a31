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
#include <filesystem>

#include "mspt/error.hpp"
#include "mspt/parameters.hpp"

namespace mspt {
namespace {

TEST(ParameterStore, InitializationBoundsAndDeterminism) {
  Rng a(5), b(5);
  ParameterStore s1, s2;
  Parameter& p1 = s1.create("layer.w", {16, 9}, 16, a);
  Parameter& p2 = s2.create("layer.w", {16, 9}, 16, b);
  EXPECT_EQ(p1.value, p2.value);
  for (double v : p1.value.data()) {
    EXPECT_GE(v, -0.25);
    EXPECT_LT(v, 0.25);
  }
}

TEST(ParameterStore, NamesAreUnique) {
  ParameterStore s;
  s.create("x", Tensor::scalar(1.0));
  EXPECT_THROW(s.create("x", Tensor::scalar(2.0)), ContractError);
  EXPECT_THROW(s.get("y"), ContractError);
  EXPECT_TRUE(s.has_prefix("x"));
  EXPECT_FALSE(s.has_prefix("user."));
}

TEST(ParameterStore, CheckpointRoundTripIsBitExact) {
  Rng rng(99);
  ParameterStore s;
  s.create("a", {3, 4}, 3, rng);
  s.create("b.c", {7}, 1, rng);
  Tensor special({4}, {0.1, -0.0, 1e-310, std::nextafter(1.0, 2.0)});
  s.create("special", special);

  const auto path = std::filesystem::temp_directory_path() / "mspt_params_roundtrip.bin";
  s.save(path);
  ParameterStore loaded = ParameterStore::load(path);
  std::filesystem::remove(path);
  ASSERT_EQ(loaded.names(), s.names());
  for (const auto& name : s.names()) {
    const Tensor& x = s.get(name).value;
    const Tensor& y = loaded.get(name).value;
    ASSERT_EQ(x.shape(), y.shape());
    for (std::size_t i = 0; i < x.size(); ++i) {
      EXPECT_EQ(std::bit_cast<std::uint64_t>(x[i]), std::bit_cast<std::uint64_t>(y[i]));
    }
  }
  EXPECT_EQ(loaded.serialize(), s.serialize());
}

TEST(ParameterStore, CorruptCheckpointsRejected) {
  ParameterStore s;
  s.create("a", Tensor::vector({1, 2, 3}));
  std::string bytes = s.serialize();
  EXPECT_THROW(ParameterStore::deserialize(bytes.substr(0, bytes.size() - 3)), ParseError);
  EXPECT_THROW(ParameterStore::deserialize(bytes + "x"), ParseError);
  bytes[0] = 'X';
  EXPECT_THROW(ParameterStore::deserialize(bytes), ParseError);
}

}  // namespace
}  // namespace mspt
