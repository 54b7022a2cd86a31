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
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "mspt/rng.hpp"
#include "mspt/tensor.hpp"

namespace mspt {

struct Parameter {
  std::string name;
  Tensor value;
  // Accumulated dLoss/dValue; empty until a backward pass reaches it.
  std::vector<double> grad;
  // Adam moments, lazily sized.
  std::vector<double> first_moment;
  std::vector<double> second_moment;
  std::uint64_t steps = 0;
  // Set by backward, cleared by the optimizer.
  bool touched = false;
};

// Named model parameters in insertion order. Addresses are stable, so tapes
// may hold raw pointers to entries for the lifetime of the store.
class ParameterStore {
 public:
  ParameterStore() = default;
  ParameterStore(const ParameterStore&) = delete;
  ParameterStore& operator=(const ParameterStore&) = delete;
  ParameterStore(ParameterStore&&) = default;
  ParameterStore& operator=(ParameterStore&&) = default;

  // Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) initialization.
  Parameter& create(const std::string& name, Shape shape, std::size_t fan_in,
                    Rng& rng);
  Parameter& create(const std::string& name, Tensor initial);

  bool contains(const std::string& name) const;
  Parameter& get(const std::string& name);
  const Parameter& get(const std::string& name) const;

  std::size_t size() const { return params_.size(); }
  std::size_t element_count() const;
  std::vector<std::string> names() const;
  bool has_prefix(const std::string& prefix) const;

  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.cbegin(); }
  auto end() const { return params_.cend(); }

  void zero_grad();
  bool any_touched() const;

  // Copies values of every parameter present in both stores; shapes must match.
  void copy_values_from(const ParameterStore& other);

  // Checkpoint file (little-endian):
  //   "MSPTPARM" | u32 version=1 | u64 count |
  //   count x { u64 name_len | name bytes | u64 rank | rank x u64 dim |
  //             prod(dim) x f64 value }
  // Values are stored as raw IEEE-754 bits, so a round trip is bit-exact.
  std::string serialize() const;
  static ParameterStore deserialize(const std::string& bytes);
  void save(const std::filesystem::path& path) const;
  static ParameterStore load(const std::filesystem::path& path);

 private:
  std::vector<std::unique_ptr<Parameter>> params_;
  std::unordered_map<std::string, std::size_t> index_;
};

}  // namespace mspt
