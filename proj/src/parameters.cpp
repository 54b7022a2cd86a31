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

#include "mspt/parameters.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "mspt/error.hpp"

namespace mspt {
namespace {

constexpr char kMagic[8] = {'M', 'S', 'P', 'T', 'P', 'A', 'R', 'M'};
constexpr std::uint32_t kVersion = 1;

static_assert(std::endian::native == std::endian::little,
              "checkpoint encoding assumes a little-endian host");

template <typename T>
void put(std::string& out, T value) {
  char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  out.append(buf, sizeof(T));
}

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    T value;
    std::memcpy(&value, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return value;
  }

  std::string get_string(std::size_t n) {
    need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > bytes_.size()) throw ParseError("truncated checkpoint");
  }

  const std::string& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

Parameter& ParameterStore::create(const std::string& name, Shape shape,
                                  std::size_t fan_in, Rng& rng) {
  Tensor t(std::move(shape));
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in == 0 ? 1 : fan_in));
  for (double& v : t.data()) v = rng.uniform(-bound, bound);
  return create(name, std::move(t));
}

Parameter& ParameterStore::create(const std::string& name, Tensor initial) {
  if (index_.contains(name)) {
    throw ContractError("duplicate parameter name '" + name + "'");
  }
  auto p = std::make_unique<Parameter>();
  p->name = name;
  p->value = std::move(initial);
  index_.emplace(name, params_.size());
  params_.push_back(std::move(p));
  return *params_.back();
}

bool ParameterStore::contains(const std::string& name) const {
  return index_.contains(name);
}

Parameter& ParameterStore::get(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw ContractError("unknown parameter '" + name + "'");
  return *params_[it->second];
}

const Parameter& ParameterStore::get(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw ContractError("unknown parameter '" + name + "'");
  return *params_[it->second];
}

std::size_t ParameterStore::element_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p->value.size();
  return n;
}

std::vector<std::string> ParameterStore::names() const {
  std::vector<std::string> out;
  out.reserve(params_.size());
  for (const auto& p : params_) out.push_back(p->name);
  return out;
}

bool ParameterStore::has_prefix(const std::string& prefix) const {
  for (const auto& p : params_) {
    if (p->name.starts_with(prefix)) return true;
  }
  return false;
}

void ParameterStore::zero_grad() {
  for (auto& p : params_) {
    std::fill(p->grad.begin(), p->grad.end(), 0.0);
    p->touched = false;
  }
}

bool ParameterStore::any_touched() const {
  for (const auto& p : params_) {
    if (p->touched) return true;
  }
  return false;
}

void ParameterStore::copy_values_from(const ParameterStore& other) {
  for (auto& p : params_) {
    if (!other.contains(p->name)) continue;
    const Parameter& src = other.get(p->name);
    if (src.value.shape() != p->value.shape()) {
      throw DimensionError("parameter '" + p->name + "' has shape " +
                           to_string(p->value.shape()) + " but source has " +
                           to_string(src.value.shape()));
    }
    p->value = src.value;
  }
}

std::string ParameterStore::serialize() const {
  std::string out(kMagic, sizeof(kMagic));
  put<std::uint32_t>(out, kVersion);
  put<std::uint64_t>(out, params_.size());
  for (const auto& p : params_) {
    put<std::uint64_t>(out, p->name.size());
    out += p->name;
    put<std::uint64_t>(out, p->value.rank());
    for (std::size_t d : p->value.shape()) put<std::uint64_t>(out, d);
    for (double v : p->value.data()) put<double>(out, v);
  }
  return out;
}

ParameterStore ParameterStore::deserialize(const std::string& bytes) {
  Reader in(bytes);
  if (in.get_string(sizeof(kMagic)) != std::string(kMagic, sizeof(kMagic))) {
    throw ParseError("not a parameter checkpoint");
  }
  const auto version = in.get<std::uint32_t>();
  if (version != kVersion) {
    throw ParseError("unsupported checkpoint version " + std::to_string(version));
  }
  ParameterStore store;
  const auto count = in.get<std::uint64_t>();
  for (std::uint64_t i = 0; i < count; ++i) {
    std::string name = in.get_string(in.get<std::uint64_t>());
    Shape shape(in.get<std::uint64_t>());
    for (auto& d : shape) d = in.get<std::uint64_t>();
    std::vector<double> values(mspt::element_count(shape));
    for (double& v : values) v = in.get<double>();
    store.create(name, Tensor(std::move(shape), std::move(values)));
  }
  if (!in.done()) throw ParseError("trailing bytes after checkpoint");
  return store;
}

void ParameterStore::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  const std::string bytes = serialize();
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

ParameterStore ParameterStore::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return deserialize(buf.str());
}

}  // namespace mspt
