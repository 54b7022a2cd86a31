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

#include <cstddef>
#include <deque>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "mspt/tensor.hpp"

namespace mspt {

class Tape;
struct Parameter;

// Handle to a node on a Tape. Cheap to copy; valid as long as its tape lives.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape() const { return tape_; }
  std::size_t id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  // Value of a single-element tensor.
  double item() const;
  // Empty when the node does not track gradients or backward has not run.
  std::span<const double> grad() const;

 private:
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

// Dynamic reverse-mode tape. Nodes are appended in execution order, so the
// record is topologically sorted by construction; backward walks it once in
// reverse. A tape is single-threaded.
class Tape {
 public:
  using Backward = std::function<void(Tape&)>;

  explicit Tape(bool grad_enabled = true) : grad_enabled_(grad_enabled) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool grad_enabled() const { return grad_enabled_; }

  Var constant(Tensor value);
  // Leaf whose gradient accumulates across backward calls until zero_grad().
  Var variable(Tensor value);
  // Leaf bound to a ParameterStore entry; binding twice returns the same node.
  // Gradients flow into Parameter::grad on backward.
  Var param(Parameter& parameter);

  // Runs reverse accumulation from a single-element loss.
  void backward(Var loss);
  void zero_grad();

  const Tensor& value(std::size_t id) const { return nodes_[id].value; }
  std::span<const double> grad(std::size_t id) const { return nodes_[id].grad; }
  const char* op_name(std::size_t id) const { return nodes_[id].op; }
  std::size_t size() const { return nodes_.size(); }

  // "#<id> (<op>)" of the first node holding a NaN/Inf, if any.
  std::optional<std::string> first_non_finite() const;

  // Op-author interface.
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  bool any_requires_grad(std::initializer_list<Var> inputs) const;
  Var record(const char* op, Tensor value, bool requires_grad, Backward backward);
  // Gradient buffer of a node, allocated (zero-filled) on first access.
  std::vector<double>& grad_buffer(std::size_t id);
  // Gradient of the output during backward; empty if nothing flowed into it.
  std::span<const double> upstream(std::size_t id) const { return nodes_[id].grad; }

 private:
  struct Node {
    const char* op = "";
    Tensor value;
    std::vector<double> grad;
    bool requires_grad = false;
    bool leaf = false;
    Backward backward;
    Parameter* parameter = nullptr;
  };

  std::deque<Node> nodes_;
  std::unordered_map<const Parameter*, std::size_t> bound_;
  bool grad_enabled_;
};

}  // namespace mspt
