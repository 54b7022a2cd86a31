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

#include "mspt/tape.hpp"

#include <algorithm>

#include "mspt/error.hpp"
#include "mspt/parameters.hpp"

namespace mspt {

const Tensor& Var::value() const { return tape_->value(id_); }

double Var::item() const {
  const Tensor& t = value();
  if (t.size() != 1) {
    throw ContractError("item() on tensor of shape " + to_string(t.shape()));
  }
  return t[0];
}

std::span<const double> Var::grad() const { return tape_->grad(id_); }

Var Tape::constant(Tensor value) {
  Node node;
  node.op = "constant";
  node.value = std::move(value);
  node.leaf = true;
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Var Tape::variable(Tensor value) {
  Node node;
  node.op = "variable";
  node.value = std::move(value);
  node.leaf = true;
  node.requires_grad = grad_enabled_;
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Var Tape::param(Parameter& parameter) {
  if (auto it = bound_.find(&parameter); it != bound_.end()) {
    return Var(this, it->second);
  }
  Node node;
  node.op = "param";
  node.value = parameter.value;
  node.leaf = true;
  node.requires_grad = grad_enabled_;
  node.parameter = &parameter;
  nodes_.push_back(std::move(node));
  bound_.emplace(&parameter, nodes_.size() - 1);
  return Var(this, nodes_.size() - 1);
}

bool Tape::any_requires_grad(std::initializer_list<Var> inputs) const {
  if (!grad_enabled_) return false;
  return std::any_of(inputs.begin(), inputs.end(),
                     [this](const Var& v) { return requires_grad(v.id()); });
}

Var Tape::record(const char* op, Tensor value, bool requires_grad,
                 Backward backward) {
  Node node;
  node.op = op;
  node.value = std::move(value);
  node.requires_grad = grad_enabled_ && requires_grad;
  if (node.requires_grad) node.backward = std::move(backward);
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

std::vector<double>& Tape::grad_buffer(std::size_t id) {
  Node& node = nodes_[id];
  if (node.grad.empty()) node.grad.assign(node.value.size(), 0.0);
  return node.grad;
}

void Tape::backward(Var loss) {
  if (loss.tape() != this) throw ContractError("loss belongs to another tape");
  if (value(loss.id()).size() != 1) {
    throw ContractError("backward needs a scalar loss, got shape " +
                        to_string(value(loss.id()).shape()));
  }
  if (!requires_grad(loss.id())) return;

  // Interior adjoints restart from zero; leaf adjoints accumulate.
  for (Node& node : nodes_) {
    if (!node.leaf) node.grad.clear();
  }
  for (Node& node : nodes_) {
    if (node.parameter != nullptr) node.grad.clear();
  }

  grad_buffer(loss.id())[0] += 1.0;
  for (std::size_t i = loss.id() + 1; i-- > 0;) {
    Node& node = nodes_[i];
    if (!node.requires_grad || node.grad.empty() || !node.backward) continue;
    node.backward(*this);
  }

  for (Node& node : nodes_) {
    if (node.parameter == nullptr || node.grad.empty()) continue;
    Parameter& p = *node.parameter;
    if (p.grad.size() != node.grad.size()) p.grad.assign(node.grad.size(), 0.0);
    for (std::size_t k = 0; k < node.grad.size(); ++k) p.grad[k] += node.grad[k];
    p.touched = true;
  }
}

void Tape::zero_grad() {
  for (Node& node : nodes_) node.grad.clear();
}

std::optional<std::string> Tape::first_non_finite() const {
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (!nodes_[i].value.all_finite()) {
      const std::string what = nodes_[i].parameter ? "parameter " + nodes_[i].parameter->name
                                                   : std::string(nodes_[i].op);
      return "#" + std::to_string(i) + " (" + what + ", shape " +
             to_string(nodes_[i].value.shape()) + ")";
    }
  }
  return std::nullopt;
}

}  // namespace mspt
