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

#include "mspt/optimizer.hpp"

#include <cmath>

#include "mspt/error.hpp"

namespace mspt {

OptimizerKind parse_optimizer_kind(const std::string& name) {
  if (name == "sgd") return OptimizerKind::kSgd;
  if (name == "adam") return OptimizerKind::kAdam;
  throw ConfigError("unknown optimizer '" + name + "' (expected sgd or adam)");
}

std::string to_string(OptimizerKind kind) {
  return kind == OptimizerKind::kSgd ? "sgd" : "adam";
}

double gradient_norm(const ParameterStore& store) {
  double sq = 0.0;
  for (const auto& p : store) {
    for (double g : p->grad) sq += g * g;
  }
  return std::sqrt(sq);
}

void optimizer_step(ParameterStore& store, const OptimizerConfig& config) {
  if (!store.any_touched()) {
    throw ContractError("optimizer step without gradients; run backward first");
  }
  double factor = 1.0;
  if (config.clip_norm > 0.0) {
    const double norm = gradient_norm(store);
    if (norm > config.clip_norm) factor = config.clip_norm / norm;
  }
  const double lr = config.learning_rate;
  for (auto& p : store) {
    std::vector<double>& grad = p->grad;
    if (grad.empty()) grad.assign(p->value.size(), 0.0);
    auto values = p->value.data();
    if (config.kind == OptimizerKind::kSgd) {
      for (std::size_t i = 0; i < values.size(); ++i) values[i] -= lr * factor * grad[i];
    } else {
      if (p->first_moment.size() != values.size()) {
        p->first_moment.assign(values.size(), 0.0);
        p->second_moment.assign(values.size(), 0.0);
      }
      ++p->steps;
      const double t = static_cast<double>(p->steps);
      const double c1 = 1.0 - std::pow(config.beta1, t);
      const double c2 = 1.0 - std::pow(config.beta2, t);
      for (std::size_t i = 0; i < values.size(); ++i) {
        const double g = grad[i] * factor;
        double& m = p->first_moment[i];
        double& v = p->second_moment[i];
        m = config.beta1 * m + (1.0 - config.beta1) * g;
        v = config.beta2 * v + (1.0 - config.beta2) * g * g;
        values[i] -= lr * (m / c1) / (std::sqrt(v / c2) + config.epsilon);
      }
    }
  }
  store.zero_grad();
}

}  // namespace mspt
