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

#include <string>

#include "mspt/parameters.hpp"

namespace mspt {

enum class OptimizerKind { kSgd, kAdam };

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::kAdam;
  double learning_rate = 2e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  // Rescale the global gradient norm to at most this value; 0 disables.
  double clip_norm = 5.0;
};

OptimizerKind parse_optimizer_kind(const std::string& name);
std::string to_string(OptimizerKind kind);

// Applies one update to every parameter and zeroes all gradients afterwards.
// Throws ContractError if no backward pass has populated gradients since the
// previous step.
void optimizer_step(ParameterStore& store, const OptimizerConfig& config);

// Global L2 norm of all accumulated gradients.
double gradient_norm(const ParameterStore& store);

}  // namespace mspt
