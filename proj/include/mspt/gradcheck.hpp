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

#include <functional>
#include <string>
#include <vector>

#include "mspt/parameters.hpp"
#include "mspt/tape.hpp"

namespace mspt {

// Central finite-difference oracle. It rebuilds the graph from scratch for
// every perturbation, so it shares no code path with Tape::backward beyond
// the forward ops themselves.
struct GradCheckOptions {
  double step = 1e-5;
  // Relative error is |analytic - numeric| / max(|analytic|, |numeric|, floor).
  double floor = 1e-6;
  // Check at most this many entries per tensor (0 = all), evenly strided.
  std::size_t max_entries_per_tensor = 0;
};

struct GradCheckReport {
  double max_relative_error = 0.0;
  std::string worst_entry;
  std::size_t entries_checked = 0;
};

double relative_error(double analytic, double numeric, double floor);

using LossBuilder = std::function<Var(Tape&)>;

// Checks dLoss/dParam for every parameter in `store`.
GradCheckReport check_parameter_gradients(ParameterStore& store,
                                          const LossBuilder& build,
                                          const GradCheckOptions& options = {});

using InputLossBuilder = std::function<Var(Tape&, const std::vector<Var>&)>;

// Checks dLoss/dInput for free-standing input tensors.
GradCheckReport check_input_gradients(std::vector<Tensor> inputs,
                                      const InputLossBuilder& build,
                                      const GradCheckOptions& options = {});

}  // namespace mspt
