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

#include "mspt/fusion.hpp"

#include "mspt/error.hpp"

namespace mspt {

Var activate(Var x, Activation activation) {
  return activation == Activation::kTanh ? tanh(x) : sigmoid(x);
}

Fusion Fusion::create(ParameterStore& store, const ModelConfig& config, Rng& rng) {
  Fusion f;
  const std::size_t d = config.model_dim();
  f.mode_ = config.fusion;
  f.activation_ = config.activation;
  f.lambda2_ = config.lambda2;
  f.prior_ = Linear::create(store, "fusion.prior", d, d, rng);
  if (config.uses_qa()) {
    if (config.fusion == FusionMode::kHard) {
      f.hard_ = Linear::create(store, "fusion.hard", 2 * d, d, rng);
    } else {
      f.soft_ = Linear::create(store, "fusion.soft", d, d, rng);
    }
  }
  return f;
}

Var Fusion::prior(Tape& tape, Var h_item) const { return activate(prior_(tape, h_item), activation_); }

Var Fusion::hard(Tape& tape, Var h_item, Var h_user) const {
  if (!hard_.weight) throw ContractError("hard fusion parameters were not built");
  const Var parts[] = {h_item, h_user};
  return activate(hard_(tape, concat(parts, 1)), activation_);
}

Var Fusion::soft_preactivation(Tape& tape, Var h_item, Var h_user, double lambda2) const {
  if (!soft_.weight) throw ContractError("soft fusion parameters were not built");
  if (!(lambda2 >= 0.0 && lambda2 <= 1.0)) {
    throw ConfigError("lambda2 = " + std::to_string(lambda2) + " outside [0,1]");
  }
  return soft_(tape, add(scale(h_item, lambda2), scale(h_user, 1.0 - lambda2)));
}

Var Fusion::soft(Tape& tape, Var h_item, Var h_user, double lambda2) const {
  return activate(soft_preactivation(tape, h_item, h_user, lambda2), activation_);
}

Var Fusion::posterior(Tape& tape, Var h_item, Var h_user) const {
  return mode_ == FusionMode::kHard ? hard(tape, h_item, h_user)
                                    : soft(tape, h_item, h_user, lambda2_);
}

}  // namespace mspt
