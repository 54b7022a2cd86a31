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

#include "mspt/config.hpp"
#include "mspt/layers.hpp"

namespace mspt {

Var activate(Var x, Activation activation);

// Prior and posterior transforms of the item/user vectors.
//   prior = act(H_item W3 + b3)
//   hard  = act([H_item, H_user] W4 + b4)
//   soft  = act((l2 H_item + (1 - l2) H_user) W5 + b5)
// Only the posterior mode selected in the config has parameters, and a
// model without QA has none at all.
class Fusion {
 public:
  Fusion() = default;
  static Fusion create(ParameterStore& store, const ModelConfig& config, Rng& rng);

  Var prior(Tape& tape, Var h_item) const;
  Var hard(Tape& tape, Var h_item, Var h_user) const;
  // Throws ConfigError for lambda2 outside [0, 1].
  Var soft(Tape& tape, Var h_item, Var h_user, double lambda2) const;
  Var soft_preactivation(Tape& tape, Var h_item, Var h_user, double lambda2) const;
  // Configured mode and lambda2.
  Var posterior(Tape& tape, Var h_item, Var h_user) const;

  bool has_posterior() const { return mode_ == FusionMode::kHard ? hard_.weight : soft_.weight; }
  const Linear& prior_layer() const { return prior_; }
  const Linear& hard_layer() const { return hard_; }
  const Linear& soft_layer() const { return soft_; }

 private:
  Linear prior_;
  Linear hard_;
  Linear soft_;
  FusionMode mode_ = FusionMode::kSoft;
  Activation activation_ = Activation::kTanh;
  double lambda2_ = 0.5;
};

}  // namespace mspt
