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

#include "mspt/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace mspt {
namespace {

std::vector<std::size_t> entries_to_check(std::size_t n, std::size_t cap) {
  std::vector<std::size_t> out;
  if (cap == 0 || cap >= n) {
    for (std::size_t i = 0; i < n; ++i) out.push_back(i);
    return out;
  }
  for (std::size_t i = 0; i < cap; ++i) out.push_back(i * n / cap);
  return out;
}

void note(GradCheckReport& report, double analytic, double numeric,
          const GradCheckOptions& options, const std::string& label) {
  const double err = relative_error(analytic, numeric, options.floor);
  ++report.entries_checked;
  if (report.worst_entry.empty() || err > report.max_relative_error) {
    report.max_relative_error = err;
    char buf[96];
    std::snprintf(buf, sizeof(buf), " analytic=%.6g numeric=%.6g", analytic, numeric);
    report.worst_entry = label + buf;
  }
}

}  // namespace

double relative_error(double analytic, double numeric, double floor) {
  const double scale = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / scale;
}

GradCheckReport check_parameter_gradients(ParameterStore& store,
                                          const LossBuilder& build,
                                          const GradCheckOptions& options) {
  store.zero_grad();
  {
    Tape tape;
    tape.backward(build(tape));
  }
  auto evaluate = [&]() {
    Tape tape(false);
    return build(tape).item();
  };
  GradCheckReport report;
  for (auto& p : store) {
    const std::vector<double> analytic =
        p->grad.empty() ? std::vector<double>(p->value.size(), 0.0) : p->grad;
    for (std::size_t i : entries_to_check(p->value.size(), options.max_entries_per_tensor)) {
      const double original = p->value[i];
      p->value[i] = original + options.step;
      const double up = evaluate();
      p->value[i] = original - options.step;
      const double down = evaluate();
      p->value[i] = original;
      const double numeric = (up - down) / (2.0 * options.step);
      note(report, analytic[i], numeric, options, p->name + "[" + std::to_string(i) + "]");
    }
  }
  store.zero_grad();
  return report;
}

GradCheckReport check_input_gradients(std::vector<Tensor> inputs,
                                      const InputLossBuilder& build,
                                      const GradCheckOptions& options) {
  std::vector<std::vector<double>> analytic;
  {
    Tape tape;
    std::vector<Var> vars;
    for (const Tensor& t : inputs) vars.push_back(tape.variable(t));
    tape.backward(build(tape, vars));
    for (const Var& v : vars) {
      auto g = v.grad();
      analytic.emplace_back(g.begin(), g.end());
      if (analytic.back().empty()) analytic.back().assign(v.value().size(), 0.0);
    }
  }
  auto evaluate = [&]() {
    Tape tape(false);
    std::vector<Var> vars;
    for (const Tensor& t : inputs) vars.push_back(tape.constant(t));
    return build(tape, vars).item();
  };
  GradCheckReport report;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    for (std::size_t i : entries_to_check(inputs[k].size(), options.max_entries_per_tensor)) {
      const double original = inputs[k][i];
      inputs[k][i] = original + options.step;
      const double up = evaluate();
      inputs[k][i] = original - options.step;
      const double down = evaluate();
      inputs[k][i] = original;
      const double numeric = (up - down) / (2.0 * options.step);
      note(report, analytic[k][i], numeric, options,
           "input" + std::to_string(k) + "[" + std::to_string(i) + "]");
    }
  }
  return report;
}

}  // namespace mspt
