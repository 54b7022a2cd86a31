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

#include <atomic>
#include <cstdlib>
#include <string_view>

#include "mspt/kernels.hpp"

namespace mspt::kernels {

#if defined(MSPT_HAVE_AVX2)
const KernelTable& avx2_table_impl();
#endif

namespace {

bool cpu_has_avx2() {
#if defined(MSPT_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const KernelTable* initial_table() {
  const KernelTable* best = avx2_table();
  if (best == nullptr) best = &scalar_table();
  if (const char* env = std::getenv("MSPT_KERNELS")) {
    const std::string_view name(env);
    if (name == "scalar") return &scalar_table();
    if (name == "avx2" && avx2_table() != nullptr) return avx2_table();
  }
  return best;
}

std::atomic<const KernelTable*>& current() {
  static std::atomic<const KernelTable*> table{initial_table()};
  return table;
}

}  // namespace

const KernelTable* avx2_table() {
#if defined(MSPT_HAVE_AVX2)
  static const bool supported = cpu_has_avx2();
  return supported ? &avx2_table_impl() : nullptr;
#else
  return nullptr;
#endif
}

const KernelTable& active() { return *current().load(std::memory_order_relaxed); }

bool select(Isa isa) {
  const KernelTable* table = isa == Isa::kScalar ? &scalar_table() : avx2_table();
  if (table == nullptr) return false;
  current().store(table, std::memory_order_relaxed);
  return true;
}

bool select_by_name(std::string_view name) {
  if (name == "scalar") return select(Isa::kScalar);
  if (name == "avx2") return select(Isa::kAvx2);
  if (name == "auto") {
    current().store(avx2_table() ? avx2_table() : &scalar_table(),
                    std::memory_order_relaxed);
    return true;
  }
  return false;
}

}  // namespace mspt::kernels
