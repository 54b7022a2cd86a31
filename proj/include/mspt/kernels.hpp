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

// Dense double-precision inner loops used by the tensor ops. Every kernel has
// a portable scalar reference and, on x86-64 hosts that report AVX2+FMA, a
// vectorized twin. The active table is chosen once at first use; setting
// MSPT_KERNELS=scalar|avx2 in the environment overrides the choice.
//
// All matrices are row-major. Every kernel computes each output row from the
// matching input row(s) only, so results for a row never depend on the
// contents of other rows.

#include <cstddef>
#include <string_view>

namespace mspt::kernels {

enum class Isa { kScalar, kAvx2 };

struct KernelTable {
  Isa isa;
  const char* name;

  // sum_i x[i] * y[i]
  double (*dot)(const double* x, const double* y, std::size_t n);
  // y[i] += alpha * x[i]
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // C[m x n] += A[m x k] * B[k x n]
  void (*gemm_nn)(std::size_t m, std::size_t n, std::size_t k, const double* a,
                  const double* b, double* c);
  // C[m x n] += A[m x k] * B[n x k]^T
  void (*gemm_nt)(std::size_t m, std::size_t n, std::size_t k, const double* a,
                  const double* b, double* c);
  // C[m x n] += A[k x m]^T * B[k x n]
  void (*gemm_tn)(std::size_t m, std::size_t n, std::size_t k, const double* a,
                  const double* b, double* c);
  // y[i] += x[i] * z[i]
  void (*mul_acc)(const double* x, const double* z, double* y, std::size_t n);
};

const KernelTable& scalar_table();

// nullptr when the host CPU (or the build) lacks AVX2/FMA.
const KernelTable* avx2_table();

// The table used by the tensor ops.
const KernelTable& active();

// Forces a specific table; returns false if it is unavailable on this host.
bool select(Isa isa);

// Parses "scalar", "avx2" or "auto".
bool select_by_name(std::string_view name);

}  // namespace mspt::kernels
