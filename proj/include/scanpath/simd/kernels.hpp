// Copyright 2026 The Scanpath Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <string_view>

namespace scanpath::simd {

// Dense double-precision inner loops. Every entry has a scalar reference
// implementation; an AVX2+FMA variant is selected at startup when the CPU
// supports it. Set SCANPATH_SIMD=scalar to force the reference path.
struct KernelTable {
  const char* name;
  double (*dot)(const double* a, const double* b, std::size_t n);
  // y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // y = a * b (elementwise)
  void (*mul)(const double* a, const double* b, double* y, std::size_t n);
  // y = a + b (elementwise)
  void (*add)(const double* a, const double* b, double* y, std::size_t n);
  // C[m x n] (+)= A[m x k] * B[k x n], row-major, contiguous.
  void (*gemm_nn)(const double* a, const double* b, double* c, std::size_t m,
                  std::size_t k, std::size_t n, bool accumulate);
  // C[m x n] (+)= A[m x k] * B[n x k]^T
  void (*gemm_nt)(const double* a, const double* b, double* c, std::size_t m,
                  std::size_t k, std::size_t n, bool accumulate);
  // C[m x n] (+)= A[k x m]^T * B[k x n]
  void (*gemm_tn)(const double* a, const double* b, double* c, std::size_t m,
                  std::size_t k, std::size_t n, bool accumulate);
};

const KernelTable& scalar_kernels();
// Returns nullptr when the build or the CPU lacks AVX2+FMA.
const KernelTable* avx2_kernels();

bool cpu_has_avx2_fma();

// Kernel table chosen once per process.
const KernelTable& active();

// Overrides the process-wide selection ("scalar" or "avx2"); returns false if
// the requested variant is unavailable. Intended for tests and benchmarks.
bool select(std::string_view name);

}  // namespace scanpath::simd
