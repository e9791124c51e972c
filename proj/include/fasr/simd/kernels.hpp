// Copyright 2026 The fasr Authors. All Rights Reserved.
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

// Dense double-precision inner loops used by the tensor core. Every kernel
// has a scalar reference implementation; an AVX2/FMA variant is selected at
// runtime when the CPU supports it. The two are equivalence-tested.

#include <cstddef>
#include <string_view>

namespace fasr::simd {

enum class Backend { kScalar, kAvx2 };

struct KernelTable {
  Backend backend;
  const char* name;
  // sum_i a[i] * b[i]
  double (*dot)(const double* a, const double* b, std::size_t n);
  // y[i] += alpha * x[i]
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // y[i] += a[i] * b[i]
  void (*mul_acc)(const double* a, const double* b, double* y, std::size_t n);
  // out[i] = a[i] + b[i]
  void (*add)(const double* a, const double* b, double* out, std::size_t n);
  // out[i] = a[i] * b[i]
  void (*mul)(const double* a, const double* b, double* out, std::size_t n);
  // y[i] += x[i]
  void (*acc)(const double* x, double* y, std::size_t n);
};

const KernelTable& scalar_kernels();

// nullptr when the build or the host CPU lacks AVX2+FMA.
const KernelTable* avx2_kernels();

bool cpu_supports_avx2();

// Table used by the tensor core. Chosen once on first use: the FASR_SIMD
// environment variable ("scalar" or "avx2") wins, otherwise the widest
// supported backend.
const KernelTable& active();

// Overrides the active table. Throws std::invalid_argument when the backend is
// unavailable on this host.
void force_backend(Backend backend);

std::string_view backend_name(Backend backend);

}  // namespace fasr::simd
