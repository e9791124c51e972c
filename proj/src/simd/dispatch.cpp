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

#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "fasr/simd/kernels.hpp"

namespace fasr::simd {

// Defined in kernels_avx2.cpp (compiled with AVX2 flags).
const KernelTable* avx2_kernels_unchecked();

bool cpu_supports_avx2() {
#if defined(__x86_64__) || defined(__i386__)
  static const bool supported = [] {
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
  }();
  return supported;
#else
  return false;
#endif
}

const KernelTable* avx2_kernels() {
  if (!cpu_supports_avx2()) return nullptr;
  return avx2_kernels_unchecked();
}

namespace {

const KernelTable* select_default() {
  if (const char* env = std::getenv("FASR_SIMD")) {
    const std::string choice(env);
    if (choice == "scalar") return &scalar_kernels();
    if (choice == "avx2" && avx2_kernels() != nullptr) return avx2_kernels();
  }
  if (const KernelTable* t = avx2_kernels()) return t;
  return &scalar_kernels();
}

std::atomic<const KernelTable*>& active_slot() {
  static std::atomic<const KernelTable*> slot{select_default()};
  return slot;
}

}  // namespace

const KernelTable& active() { return *active_slot().load(std::memory_order_acquire); }

void force_backend(Backend backend) {
  const KernelTable* table = nullptr;
  switch (backend) {
    case Backend::kScalar:
      table = &scalar_kernels();
      break;
    case Backend::kAvx2:
      table = avx2_kernels();
      break;
  }
  if (table == nullptr) {
    throw std::invalid_argument("SIMD backend '" + std::string(backend_name(backend)) +
                                "' is not available on this host");
  }
  active_slot().store(table, std::memory_order_release);
}

std::string_view backend_name(Backend backend) {
  switch (backend) {
    case Backend::kScalar:
      return "scalar";
    case Backend::kAvx2:
      return "avx2";
  }
  return "unknown";
}

}  // namespace fasr::simd
