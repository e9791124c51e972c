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

#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "fasr/simd/kernels.hpp"
#include "fasr/tensor.hpp"
#include "oracles.hpp"

using namespace fasr;

namespace {

std::vector<double> random_vector(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> d(0.0, 1.0);
  std::vector<double> v(n);
  for (double& x : v) x = d(rng);
  return v;
}

bool close(const std::vector<double>& a, const std::vector<double>& b, double tol) {
  for (std::size_t i = 0; i < a.size(); ++i)
    if (std::abs(a[i] - b[i]) > tol * (1.0 + std::abs(a[i]))) return false;
  return true;
}

}  // namespace

TEST_CASE("scalar kernels compute their definitions") {
  const auto& k = simd::scalar_kernels();
  const std::vector<double> a = {1, 2, 3}, b = {4, 5, 6};
  CHECK(k.dot(a.data(), b.data(), 3) == 32.0);
  std::vector<double> y = {1, 1, 1};
  k.axpy(2.0, a.data(), y.data(), 3);
  CHECK(y == std::vector<double>{3, 5, 7});
  k.mul_acc(a.data(), b.data(), y.data(), 3);
  CHECK(y == std::vector<double>{7, 15, 25});
  std::vector<double> out(3);
  k.add(a.data(), b.data(), out.data(), 3);
  CHECK(out == std::vector<double>{5, 7, 9});
  k.mul(a.data(), b.data(), out.data(), 3);
  CHECK(out == std::vector<double>{4, 10, 18});
  k.acc(a.data(), out.data(), 3);
  CHECK(out == std::vector<double>{5, 12, 21});
}

TEST_CASE("AVX2 kernels agree with the scalar reference") {
  const simd::KernelTable* avx = simd::avx2_kernels();
  if (avx == nullptr) {
    MESSAGE("AVX2 unavailable on this host; equivalence not exercised");
    return;
  }
  const auto& ref = simd::scalar_kernels();
  std::mt19937_64 rng(11);
  for (std::size_t n : {0u, 1u, 3u, 4u, 5u, 7u, 8u, 15u, 16u, 17u, 31u, 64u, 101u, 1000u}) {
    const auto a = random_vector(n, rng);
    const auto b = random_vector(n, rng);
    const auto y0 = random_vector(n, rng);
    CHECK(std::abs(ref.dot(a.data(), b.data(), n) - avx->dot(a.data(), b.data(), n)) < 1e-12 * (1.0 + n));

    auto y1 = y0, y2 = y0;
    ref.axpy(0.37, a.data(), y1.data(), n);
    avx->axpy(0.37, a.data(), y2.data(), n);
    CHECK(close(y1, y2, 1e-15));

    y1 = y0, y2 = y0;
    ref.mul_acc(a.data(), b.data(), y1.data(), n);
    avx->mul_acc(a.data(), b.data(), y2.data(), n);
    CHECK(close(y1, y2, 1e-15));

    std::vector<double> o1(n), o2(n);
    ref.add(a.data(), b.data(), o1.data(), n);
    avx->add(a.data(), b.data(), o2.data(), n);
    CHECK(o1 == o2);
    ref.mul(a.data(), b.data(), o1.data(), n);
    avx->mul(a.data(), b.data(), o2.data(), n);
    CHECK(o1 == o2);

    y1 = y0, y2 = y0;
    ref.acc(a.data(), y1.data(), n);
    avx->acc(a.data(), y2.data(), n);
    CHECK(y1 == y2);
  }
}

TEST_CASE("tensor ops agree across backends") {
  if (simd::avx2_kernels() == nullptr) return;
  std::mt19937_64 rng(12);
  const Matrix a = testing::random_matrix(7, 13, rng);
  const Matrix b = testing::random_matrix(13, 5, rng);
  auto run = [&] {
    Var x = Var::leaf(a, true);
    const Var y = sum(tanh(matmul(x, Var::constant(b))));
    backward(y);
    return std::make_pair(y.item(), x.grad());
  };
  const simd::Backend original = simd::active().backend;
  simd::force_backend(simd::Backend::kScalar);
  const auto s = run();
  simd::force_backend(simd::Backend::kAvx2);
  const auto v = run();
  simd::force_backend(original);
  CHECK(std::abs(s.first - v.first) < 1e-12);
  for (std::size_t i = 0; i < s.second.size(); ++i) CHECK(std::abs(s.second.data[i] - v.second.data[i]) < 1e-12);
}

TEST_CASE("backend names") {
  CHECK(simd::backend_name(simd::Backend::kScalar) == "scalar");
  CHECK(simd::backend_name(simd::Backend::kAvx2) == "avx2");
  CHECK(simd::active().name != nullptr);
}
