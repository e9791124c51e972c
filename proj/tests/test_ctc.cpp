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
#include <stdexcept>

#include "fasr/ctc.hpp"
#include "fasr/gradcheck.hpp"
#include "oracles.hpp"

using namespace fasr;
using namespace fasr::ctc;
using testing::brute_force_ctc_log_likelihood;
using testing::random_log_softmax;

namespace {

std::vector<int> random_labels(int max_len, int v, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> len(0, max_len), tok(1, v - 1);
  std::vector<int> y(static_cast<std::size_t>(len(rng)));
  for (int& t : y) t = tok(rng);
  return y;
}

}  // namespace

TEST_CASE("single forced path has zero loss") {
  Matrix lp(1, 2, {ctc::kLogZero, 0.0});
  const std::vector<int> y = {1};
  CHECK(ctc_loss(Var::constant(lp), y).item() == 0.0);
}

TEST_CASE("two uniform frames, one label") {
  Matrix lp(2, 2, std::log(0.5));
  const std::vector<int> y = {1};
  CHECK(ctc_loss(Var::constant(lp), y).item() == doctest::Approx(-std::log(0.75)).epsilon(1e-12));
  CHECK(-std::log(0.75) == doctest::Approx(0.287682).epsilon(1e-6));
}

TEST_CASE("repeated labels need a separating blank") {
  Matrix lp(2, 2, std::log(0.5));
  const std::vector<int> aa = {1, 1};
  CHECK(ctc::required_frames(aa) == 3);
  CHECK_FALSE(ctc::realizable(aa, 2));
  CHECK(std::isinf(ctc_loss(Var::constant(lp), aa).item()));
  CHECK(ctc::log_likelihood(lp, aa) == ctc::kLogZero);
}

TEST_CASE("blank labels are rejected") {
  Matrix lp(2, 3, std::log(1.0 / 3));
  const std::vector<int> y = {0};
  CHECK_THROWS_AS(ctc_loss(Var::constant(lp), y), std::invalid_argument);
}

TEST_CASE("loss matches brute-force alignment enumeration") {
  std::mt19937_64 rng(42);
  for (int c = 0; c < 100; ++c) {
    std::uniform_int_distribution<int> tdist(1, 6), vdist(2, 3);
    const int t = tdist(rng), v = vdist(rng);
    const Matrix lp = random_log_softmax(t, v, rng);
    const auto y = random_labels(3, v, rng);
    const double oracle = brute_force_ctc_log_likelihood(lp, y);
    const double loss = ctc_loss(Var::constant(lp), y).item();
    if (std::isinf(oracle)) {
      CHECK(std::isinf(loss));
    } else {
      CHECK(std::abs(loss + oracle) < 1e-6);
    }
  }
}

TEST_CASE("gradient matches finite differences") {
  std::mt19937_64 rng(7);
  for (int c = 0; c < 10; ++c) {
    const Matrix logits = testing::random_matrix(5, 4, rng);
    const std::vector<int> y = {1, 2, 2};
    Var x = Var::leaf(logits, true);
    std::vector<Var> ps = {x};
    const auto r = gradcheck([&] { return ctc_loss(log_softmax(x), y); }, ps);
    CHECK(r.finite);
    CHECK(r.max_relative_error < 1e-4);
  }
}

TEST_CASE("loss is invariant to batch order") {
  std::mt19937_64 rng(8);
  std::vector<Matrix> lps;
  std::vector<std::vector<int>> ys;
  for (int i = 0; i < 4; ++i) {
    lps.push_back(random_log_softmax(6, 3, rng));
    ys.push_back({1, 2});
  }
  double forward = 0.0, reverse = 0.0;
  for (int i = 0; i < 4; ++i) forward += ctc_loss(Var::constant(lps[i]), ys[i]).item();
  for (int i = 3; i >= 0; --i) reverse += ctc_loss(Var::constant(lps[i]), ys[i]).item();
  CHECK(std::abs(forward - reverse) < 1e-12);
}

TEST_CASE("prefix increments telescope to the forward likelihood") {
  std::mt19937_64 rng(3);
  const int eos = 3;
  for (int c = 0; c < 100; ++c) {
    std::uniform_int_distribution<int> tdist(1, 6);
    const Matrix lp = random_log_softmax(tdist(rng), 4, rng);  // blank, 1, 2, eos column unused
    std::vector<int> y = random_labels(3, 3, rng);
    ctc::PrefixState s = ctc::initial_prefix_state(lp);
    double total = 0.0;
    for (int tok : y) {
      const auto ext = ctc::extend_prefix(s, tok, lp, eos);
      total += ext.increment;
      s = ext.state;
    }
    const double end = ctc::extend_prefix(s, eos, lp, eos).increment;
    CHECK(end == ctc::end_increment(s));
    total += end;
    const double forward = ctc::log_likelihood(lp, y);
    if (std::isinf(forward)) {
      CHECK(std::isinf(total));
    } else {
      CHECK(std::abs(total - forward) < 1e-9);
    }
  }
}

TEST_CASE("forced single-frame extension scores zero") {
  Matrix lp(1, 3, {ctc::kLogZero, 0.0, ctc::kLogZero});
  const auto ext = ctc::extend_prefix(ctc::initial_prefix_state(lp), 1, lp, 2);
  CHECK(ext.increment == 0.0);
}

TEST_CASE("extensions of one prefix are disjoint events") {
  std::mt19937_64 rng(5);
  const int eos = 4;
  for (int c = 0; c < 20; ++c) {
    const Matrix lp = random_log_softmax(5, 4, rng);
    ctc::PrefixState s = ctc::initial_prefix_state(lp);
    s = ctc::extend_prefix(s, 1, lp, eos).state;
    double mass = std::exp(ctc::end_increment(s));
    for (int tok = 1; tok < 4; ++tok) mass += std::exp(ctc::extend_prefix(s, tok, lp, eos).increment);
    CHECK(mass <= 1.0 + 1e-9);
  }
  Matrix lp(2, 2, std::log(0.5));
  CHECK_THROWS_AS(ctc::extend_prefix(ctc::initial_prefix_state(lp), 0, lp, 5), std::invalid_argument);
}

TEST_CASE("stored prefix values are log-probabilities") {
  std::mt19937_64 rng(6);
  const Matrix lp = random_log_softmax(6, 4, rng);
  ctc::PrefixState s = ctc::initial_prefix_state(lp);
  for (int tok : {1, 2, 2, 3}) {
    s = ctc::extend_prefix(s, tok, lp, 9).state;
    for (double v : s.r_nonblank) CHECK(v <= 0.0);
    for (double v : s.r_blank) CHECK(v <= 0.0);
    CHECK(s.prefix_log_prob <= 1e-12);
  }
  CHECK(s.prefix == std::vector<int>{1, 2, 2, 3});
}

TEST_CASE("greedy decoding collapses repeats and blanks") {
  Matrix lp(6, 3, ctc::kLogZero);
  const int path[] = {1, 1, 0, 1, 2, 2};
  for (int t = 0; t < 6; ++t) lp(t, path[t]) = 0.0;
  CHECK(ctc::greedy_decode(lp) == std::vector<int>{1, 1, 2});
}

TEST_CASE("log_add handles negative infinity") {
  CHECK(ctc::log_add(ctc::kLogZero, ctc::kLogZero) == ctc::kLogZero);
  CHECK(ctc::log_add(ctc::kLogZero, -1.0) == -1.0);
  CHECK(ctc::log_add(std::log(0.25), std::log(0.5)) == doctest::Approx(std::log(0.75)).epsilon(1e-15));
}
