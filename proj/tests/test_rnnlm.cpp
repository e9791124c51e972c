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

#include "fasr/error.hpp"
#include "fasr/rnnlm.hpp"
#include "oracles.hpp"

using namespace fasr;

namespace {

std::vector<std::vector<int>> cycle_corpus(const Vocabulary& v, int n) {
  std::vector<std::string> lines;
  for (int i = 0; i < n; ++i) {
    std::string s;
    for (int k = 0; k <= i % 4; ++k) s += "ab";
    lines.push_back(s);
  }
  return encode_lines(v, lines, "x");
}

}  // namespace

TEST_CASE("lm_step is normalized, deterministic and range-checked") {
  const Vocabulary v = testing::tiny_vocab("abc");
  const LanguageModel lm = testing::random_lm(v, testing::tiny_lm_config(v.size()), 1);
  ParamScope scope(lm.params);
  const LmState s0 = initial_lm_state(lm.config);
  const LmStep a = lm_step(scope, lm.config, s0, kSos);
  const LmStep b = lm_step(scope, lm.config, s0, kSos);
  CHECK(a.log_probs.value() == b.log_probs.value());
  CHECK(a.feature.value() == a.state.feature().value());
  double mass = 0.0;
  for (double x : a.log_probs.value().data) mass += std::exp(x);
  CHECK(std::abs(mass - 1.0) < 1e-9);
  CHECK_THROWS_AS(lm_step(scope, lm.config, s0, v.size()), std::out_of_range);
}

TEST_CASE("sentence framing") {
  const std::vector<int> enc = {4, 6, 7};
  const FramedSentence f = frame_sentence(enc);
  CHECK(f.inputs == std::vector<int>{kSos, 4, 6, 7});
  CHECK(f.targets == std::vector<int>{4, 6, 7, kEos});
}

TEST_CASE("stepwise scoring reproduces the sequence likelihood") {
  const Vocabulary v = testing::tiny_vocab("abc");
  const LanguageModel lm = testing::random_lm(v, testing::tiny_lm_config(v.size()), 2);
  for (const std::string text : {"", "a", "abcab"}) {
    const auto enc = v.encode(text, "xx");
    ParamScope scope(lm.params);
    const double seq = -sentence_nll(scope, lm.config, enc).item();
    CHECK(std::abs(seq - sentence_log_likelihood_stepwise(lm.params, lm.config, enc)) < 1e-12);
  }
}

TEST_CASE("sentence likelihood matches finite differences") {
  const Vocabulary v = testing::tiny_vocab("abc");
  const LanguageModel lm = testing::random_lm(v, testing::tiny_lm_config(v.size()), 3);
  const auto enc = v.encode("abca", "xx");
  const auto r = testing::gradcheck_scope(lm.params, [&](ParamScope& s) { return sentence_nll(s, lm.config, enc); });
  CHECK(r.finite);
  CHECK(r.max_relative_error < 1e-4);
}

TEST_CASE("untrained perplexity is close to the vocabulary size") {
  const Vocabulary v = testing::tiny_vocab("abcdefghij");
  LmConfig c = testing::tiny_lm_config(v.size());
  c.units = 16;
  LanguageModel lm = testing::random_lm(v, c, 4);
  testing::scale_params(lm.params, 0.01);
  const std::vector<std::string> lines = {"abc", "defg", "hij", "aaaa"};
  const double ppl = perplexity(lm.params, lm.config, encode_lines(v, lines, "xx"));
  CHECK(std::abs(ppl / v.size() - 1.0) < 0.2);
}

TEST_CASE("LM learns a deterministic cycle and training is reproducible") {
  const LanguageCorpus corpus{"x", {"ab"}};
  const Vocabulary v = Vocabulary::build(std::span(&corpus, 1));
  LmConfig c = testing::tiny_lm_config(v.size());
  c.units = 16;
  c.embed_dim = 8;
  LmTrainConfig o;
  o.epochs = 30;
  o.batch_size = 4;
  o.seed = 5;
  const auto train = cycle_corpus(v, 40);
  const auto valid = cycle_corpus(v, 8);
  const LmTrainResult r = train_lm(c, train, valid, o);
  const LmTrainResult again = train_lm(c, train, valid, o);
  CHECK(r.params == again.params);

  // p(b | <sos> <x> a b a) after the cycle is established.
  ParamScope scope(r.params);
  LmState s = initial_lm_state(c);
  const int a = *v.index("a"), b = *v.index("b");
  for (int tok : {kSos, v.language_token("x"), a, b}) s = lm_step(scope, c, s, tok).state;
  const LmStep step = lm_step(scope, c, s, a);
  CHECK(std::exp(step.log_probs.value()(0, b)) > 0.99);

  for (std::size_t i = 1; i < r.history.size(); ++i) {
    CHECK(r.history[i].train_perplexity <= r.history[i - 1].train_perplexity * 1.01);
  }
}

TEST_CASE("LM training rejects an empty corpus") {
  const Vocabulary v = testing::tiny_vocab("ab");
  const LmConfig c = testing::tiny_lm_config(v.size());
  CHECK(encode_lines(v, {"", ""}, "xx").empty());
  CHECK_THROWS_AS(train_lm(c, {}, {}, LmTrainConfig{}), DataError);
}
