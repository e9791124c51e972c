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

#include "fasr/decoder.hpp"
#include "fasr/error.hpp"
#include "fasr/fusion.hpp"
#include "oracles.hpp"

using namespace fasr;
using testing::random_matrix;

namespace {

struct Instance {
  AsrModel model;
  LanguageModel lm;
  Matrix h;
};

Instance make_instance(std::uint64_t seed, const std::string& chars = "abcd", int frames = 3) {
  const Vocabulary v = testing::tiny_vocab(chars);
  Instance in{make_asr_model(testing::tiny_s2s_config(v.size()), v, seed),
              testing::random_lm(v, testing::tiny_lm_config(v.size()), seed + 1000), Matrix()};
  testing::scale_params(in.model.params, 3.0);
  testing::scale_params(in.lm.params, 3.0);
  std::mt19937_64 rng(seed + 2000);
  in.h = random_matrix(frames, in.model.config.encoder_dim(), rng);
  return in;
}

DecodeConfig tiny_config(double ctc_weight, double lm_weight, int beam = 64) {
  DecodeConfig c;
  c.beam = beam;
  c.ctc_weight = ctc_weight;
  c.lm_weight = lm_weight;
  c.max_length = 3;
  c.nbest = 64;
  return c;
}

}  // namespace

TEST_CASE("beam search equals exhaustive search on tiny instances") {
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    for (double lambda : {0.0, 0.3, 1.0}) {
      for (double beta : {0.0, 0.3}) {
        for (LanguagePolicy policy : {LanguagePolicy::kForced, LanguagePolicy::kNone}) {
          const Instance in = make_instance(seed, "abcd", 1 + static_cast<int>(seed % 3));
          DecodeConfig c = tiny_config(lambda, beta);
          c.language_policy = policy;
          const auto oracle = testing::exhaustive_best(in.model, &in.lm, in.h, c, "xx");
          const auto hyps = beam_search_encoded(in.model, &in.lm, in.h, c, "xx");
          REQUIRE_FALSE(hyps.empty());
          CHECK(hyps.front().tokens == oracle.tokens);
          CHECK(std::abs(hyps.front().score - oracle.score.score) < 1e-9);
        }
      }
    }
  }
}

TEST_CASE("returned scores are reproducible by rescoring") {
  for (std::uint64_t seed = 10; seed < 14; ++seed) {
    const Instance in = make_instance(seed, "abcd", 4);
    DecodeConfig c;
    c.beam = 5;
    c.nbest = 5;
    for (const auto& h : beam_search_encoded(in.model, &in.lm, in.h, c, "xx")) {
      const ScoredHypothesis r = rescore_encoded(in.model, &in.lm, in.h, h.tokens, c);
      CHECK(std::abs(r.score - h.score) < 1e-6);
      const auto o = testing::oracle_hypothesis_score(in.model, &in.lm, in.h, h.tokens, c);
      CHECK(std::abs(o.score - h.score) < 1e-6);
      CHECK(std::abs(o.att - h.att) < 1e-6);
      CHECK(std::abs(o.ctc - h.ctc) < 1e-6);
      CHECK(std::abs(o.lm - h.lm) < 1e-6);
    }
  }
}

TEST_CASE("zero LM weight equals decoding without an LM") {
  for (std::uint64_t seed = 20; seed < 24; ++seed) {
    const Instance in = make_instance(seed, "abcd", 4);
    DecodeConfig c;
    c.beam = 4;
    c.lm_weight = 0.0;
    const auto with_lm = beam_search_encoded(in.model, &in.lm, in.h, c, "xx");
    const auto without = beam_search_encoded(in.model, nullptr, in.h, c, "xx");
    REQUIRE(with_lm.size() == without.size());
    for (std::size_t i = 0; i < with_lm.size(); ++i) {
      CHECK(with_lm[i].tokens == without[i].tokens);
      CHECK(with_lm[i].score == without[i].score);
    }
  }
}

TEST_CASE("beam one without CTC or LM is greedy attention decoding") {
  for (std::uint64_t seed = 30; seed < 35; ++seed) {
    const Instance in = make_instance(seed, "abcd", 3);
    DecodeConfig c = tiny_config(0.0, 0.0, 1);
    c.max_length = 5;
    const auto hyps = beam_search_encoded(in.model, nullptr, in.h, c, "xx");

    NoGradGuard no_grad;
    ParamScope scope(in.model.params);
    const AttentionMemory mem = prepare_attention(scope, Var::constant(in.h));
    ModelState st = initial_model_state(in.model, mem, {});
    std::vector<int> greedy = {in.model.vocab.language_token("xx")};
    ModelStep step = model_step(scope, in.model, st, kSos, mem, {});
    step = model_step(scope, in.model, step.state, greedy.back(), mem, {});
    for (int n = 0;; ++n) {
      int best = kEos;
      for (int t = kNumReserved; t < in.model.vocab.size(); ++t) {
        if (in.model.vocab.is_language_token(t) || n == c.max_length) continue;
        if (step.log_probs.value()(0, t) > step.log_probs.value()(0, best)) best = t;
      }
      greedy.push_back(best);
      if (best == kEos) break;
      step = model_step(scope, in.model, step.state, best, mem, {});
    }
    REQUIRE_FALSE(hyps.empty());
    CHECK(hyps.front().tokens == greedy);
  }
}

TEST_CASE("wider beams never lower the best score") {
  for (std::uint64_t seed = 40; seed < 50; ++seed) {
    const Instance in = make_instance(seed, "abcd", 3);
    double previous = -std::numeric_limits<double>::infinity();
    for (int beam = 1; beam <= 8; ++beam) {
      DecodeConfig c = tiny_config(0.3, 0.3, beam);
      const auto hyps = beam_search_encoded(in.model, &in.lm, in.h, c, "xx");
      REQUIRE_FALSE(hyps.empty());
      CHECK(hyps.front().score >= previous - 1e-12);
      previous = hyps.front().score;
    }
  }
}

TEST_CASE("hypotheses are well formed and sorted") {
  const Instance in = make_instance(60, "abcd", 5);
  DecodeConfig c;
  c.beam = 6;
  c.nbest = 6;
  const auto hyps = beam_search_encoded(in.model, &in.lm, in.h, c, "xx");
  REQUIRE_FALSE(hyps.empty());
  CHECK(hyps.size() <= 6);
  const int limit = max_output_length(c, 5);
  for (std::size_t i = 0; i < hyps.size(); ++i) {
    const auto& t = hyps[i].tokens;
    REQUIRE(t.size() >= 2);
    CHECK(t.front() == in.model.vocab.language_token("xx"));
    CHECK(t.back() == kEos);
    for (std::size_t k = 1; k + 1 < t.size(); ++k) {
      CHECK(t[k] >= kNumReserved);
      CHECK_FALSE(in.model.vocab.is_language_token(t[k]));
    }
    CHECK(static_cast<int>(t.size()) - 2 <= limit);
    if (i > 0) CHECK(hyps[i - 1].score >= hyps[i].score);
  }
}

TEST_CASE("free language policy starts with a language token") {
  const LanguageCorpus corpora[] = {{"p", {"ab"}}, {"q", {"cd"}}};
  const Vocabulary v = Vocabulary::build(corpora);
  AsrModel m = make_asr_model(testing::tiny_s2s_config(v.size()), v, 3);
  std::mt19937_64 rng(4);
  const Matrix h = random_matrix(3, m.config.encoder_dim(), rng);
  DecodeConfig c;
  c.beam = 4;
  c.language_policy = LanguagePolicy::kFree;
  for (const auto& hyp : beam_search_encoded(m, nullptr, h, c)) CHECK(v.is_language_token(hyp.tokens.front()));

  DecodeConfig none = c;
  none.language_policy = LanguagePolicy::kNone;
  for (const auto& hyp : beam_search_encoded(m, nullptr, h, none)) {
    for (int t : hyp.tokens) CHECK_FALSE(v.is_language_token(t));
  }
}

TEST_CASE("forced and free policies agree once the same language is chosen") {
  const LanguageCorpus corpora[] = {{"p", {"ab"}}, {"q", {"cd"}}};
  const Vocabulary v = Vocabulary::build(corpora);
  const AsrModel m = make_asr_model(testing::tiny_s2s_config(v.size()), v, 8);
  std::mt19937_64 rng(9);
  const Matrix h = random_matrix(3, m.config.encoder_dim(), rng);
  DecodeConfig c = tiny_config(0.3, 0.0, 512);
  c.language_policy = LanguagePolicy::kFree;
  const auto free_hyps = beam_search_encoded(m, nullptr, h, c);
  REQUIRE_FALSE(free_hyps.empty());
  const std::string lang = v.language_name(free_hyps.front().tokens.front());
  c.language_policy = LanguagePolicy::kForced;
  const auto forced = beam_search_encoded(m, nullptr, h, c, lang);
  REQUIRE_FALSE(forced.empty());
  CHECK(forced.front().tokens == free_hyps.front().tokens);
  CHECK(std::abs(forced.front().score - free_hyps.front().score) < 1e-12);
}

TEST_CASE("decoding is deterministic and validates input") {
  const Instance in = make_instance(70, "abcd", 4);
  DecodeConfig c;
  c.beam = 3;
  const auto a = beam_search_encoded(in.model, &in.lm, in.h, c, "xx");
  const auto b = beam_search_encoded(in.model, &in.lm, in.h, c, "xx");
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK((a[i].tokens == b[i].tokens && a[i].score == b[i].score));

  CHECK_THROWS_AS(beam_search_encoded(in.model, nullptr, in.h, c, "zz"), DataError);
  CHECK_THROWS_AS(beam_search_encoded(in.model, nullptr, in.h, c), Error);
  c.beam = 0;
  CHECK_THROWS_AS(beam_search_encoded(in.model, nullptr, in.h, c, "xx"), ConfigError);
  c.beam = 2;
  c.ctc_weight = 1.5;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  CHECK_THROWS_AS(beam_search_encoded(in.model, nullptr, Matrix(0, in.h.cols), DecodeConfig{}, "xx"), DataError);
}

TEST_CASE("maximum output length") {
  DecodeConfig c;
  CHECK(max_output_length(c, 4) == 8);
  CHECK(max_output_length(c, 3) == 7);
  c.max_length = 2;
  CHECK(max_output_length(c, 100) == 2);
}

TEST_CASE("fused models decode with their embedded LM") {
  const Instance in = make_instance(80, "abcd", 3);
  const FusedModel f = attach_fusion(in.model, in.lm, FusionMode::kCold, FusionConfig{3, 4}, 1);
  for (double beta : {0.0, 0.3}) {
    DecodeConfig c = tiny_config(0.3, beta);
    const auto oracle = testing::exhaustive_best(f.model, nullptr, in.h, c, "xx");
    const auto hyps = beam_search_encoded(f.model, nullptr, in.h, c, "xx");
    REQUIRE_FALSE(hyps.empty());
    CHECK(hyps.front().tokens == oracle.tokens);
    CHECK(std::abs(hyps.front().score - oracle.score.score) < 1e-9);
  }
}

TEST_CASE("language policy parsing") {
  CHECK(parse_language_policy("free") == LanguagePolicy::kFree);
  CHECK(to_string(LanguagePolicy::kForced) == "forced");
  CHECK_THROWS_AS(parse_language_policy("maybe"), ConfigError);
}
