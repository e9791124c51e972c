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

#include <fstream>
#include <random>

#include "fasr/checkpoint.hpp"
#include "fasr/decoder.hpp"
#include "fasr/error.hpp"
#include "oracles.hpp"
#include "temp_dir.hpp"

using namespace fasr;

namespace {

Matrix forward_logits(const AsrModel& m, const Matrix& x) {
  NoGradGuard no_grad;
  ParamScope scope(m.params);
  const Var h = encode(scope, m.config, x);
  const AttentionMemory mem = prepare_attention(scope, h);
  std::optional<LanguageModel> lm;
  std::optional<ParamScope> lm_scope;
  LmBinding binding;
  if (has_fusion_layer(m.fusion)) {
    lm = embedded_lm(m);
    lm_scope.emplace(lm->params);
    binding = {&*lm_scope, &lm->config};
  }
  ModelState st = initial_model_state(m, mem, binding);
  const ModelStep step = model_step(scope, m, st, kSos, mem, binding);
  return step.log_probs.value();
}

}  // namespace

TEST_CASE("asr checkpoints reproduce forward outputs bit-identically") {
  testing::TempDir dir;
  const Vocabulary v = testing::tiny_vocab();
  const AsrModel plain = make_asr_model(testing::tiny_s2s_config(v.size()), v, 1);
  const LanguageModel lm = testing::random_lm(v, testing::tiny_lm_config(v.size()), 2);
  const AsrModel cold = attach_fusion(plain, lm, FusionMode::kCold, FusionConfig{3, 4}, 3).model;
  std::mt19937_64 rng(4);
  const Matrix x = testing::random_matrix(8, 3, rng);
  for (const AsrModel* m : {&plain, &cold}) {
    const auto path = dir.path() / "m.ckpt";
    save_checkpoint(path, *m, {{"epoch", 3}});
    nlohmann::json meta;
    const AsrModel back = load_asr_checkpoint(path, &meta);
    CHECK(meta.at("epoch") == 3);
    CHECK(back.params == m->params);
    CHECK(back.vocab == m->vocab);
    CHECK(back.fusion == m->fusion);
    CHECK(forward_logits(back, x) == forward_logits(*m, x));
    CHECK(serialize_checkpoint(back, meta) == serialize_checkpoint(*m, meta));
  }
}

TEST_CASE("lm checkpoints roundtrip") {
  const Vocabulary v = testing::tiny_vocab();
  const LanguageModel lm = testing::random_lm(v, testing::tiny_lm_config(v.size()), 5);
  const LanguageModel back = parse_lm_checkpoint(serialize_checkpoint(lm));
  CHECK(back.params == lm.params);
  CHECK(back.config.units == lm.config.units);
  CHECK(back.vocab == lm.vocab);
}

TEST_CASE("malformed checkpoints are rejected") {
  const Vocabulary v = testing::tiny_vocab();
  const AsrModel m = make_asr_model(testing::tiny_s2s_config(v.size()), v, 6);
  const LanguageModel lm = testing::random_lm(v, testing::tiny_lm_config(v.size()), 7);
  const std::string bytes = serialize_checkpoint(m);
  CHECK(bytes.substr(0, 4) == "FCKP");

  std::string bad = bytes;
  bad[0] = 'X';
  CHECK_THROWS_AS(parse_asr_checkpoint(bad), DataError);
  CHECK_THROWS_AS(parse_asr_checkpoint(bytes.substr(0, bytes.size() - 3)), DataError);
  CHECK_THROWS_AS(parse_asr_checkpoint(bytes.substr(0, 10)), DataError);
  CHECK_THROWS_AS(parse_asr_checkpoint(bytes + "x"), DataError);
  CHECK_THROWS_AS(parse_lm_checkpoint(bytes), DataError);
  CHECK_THROWS_AS(parse_asr_checkpoint(serialize_checkpoint(lm)), DataError);
  CHECK_THROWS_AS(load_asr_checkpoint("/nonexistent/model.ckpt"), DataError);
}

TEST_CASE("serialization is deterministic") {
  const Vocabulary v = testing::tiny_vocab();
  const AsrModel a = make_asr_model(testing::tiny_s2s_config(v.size()), v, 8);
  const AsrModel b = make_asr_model(testing::tiny_s2s_config(v.size()), v, 8);
  CHECK(serialize_checkpoint(a) == serialize_checkpoint(b));
}
