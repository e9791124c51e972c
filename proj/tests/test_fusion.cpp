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

#include "fasr/error.hpp"
#include "fasr/fusion.hpp"
#include "oracles.hpp"

using namespace fasr;
using testing::random_matrix;

namespace {

ParameterSet fusion_params(int s2s_dim, int lm_dim, int vocab, std::uint64_t seed) {
  ParameterSet p;
  std::mt19937_64 rng(seed);
  add_fusion_params(p, s2s_dim, lm_dim, vocab, FusionConfig{3, 4}, rng);
  return p;
}

struct Pair {
  AsrModel asr;
  LanguageModel lm;
};

Pair make_pair(std::uint64_t seed) {
  const Vocabulary v = testing::tiny_vocab("abc");
  Pair p{make_asr_model(testing::tiny_s2s_config(v.size()), v, seed),
         testing::random_lm(v, testing::tiny_lm_config(v.size()), seed + 1)};
  return p;
}

}  // namespace

TEST_CASE("fusion parameter shapes") {
  const ParameterSet p = fusion_params(5, 6, 9, 1);
  CHECK(p.at("fusion.lm_proj.W").rows == 3);
  CHECK(p.at("fusion.lm_proj.W").cols == 6);
  CHECK(p.at("fusion.gate.W").rows == 3);
  CHECK(p.at("fusion.gate.W").cols == 5 + 3);
  CHECK(p.at("fusion.cf.W").rows == 4);
  CHECK(p.at("fusion.cf.W").cols == 5 + 3);
  CHECK(p.at("fusion.out.W").rows == 9);
  CHECK(p.at("fusion.out.b").cols == 9);
}

TEST_CASE("cold fusion head matches finite differences") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    ParameterSet p = fusion_params(5, 6, 9, seed);
    std::mt19937_64 rng(seed);
    p.add("input.s", random_matrix(1, 5, rng));
    p.add("input.d", random_matrix(1, 6, rng));
    const auto r = testing::gradcheck_scope(p, [](ParamScope& scope) {
      const Var lp = cold_fusion_log_probs(scope, scope.get("input.s"), scope.get("input.d"));
      return sum(pick(lp, std::vector<int>{2}));
    });
    CHECK(r.finite);
    CHECK(r.max_relative_error < 1e-4);
  }
}

TEST_CASE("fused output is normalized and rejects bad shapes") {
  const ParameterSet p = fusion_params(5, 6, 9, 2);
  ParamScope scope(p);
  std::mt19937_64 rng(3);
  const Var lp = cold_fusion_log_probs(scope, Var::constant(random_matrix(1, 5, rng)),
                                       Var::constant(random_matrix(1, 6, rng)));
  double mass = 0.0;
  for (double v : lp.value().data) mass += std::exp(v);
  CHECK(std::abs(mass - 1.0) < 1e-9);
  CHECK_THROWS_AS(cold_fusion_log_probs(scope, Var::constant(random_matrix(1, 4, rng)),
                                        Var::constant(random_matrix(1, 6, rng))),
                  ShapeError);
}

TEST_CASE("a closed gate makes the output independent of the LM feature") {
  ParameterSet p = fusion_params(5, 6, 9, 4);
  for (double& b : p.at("fusion.gate.b").data) b = -1e3;
  ParamScope scope(p);
  std::mt19937_64 rng(5);
  const Var s = Var::constant(random_matrix(1, 5, rng));
  const Matrix base = cold_fusion_log_probs(scope, s, Var::constant(random_matrix(1, 6, rng))).value();
  for (int k = 0; k < 5; ++k) {
    const Matrix other = cold_fusion_log_probs(scope, s, Var::constant(random_matrix(1, 6, rng, 10.0))).value();
    for (std::size_t i = 0; i < base.size(); ++i) CHECK(std::abs(base.data[i] - other.data[i]) < 1e-9);
  }
}

TEST_CASE("shallow fusion combination") {
  CHECK(shallow_fusion_combine(-1.0, -2.0, 0.3) == doctest::Approx(-1.6).epsilon(1e-15));
  CHECK(shallow_fusion_combine(-1.25, -7.0, 0.0) == -1.25);
  // Equal ASR scores: adding a constant to both LM scores keeps the order.
  const double a = shallow_fusion_combine(-1.0, -2.0, 0.3), b = shallow_fusion_combine(-1.0, -3.0, 0.3);
  const double a2 = shallow_fusion_combine(-1.0, -2.0 + 5.0, 0.3), b2 = shallow_fusion_combine(-1.0, -3.0 + 5.0, 0.3);
  CHECK((a > b) == (a2 > b2));
}

TEST_CASE("deep fusion trains exactly the fusion parameters") {
  const Pair p = make_pair(10);
  const FusedModel f = attach_fusion(p.asr, p.lm, FusionMode::kDeep, FusionConfig{3, 4}, 1);
  std::vector<std::string> trainable = trainable_names(f.trainable);
  CHECK(trainable == f.model.params.names_with_prefix("fusion."));
  CHECK(f.initialized == f.model.params.names_with_prefix("fusion."));
  CHECK(f.model.fusion == FusionMode::kDeep);
}

TEST_CASE("cold fusion freezes the LM and trains the backbone") {
  const Pair p = make_pair(20);
  const FusedModel f = attach_fusion(p.asr, p.lm, FusionMode::kCold, FusionConfig{3, 4}, 1);
  for (const auto& [name, train] : f.trainable) CHECK(train == !name.starts_with("lm."));
  for (const auto& name : p.lm.params.names()) CHECK(f.model.params.at(name) == p.lm.params.at(name));
  for (const auto& name : p.asr.params.names()) CHECK(f.model.params.at(name) == p.asr.params.at(name));
  REQUIRE(f.model.lm_config.has_value());
  CHECK(embedded_lm(f.model).params == p.lm.params);
}

TEST_CASE("attach copies and detach restores the backbone") {
  const Pair p = make_pair(30);
  const AsrModel before = p.asr;
  const FusedModel f = attach_fusion(p.asr, p.lm, FusionMode::kCold, FusionConfig{3, 4}, 2);
  CHECK(p.asr.params == before.params);
  const AsrModel d = detach_fusion(f.model);
  CHECK(d.params == before.params);
  CHECK(d.fusion == FusionMode::kNone);
}

TEST_CASE("attach rejects mismatched vocabularies and double fusion") {
  Pair p = make_pair(40);
  const Vocabulary other = testing::tiny_vocab("abd");
  LanguageModel lm2 = testing::random_lm(other, testing::tiny_lm_config(other.size()), 1);
  CHECK_THROWS_AS(attach_fusion(p.asr, lm2, FusionMode::kCold, {}, 1), ConfigError);
  const FusedModel f = attach_fusion(p.asr, p.lm, FusionMode::kCold, FusionConfig{3, 4}, 1);
  CHECK_THROWS_AS(attach_fusion(f.model, p.lm, FusionMode::kDeep, {}, 1), ConfigError);
}

TEST_CASE("none and shallow attach leave the model unfused") {
  const Pair p = make_pair(50);
  for (FusionMode m : {FusionMode::kNone, FusionMode::kShallow}) {
    const FusedModel f = attach_fusion(p.asr, p.lm, m, {}, 1);
    CHECK(f.model.params == p.asr.params);
    CHECK(f.initialized.empty());
    CHECK(trainable_names(f.trainable) == p.asr.params.names());
  }
}

TEST_CASE("fusion mode parsing") {
  CHECK(parse_fusion_mode("cold") == FusionMode::kCold);
  CHECK(to_string(FusionMode::kShallow) == "shallow");
  CHECK_THROWS_AS(parse_fusion_mode("warm"), ConfigError);
  CHECK(has_fusion_layer(FusionMode::kDeep));
  CHECK_FALSE(has_fusion_layer(FusionMode::kShallow));
}
