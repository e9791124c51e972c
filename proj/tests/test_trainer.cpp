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
#include <limits>
#include <random>

#include "fasr/ctc.hpp"
#include "fasr/error.hpp"
#include "fasr/trainer.hpp"
#include "oracles.hpp"

using namespace fasr;
using testing::random_matrix;

namespace {

Utterance make_utterance(const Vocabulary& v, const std::string& text, int frames, std::mt19937_64& rng) {
  return {"u" + text, "xx", random_matrix(frames, 3, rng), v.encode(text, "xx")};
}

std::vector<Utterance> toy_set(const Vocabulary& v, int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const std::vector<std::string> texts = {"ab", "ba", "cd", "dca", "a", "bdc"};
  std::vector<Utterance> out;
  for (int i = 0; i < n; ++i) {
    out.push_back(make_utterance(v, texts[static_cast<std::size_t>(i) % texts.size()], 10 + i % 3, rng));
    out.back().id = "u" + std::to_string(i);
  }
  return out;
}

// Teacher-forced cross-entropy and brute-force CTC, computed step by step.
struct LossOracle {
  double ce = 0.0;
  double ctc = 0.0;
};

LossOracle oracle_loss(const AsrModel& model, const Utterance& u) {
  NoGradGuard no_grad;
  ParamScope scope(model.params);
  const Var h = encode(scope, model.config, u.features);
  const AttentionMemory mem = prepare_attention(scope, h);
  std::optional<LanguageModel> lm;
  std::optional<ParamScope> lm_scope;
  LmBinding binding;
  if (has_fusion_layer(model.fusion)) {
    lm = embedded_lm(model);
    lm_scope.emplace(lm->params);
    binding = {&*lm_scope, &lm->config};
  }
  std::vector<int> targets = u.targets;
  targets.push_back(kEos);
  LossOracle o;
  ModelState st = initial_model_state(model, mem, binding);
  int prev = kSos;
  for (int t : targets) {
    const ModelStep step = model_step(scope, model, st, prev, mem, binding);
    o.ce -= step.log_probs.value()(0, t);
    st = step.state;
    prev = t;
  }
  std::vector<int> labels(u.targets.begin() + 1, u.targets.end());
  o.ctc = -testing::brute_force_ctc_log_likelihood(ctc_log_probs(scope, h).value(), labels);
  return o;
}

AsrModel toy_model(const Vocabulary& v, std::uint64_t seed) {
  return make_asr_model(testing::tiny_s2s_config(v.size()), v, seed);
}

TrainConfig toy_train_config() {
  TrainConfig c;
  c.batch_size = 2;
  c.epsilon = 1e-4;
  c.max_epochs = 3;
  c.patience = 3;
  c.threads = 1;
  return c;
}

bool same_entries(const ParameterSet& a, const ParameterSet& b, std::string_view prefix) {
  for (const auto& name : a.names_with_prefix(prefix)) {
    if (!b.contains(name) || !(a.at(name) == b.at(name))) return false;
  }
  return !a.names_with_prefix(prefix).empty();
}

}  // namespace

TEST_CASE("epsilon decays on validation non-improvement") {
  EpsilonSchedule s(1e-8, 0.01);
  CHECK(s.update(0.5));
  CHECK(s.epsilon() == 1e-8);
  CHECK(s.update(0.6));
  CHECK_FALSE(s.update(0.6));
  CHECK(std::abs(s.epsilon() - 1e-10) < 1e-24);
  CHECK(s.best() == 0.6);
}

TEST_CASE("joint loss endpoints match the oracles") {
  const Vocabulary v = testing::tiny_vocab();
  const AsrModel m = toy_model(v, 1);
  for (const Utterance& u : toy_set(v, 4, 2)) {
    const LossOracle o = oracle_loss(m, u);
    ParamScope scope(m.params);
    const UtteranceLoss att = utterance_loss(scope, m, u, {0.0, 0.0, 0.0, 0});
    CHECK(std::abs(att.loss.item() - o.ce) < 1e-9);
    const UtteranceLoss ctc = utterance_loss(scope, m, u, {1.0, 0.0, 0.0, 0});
    CHECK(std::abs(ctc.loss.item() - o.ctc) < 1e-9);
    const UtteranceLoss mid = utterance_loss(scope, m, u, {0.5, 0.0, 0.0, 0});
    CHECK(std::abs(mid.loss.item() - 0.5 * (o.ce + o.ctc)) < 1e-9);
    CHECK(mid.tokens == static_cast<int>(u.targets.size()) + 1);
  }
}

TEST_CASE("zero sampling probability equals teacher forcing") {
  const Vocabulary v = testing::tiny_vocab();
  const AsrModel m = toy_model(v, 3);
  for (const Utterance& u : toy_set(v, 3, 4)) {
    ParamScope scope(m.params);
    const double tf = utterance_loss(scope, m, u, {0.5, 0.0, 0.0, 7}).loss.item();
    // A vanishing probability takes the step-by-step path but never samples.
    const double stepwise = utterance_loss(scope, m, u, {0.5, 1e-300, 0.0, 7}).loss.item();
    CHECK(std::abs(tf - stepwise) < 1e-10);
  }
}

TEST_CASE("teacher forcing equals the step oracle for a cold-fused model") {
  const Vocabulary v = testing::tiny_vocab();
  const LanguageModel lm = testing::random_lm(v, testing::tiny_lm_config(v.size()), 5);
  const FusedModel f = attach_fusion(toy_model(v, 4), lm, FusionMode::kCold, FusionConfig{3, 4}, 6);
  for (const Utterance& u : toy_set(v, 3, 5)) {
    ParamScope scope(f.model.params);
    CHECK(std::abs(utterance_loss(scope, f.model, u, {0.0, 0.0, 0.0, 0}).loss.item() - oracle_loss(f.model, u).ce) <
          1e-9);
  }
}

TEST_CASE("sampling changes the loss deterministically") {
  const Vocabulary v = testing::tiny_vocab();
  const AsrModel m = toy_model(v, 8);
  const Utterance u = toy_set(v, 4, 9)[3];
  ParamScope scope(m.params);
  const double a = utterance_loss(scope, m, u, {0.5, 1.0, 0.2, 11}).loss.item();
  const double b = utterance_loss(scope, m, u, {0.5, 1.0, 0.2, 11}).loss.item();
  CHECK(a == b);
  CHECK(std::isfinite(a));
}

TEST_CASE("unrealizable CTC labels are excluded") {
  const Vocabulary v = testing::tiny_vocab();
  const AsrModel m = toy_model(v, 10);
  std::mt19937_64 rng(11);
  const Utterance u = make_utterance(v, "abcd", 2, rng);  // one encoder frame
  ParamScope scope(m.params);
  const UtteranceLoss l = utterance_loss(scope, m, u, {0.5, 0.0, 0.0, 0});
  CHECK(l.ctc_excluded);
  CHECK(std::abs(l.loss.item() - 0.5 * l.ce) < 1e-12);
  const JointLoss j = joint_loss(scope, m, std::span(&u, 1), {0.5, 0.0, 0.0, 0});
  CHECK(j.ctc_excluded == 1);
}

TEST_CASE("joint loss matches finite differences") {
  const Vocabulary v = testing::tiny_vocab();
  for (std::uint64_t seed = 0; seed < 2; ++seed) {
    const AsrModel m = toy_model(v, 20 + seed);
    std::mt19937_64 rng(30 + seed);
    const std::vector<Utterance> batch = {make_utterance(v, "ab", 4, rng), make_utterance(v, "c", 4, rng)};
    const auto r = testing::gradcheck_scope(m.params, [&](ParamScope& scope) {
      return joint_loss(scope, m, batch, {0.5, 0.0, 0.0, 0}).loss;
    });
    CHECK(r.finite);
    CHECK(r.max_relative_error < 1e-4);
  }
}

TEST_CASE("training is deterministic and thread independent") {
  const Vocabulary v = testing::tiny_vocab();
  const AsrModel m = toy_model(v, 40);
  const auto train_set = toy_set(v, 6, 41);
  const auto valid_set = toy_set(v, 3, 42);
  TrainConfig c = toy_train_config();
  c.dropout = 0.2;
  c.sampling_prob = 0.4;
  const TrainResult a = train(m, all_trainable(m.params), train_set, valid_set, c, 5);
  const TrainResult b = train(m, all_trainable(m.params), train_set, valid_set, c, 5);
  c.threads = 3;
  const TrainResult t = train(m, all_trainable(m.params), train_set, valid_set, c, 5);
  CHECK(a.model.params == b.model.params);
  CHECK(a.model.params == t.model.params);
  REQUIRE(a.history.size() == t.history.size());
  for (std::size_t i = 0; i < a.history.size(); ++i) {
    CHECK(a.history[i].train_loss == t.history[i].train_loss);
    CHECK(a.history[i].valid_accuracy == t.history[i].valid_accuracy);
  }
  CHECK_FALSE(a.model.params == m.params);
}

TEST_CASE("training keeps the best epoch and decays epsilon") {
  const Vocabulary v = testing::tiny_vocab();
  const AsrModel m = toy_model(v, 50);
  TrainConfig c = toy_train_config();
  c.max_epochs = 6;
  c.patience = 100;
  const TrainResult r = train(m, all_trainable(m.params), toy_set(v, 6, 51), toy_set(v, 3, 52), c, 9);
  REQUIRE(r.history.size() == 6);
  double best = -1.0;
  double eps = c.epsilon;
  for (const auto& rec : r.history) {
    if (rec.valid_accuracy > best) {
      best = rec.valid_accuracy;
    } else {
      eps *= c.epsilon_decay;
    }
    CHECK(rec.epsilon == eps);
  }
  CHECK(r.best_accuracy == best);
  CHECK(teacher_forcing_accuracy(r.model, toy_set(v, 3, 52), 1) == best);
}

TEST_CASE("frozen parameters never change") {
  const Vocabulary v = testing::tiny_vocab();
  const AsrModel m = toy_model(v, 60);
  TrainableMask mask = all_trainable(m.params);
  for (auto& [name, on] : mask) on = name.starts_with("decoder.");
  const TrainResult r = train(m, mask, toy_set(v, 6, 61), toy_set(v, 3, 62), toy_train_config(), 3);
  for (const auto& name : m.params.names()) {
    if (name.starts_with("decoder.")) continue;
    CHECK(r.model.params.at(name) == m.params.at(name));
  }
  CHECK_FALSE(same_entries(m.params, r.model.params, "decoder."));
}

TEST_CASE("divergence keeps the last good model") {
  const Vocabulary v = testing::tiny_vocab();
  const AsrModel m = toy_model(v, 70);
  AsrModel broken = m;
  broken.params.at("output.b")(0, 0) = std::numeric_limits<double>::quiet_NaN();
  const TrainResult r =
      train(broken, all_trainable(broken.params), toy_set(v, 2, 71), toy_set(v, 2, 72), toy_train_config(), 1);
  CHECK(r.diverged);
  CHECK(r.history.empty());
  CHECK(r.model.params.at("decoder.embed") == m.params.at("decoder.embed"));
}

TEST_CASE("training rejects empty sets and bad configs") {
  const Vocabulary v = testing::tiny_vocab();
  const AsrModel m = toy_model(v, 80);
  CHECK_THROWS_AS(train(m, all_trainable(m.params), {}, {}, toy_train_config(), 1), DataError);
  TrainConfig c = toy_train_config();
  c.ctc_weight = 1.5;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = toy_train_config();
  c.sampling_prob = -0.1;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("transfer init copies every parameter") {
  const Vocabulary v = testing::tiny_vocab();
  const AsrModel seed = toy_model(v, 90);
  const TransferInit t = transfer_init(seed, v, FusionMode::kNone, nullptr, {}, 1);
  CHECK(t.model.params == seed.params);
  CHECK(t.initialized.empty());
  CHECK(t.frozen.empty());
  CHECK(t.copied.size() == seed.params.count());
}

TEST_CASE("transfer init extends the vocabulary rows") {
  const Vocabulary v = testing::tiny_vocab("abcd", "xx");
  const AsrModel seed = toy_model(v, 91);
  const LanguageCorpus extra{"xx", {"abef"}};
  const Vocabulary target = v.extended(std::span(&extra, 1));
  REQUIRE(target.size() == v.size() + 2);
  const TransferInit t = transfer_init(seed, target, FusionMode::kNone, nullptr, {}, 2);
  for (const std::string name : {"decoder.embed", "output.W", "ctc.W"}) {
    const Matrix& old = seed.params.at(name);
    const Matrix& grown = t.model.params.at(name);
    CHECK(grown.rows == old.rows + 2);
    CHECK(grown.cols == old.cols);
    for (int r = 0; r < old.rows; ++r)
      for (int c = 0; c < old.cols; ++c) CHECK(grown(r, c) == old(r, c));
  }
  for (const std::string name : {"output.b", "ctc.b"}) {
    const Matrix& old = seed.params.at(name);
    const Matrix& grown = t.model.params.at(name);
    CHECK(grown.cols == old.cols + 2);
    for (int c = 0; c < old.cols; ++c) CHECK(grown(0, c) == old(0, c));
  }
  CHECK(t.initialized.size() == 5);
  for (const auto& name : t.copied) CHECK(t.model.params.at(name) == seed.params.at(name));
  CHECK(t.model.config.vocab_size == target.size());
}

TEST_CASE("cold transfer init copies the seed and freezes the LM") {
  const Vocabulary v = testing::tiny_vocab();
  const AsrModel seed = toy_model(v, 92);
  const LanguageModel lm = testing::random_lm(v, testing::tiny_lm_config(v.size()), 93);
  const TransferInit t = transfer_init(seed, v, FusionMode::kCold, &lm, FusionConfig{3, 4}, 3);
  CHECK(t.model.fusion == FusionMode::kCold);
  for (const auto& name : t.model.params.names()) {
    if (name.starts_with("fusion.")) {
      CHECK(t.trainable.at(name));
    } else if (name.starts_with("lm.")) {
      CHECK(t.model.params.at(name) == lm.params.at(name));
      CHECK_FALSE(t.trainable.at(name));
    } else {
      CHECK(t.model.params.at(name) == seed.params.at(name));
      CHECK(t.trainable.at(name));
    }
  }
  CHECK(t.frozen.size() == lm.params.count());
  CHECK_THROWS_AS(transfer_init(seed, v, FusionMode::kCold, nullptr, FusionConfig{3, 4}, 3), ConfigError);
}

TEST_CASE("transfer init rejects incompatible inputs") {
  const Vocabulary v = testing::tiny_vocab("abcd");
  const AsrModel seed = toy_model(v, 94);
  CHECK_THROWS_AS(transfer_init(seed, testing::tiny_vocab("abce"), FusionMode::kNone, nullptr, {}, 1), ConfigError);
  AsrModel broken = seed;
  broken.params.set("encoder.blstm0.fwd.W_ih", Matrix(1, 1));
  try {
    transfer_init(broken, v, FusionMode::kNone, nullptr, {}, 1);
    FAIL("expected a topology error");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("encoder.blstm0.fwd.W_ih") != std::string::npos);
  }
  ParameterSet extra = seed.params;
  extra.add("decoder.extra", Matrix(1, 1));
  CHECK_THROWS_AS(check_compatible(seed.params, extra), ConfigError);
  CHECK_NOTHROW(check_compatible(seed.params, seed.params));
}

TEST_CASE("cold and deep transfer keep the documented parameters fixed") {
  const Vocabulary v = testing::tiny_vocab();
  const AsrModel seed = toy_model(v, 95);
  const LanguageModel lm = testing::random_lm(v, testing::tiny_lm_config(v.size()), 96);
  const auto train_set = toy_set(v, 4, 97);
  const auto valid_set = toy_set(v, 2, 98);
  TrainConfig c = toy_train_config();
  c.max_epochs = 2;
  c.sampling_prob = 0.4;
  c.dropout = 0.2;

  const AdaptResult cf = cf_transfer(seed, lm, FusionConfig{3, 4}, train_set, valid_set, c, 4);
  for (const auto& name : lm.params.names()) CHECK(cf.stage1.model.params.at(name) == lm.params.at(name));
  CHECK_FALSE(same_entries(seed.params, cf.stage1.model.params, "decoder."));

  const AdaptResult df = df_transfer(seed, lm, FusionConfig{3, 4}, train_set, valid_set, c, 4);
  const ParameterSet& s1 = df.stage1.model.params;
  const ParameterSet& s2 = df.stage2.model.params;
  CHECK(df.stage2.model.fusion == FusionMode::kDeep);
  for (const auto& name : s2.names()) {
    if (name.starts_with("fusion.")) continue;
    if (name.starts_with("lm.")) {
      CHECK(s2.at(name) == lm.params.at(name));
    } else {
      CHECK(s2.at(name) == s1.at(name));
    }
  }
  CHECK_THROWS_AS(adapt(seed, v, FusionMode::kDeep, nullptr, FusionConfig{3, 4}, train_set, valid_set, c, 1),
                  ConfigError);
}
