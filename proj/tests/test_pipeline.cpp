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
#include <limits>
#include <sstream>

#include "fasr/checkpoint.hpp"
#include "fasr/error.hpp"
#include "fasr/pipeline.hpp"
#include "temp_dir.hpp"

using namespace fasr;
using nlohmann::json;

namespace {

ExperimentConfig small_config() {
  ExperimentConfig c = preset_config("desk");
  c.data.seed_languages = {{"alpha", 4, 11}, {"beta", 4, 12}};
  c.data.target = {"delta", 4, 14};
  c.data.options.pool_size = 6;
  c.data.options.feature_dim = 4;
  c.data.seed_train_utterances = 6;
  c.data.seed_valid_utterances = 2;
  c.data.target_train_utterances = 4;
  c.data.target_valid_utterances = 2;
  c.data.target_test_utterances = 3;
  c.data.lm_text_factor = 2;
  c.data.min_length = 2;
  c.data.max_length = 3;
  c.model.encoder = {4, {2}, 1, 4};
  c.model.attention = {4, 2, 3};
  c.model.decoder = {3, 1, 4};
  c.lm = {0, 3, 1, 4};
  c.lm_train.epochs = 1;
  c.fusion_layer = {3, 4};
  for (TrainConfig* t : {&c.seed_train, &c.adapt_train}) {
    t->max_epochs = 1;
    t->batch_size = 3;
    t->threads = 2;
  }
  c.decode.beam = 2;
  c.decode.nbest = 2;
  c.validate();
  return c;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST_CASE("stage names") {
  for (Stage s : {Stage::kGenData, Stage::kPrep, Stage::kTrainSeed, Stage::kTrainLm, Stage::kAdapt, Stage::kDecode,
                  Stage::kScore, Stage::kAll}) {
    CHECK(parse_stage(to_string(s)) == s);
  }
  CHECK(parse_stage("train-seed") == Stage::kTrainSeed);
  CHECK_THROWS_AS(parse_stage("train"), ConfigError);
}

TEST_CASE("missing upstream artifacts name the stage to run") {
  testing::TempDir dir;
  PipelineOptions o;
  o.out = dir.path();
  try {
    prep(small_config(), o);
    FAIL("expected a data error");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("--stage gen-data") != std::string::npos);
  }
  CHECK_THROWS_AS(decode_stage(small_config(), o), DataError);
}

TEST_CASE("fused adaptation without an LM is rejected before training") {
  testing::TempDir dir;
  PipelineOptions o;
  o.out = dir.path();
  for (FusionMode mode : {FusionMode::kShallow, FusionMode::kCold, FusionMode::kDeep}) {
    ExperimentConfig c = small_config();
    c.fusion = mode;
    CHECK_THROWS_AS(adapt_stage(c, o), ConfigError);
  }
  CHECK_FALSE(std::filesystem::exists(Workspace{dir.path()}.adapt_dir(FusionMode::kCold)));
}

TEST_CASE("small end-to-end run is reproducible") {
  testing::TempDir a, b;
  ExperimentConfig c = small_config();
  c.fusion = FusionMode::kCold;
  for (const auto* dir : {&a, &b}) {
    PipelineOptions o;
    o.out = dir->path();
    run_pipeline(c, o);
  }
  const Workspace wa{a.path()}, wb{b.path()};
  for (const auto& p : {wa.seed_model(), wa.lm_model(), wa.adapted_model(FusionMode::kCold), wa.nbest(FusionMode::kCold),
                        wa.report(FusionMode::kCold), wa.target_vocab(), wa.stats()}) {
    REQUIRE(std::filesystem::exists(p));
    const auto rel = std::filesystem::relative(p, a.path());
    CHECK(slurp(p) == slurp(b.path() / rel));
  }
  for (const auto& d : {wa.seed_dir(), wa.lm_dir(), wa.adapt_dir(FusionMode::kCold), wa.decode_dir(FusionMode::kCold),
                        wa.score_dir(FusionMode::kCold), wa.prep()}) {
    CHECK(std::filesystem::exists(d / "config.json"));
    const json run = json::parse(slurp(d / "run.json"));
    CHECK(run.contains("seeds"));
  }
  const json report = json::parse(slurp(wa.report(FusionMode::kCold)));
  CHECK(report.at("utterances").size() == 3);
  CHECK(load_asr_checkpoint(wa.adapted_model(FusionMode::kCold)).fusion == FusionMode::kCold);

  // Rerunning decode alone leaves the n-best file unchanged.
  const std::string before = slurp(wa.nbest(FusionMode::kCold));
  PipelineOptions o;
  o.out = a.path();
  o.stage = Stage::kDecode;
  run_pipeline(c, o);
  CHECK(slurp(wa.nbest(FusionMode::kCold)) == before);
}

TEST_CASE("divergent adaptation is a numerical failure") {
  testing::TempDir dir;
  const ExperimentConfig c = small_config();
  PipelineOptions o;
  o.out = dir.path();
  for (Stage s : {Stage::kGenData, Stage::kPrep, Stage::kTrainSeed}) {
    o.stage = s;
    run_pipeline(c, o);
  }
  const Workspace ws{dir.path()};
  AsrModel seed = load_asr_checkpoint(ws.seed_model());
  seed.params.at("output.b")(0, 0) = std::numeric_limits<double>::quiet_NaN();
  save_checkpoint(dir.path() / "poisoned.ckpt", seed);
  o.stage = Stage::kAdapt;
  o.seed_ckpt = dir.path() / "poisoned.ckpt";
  try {
    run_pipeline(c, o);
    FAIL("expected a numerical error");
  } catch (const NumericalError& e) {
    CHECK(e.exit_code() == 4);
  }
}

TEST_CASE("error kinds map to exit codes") {
  CHECK(ConfigError("x").exit_code() == 2);
  CHECK(DataError("x").exit_code() == 3);
  CHECK(NumericalError("x").exit_code() == 4);
}
