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

#include "fasr/config.hpp"
#include "fasr/error.hpp"
#include "temp_dir.hpp"

using namespace fasr;
using nlohmann::json;

TEST_CASE("presets validate and serialize losslessly") {
  for (const std::string name : {"desk", "paper"}) {
    const ExperimentConfig c = preset_config(name);
    CHECK_NOTHROW(c.validate());
    const json j = to_json(c);
    CHECK(to_json(config_from_json(j)) == j);
  }
  CHECK_THROWS_AS(preset_config("huge"), ConfigError);
}

TEST_CASE("paper preset carries the published hyperparameters") {
  const ExperimentConfig c = preset_config("paper");
  CHECK(c.seed_train.epsilon == 1e-8);
  CHECK(c.seed_train.epsilon_decay == 0.01);
  CHECK(c.seed_train.batch_size == 15);
  CHECK(c.seed_train.ctc_weight == 0.5);
  CHECK(c.adapt_train.sampling_prob == 0.4);
  CHECK(c.adapt_train.dropout == 0.2);
  CHECK(c.decode.beam == 20);
  CHECK(c.decode.ctc_weight == 0.3);
  CHECK(c.decode.lm_weight == 0.3);
  CHECK(c.lm.layers == 2);
  CHECK(c.lm.units == 650);
  CHECK(c.model.encoder.blstm_layers == 5);
  CHECK(c.model.encoder.blstm_units == 1024);
  CHECK(c.model.encoder.feature_dim == 83);
}

TEST_CASE("files override preset defaults") {
  const ExperimentConfig c =
      config_from_json(json::parse(R"({"seed": 9, "decode": {"beam": 4}, "fusion": "cold"})"));
  CHECK(c.seed == 9);
  CHECK(c.lm_train.seed == 9);
  CHECK(c.decode.beam == 4);
  CHECK(c.decode.ctc_weight == preset_config("desk").decode.ctc_weight);
  CHECK(c.fusion == FusionMode::kCold);
}

TEST_CASE("invalid configs are rejected") {
  const char* bad[] = {
      R"({"decode": {"beem": 4}})",
      R"({"unknown": 1})",
      R"({"decode": {"beam": "four"}})",
      R"({"decode": {"beam": 0}})",
      R"({"seed_train": {"ctc_weight": 2.0}})",
      R"({"adapt_train": {"sampling_prob": -1}})",
      R"({"fusion": "hot"})",
      R"({"preset": "huge"})",
      R"({"data": {"language_options": {"feature_dim": 5}}})",
      R"({"decode": null})",
      R"([1, 2])",
  };
  for (const char* text : bad) {
    CAPTURE(text);
    CHECK_THROWS_AS(config_from_json(json::parse(text)), ConfigError);
  }
}

TEST_CASE("config files") {
  testing::TempDir dir;
  const auto path = dir.path() / "c.json";
  std::ofstream(path) << R"({"decode": {"beam": 3}})";
  CHECK(load_config(path).decode.beam == 3);
  std::ofstream(path) << "{ not json";
  CHECK_THROWS_AS(load_config(path), ConfigError);
  CHECK_THROWS_AS(load_config(dir.path() / "missing.json"), ConfigError);
}
